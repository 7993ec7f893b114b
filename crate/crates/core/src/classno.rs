//! Class numbers of positive discriminants, by cycles of reduced indefinite
//! forms and by the class number formula `h = L(1, chi_d) sqrt(d) / ln(eps_d)`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::arith::{divisors, factorize, gcd, is_discriminant, isqrt, kronecker, sieve};
use crate::error::{Error, Result};
use crate::pell::PellPoint;
use crate::special::{e1, erfc};

/// Default relative accuracy for `L(1, chi_d)`.
pub const DEFAULT_L_TOL: f64 = 1e-5;
/// Largest number of series terms a single `L(1, chi_d)` evaluation may use.
pub const L_TERM_CAP: u64 = 2_000_000;
/// Largest distance to the nearest integer accepted when rounding the formula value.
pub const ROUNDING_SLACK: f64 = 0.4;

/// `a x^2 + b xy + c y^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadraticForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadraticForm {
    pub fn discriminant(&self) -> i128 {
        (self.b as i128).pow(2) - 4 * self.a as i128 * self.c as i128
    }

    pub fn is_primitive(&self) -> bool {
        gcd(gcd(self.a.unsigned_abs(), self.b.unsigned_abs()), self.c.unsigned_abs()) == 1
    }

    /// `0 < b < sqrt d` and `sqrt d - b < 2|a| < sqrt d + b`, decided in integers.
    pub fn is_reduced(&self) -> bool {
        let d = self.discriminant();
        if d <= 0 || self.b <= 0 {
            return false;
        }
        let b = self.b as i128;
        let a2 = 2 * self.a.unsigned_abs() as i128;
        b * b < d && (a2 + b) * (a2 + b) > d && (a2 - b <= 0 || (a2 - b) * (a2 - b) < d)
    }
}

/// All primitive reduced forms of discriminant `d`.
pub fn reduced_forms(d: u64) -> Vec<QuadraticForm> {
    let mut out = Vec::new();
    let mut b = if d.is_multiple_of(2) { 2 } else { 1 };
    while b * b < d {
        let n = (d - b * b) / 4;
        for a0 in divisors(&factorize(n)) {
            let c0 = n / a0;
            if gcd(gcd(a0, b), c0) != 1 {
                continue;
            }
            for sign in [1i64, -1] {
                let f = QuadraticForm {
                    a: sign * a0 as i64,
                    b: b as i64,
                    c: -sign * c0 as i64,
                };
                if f.is_reduced() {
                    out.push(f);
                }
            }
        }
        b += 2;
    }
    out.sort_by_key(|f| (f.b, f.a));
    out
}

/// Reduction step: `(a, b, c) -> (c, b', (b'^2 - d)/(4c))` with `b' = -b mod 2|c|`
/// the largest such value below `sqrt d`.
pub fn rho(f: QuadraticForm, d: u64) -> QuadraticForm {
    let s = isqrt(d) as i64;
    let m = 2 * f.c.abs();
    let b = s - (s + f.b).rem_euclid(m);
    let c = ((b as i128 * b as i128 - d as i128) / (4 * f.c as i128)) as i64;
    QuadraticForm { a: f.c, b, c }
}

/// Number of rho-cycles among the reduced forms of discriminant `d`.
pub fn class_number_cycles(d: u64) -> Result<u64> {
    if !is_discriminant(d) {
        return Err(Error::NotDiscriminant(d));
    }
    let forms = reduced_forms(d);
    let index: HashMap<QuadraticForm, usize> = forms.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let mut seen = vec![false; forms.len()];
    let mut cycles = 0;
    for start in 0..forms.len() {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut i = start;
        loop {
            seen[i] = true;
            let next = rho(forms[i], d);
            i = *index
                .get(&next)
                .unwrap_or_else(|| panic!("rho left the reduced set at d = {d}: {next:?}"));
            if i == start {
                break;
            }
            assert!(!seen[i], "rho is not injective on reduced forms of {d}");
        }
    }
    Ok(cycles)
}

/// Split `d = d0 * l^2` with `d0` a fundamental discriminant.
pub fn fundamental_discriminant(d: u64) -> (u64, u64) {
    let f = factorize(d);
    let mut core = 1u64;
    for &(p, e) in &f.pairs {
        if e % 2 == 1 {
            core *= p;
        }
    }
    let d0 = if core % 4 == 1 { core } else { 4 * core };
    let l2 = d / d0;
    let l = isqrt(l2);
    debug_assert_eq!(d0 * l * l, d);
    (d0, l)
}

/// `L(1, chi)` for the primitive even character `chi = (d0/.)` of conductor
/// `d0`, from the theta-function identity split at parameter `lambda`:
///
/// `L(1, chi) = sum_n chi(n) [erfc(n sqrt(pi lambda/d0))/n + E_1(pi n^2/(lambda d0))/sqrt(d0)]`.
///
/// Any `lambda > 0` gives the same value, which makes two choices of
/// `lambda` an independent accuracy check.
pub fn primitive_l_one(d0: u64, lambda: f64, tol: f64) -> Result<f64> {
    let f = d0 as f64;
    let k = (1.0 / tol).ln() + 12.0;
    let spread = lambda.sqrt().max(1.0 / lambda.sqrt());
    let n_max = ((k * f / std::f64::consts::PI).sqrt() * spread).ceil() as u64 + 1;
    if n_max > L_TERM_CAP || n_max > sieve().limit() {
        return Err(Error::TermCap {
            d: d0,
            needed: n_max,
            cap: L_TERM_CAP.min(sieve().limit()),
        });
    }
    let s = sieve();
    let n_max = n_max as usize;
    let mut chi = vec![0i8; n_max + 1];
    chi[1] = 1;
    let a = (std::f64::consts::PI * lambda / f).sqrt();
    let b = std::f64::consts::PI / (lambda * f);
    let inv_sqrt_f = 1.0 / f.sqrt();
    let mut sum = erfc(a) + e1(b) * inv_sqrt_f;
    for n in 2..=n_max {
        let p = s.spf(n as u64) as usize;
        chi[n] = if p == n {
            kronecker(d0 as i64, n as u64)
        } else {
            chi[p] * chi[n / p]
        };
        if chi[n] != 0 {
            let nf = n as f64;
            let term = erfc(a * nf) / nf + e1(b * nf * nf) * inv_sqrt_f;
            if chi[n] > 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
    }
    Ok(sum)
}

/// `L(1, chi_d)` to relative accuracy `tol`, for the possibly imprimitive
/// character `chi_d = (d/.)`.
pub fn l_one_chi(d: u64, tol: f64) -> Result<f64> {
    if !is_discriminant(d) {
        return Err(Error::NotDiscriminant(d));
    }
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must lie in (0, 1e-2]")));
    }
    let (d0, l) = fundamental_discriminant(d);
    let v1 = primitive_l_one(d0, 1.0, tol)?;
    let v2 = primitive_l_one(d0, 2.0, tol)?;
    let gap = ((v1 - v2) / v1).abs();
    if gap > tol {
        return Err(Error::SelfCheck { d, gap, tol });
    }
    let mut correction = 1.0;
    if l > 1 {
        for &(p, _) in &factorize(l).pairs {
            correction *= 1.0 - kronecker(d0 as i64, p) as f64 / p as f64;
        }
    }
    Ok(v1 * correction)
}

/// Class number from the formula, rounding with up to three tolerance halvings.
pub fn class_number_analytic(point: &PellPoint, tol: f64) -> Result<u64> {
    Ok(analytic_with_l(point, tol)?.0)
}

fn analytic_with_l(point: &PellPoint, tol: f64) -> Result<(u64, f64)> {
    let mut tol = tol;
    let mut last = 0.0;
    for _ in 0..4 {
        let l1 = l_one_chi(point.d, tol)?;
        let value = l1 * (point.d as f64).sqrt() / point.log_epsilon();
        let r = value.round();
        if (value - r).abs() <= ROUNDING_SLACK && r >= 1.0 {
            return Ok((r as u64, l1));
        }
        last = value;
        tol /= 2.0;
    }
    Err(Error::AmbiguousRounding {
        d: point.d,
        value: last,
    })
}

/// One family member with its class number and `L(1, chi_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminantRecord {
    pub d: u64,
    pub t: u64,
    pub u: u64,
    pub epsilon: f64,
    pub h: u64,
    pub l1: f64,
}

impl DiscriminantRecord {
    /// `L1 sqrt(d) / ln(eps)`, the unrounded formula value.
    pub fn formula_value(&self) -> f64 {
        self.l1 * (self.d as f64).sqrt() / self.point().log_epsilon()
    }

    pub fn point(&self) -> PellPoint {
        PellPoint {
            t: self.t,
            u: self.u,
            d: self.d,
            epsilon: self.epsilon,
        }
    }
}

/// Record for one point; with `check_cycles` the formula value must match the cycle count.
pub fn compute_record(point: &PellPoint, tol: f64, check_cycles: bool) -> Result<DiscriminantRecord> {
    let (h, l1) = analytic_with_l(point, tol)?;
    if check_cycles {
        let cycles = class_number_cycles(point.d)?;
        if cycles != h {
            return Err(Error::ClassNumberMismatch {
                d: point.d,
                cycles,
                formula: h,
            });
        }
    }
    Ok(DiscriminantRecord {
        d: point.d,
        t: point.t,
        u: point.u,
        epsilon: point.epsilon,
        h,
        l1,
    })
}

/// Records for a whole family, in input order, computed in parallel.
pub fn compute_records(points: &[PellPoint], tol: f64, check_cycles: bool) -> Result<Vec<DiscriminantRecord>> {
    points
        .par_iter()
        .map(|p| compute_record(p, tol, check_cycles))
        .collect()
}
