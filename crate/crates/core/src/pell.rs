//! Enumeration of the family `D_alpha(x)` through the parametrization
//! `d(t, u) = (t^2 - 4) / u^2`, and a continued-fraction oracle for
//! fundamental units.

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::arith::{factorize, is_discriminant, isqrt};
use crate::dd::DD;
use crate::error::{Error, Result};

/// Relative width of the floating-point guard band around the membership boundary.
pub const GUARD_BAND: f64 = 1e-9;
const BISECTION_CAP: usize = 200;

/// Cutoff `x`, unit exponent `alpha`, and the derived bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    pub x: f64,
    pub alpha: f64,
    /// Largest admissible `u`: `x^alpha - x^(-1-alpha)`.
    pub x_alpha: f64,
    /// Exponent at which the `u` bound equals 1.
    pub alpha0: f64,
    /// Exponent at which the `u` bound equals 2.
    pub alpha1: f64,
}

/// A solution of `t^2 - d u^2 = 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PellPoint {
    pub t: u64,
    pub u: u64,
    pub d: u64,
    /// `(t + u sqrt(d)) / 2`.
    pub epsilon: f64,
}

impl PellPoint {
    pub fn new(t: u64, u: u64, d: u64) -> Self {
        let epsilon = (t as f64 + u as f64 * (d as f64).sqrt()) / 2.0;
        PellPoint { t, u, d, epsilon }
    }

    /// `ln(epsilon)`, computed without cancellation.
    pub fn log_epsilon(&self) -> f64 {
        let (t, u, d) = (self.t as f64, self.u as f64, self.d as f64);
        ((t + u * d.sqrt()) / 2.0).ln()
    }
}

/// Range of `t` admissible for a given `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YBounds {
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
}

/// `x^alpha - x^(-1-alpha)`.
pub fn u_bound(x: f64, alpha: f64) -> f64 {
    x.powf(alpha) - x.powf(-1.0 - alpha)
}

fn bisect_alpha(x: f64, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0f64, 64.0f64);
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if u_bound(x, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Derived family bounds for `(x, alpha)`.
pub fn family_bounds(x: f64, alpha: f64) -> Result<FamilyParams> {
    if !(x >= 2.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("x = {x} must be >= 2")));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1/2)")));
    }
    let x_alpha = u_bound(x, alpha);
    let alpha0 = bisect_alpha(x, 1.0)?;
    let alpha1 = bisect_alpha(x, 2.0)?;
    Ok(FamilyParams {
        x,
        alpha,
        x_alpha,
        alpha0,
        alpha1,
    })
}

/// The unique `Y > 1` with `Y^alpha - Y^(-1-alpha) = u`, by bisection on `ln Y`.
pub fn solve_y1(u: u64, alpha: f64) -> Result<f64> {
    if u == 0 || !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParameter(format!("solve_y1(u = {u}, alpha = {alpha})")));
    }
    let uf = u as f64;
    let f = |ly: f64| (alpha * ly).exp() - (-(1.0 + alpha) * ly).exp() - uf;
    // f(ln u / alpha) < 0 < f(ln(u + 1) / alpha)
    let mut lo = uf.ln() / alpha;
    let mut hi = (uf + 1.0).ln() / alpha;
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ly = 0.5 * (lo + hi);
    let y = ly.exp();
    if !y.is_finite() || (f(ly) / uf).abs() >= 1e-12 {
        return Err(Error::NoConvergence("solve_y1"));
    }
    Ok(y)
}

pub fn y_bounds(u: u64, params: &FamilyParams) -> Result<YBounds> {
    let y1 = solve_y1(u, params.alpha)?;
    let u2 = (u as f64) * (u as f64);
    Ok(YBounds {
        y1,
        y2: (y1 * u2 + 4.0).sqrt(),
        y3: (params.x * u2 + 4.0).sqrt(),
    })
}

/// Whether `eps_d = (t + u sqrt d)/2 <= d^(1/2 + alpha)`, i.e. `u <= d^alpha - d^(-1-alpha)`.
///
/// Decided in double precision outside a relative guard band, and by
/// double-double logarithms inside it.
pub fn unit_within_bound(d: u64, t: u64, u: u64, alpha: f64) -> bool {
    let rhs = u_bound(d as f64, alpha);
    let uf = u as f64;
    if uf < rhs * (1.0 - GUARD_BAND) {
        return true;
    }
    if uf > rhs * (1.0 + GUARD_BAND) {
        return false;
    }
    let dd = DD::from_u128(d as u128);
    let eps = (DD::from_u128(t as u128) + DD::from_u128(u as u128) * dd.sqrt()) / DD::from_f64(2.0);
    eps.ln() <= DD::from_f64(0.5 + alpha) * dd.ln()
}

fn inverse_mod(a: u128, m: u128) -> u128 {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1);
    s0.rem_euclid(m as i128) as u128
}

/// Roots of `t^2 = 4 (mod 2^k)`.
fn roots_mod_pow2(k: u32) -> Vec<u128> {
    let m = 1u128 << k;
    if k <= 6 {
        return (0..m).filter(|&t| (t * t) % m == 4 % m).collect();
    }
    // t = 2s with s^2 = 1 mod 2^(k-2): s = +-1, 2^(k-3) +- 1 mod 2^(k-2)
    let h = 1u128 << (k - 2);
    let q = 1u128 << (k - 3);
    let mut out = Vec::with_capacity(8);
    for s in [1, q - 1, q + 1, h - 1] {
        out.push(2 * s);
        out.push(2 * s + (1 << (k - 1)));
    }
    out.sort_unstable();
    out
}

/// Residues `a mod 4u^2` with `u^2 | a^2 - 4` and `d(a, u) = 0, 1 mod 4`.
///
/// Every `t` in such a class gives a `d(t, u)` in the same class mod 8,
/// hence in the discriminant set as soon as `t >= 3`.
pub fn admissible_residues(u: u64) -> Vec<u64> {
    let f = factorize(u);
    // roots of t^2 = 4 mod the 2-part of u^2, lifted to the 2-part of 4u^2
    let base = 1u128 << (2 * f.e1);
    let mut modulus = base << 2;
    let mut roots: Vec<u128> = roots_mod_pow2(2 * f.e1)
        .into_iter()
        .flat_map(|r| (0..4).map(move |j| r + j * base))
        .collect();
    for &(p, e) in f.pairs.iter().filter(|(p, _)| *p != 2) {
        let pk = (p as u128).pow(2 * e);
        let mut local = vec![2 % pk, (pk - 2) % pk];
        local.dedup();
        let inv = inverse_mod(modulus % pk, pk);
        let mut combined = Vec::with_capacity(roots.len() * local.len());
        for &r in &roots {
            for &s in &local {
                let k = ((s + pk - r % pk) % pk) * inv % pk;
                combined.push(r + modulus * k);
            }
        }
        modulus *= pk;
        roots = combined;
    }
    let u2 = (u as u128) * (u as u128);
    debug_assert_eq!(modulus, 4 * u2);
    let mut out: Vec<u64> = roots
        .into_iter()
        .filter(|&r| {
            let t = r + modulus;
            let d = (t * t - 4) / u2;
            d % 4 <= 1
        })
        .map(|r| r as u64)
        .collect();
    out.sort_unstable();
    out
}

fn points_for_u(u: u64, params: &FamilyParams, x_floor: u64) -> Result<Vec<PellPoint>> {
    let yb = y_bounds(u, params)?;
    if yb.y1 > params.x {
        return Ok(Vec::new());
    }
    let modulus = 4 * (u as u128) * (u as u128);
    let u2 = (u as u128) * (u as u128);
    let t_lo = (yb.y2.floor() as u128).saturating_sub(1).max(3);
    let t_hi = yb.y3.ceil() as u128 + 1;
    let mut out = Vec::new();
    for r in admissible_residues(u) {
        let r = r as u128;
        let mut t = t_lo + (r + modulus - t_lo % modulus) % modulus;
        while t <= t_hi {
            let d = (t * t - 4) / u2;
            if d <= x_floor as u128 {
                let (t64, d64) = (t as u64, d as u64);
                if unit_within_bound(d64, t64, u, params.alpha) {
                    debug_assert!(is_discriminant(d64));
                    out.push(PellPoint::new(t64, u, d64));
                }
            }
            t += modulus;
        }
    }
    Ok(out)
}

/// Every `d` in `D_alpha(x)` with its fundamental solution, sorted by `d`.
///
/// The `u`-range is split across the current rayon pool; chunks are merged
/// in `u` order before the final sort, so the output does not depend on the
/// worker count.
pub fn enumerate_family(params: &FamilyParams) -> Result<Vec<PellPoint>> {
    if params.x_alpha < 1.0 {
        return Ok(Vec::new());
    }
    let u_max = params.x_alpha.floor() as u64;
    let envelope = params.x * params.x_alpha * params.x_alpha + 4.0;
    if envelope >= 2f64.powi(126) || params.x >= 2f64.powi(62) {
        return Err(Error::Overflow(format!(
            "x * X_alpha^2 + 4 = {envelope:e} for x = {}, alpha = {}",
            params.x, params.alpha
        )));
    }
    let x_floor = params.x.floor() as u64;
    let chunks: Vec<Result<Vec<PellPoint>>> = (1..=u_max)
        .into_par_iter()
        .map(|u| points_for_u(u, params, x_floor))
        .collect();
    let mut all = Vec::new();
    for c in chunks {
        all.extend(c?);
    }
    all.sort_by_key(|p| p.d);
    for w in all.windows(2) {
        assert!(w[0].d != w[1].d, "duplicate discriminant {} in enumeration", w[0].d);
    }
    Ok(all)
}

/// Continued-fraction expansion of `(b + sqrt d)/2`, `b = d mod 2`.
///
/// Yields `(a_k, hit)` where `hit` is true when the convergent `p_k/q_k`
/// gives `T = 2p_k - b q_k`, `U = q_k` with `T^2 - d U^2 = 4`.
struct UnitExpansion {
    d: i128,
    s: i128,
    p: i128,
    q: i128,
    k: u64,
}

impl UnitExpansion {
    fn new(d: u64) -> Self {
        UnitExpansion {
            d: d as i128,
            s: isqrt(d) as i128,
            p: (d % 2) as i128,
            q: 2,
            k: 0,
        }
    }

    fn next_quotient(&mut self) -> (u128, bool) {
        let a = if self.q > 0 {
            (self.p + self.s).div_euclid(self.q)
        } else {
            (self.p + self.s + 1).div_euclid(self.q)
        };
        let p = a * self.q - self.p;
        let num = self.d - p * p;
        debug_assert_eq!(num % self.q, 0);
        let q = num / self.q;
        // (2p_k - b q_k)^2 - d q_k^2 = (-1)^(k+1) * 2 * Q_(k+1)
        let hit = if self.k % 2 == 1 { q == 2 } else { q == -2 };
        self.p = p;
        self.q = q;
        self.k += 1;
        (a as u128, hit)
    }

    fn cap(&self) -> u64 {
        let s = self.s as u64 + 2;
        64 * s * (64 - s.leading_zeros() as u64 + 1)
    }
}

/// Minimal `(t, u)` with `t^2 - d u^2 = 4`, `u >= 1`, from the continued
/// fraction of `(b + sqrt d)/2`.
pub fn fundamental_unit_cf(d: u64) -> Result<(BigUint, BigUint)> {
    if !is_discriminant(d) {
        return Err(Error::NotDiscriminant(d));
    }
    let b = BigUint::from(d % 2);
    let mut cf = UnitExpansion::new(d);
    let cap = cf.cap();
    let (mut p0, mut p1) = (BigUint::from(0u32), BigUint::from(1u32));
    let (mut q0, mut q1) = (BigUint::from(1u32), BigUint::from(0u32));
    for _ in 0..cap {
        let (a, hit) = cf.next_quotient();
        let a = BigUint::from(a);
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        (p0, p1) = (p1, p2);
        (q0, q1) = (q1, q2);
        if hit {
            let t = BigUint::from(2u32) * &p1 - &b * &q1;
            let lhs = &t * &t;
            let rhs = BigUint::from(d) * &q1 * &q1 + BigUint::from(4u32);
            assert_eq!(lhs, rhs, "continued fraction produced a non-solution for d = {d}");
            return Ok((t, q1));
        }
    }
    Err(Error::NoConvergence("fundamental_unit_cf"))
}

/// As [`fundamental_unit_cf`], but gives up with `None` once `t` exceeds `t_max`.
pub fn fundamental_unit_bounded(d: u64, t_max: u128) -> Result<Option<(u128, u128)>> {
    if !is_discriminant(d) {
        return Err(Error::NotDiscriminant(d));
    }
    let b = (d % 2) as u128;
    let mut cf = UnitExpansion::new(d);
    let cap = cf.cap();
    let (mut p0, mut p1) = (0u128, 1u128);
    let (mut q0, mut q1) = (1u128, 0u128);
    for _ in 0..cap {
        let (a, hit) = cf.next_quotient();
        let next = a
            .checked_mul(p1)
            .and_then(|v| v.checked_add(p0))
            .zip(a.checked_mul(q1).and_then(|v| v.checked_add(q0)));
        let Some((p2, q2)) = next else {
            return Ok(None);
        };
        (p0, p1) = (p1, p2);
        (q0, q1) = (q1, q2);
        let Some(t) = p1.checked_mul(2).map(|v| v - b * q1) else {
            return Ok(None);
        };
        if t > t_max {
            return Ok(None);
        }
        if hit {
            return Ok(Some((t, q1)));
        }
    }
    Err(Error::NoConvergence("fundamental_unit_bounded"))
}

/// Exhaustive reference scan: every discriminant `d <= x` whose fundamental
/// unit satisfies the family bound. Slow; meant for small `x`.
pub fn scan_family(x: u64, alpha: f64) -> Result<Vec<PellPoint>> {
    let mut out = Vec::new();
    for d in 5..=x {
        if !is_discriminant(d) {
            continue;
        }
        let t_max = (2.0 * (d as f64).powf(0.5 + alpha)).ceil() as u128 + 2;
        if let Some((t, u)) = fundamental_unit_bounded(d, t_max)? {
            if unit_within_bound(d, t as u64, u as u64, alpha) {
                out.push(PellPoint::new(t as u64, u as u64, d));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_unit(d: u64) -> (u64, u64) {
        for u in 1u64.. {
            let t2 = d as u128 * (u as u128) * (u as u128) + 4;
            let t = crate::arith::isqrt_u128(t2);
            if t * t == t2 {
                return (t as u64, u);
            }
        }
        unreachable!()
    }

    #[test]
    fn unit_examples() {
        let v = |d| {
            let (t, u) = fundamental_unit_cf(d).unwrap();
            (t.to_string(), u.to_string())
        };
        assert_eq!(v(5), ("3".into(), "1".into()));
        assert_eq!(v(8), ("6".into(), "2".into()));
        assert_eq!(v(13), ("11".into(), "3".into()));
        assert_eq!(v(12), ("4".into(), "1".into()));
        assert!(fundamental_unit_cf(16).is_err());
    }

    #[test]
    fn unit_matches_exhaustive_search() {
        for d in 5..3000u64 {
            if !is_discriminant(d) {
                continue;
            }
            let (t, u) = brute_unit_capped(d);
            if t == 0 {
                continue;
            }
            let (ct, cu) = fundamental_unit_cf(d).unwrap();
            assert_eq!((ct.to_string(), cu.to_string()), (t.to_string(), u.to_string()), "d = {d}");
            assert_eq!(fundamental_unit_bounded(d, u128::MAX).unwrap(), Some((t as u128, u as u128)));
        }
    }

    fn brute_unit_capped(d: u64) -> (u64, u64) {
        for u in 1u64..200_000 {
            let t2 = d as u128 * (u as u128) * (u as u128) + 4;
            let t = crate::arith::isqrt_u128(t2);
            if t * t == t2 {
                return (t as u64, u);
            }
        }
        (0, 0)
    }

    #[test]
    fn large_unit_has_exact_norm() {
        // d = 94 * 4: the unit of Z[sqrt 94] is 2143295 + 221064 sqrt 94
        let (t, u) = fundamental_unit_cf(376).unwrap();
        assert_eq!(t.to_string(), "4286590");
        assert_eq!(u.to_string(), "221064");
        let (t, u) = fundamental_unit_cf(9949).unwrap();
        assert_eq!(&t * &t, BigUint::from(9949u32) * &u * &u + BigUint::from(4u32));
    }

    #[test]
    fn solve_y1_examples() {
        let y = solve_y1(1, 0.5 - 1e-15).unwrap();
        assert!((y - 1.905).abs() < 1e-3, "{y}");
        let mut prev = 0.0;
        for u in 1..200 {
            let y = solve_y1(u, 0.3).unwrap();
            assert!(y > prev);
            prev = y;
            let r = y.powf(0.3) - y.powf(-1.3) - u as f64;
            assert!((r / u as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn sqrt_y1_approaches_power() {
        let alpha = 0.25;
        let mut prev = f64::INFINITY;
        for u in [2u64, 4, 8, 16, 32] {
            let gap = (solve_y1(u, alpha).unwrap().sqrt() - (u as f64).powf(1.0 / (2.0 * alpha))).abs();
            assert!(gap * (u * u) as f64 <= 1.0, "u = {u}: gap {gap}");
            assert!(gap < prev);
            prev = gap;
        }
    }

    #[test]
    fn family_bounds_examples() {
        let p = family_bounds(1e5, 0.25).unwrap();
        assert!((p.x_alpha - 17.7827941).abs() < 1e-6);
        assert!((u_bound(1e5, p.alpha0) - 1.0).abs() < 1e-12);
        assert!((u_bound(1e5, p.alpha1) - 2.0).abs() < 1e-12);
        assert!(p.alpha0 < p.alpha1);
        let mut prev = (1.0, 1.0);
        for x in [1e4, 1e6, 1e8] {
            let q = family_bounds(x, 0.25).unwrap();
            assert!(q.alpha0 < prev.0 && q.alpha1 < prev.1);
            prev = (q.alpha0, q.alpha1);
            let c = q.alpha1 * x.ln();
            assert!(c > 0.5 && c < 1.0, "alpha1 log x = {c}");
        }
        assert!(family_bounds(1.0, 0.25).is_err());
        assert!(family_bounds(100.0, 0.5).is_err());
    }

    #[test]
    fn residues_match_scan() {
        for u in 1..=40u64 {
            let m = 4 * u * u;
            let scan: Vec<u64> = (0..m)
                .filter(|&a| {
                    let t = (a + m) as u128;
                    let u2 = (u * u) as u128;
                    (t * t - 4).is_multiple_of(u2) && ((t * t - 4) / u2) % 4 <= 1
                })
                .collect();
            assert_eq!(admissible_residues(u), scan, "u = {u}");
        }
        for k in 1..=12 {
            let m = 1u128 << k;
            let scan: Vec<u128> = (0..m).filter(|&t| (t * t) % m == 4 % m).collect();
            assert_eq!(roots_mod_pow2(k), scan, "k = {k}");
        }
    }

    #[test]
    fn small_family_contents() {
        let p = family_bounds(100.0, 0.45).unwrap();
        let fam = enumerate_family(&p).unwrap();
        assert!(fam.iter().any(|q| (q.d, q.t, q.u) == (5, 3, 1)));
        assert!(fam.iter().any(|q| (q.d, q.t, q.u) == (12, 4, 1)));
        for q in &fam {
            assert_eq!(
                (q.t as u128).pow(2) - q.d as u128 * (q.u as u128).pow(2),
                4
            );
            assert!(q.epsilon >= (1.0 + q.u as f64) * (q.d as f64).sqrt() / 2.0 - 1e-9);
            let _ = brute_unit(q.d);
        }
    }

    #[test]
    fn empty_below_alpha0() {
        let p = family_bounds(1e6, 0.25).unwrap();
        let q = family_bounds(1e6, p.alpha0 * 0.9).unwrap();
        assert!(enumerate_family(&q).unwrap().is_empty());
    }

    #[test]
    fn enumeration_equals_scan_small() {
        for alpha in [0.05, 0.2, 0.45] {
            let p = family_bounds(3000.0, alpha).unwrap();
            let a: Vec<_> = enumerate_family(&p).unwrap().iter().map(|q| (q.d, q.t, q.u)).collect();
            let b: Vec<_> = scan_family(3000, alpha).unwrap().iter().map(|q| (q.d, q.t, q.u)).collect();
            assert_eq!(a, b, "alpha = {alpha}");
        }
    }

    #[test]
    fn guard_band_resolution() {
        // d = 5, eps = 2.618...; pick alpha with 5^(1/2 + alpha) straddling eps
        let eps: f64 = (3.0 + 5f64.sqrt()) / 2.0;
        let a = eps.ln() / 5f64.ln() - 0.5;
        assert!(unit_within_bound(5, 3, 1, a + 1e-12));
        assert!(!unit_within_bound(5, 3, 1, a - 1e-12));
    }

    #[test]
    fn overflow_guard() {
        let p = family_bounds(1e30, 0.45).unwrap();
        assert!(matches!(enumerate_family(&p), Err(Error::Overflow(_))));
    }
}
