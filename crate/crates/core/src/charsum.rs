//! Character sums over the family: `C_{m,a,u}`, `b_{a,u}(m)`, `B_m(u)`,
//! `rho(u)`, the Dirichlet series `Sigma(m, s)`, and empirical versus
//! predicted values of `sum_d chi_d(m)`.

use rayon::prelude::*;

use crate::arith::{factorize, gcd, is_discriminant, kronecker, primes_up_to, Factorization};
use crate::error::{Error, Result};
use crate::model::{big_h_m, h_m, hm_hm, site_probabilities, ModelVariant};
use crate::pell::{family_bounds, solve_y1, PellPoint};
use crate::special::{stieltjes_gamma1, zeta, zeta2, EULER_GAMMA};

/// How to evaluate `C_{m,a,u}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CMode {
    /// Brute-force Kronecker sum over `0 < l <= m`.
    Direct,
    /// Product formula.
    Closed,
}

/// Which fundamental-unit convention `B_m(u)` follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BConvention {
    /// `t^2 - d u^2 = 4`.
    Standard,
    /// `t^2 - d u^2 = 1`.
    Hooley,
}

/// `d(a, u) = (a^2 - 4)/u^2` when it is an integer discriminant.
pub fn d_au(a: u64, u: u64) -> Option<u64> {
    let n = a.checked_mul(a)?.checked_sub(4)?;
    let uu = u.checked_mul(u)?;
    if n % uu != 0 {
        return None;
    }
    let d = n / uu;
    is_discriminant(d).then_some(d)
}

/// `a(m)`: 4 for odd `m`, else `2 (-1)^e1`.
pub fn a_of_m(f: &Factorization) -> i64 {
    match f.e1 {
        0 => 4,
        e if e % 2 == 0 => 2,
        _ => -2,
    }
}

/// `b_{a,u}(m)` from the class of `d(a, u)` modulo 8.
pub fn b_au(f: &Factorization, d: u64) -> i64 {
    if f.e1 == 0 {
        1
    } else if d.is_multiple_of(4) {
        0
    } else if d % 8 == 1 {
        1
    } else if f.e1.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `C_{m,a,u}` as an exact integer.
pub fn c_mau(m: u64, a: u64, u: u64, mode: CMode) -> Result<i64> {
    if m == 0 || u == 0 || a <= 2 {
        return Err(Error::InvalidParameter(format!("C needs m, u >= 1 and a > 2, got ({m}, {a}, {u})")));
    }
    let d = d_au(a, u).ok_or_else(|| Error::InvalidParameter(format!("d({a}, {u}) is not a discriminant")))?;
    match mode {
        CMode::Direct => {
            let mut s = 0i64;
            for l in 1..=m {
                let v = 16 * u * u * l * l + 8 * a * l + d;
                s += kronecker(v as i64, m) as i64;
            }
            Ok(s)
        }
        CMode::Closed => {
            let f = factorize(m);
            if gcd(f.m0, u) > 1 {
                return Ok(0);
            }
            // m (1 - 2/p) = m (p - 2)/p and (1 + 1/(p - 2)) = (p - 1)/(p - 2) stay integral
            let mut num = b_au(&f, d) * if f.omega_m0.is_multiple_of(2) { 1 } else { -1 } * m as i64;
            let mut den = f.m0 as i64;
            for p in f.even_odd_primes() {
                let p = p as i64;
                if u.is_multiple_of(p as u64) {
                    num *= p - 1;
                    den *= p;
                } else {
                    num *= p - 2;
                    den *= p;
                }
            }
            debug_assert_eq!(num % den, 0);
            Ok(num / den)
        }
    }
}

/// `sum_{3 <= a <= 4u^2 + 2, d(a,u) in D} b_{a,u}(m)`.
pub fn b_m_direct(m: u64, u: u64) -> i64 {
    let f = factorize(m);
    (3..=4 * u * u + 2).filter_map(|a| d_au(a, u)).map(|d| b_au(&f, d)).sum()
}

/// `B_m(u)` from the case table in `e1`, the 2-adic valuation `r1` of `u`,
/// and the number `eta` of odd primes dividing `u`.
pub fn b_m(m: u64, u: u64, convention: BConvention) -> i64 {
    let f = factorize(m);
    let uf = factorize(u);
    let scale = 1i64 << uf.eta;
    let r1 = uf.e1;
    let even = f.e1.is_multiple_of(2);
    let base = match (convention, f.e1) {
        (BConvention::Standard, 0) => match r1 {
            0 | 1 => 4,
            2 => 8,
            _ => 16,
        },
        (BConvention::Standard, _) => match r1 {
            0 => {
                if even {
                    2
                } else {
                    -2
                }
            }
            1 | 2 => 0,
            _ => {
                if even {
                    8
                } else {
                    0
                }
            }
        },
        (BConvention::Hooley, 0) => match r1 {
            0 => 4,
            1 => 8,
            _ => 16,
        },
        (BConvention::Hooley, _) => match (r1, even) {
            (1, _) | (_, false) => 0,
            (0, true) => 2,
            (_, true) => 8,
        },
    };
    base * scale
}

/// `rho(u)`: the number of `2 < a <= 4u^2 + 2` with `d(a, u)` a discriminant.
pub fn rho_count(u: u64) -> u64 {
    (3..=4 * u * u + 2).filter(|&a| d_au(a, u).is_some()).count() as u64
}

/// `kappa(m, s)`.
pub fn kappa(f: &Factorization, s: f64) -> f64 {
    let (p2, p4) = (2f64.powf(s), 4f64.powf(s));
    if f.e1 >= 1 {
        let sign = if f.e1.is_multiple_of(2) { 2.0 } else { 0.0 };
        1.0 + 2.0 * sign / (p4 * (p2 - 1.0))
    } else {
        1.0 + 1.0 / p2 + 2.0 / p4 + 4.0 / (p4 * (p2 - 1.0))
    }
}

/// `G_m(s)`.
pub fn g_m(m: u64, s: f64) -> f64 {
    let f = factorize(m);
    let mut v = kappa(&f, s) / zeta(2.0 * s);
    for p in f.even_odd_primes() {
        let pf = p as f64;
        v *= 1.0 + 2.0 * (pf - 1.0) / ((pf - 2.0) * (pf.powf(s) - 1.0));
    }
    let mut primes: Vec<u64> = f.pairs.iter().map(|&(p, _)| p).collect();
    if f.e1 == 0 {
        primes.push(2);
    }
    for p in primes {
        v /= 1.0 + 2.0 / ((p as f64).powf(s) - 1.0);
    }
    v
}

/// `H_m(s)` assembled from `G_m(s)`; must agree with [`big_h_m`].
pub fn big_h_from_g(m: u64, s: f64) -> f64 {
    let f = factorize(m);
    let sign = if f.omega_m0.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut v = sign / (4.0 * f.m0 as f64) * a_of_m(&f) as f64 * g_m(m, s);
    for p in f.even_odd_primes() {
        v *= 1.0 - 2.0 / p as f64;
    }
    v
}

/// Truncated `Sigma(m, s)` over `u <= u_trunc` against `G_m(s) zeta(s)^2`.
pub fn sigma_series_check(m: u64, s: f64, u_trunc: u64) -> Result<(f64, f64)> {
    if !(s > 1.0) {
        return Err(Error::InvalidParameter(format!("Sigma(m, s) needs s > 1, got {s}")));
    }
    let f = factorize(m);
    let a = a_of_m(&f) as f64;
    let even: Vec<u64> = f.even_odd_primes().collect();
    let table = b_m_table(&f);
    let lhs: f64 = (1..=u_trunc)
        .into_par_iter()
        .filter(|&u| gcd(u, f.m0) == 1)
        .map(|u| {
            let mut w = b_m_lookup(&table, u) as f64 / a / (u as f64).powf(s);
            for &p in &even {
                assert!(p > 2);
                if u % p == 0 {
                    w *= 1.0 + 1.0 / (p as f64 - 2.0);
                }
            }
            w
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let z = zeta(s);
    Ok((lhs, g_m(m, s) * z * z))
}

/// `B_m(u) / 2^eta(u)` indexed by `min(r1, 3)`, for fast sweeps over `u`.
fn b_m_table(f: &Factorization) -> [i64; 4] {
    let m = f.value() as u64;
    [b_m(m, 1, BConvention::Standard), b_m(m, 2, BConvention::Standard), b_m(m, 4, BConvention::Standard), b_m(m, 8, BConvention::Standard)]
}

fn b_m_lookup(table: &[i64; 4], u: u64) -> i64 {
    let uf = factorize(u);
    table[uf.e1.min(3) as usize] << uf.eta
}

/// `sum_{d in family} chi_d(m)`.
pub fn charsum_empirical(family: &[PellPoint], m: u64) -> i64 {
    family.par_iter().map(|p| kronecker(p.d as i64, m) as i64).sum()
}

/// `E(X_inf(m))`.
pub fn expectation_infinity(m: u64) -> f64 {
    let f = factorize(m);
    let sign = if f.omega_m0.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut v = sign / f.m0 as f64 * a_of_m(&f) as f64 / 4.0;
    for p in f.even_odd_primes() {
        v *= 1.0 - 2.0 / p as f64;
    }
    v
}

/// Predicted `sum_{d in D_alpha(x)} chi_d(m)` without the contour remainder.
pub fn charsum_main_term(x: f64, alpha: f64, m: u64) -> Result<f64> {
    let params = family_bounds(x, alpha)?;
    if alpha < params.alpha0 {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} is below alpha0 = {}", params.alpha0)));
    }
    let g = EULER_GAMMA;
    let h0 = hm_hm(m, 1.0, 0)?.big_h;
    let h1 = hm_hm(m, 1.0, 1)?.big_h;
    let h2 = hm_hm(m, 1.0, 2)?.big_h;
    let eth2 = h2 / 2.0 + 2.0 * g * h1 + (g * g - 2.0 * stieltjes_gamma1()) * h0;
    let e = h_m(m, 1.0);
    let lx = x.ln();
    let z2 = zeta2();
    let main = alpha * alpha * e / (2.0 * z2) * lx * lx + alpha * (h1 + (2.0 * g - 2.0 * alpha) * e / z2) * (lx - 2.0) + eth2;
    let y1 = solve_y1(1, alpha)?;
    Ok(x.sqrt() * main + (1.0 - y1.sqrt()) * expectation_infinity(m))
}

/// One row of the character-frequency table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharFreq {
    pub p: u64,
    pub freq_plus: f64,
    pub freq_minus: f64,
    pub freq_zero: f64,
    pub a_p: f64,
    pub b_p: f64,
    pub c_p: f64,
}

/// Frequencies of `chi_d(p) = 1, -1, 0` over the family for every prime `p <= p_max`.
pub fn charfreq(family: &[PellPoint], p_max: u64) -> Vec<CharFreq> {
    let n = family.len().max(1) as f64;
    primes_up_to(p_max)
        .into_par_iter()
        .map(|p| {
            let mut counts = [0u64; 3];
            for pt in family {
                match kronecker(pt.d as i64, p) {
                    1 => counts[0] += 1,
                    -1 => counts[1] += 1,
                    _ => counts[2] += 1,
                }
            }
            let sp = site_probabilities(p, ModelVariant::Standard).expect("standard model");
            CharFreq {
                p,
                freq_plus: counts[0] as f64 / n,
                freq_minus: counts[1] as f64 / n,
                freq_zero: counts[2] as f64 / n,
                a_p: sp.a,
                b_p: sp.b,
                c_p: sp.c,
            }
        })
        .collect()
}

/// `H_m(1)` consistency between the two closed forms, exposed for the suite.
pub fn big_h_forms_agree(m: u64, s: f64) -> bool {
    let a = big_h_m(m, s);
    let b = big_h_from_g(m, s);
    (a - b).abs() <= 1e-13 * (1.0 + a.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pell::{enumerate_family, family_bounds};

    #[test]
    fn c_examples() {
        assert_eq!(c_mau(9, 3, 1, CMode::Direct).unwrap(), 3);
        assert_eq!(c_mau(9, 3, 1, CMode::Closed).unwrap(), 3);
        assert_eq!(c_mau(1, 5, 1, CMode::Direct).unwrap(), 1);
        // a = 7, u = 3: d = 5; m0 = 3 shares a factor with u
        assert_eq!(c_mau(3, 7, 3, CMode::Direct).unwrap(), 0);
        assert_eq!(c_mau(3, 7, 3, CMode::Closed).unwrap(), 0);
        assert!(c_mau(5, 7, 2, CMode::Direct).is_err());
    }

    #[test]
    fn c_modes_agree_small() {
        for u in 1..=8u64 {
            for a in 3..=4 * u * u + 2 {
                if d_au(a, u).is_none() {
                    continue;
                }
                for m in 1..=30 {
                    assert_eq!(c_mau(m, a, u, CMode::Direct).unwrap(), c_mau(m, a, u, CMode::Closed).unwrap(), "m={m} a={a} u={u}");
                }
            }
        }
    }

    #[test]
    fn b_examples() {
        assert_eq!(b_m(7, 1, BConvention::Standard), 4);
        assert_eq!(b_m(2, 1, BConvention::Standard), -2);
        assert_eq!(b_m(5, 2, BConvention::Hooley), 8);
        for m in 1..=200 {
            let f = factorize(m);
            assert_eq!(b_m(m, 1, BConvention::Standard), a_of_m(&f));
        }
    }

    #[test]
    fn b_direct_matches_table() {
        for u in 1..=20 {
            for m in 1..=24 {
                assert_eq!(b_m_direct(m, u), b_m(m, u, BConvention::Standard), "m={m} u={u}");
            }
        }
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_count(1), 4);
        for u in 1..=40 {
            assert!(rho_count(u) <= 4 * u * u);
            assert_eq!(rho_count(u) as i64, b_m_direct(1, u));
        }
    }

    #[test]
    fn kappa_cancels_at_odd_e1() {
        for m in [2u64, 6, 8, 24, 40] {
            assert_eq!(kappa(&factorize(m), 1.7), 1.0);
        }
    }

    #[test]
    fn h_closed_forms_agree() {
        for s in [0.8, 1.0, 2.0] {
            for m in 1..=500 {
                assert!(big_h_forms_agree(m, s), "m={m} s={s}");
            }
        }
    }

    #[test]
    fn sigma_series_examples() {
        let (l, r) = sigma_series_check(1, 3.0, 10_000).unwrap();
        assert!((l - r).abs() < 1e-6, "{l} {r}");
        let (l, r) = sigma_series_check(1, 2.0, 100_000).unwrap();
        assert!((l - r).abs() < 1e-3, "{l} {r}");
        for m in [2u64, 3, 4, 9, 12, 45] {
            let (l, r) = sigma_series_check(m, 3.0, 20_000).unwrap();
            assert!((l - r).abs() < 1e-6, "m={m}: {l} {r}");
        }
    }

    #[test]
    fn sigma_residual_decreases() {
        let mut prev = f64::INFINITY;
        for u in [100u64, 1000, 10_000, 100_000] {
            let (l, r) = sigma_series_check(3, 2.0, u).unwrap();
            let res = (l - r).abs();
            assert!(res < prev);
            prev = res;
        }
    }

    #[test]
    fn empirical_sums() {
        let params = family_bounds(1e5, 0.25).unwrap();
        let fam = enumerate_family(&params).unwrap();
        assert_eq!(charsum_empirical(&fam, 1), fam.len() as i64);
        let odd = fam.iter().filter(|p| p.d % 2 == 1).count() as i64;
        assert_eq!(charsum_empirical(&fam, 4), odd);
    }

    #[test]
    fn main_term_examples() {
        let x = 1e6f64;
        let fam = enumerate_family(&family_bounds(x, 0.25).unwrap()).unwrap();
        for m in [1u64, 3, 5] {
            let v = charsum_main_term(x, 0.25, m).unwrap();
            let e = charsum_empirical(&fam, m) as f64;
            assert!((0.8..=1.2).contains(&(e / v)), "m = {m}: {e} vs {v}");
        }
        assert!((expectation_infinity(2) + 0.5).abs() < 1e-15);
        assert!(charsum_main_term(x, 1e-9, 1).is_err());
    }

    #[test]
    fn charfreq_sums_to_one() {
        let params = family_bounds(1e4, 0.25).unwrap();
        let fam = enumerate_family(&params).unwrap();
        let rows = charfreq(&fam, 30);
        assert_eq!(rows.len(), 10);
        for r in rows {
            assert!((r.freq_plus + r.freq_minus + r.freq_zero - 1.0).abs() < 1e-12);
        }
    }
}
