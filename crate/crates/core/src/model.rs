//! The random Euler-product model `L(1, X) = prod_p (1 - X(p)/p)^(-1)`:
//! site probabilities, exact truncated expectations, `phi(z)`, `h_m(s)`,
//! `H_m(s)`, the constant `C_0`, and Monte Carlo sampling.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arith::{divisor_dz_table, factorize, primes_up_to, ComplexScalar};
use crate::error::{Error, Result};
use crate::special::{integrate, zeta, zeta_log_derivative_at_2, EULER_GAMMA};

/// Default prime cutoff for truncated Euler products.
pub const DEFAULT_P_TRUNC: u64 = 100_000;
/// Step for the central differences giving `H'_m(1)` and `H''_m(1)`.
pub const DIFF_STEP: f64 = 1e-5;
/// Samples per independent Monte Carlo stream.
pub const MC_BLOCK: u64 = 1 << 14;

/// Which law the `X(p)` follow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelVariant {
    /// The model of the family `D_alpha`.
    Standard,
    /// The auxiliary family `X_s`, `s > 1/2`; `s = 1` is the standard model.
    Generalized(f64),
    /// The `s -> infinity` limit.
    Infinity,
    /// The law adapted to units of norm one for `t^2 - d u^2 = 1`.
    Hooley,
}

/// `P(X(p) = 1)`, `P(X(p) = -1)`, `P(X(p) = 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteProbabilities {
    pub p: u64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SiteProbabilities {
    /// `E(X(p))`.
    pub fn mean(&self) -> f64 {
        self.a - self.b
    }
}

pub fn site_probabilities(p: u64, variant: ModelVariant) -> Result<SiteProbabilities> {
    let pf = p as f64;
    let standard = || SiteProbabilities {
        p,
        a: (pf - 1.0) * (pf - 1.0) / (2.0 * pf * (pf + 1.0)),
        b: (pf - 1.0) / (2.0 * pf),
        c: 2.0 / (pf + 1.0),
    };
    let out = match variant {
        ModelVariant::Standard => standard(),
        ModelVariant::Generalized(s) => {
            if !(s > 0.5) {
                return Err(Error::InvalidParameter(format!("model exponent s = {s} must exceed 1/2")));
            }
            if p == 2 {
                // numerator and denominator scaled by 8^-s
                let (i2, i4, i8) = (2f64.powf(-s), 4f64.powf(-s), 8f64.powf(-s));
                let den = 1.0 + i4 + 2.0 * i8;
                let a = i8 / den;
                let b = (1.0 - i2 + 2.0 * i8) / (2.0 * den);
                let c = 0.5 * (1.0 + i2 + 2.0 * i4) / den;
                SiteProbabilities { p, a, b, c }
            } else {
                let a = (pf - 3.0) / (2.0 * pf) + 2.0 / (pf * (pf.powf(s) + 1.0));
                let b = (pf - 1.0) / (2.0 * pf);
                SiteProbabilities { p, a, b, c: 1.0 - a - b }
            }
        }
        ModelVariant::Infinity => {
            if p == 2 {
                SiteProbabilities { p, a: 0.0, b: 0.5, c: 0.5 }
            } else {
                SiteProbabilities {
                    p,
                    a: (pf - 3.0) / (2.0 * pf),
                    b: (pf - 1.0) / (2.0 * pf),
                    c: 2.0 / pf,
                }
            }
        }
        ModelVariant::Hooley => {
            if p == 2 {
                SiteProbabilities {
                    p,
                    a: 3.0 / 16.0,
                    b: 3.0 / 16.0,
                    c: 5.0 / 8.0,
                }
            } else {
                standard()
            }
        }
    };
    Ok(out)
}

/// Prime cutoff for truncated products, with the tail bound `sum_{p > P} 1/p^2 <= 1/(P ln P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerProductConfig {
    pub p_trunc: u64,
    pub tail_estimate: f64,
}

impl EulerProductConfig {
    pub fn new(p_trunc: u64) -> Self {
        let p = p_trunc.max(2) as f64;
        EulerProductConfig {
            p_trunc,
            tail_estimate: 1.0 / (p * p.ln()),
        }
    }
}

impl Default for EulerProductConfig {
    fn default() -> Self {
        Self::new(DEFAULT_P_TRUNC)
    }
}

/// A truncated product with a bound on the neglected part of its logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerValue {
    pub value: ComplexScalar,
    pub tail_bound: f64,
}

/// `E((1 - X(p)/p)^(-z))`.
///
/// Written as `1 + a ((1 - 1/p)^(-z) - 1) + b ((1 + 1/p)^(-z) - 1)`, which is
/// exact at `z = 0` and avoids cancellation for large `p`.
pub fn euler_factor(z: ComplexScalar, sp: &SiteProbabilities) -> ComplexScalar {
    let pf = sp.p as f64;
    let minus = exp_m1(-z * (-1.0 / pf).ln_1p());
    let plus = exp_m1(-z * (1.0 / pf).ln_1p());
    minus * sp.a + plus * sp.b + 1.0
}

/// `e^w - 1` without cancellation for small `w`.
fn exp_m1(w: ComplexScalar) -> ComplexScalar {
    let half = (0.5 * w.im).sin();
    Complex64::new(w.re.exp_m1() * w.im.cos() - 2.0 * half * half, w.re.exp() * w.im.sin())
}

fn factor_checked(z: ComplexScalar, p: u64, variant: ModelVariant) -> Result<ComplexScalar> {
    let f = euler_factor(z, &site_probabilities(p, variant)?);
    if f.norm() < 1e-14 {
        return Err(Error::VanishingFactor(p));
    }
    Ok(f)
}

fn log_tail_bound(z: ComplexScalar, cfg: &EulerProductConfig) -> f64 {
    let r = z.norm();
    2.0 * r * (r + 1.0) * cfg.tail_estimate
}

/// `prod_{p <= P} E((1 - X(p)/p)^(-z))`, the truncation of `E(L(1, X)^z)`.
pub fn euler_expectation(z: ComplexScalar, variant: ModelVariant, cfg: &EulerProductConfig) -> Result<EulerValue> {
    let mut log = Complex64::new(0.0, 0.0);
    for p in primes_up_to(cfg.p_trunc) {
        log += factor_checked(z, p, variant)?.ln();
    }
    Ok(EulerValue {
        value: log.exp(),
        tail_bound: log_tail_bound(z, cfg),
    })
}

/// `ln E(L(1, X)^r)` for real `r`, free of overflow for large `r`.
pub fn log_euler_expectation(r: f64, variant: ModelVariant, cfg: &EulerProductConfig) -> Result<f64> {
    let z = Complex64::new(r, 0.0);
    let mut log = 0.0;
    for p in primes_up_to(cfg.p_trunc) {
        log += factor_checked(z, p, variant)?.re.ln();
    }
    Ok(log)
}

/// The explicit `p = 2` term of `phi`.
fn phi_two_term(z: ComplexScalar) -> ComplexScalar {
    let two_z = (z * std::f64::consts::LN_2).exp();
    let two_thirds_z = (z * (2.0f64 / 3.0).ln()).exp();
    -(std::f64::consts::LN_2 / 9.0) * (two_z * 4.0 + 5.0) / (two_z / 6.0 + two_thirds_z / 2.0 + 4.0 / 3.0)
}

fn phi_prime_numerator(z: ComplexScalar, p: u64) -> ComplexScalar {
    let pf = p as f64;
    let w = 2.0 * pf.ln() / ((pf + 1.0) * (pf + 1.0));
    -exp_m1(-z * (-1.0 / pf).ln_1p()) * w
}

/// `phi(z)`: the prime sum over `3 <= p <= P`, the `p = 2` term,
/// `-2 zeta'(2)/zeta(2)` and `2 gamma`.
pub fn phi(z: ComplexScalar, cfg: &EulerProductConfig) -> Result<EulerValue> {
    if factor_checked(z, 2, ModelVariant::Standard).is_err() {
        return Err(Error::VanishingFactor(2));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for p in primes_up_to(cfg.p_trunc).into_iter().skip(1) {
        let den = factor_checked(z, p, ModelVariant::Standard)?;
        sum += phi_prime_numerator(z, p) / den;
    }
    let value = sum + phi_two_term(z) - 2.0 * zeta_log_derivative_at_2() + 2.0 * EULER_GAMMA;
    let pf = cfg.p_trunc.max(2) as f64;
    Ok(EulerValue {
        value,
        tail_bound: 4.0 * z.norm() * (1.0 + z.norm()) / (pf * pf),
    })
}

/// `E(L(1, X)^z) phi(z)`, well defined even where a factor of the product vanishes.
pub fn expectation_times_phi(z: ComplexScalar, cfg: &EulerProductConfig) -> Result<ComplexScalar> {
    let primes = primes_up_to(cfg.p_trunc);
    let factors: Vec<ComplexScalar> = primes
        .iter()
        .map(|&p| euler_factor(z, &site_probabilities(p, ModelVariant::Standard).unwrap()))
        .collect();
    let n = factors.len();
    let mut prefix = vec![Complex64::new(1.0, 0.0); n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * factors[i];
    }
    let mut suffix = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for i in (0..n).rev() {
        let others = prefix[i] * suffix;
        if primes[i] == 2 {
            // p = 2 term times E_2, with E_2 = (2^z/6 + (2/3)^z/2 + 4/3) / 2
            let two_z = (z * std::f64::consts::LN_2).exp();
            sum -= others * (std::f64::consts::LN_2 / 18.0) * (two_z * 4.0 + 5.0);
        } else {
            sum += others * phi_prime_numerator(z, primes[i]);
        }
        suffix *= factors[i];
    }
    Ok(sum + prefix[n] * (2.0 * EULER_GAMMA - 2.0 * zeta_log_derivative_at_2()))
}

/// `psi(s) = (8^s + 2^s + 2) / (8^s + 4^s)`.
pub fn psi(s: f64) -> f64 {
    // numerator and denominator divided by 8^s
    (1.0 + 4f64.powf(-s) + 2.0 * 8f64.powf(-s)) / (1.0 + 2f64.powf(-s))
}

/// `kappa~(m, s)` for even `m` (it is 1 for odd `m`).
fn kappa_tilde(e1: u32, s: f64) -> f64 {
    if e1 == 0 {
        return 1.0;
    }
    let sign = if e1.is_multiple_of(2) { 1.0 } else { -1.0 };
    let (p2, p4, p8) = (2f64.powf(s), 4f64.powf(s), 8f64.powf(s));
    sign / 2.0 * (p8 + p4) / (p8 + p2 + 2.0) * (1.0 + 2.0 * (1.0 + sign) / (p4 * (p2 - 1.0)))
}

/// `h_m(s)` in closed form.
pub fn h_m(m: u64, s: f64) -> f64 {
    let f = factorize(m);
    let sign = if f.omega_m0.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut v = sign / f.m0 as f64;
    for p in f.even_odd_primes() {
        let pf = p as f64;
        v *= (1.0 - 2.0 / pf) * (1.0 + 2.0 * (pf - 1.0) / ((pf - 2.0) * (pf.powf(s) - 1.0)));
    }
    for &(p, _) in &f.pairs {
        v /= 1.0 + 2.0 / ((p as f64).powf(s) - 1.0);
    }
    v * kappa_tilde(f.e1, s)
}

/// `H_m(s) = psi(s) h_m(s) / zeta(2s)`.
pub fn big_h_m(m: u64, s: f64) -> f64 {
    psi(s) / zeta(2.0 * s) * h_m(m, s)
}

/// `h_m` and `H_m` at `s`, or their first or second derivatives (central differences).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmValue {
    pub h: f64,
    pub big_h: f64,
}

pub fn hm_hm(m: u64, s: f64, deriv: u8) -> Result<HmValue> {
    if !(s > 0.5) || m == 0 {
        return Err(Error::InvalidParameter(format!("h_m(s) needs m >= 1 and s > 1/2, got m = {m}, s = {s}")));
    }
    let eval = |t: f64| HmValue {
        h: h_m(m, t),
        big_h: big_h_m(m, t),
    };
    let k = DIFF_STEP;
    match deriv {
        0 => Ok(eval(s)),
        1 => {
            let (a, b) = (eval(s + k), eval(s - k));
            Ok(HmValue {
                h: (a.h - b.h) / (2.0 * k),
                big_h: (a.big_h - b.big_h) / (2.0 * k),
            })
        }
        2 => {
            let (a, c, b) = (eval(s + k), eval(s), eval(s - k));
            Ok(HmValue {
                h: (a.h - 2.0 * c.h + b.h) / (k * k),
                big_h: (a.big_h - 2.0 * c.big_h + b.big_h) / (k * k),
            })
        }
        _ => Err(Error::InvalidParameter(format!("derivative order {deriv} not supported"))),
    }
}

/// `sum_{m <= M} d_z(m) h_m(s) / m`, the Dirichlet-series side of `E(L(1, X_s)^z)`.
pub fn series_expectation(z: ComplexScalar, s: f64, m_max: u64) -> Result<ComplexScalar> {
    if !(s > 0.5) {
        return Err(Error::InvalidParameter(format!("s = {s} must exceed 1/2")));
    }
    let dz = divisor_dz_table(z, m_max as usize);
    let terms: Vec<ComplexScalar> = (1..=m_max)
        .into_par_iter()
        .map(|m| dz[m as usize] * (h_m(m, s) / m as f64))
        .collect();
    Ok(terms.into_iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b))
}

/// `sum_{m <= M} d_z(m) H^(k)_m(1) / m` for `k = deriv`.
pub fn series_big_h(z: ComplexScalar, m_max: u64, deriv: u8) -> Result<ComplexScalar> {
    let dz = divisor_dz_table(z, m_max as usize);
    let terms: Vec<Result<ComplexScalar>> = (1..=m_max)
        .into_par_iter()
        .map(|m| Ok(dz[m as usize] * (hm_hm(m, 1.0, deriv)?.big_h / m as f64)))
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for t in terms {
        acc += t?;
    }
    Ok(acc)
}

/// `C_0 = int_0^1 tanh(t)/t dt + int_1^inf (tanh(t) - 1)/t dt`.
pub fn c0_constant() -> f64 {
    static V: OnceLock<f64> = OnceLock::new();
    *V.get_or_init(c0_quadrature)
}

fn c0_quadrature() -> f64 {
    let inner = |t: f64| if t == 0.0 { 1.0 } else { t.tanh() / t };
    let outer = |t: f64| {
        let e = (-2.0 * t).exp();
        -2.0 * e / (1.0 + e) / t
    };
    let (a, _) = integrate(inner, 0.0, 1.0, 1e-13, 1e-14);
    // the tail beyond 40 is below 2 e^-80
    let (b, _) = integrate(outer, 1.0, 40.0, 1e-13, 1e-14);
    a + b
}

/// Leading-order tail law `exp(-e^(tau - C_0) / tau)`.
pub fn tail_formula(tau: f64) -> f64 {
    (-(tau - c0_constant()).exp() / tau).exp()
}

/// Tabulated model for fast sampling of `ln L(1, X)`.
#[derive(Debug, Clone)]
pub struct LSampler {
    /// 32-bit thresholds for `X(p) = 1` and for `X(p) in {1, -1}`.
    thresholds: Vec<(u32, u32)>,
    /// `-ln(1 - 1/p)` and `-ln(1 + 1/p)`.
    logs: Vec<(f64, f64)>,
}

fn to_threshold(q: f64) -> u32 {
    (q * 4_294_967_296.0).round().clamp(0.0, u32::MAX as f64) as u32
}

impl LSampler {
    pub fn new(variant: ModelVariant, cfg: &EulerProductConfig) -> Result<Self> {
        let primes = primes_up_to(cfg.p_trunc);
        let mut thresholds = Vec::with_capacity(primes.len());
        let mut logs = Vec::with_capacity(primes.len());
        for p in primes {
            let sp = site_probabilities(p, variant)?;
            thresholds.push((to_threshold(sp.a), to_threshold(sp.a + sp.b)));
            let pf = p as f64;
            logs.push((-(1.0 - 1.0 / pf).ln(), -(1.0 + 1.0 / pf).ln()));
        }
        Ok(LSampler { thresholds, logs })
    }

    /// One draw of `ln L(1, X)`, one uniform per prime.
    pub fn draw_log(&self, rng: &mut impl RngCore) -> f64 {
        let mut acc = 0.0;
        let n = self.thresholds.len();
        let mut i = 0;
        while i < n {
            let r = rng.next_u64();
            for (k, w) in [(r as u32), (r >> 32) as u32].into_iter().enumerate() {
                let j = i + k;
                if j >= n {
                    break;
                }
                let (ta, tab) = self.thresholds[j];
                if w < ta {
                    acc += self.logs[j].0;
                } else if w < tab {
                    acc += self.logs[j].1;
                }
            }
            i += 2;
        }
        acc
    }
}

/// Stream `index` of the generator family rooted at `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One draw of `L(1, X)` truncated at `P`, deterministic in `seed`.
pub fn sample_l(variant: ModelVariant, cfg: &EulerProductConfig, seed: u64) -> Result<f64> {
    let sampler = LSampler::new(variant, cfg)?;
    Ok(sampler.draw_log(&mut stream_rng(seed, 0)).exp())
}

/// Which tail to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    /// `P(L > e^gamma tau)`.
    Upper,
    /// `P(L < zeta(2) / (e^gamma tau))`.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Fewer than 25 expected hits: the estimate is unreliable.
    pub low_count: bool,
}

/// Monte Carlo estimate of a tail probability of `L(1, X)`.
///
/// Samples are drawn in fixed blocks of [`MC_BLOCK`], block `k` using stream
/// `k` of `seed`, so the result does not depend on how blocks are spread
/// over workers.
pub fn tail_mc(
    taus: &[f64],
    n: u64,
    mode: TailMode,
    variant: ModelVariant,
    cfg: &EulerProductConfig,
    seed: u64,
) -> Result<Vec<TailEstimate>> {
    if n < 1000 {
        return Err(Error::InvalidParameter(format!("tail_mc needs n >= 1000, got {n}")));
    }
    let sampler = LSampler::new(variant, cfg)?;
    let eg = EULER_GAMMA.exp();
    let z2 = crate::special::zeta2();
    let thresholds: Vec<f64> = taus
        .iter()
        .map(|&t| match mode {
            TailMode::Upper => (eg * t).ln(),
            TailMode::Lower => (z2 / (eg * t)).ln(),
        })
        .collect();
    let blocks = n.div_ceil(MC_BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let len = MC_BLOCK.min(n - k * MC_BLOCK);
            let mut hits = vec![0u64; thresholds.len()];
            for _ in 0..len {
                let v = sampler.draw_log(&mut rng);
                for (h, &th) in hits.iter_mut().zip(&thresholds) {
                    let hit = match mode {
                        TailMode::Upper => v > th,
                        TailMode::Lower => v < th,
                    };
                    *h += hit as u64;
                }
            }
            hits
        })
        .reduce(
            || vec![0u64; thresholds.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts
        .into_iter()
        .map(|c| {
            let q = c as f64 / n as f64;
            TailEstimate {
                estimate: q,
                stderr: (q * (1.0 - q) / n as f64).sqrt(),
                low_count: (c as f64) < 25.0,
            }
        })
        .collect())
}

/// Mean and standard error of `L(1, X)` over `n` draws (block-seeded like [`tail_mc`]).
pub fn mc_mean(n: u64, variant: ModelVariant, cfg: &EulerProductConfig, seed: u64) -> Result<(f64, f64)> {
    let sampler = LSampler::new(variant, cfg)?;
    let blocks = n.div_ceil(MC_BLOCK);
    let (s, s2) = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let len = MC_BLOCK.min(n - k * MC_BLOCK);
            let mut acc = (0.0, 0.0);
            for _ in 0..len {
                let v = sampler.draw_log(&mut rng).exp();
                acc.0 += v;
                acc.1 += v * v;
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0);
    Ok((mean, (var / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sieve;

    fn c(re: f64, im: f64) -> ComplexScalar {
        Complex64::new(re, im)
    }

    fn expectation_oracle(m: u64, s: f64) -> f64 {
        factorize(m)
            .pairs
            .iter()
            .map(|&(p, e)| {
                let sp = site_probabilities(p, ModelVariant::Generalized(s)).unwrap();
                if e % 2 == 1 {
                    sp.a - sp.b
                } else {
                    sp.a + sp.b
                }
            })
            .product()
    }

    #[test]
    fn probability_examples() {
        let s3 = site_probabilities(3, ModelVariant::Standard).unwrap();
        assert!((s3.a - 1.0 / 6.0).abs() < 1e-16 && (s3.b - 1.0 / 3.0).abs() < 1e-16 && (s3.c - 0.5).abs() < 1e-16);
        let h2 = site_probabilities(2, ModelVariant::Hooley).unwrap();
        assert_eq!((h2.a, h2.b, h2.c), (3.0 / 16.0, 3.0 / 16.0, 5.0 / 8.0));
        assert!(site_probabilities(3, ModelVariant::Generalized(0.5)).is_err());
        for &p in sieve().primes_up_to(1000) {
            let p = p as u64;
            let sp = site_probabilities(p, ModelVariant::Standard).unwrap();
            let pf = p as f64;
            assert!((sp.mean() + (pf - 1.0) / (pf * (pf + 1.0))).abs() < 1e-15);
        }
    }

    #[test]
    fn probabilities_normalized_and_degenerate() {
        let variants = [
            ModelVariant::Standard,
            ModelVariant::Generalized(0.6),
            ModelVariant::Generalized(1.0),
            ModelVariant::Generalized(3.0),
            ModelVariant::Generalized(50.0),
            ModelVariant::Infinity,
            ModelVariant::Hooley,
        ];
        for &p in sieve().primes_up_to(2000) {
            let p = p as u64;
            for v in variants {
                let sp = site_probabilities(p, v).unwrap();
                assert!((sp.a + sp.b + sp.c - 1.0).abs() <= 1e-15, "{p} {v:?}");
                assert!(sp.a >= 0.0 && sp.b >= 0.0 && sp.c >= 0.0);
            }
            let g1 = site_probabilities(p, ModelVariant::Generalized(1.0)).unwrap();
            let st = site_probabilities(p, ModelVariant::Standard).unwrap();
            assert!((g1.a - st.a).abs() < 1e-15 && (g1.b - st.b).abs() < 1e-15 && (g1.c - st.c).abs() < 1e-15);
            let g50 = site_probabilities(p, ModelVariant::Generalized(50.0)).unwrap();
            let inf = site_probabilities(p, ModelVariant::Infinity).unwrap();
            assert!((g50.a - inf.a).abs() < 1e-10 && (g50.b - inf.b).abs() < 1e-10 && (g50.c - inf.c).abs() < 1e-10);
        }
    }

    #[test]
    fn h_closed_form_is_expectation() {
        for s in [0.7, 1.0, 1.5, 3.0] {
            for m in 1..=3000u64 {
                let a = h_m(m, s);
                let b = expectation_oracle(m, s);
                assert!((a - b).abs() < 1e-14 * (1.0 + b.abs()), "m = {m}, s = {s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn h_examples() {
        for s in [0.6, 1.0, 2.0] {
            assert_eq!(hm_hm(1, s, 0).unwrap().h, 1.0);
        }
        assert!((h_m(3, 1.0) + 1.0 / 6.0).abs() < 1e-15);
        assert!((psi(1.0) - 1.0).abs() < 1e-15);
        assert!((big_h_m(1, 1.0) - 1.0 / crate::special::zeta2()).abs() < 1e-14);
        let d1 = hm_hm(6, 1.0, 1).unwrap();
        let exact = (h_m(6, 1.0 + 1e-7) - h_m(6, 1.0 - 1e-7)) / 2e-7;
        assert!((d1.h - exact).abs() < 1e-6);
        assert!(hm_hm(5, 0.5, 0).is_err());
    }

    #[test]
    fn infinity_expectation_limit() {
        for m in 1..=500u64 {
            let f = factorize(m);
            let a_m = if f.e1 == 0 { 4.0 } else if f.e1.is_multiple_of(2) { 2.0 } else { -2.0 };
            let sign = if f.omega_m0.is_multiple_of(2) { 1.0 } else { -1.0 };
            let mut v = sign / f.m0 as f64 * a_m / 4.0;
            for p in f.even_odd_primes() {
                v *= 1.0 - 2.0 / p as f64;
            }
            let e: f64 = f
                .pairs
                .iter()
                .map(|&(p, e)| {
                    let sp = site_probabilities(p, ModelVariant::Infinity).unwrap();
                    if e % 2 == 1 {
                        sp.a - sp.b
                    } else {
                        sp.a + sp.b
                    }
                })
                .product();
            assert!((v - e).abs() < 1e-14, "m = {m}");
        }
    }

    #[test]
    fn expectation_examples() {
        let cfg = EulerProductConfig::new(10_000);
        for v in [ModelVariant::Standard, ModelVariant::Infinity, ModelVariant::Hooley, ModelVariant::Generalized(2.0)] {
            let e = euler_expectation(c(0.0, 0.0), v, &cfg).unwrap();
            assert!((e.value - c(1.0, 0.0)).norm() < 1e-15);
        }
        let e = euler_expectation(c(-1.0, 0.0), ModelVariant::Standard, &cfg).unwrap();
        let closed: f64 = primes_up_to(10_000)
            .iter()
            .map(|&p| {
                let pf = p as f64;
                1.0 + (pf - 1.0) / (pf * pf * (pf + 1.0))
            })
            .product();
        assert!((e.value.re - closed).abs() < 1e-12);
        let a = euler_expectation(c(1.0, 2.0), ModelVariant::Standard, &cfg).unwrap().value;
        let b = euler_expectation(c(1.0, -2.0), ModelVariant::Standard, &cfg).unwrap().value;
        assert!((a - b.conj()).norm() < 1e-14);
    }

    #[test]
    fn phi_at_zero() {
        let v = phi(c(0.0, 0.0), &EulerProductConfig::new(1000)).unwrap().value;
        let expect = -std::f64::consts::LN_2 / 2.0 - 2.0 * zeta_log_derivative_at_2() + 2.0 * EULER_GAMMA;
        assert!((v.re - expect).abs() < 1e-14 && v.im == 0.0);
        assert!((v.re - 1.948).abs() < 1e-3);
    }

    #[test]
    fn phi_product_form_agrees() {
        let cfg = EulerProductConfig::new(5000);
        for z in [c(1.0, 0.0), c(2.0, 0.0), c(-1.0, 0.0), c(1.0, 1.0), c(0.3, -2.0)] {
            let e = euler_expectation(z, ModelVariant::Standard, &cfg).unwrap().value;
            let p = phi(z, &cfg).unwrap().value;
            let direct = expectation_times_phi(z, &cfg).unwrap();
            assert!((e * p - direct).norm() < 1e-12 * direct.norm().max(1.0), "{z}");
        }
    }

    #[test]
    fn phi_derivative_identity() {
        // phi(z) = -ln2/2 - 2 zeta'(2)/zeta(2) + 2 gamma + d/ds ln E(L(1, X_s)^z) at s = 1
        let cfg = EulerProductConfig::new(3000);
        for z in [c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 1.0)] {
            let h = 1e-5;
            let lp = euler_expectation(z, ModelVariant::Generalized(1.0 + h), &cfg).unwrap().value.ln();
            let lm = euler_expectation(z, ModelVariant::Generalized(1.0 - h), &cfg).unwrap().value.ln();
            let deriv = (lp - lm) / (2.0 * h);
            let rhs = deriv - std::f64::consts::LN_2 / 2.0 - 2.0 * zeta_log_derivative_at_2() + 2.0 * EULER_GAMMA;
            let v = phi(z, &cfg).unwrap().value;
            assert!((v - rhs).norm() < 1e-7, "{z}: {v} vs {rhs}");
        }
    }

    #[test]
    fn series_matches_product_small() {
        let cfg = EulerProductConfig::new(100_000);
        for (z, s) in [(c(1.0, 0.0), 1.0), (c(-1.0, 0.0), 1.5), (c(0.0, 0.0), 3.0), (c(1.0, 1.0), 3.0)] {
            let a = series_expectation(z, s, 20_000).unwrap();
            let b = euler_expectation(z, ModelVariant::Generalized(s), &cfg).unwrap().value;
            assert!((a - b).norm() < 1e-2, "{z} {s}: {a} vs {b}");
        }
        let h = series_big_h(c(0.0, 0.0), 1, 0).unwrap();
        assert!((h.re - 1.0 / crate::special::zeta2()).abs() < 1e-14);
    }

    #[test]
    fn c0_value() {
        let c0 = c0_constant();
        assert!((c0 - 0.819).abs() < 5e-4, "{c0}");
        let tail = integrate(|t: f64| (t.tanh() - 1.0) / t, 20.0, 40.0, 1e-20, 1e-12).0;
        assert!(tail.abs() < (-40.0f64).exp());
    }

    #[test]
    fn tail_formula_examples() {
        assert!((tail_formula(2.0) - 0.196).abs() < 1e-3);
        assert!((tail_formula(3.0) - 0.0524).abs() < 1e-3);
        let mut prev = 1.0;
        for k in 0..100 {
            let v = tail_formula(1.0 + k as f64 * 0.05);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn sampling_contracts() {
        let cfg = EulerProductConfig::new(200);
        assert_eq!(sample_l(ModelVariant::Standard, &cfg, 7).unwrap(), sample_l(ModelVariant::Standard, &cfg, 7).unwrap());
        assert_ne!(sample_l(ModelVariant::Standard, &cfg, 7).unwrap(), sample_l(ModelVariant::Standard, &cfg, 8).unwrap());
        // a model with X(p) = 0 everywhere draws exactly 1
        let s = LSampler {
            thresholds: vec![(0, 0); 10],
            logs: vec![(1.0, -1.0); 10],
        };
        assert_eq!(s.draw_log(&mut stream_rng(1, 0)).exp(), 1.0);
    }

    #[test]
    fn mc_mean_matches_product() {
        let cfg = EulerProductConfig::new(2000);
        let (m, se) = mc_mean(200_000, ModelVariant::Standard, &cfg, 11).unwrap();
        let e = euler_expectation(c(1.0, 0.0), ModelVariant::Standard, &cfg).unwrap().value.re;
        assert!((m - e).abs() < 3.0 * se, "{m} +- {se} vs {e}");
    }

    #[test]
    fn tail_mc_contracts() {
        let cfg = EulerProductConfig::new(500);
        let r = tail_mc(&[1e-6, 1.0], 4000, TailMode::Upper, ModelVariant::Standard, &cfg, 3).unwrap();
        assert_eq!(r[0].estimate, 1.0);
        let a = tail_mc(&[0.5], 20_000, TailMode::Upper, ModelVariant::Standard, &cfg, 5).unwrap()[0];
        let b = tail_mc(&[0.5], 80_000, TailMode::Upper, ModelVariant::Standard, &cfg, 6).unwrap()[0];
        let ratio = a.stderr / b.stderr;
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "{ratio}");
        let lo = tail_mc(&[5.0], 2000, TailMode::Lower, ModelVariant::Standard, &cfg, 5).unwrap()[0];
        assert!(lo.low_count);
    }

    #[test]
    fn moments_increasing_and_log_convex() {
        let cfg = EulerProductConfig::new(3000);
        let grid: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
        let logs: Vec<f64> = grid
            .iter()
            .map(|&r| log_euler_expectation(r, ModelVariant::Standard, &cfg).unwrap())
            .collect();
        for w in logs.windows(2).skip(2) {
            assert!(w[1] > w[0]);
        }
        for w in logs.windows(3) {
            assert!(w[0] + w[2] >= 2.0 * w[1] - 1e-12);
        }
    }
}
