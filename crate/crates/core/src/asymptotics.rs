//! Predicted versus observed moments, tails and counts of class numbers
//! over the family.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::{primes_up_to, ComplexScalar};
use crate::classno::DiscriminantRecord;
use crate::error::{Error, Result};
use crate::model::{c0_constant, euler_expectation, expectation_times_phi, log_euler_expectation, tail_formula, EulerProductConfig, ModelVariant};
use crate::special::{integrate, zeta2, EULER_GAMMA};

/// Below this distance from 1 or 2 the `I` integrals switch to series.
pub const SERIES_RADIUS: f64 = 1e-4;
/// Relative accuracy of the moment quadrature.
pub const QUAD_REL_TOL: f64 = 1e-8;
/// Records per partial sum; fixes the summation order independently of threads.
const SUM_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMode {
    /// `sum h(d)^z`.
    HMoment,
    /// `sum L(1, chi_d)^z`.
    LMoment,
    /// Large real `z` equivalent of the `h` moment.
    Corollary,
}

impl MomentMode {
    pub fn name(self) -> &'static str {
        match self {
            MomentMode::HMoment => "h-moment",
            MomentMode::LMoment => "L-moment",
            MomentMode::Corollary => "corollary",
        }
    }
}

/// `(b^c - a^c)/c`, by its Taylor series in `c` near 0.
fn power_difference(c: ComplexScalar, a: f64, b: f64) -> ComplexScalar {
    if c.norm() < SERIES_RADIUS {
        let (la, lb) = (a.ln(), b.ln());
        let mut sum = Complex64::new(0.0, 0.0);
        let mut cpow = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for n in 1..=6 {
            fact *= n as f64;
            sum += cpow * ((lb.powi(n) - la.powi(n)) / fact);
            cpow *= c;
        }
        sum
    } else {
        ((c * b.ln()).exp() - (c * a.ln()).exp()) / c
    }
}

/// `I_{z,0}(alpha) = int_{1/2}^{alpha+1/2} u^(-z) du` and
/// `I_{z,1}(alpha) = int_{1/2}^{alpha+1/2} u^(-z) (u - 1/2) du`.
pub fn i_integrals(z: ComplexScalar, alpha: f64) -> (ComplexScalar, ComplexScalar) {
    let (a, b) = (0.5, alpha + 0.5);
    let one = Complex64::new(1.0, 0.0);
    let i0 = power_difference(one - z, a, b);
    let i1 = power_difference(one * 2.0 - z, a, b) - i0 * 0.5;
    (i0, i1)
}

/// Whether `|z| <= (1 - 2 alpha)^2 / 75 * log x / (log2 x log3 x)`.
pub fn z_in_range(z: ComplexScalar, alpha: f64, x: f64) -> bool {
    let l1 = x.ln();
    let l2 = l1.ln();
    let l3 = l2.ln();
    if l3 <= 0.0 {
        return false;
    }
    z.norm() <= (1.0 - 2.0 * alpha).powi(2) / 75.0 * l1 / (l2 * l3)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1/2)")))
    }
}

/// The `h` moment integral `int_2^x t^((z-1)/2) log^(-z) t [I1 log^2 t + phi I0 log t] dt`
/// with `E(L^z)` and `E(L^z) phi(z)` supplied, in the variable `v = log t`.
fn h_moment_integral(z: ComplexScalar, x: f64, e: ComplexScalar, e_phi: ComplexScalar, alpha: f64, rel_tol: f64) -> ComplexScalar {
    let (i0, i1) = i_integrals(z, alpha);
    let f = |v: f64| {
        let w = ((z + 1.0) * 0.5 * v - z * v.ln()).exp();
        w * (e * i1 * v * v + e_phi * i0 * v)
    };
    integrate(f, 2f64.ln(), x.ln(), 0.0, rel_tol).0
}

/// Predicted `sum_{d in D_alpha(x)} h(d)^z` or `L(1, chi_d)^z`.
pub fn moment_main_term(x: f64, alpha: f64, z: ComplexScalar, mode: MomentMode, cfg: &EulerProductConfig) -> Result<ComplexScalar> {
    moment_main_term_tol(x, alpha, z, mode, cfg, QUAD_REL_TOL)
}

pub fn moment_main_term_tol(x: f64, alpha: f64, z: ComplexScalar, mode: MomentMode, cfg: &EulerProductConfig, rel_tol: f64) -> Result<ComplexScalar> {
    check_alpha(alpha)?;
    if !(x > 2.0) {
        return Err(Error::InvalidParameter(format!("x = {x} must exceed 2")));
    }
    let e = euler_expectation(z, ModelVariant::Standard, cfg)?.value;
    let z2 = zeta2();
    let lx = x.ln();
    match mode {
        MomentMode::LMoment => {
            let e_phi = expectation_times_phi(z, cfg)?;
            let v = e * (alpha * alpha * lx * lx / 2.0 - 2.0 * alpha * alpha * (lx - 2.0)) + e_phi * alpha * (lx - 2.0);
            Ok(v * x.sqrt() / z2)
        }
        MomentMode::HMoment => {
            let e_phi = expectation_times_phi(z, cfg)?;
            Ok(h_moment_integral(z, x, e, e_phi, alpha, rel_tol) / (2.0 * z2))
        }
        MomentMode::Corollary => {
            let (_, i1) = i_integrals(z, alpha);
            let w = ((z + 1.0) * 0.5 * lx + (2.0 - z) * lx.ln()).exp();
            Ok(w / ((z + 1.0) * z2) * i1 * e)
        }
    }
}

/// Sum of `f` over records in fixed-size chunks, in a fixed order.
fn ordered_sum(records: &[DiscriminantRecord], f: impl Fn(&DiscriminantRecord) -> ComplexScalar + Sync) -> ComplexScalar {
    let partial: Vec<ComplexScalar> = records
        .par_chunks(SUM_CHUNK)
        .map(|c| c.iter().fold(Complex64::new(0.0, 0.0), |acc, r| acc + f(r)))
        .collect();
    partial.into_iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b)
}

/// Observed `sum h(d)^z` or `sum L(1, chi_d)^z`.
pub fn moment_empirical(records: &[DiscriminantRecord], z: ComplexScalar, mode: MomentMode) -> Result<ComplexScalar> {
    match mode {
        MomentMode::HMoment => Ok(ordered_sum(records, |r| (z * (r.h as f64).ln()).exp())),
        MomentMode::LMoment => Ok(ordered_sum(records, |r| (z * r.l1.ln()).exp())),
        MomentMode::Corollary => Err(Error::InvalidParameter("no empirical counterpart for corollary mode".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub z: ComplexScalar,
    pub empirical: ComplexScalar,
    pub theoretical: ComplexScalar,
    pub rel_dev: f64,
    pub x: f64,
    pub alpha: f64,
    pub mode: MomentMode,
}

pub fn moment_report(
    records: &[DiscriminantRecord],
    x: f64,
    alpha: f64,
    z: ComplexScalar,
    mode: MomentMode,
    cfg: &EulerProductConfig,
) -> Result<MomentReport> {
    let empirical = moment_empirical(records, z, mode)?;
    let theoretical = moment_main_term(x, alpha, z, mode, cfg)?;
    let rel_dev = if theoretical.norm() > 0.0 {
        (empirical - theoretical).norm() / theoretical.norm()
    } else {
        f64::NAN
    };
    Ok(MomentReport {
        z,
        empirical,
        theoretical,
        rel_dev,
        x,
        alpha,
        mode,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailCurve {
    pub tau: Vec<f64>,
    pub empirical: Vec<f64>,
    pub model: Vec<f64>,
}

/// `2 e^gamma sqrt(x) tau / log x`.
pub fn tail_threshold(x: f64, tau: f64) -> f64 {
    2.0 * EULER_GAMMA.exp() * x.sqrt() * tau / x.ln()
}

/// Proportion of records with `h(d) >= 2 e^gamma sqrt(x) tau / log x`, against the model law.
pub fn tail_empirical(records: &[DiscriminantRecord], x: f64, taus: &[f64]) -> TailCurve {
    let n = records.len().max(1) as f64;
    let empirical = taus
        .iter()
        .map(|&tau| {
            let th = tail_threshold(x, tau);
            records.iter().filter(|r| r.h as f64 >= th).count() as f64 / n
        })
        .collect();
    let model = taus.iter().map(|&tau| tail_formula(tau)).collect();
    TailCurve {
        tau: taus.to_vec(),
        empirical,
        model,
    }
}

/// `H^2 log^2 H (log log H)^4`: the discriminant range that must be enumerated
/// to count every family member with `h(d) <= H`.
pub fn count_range(h: f64) -> f64 {
    let l = h.ln();
    h * h * l * l * l.ln().powi(4)
}

/// `2 alpha^2 (4 alpha + 3)/3 prod_{p <= P} (1 - (2p - 1)/p^4)`.
pub fn theorem6_constant(alpha: f64, p_trunc: u64) -> Result<f64> {
    check_alpha(alpha)?;
    let prod: f64 = primes_up_to(p_trunc)
        .iter()
        .map(|&p| {
            let pf = p as f64;
            1.0 - (2.0 * pf - 1.0) / pf.powi(4)
        })
        .product();
    Ok(2.0 * alpha * alpha * (4.0 * alpha + 3.0) / 3.0 * prod)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCount {
    pub h: u64,
    pub count: u64,
    pub reference: f64,
}

/// `#{d : h(d) <= H}` over the records, with the reference `c(alpha) H log^3 H`.
pub fn class_count_cumulative(records: &[DiscriminantRecord], alpha: f64, h_grid: &[u64], p_trunc: u64) -> Result<Vec<ClassCount>> {
    let c = theorem6_constant(alpha, p_trunc)?;
    Ok(h_grid
        .iter()
        .map(|&h| ClassCount {
            h,
            count: records.iter().filter(|r| r.h <= h).count() as u64,
            reference: c * h as f64 * (h as f64).ln().powi(3),
        })
        .collect())
}

/// `log E(L^r)/r - log log r - gamma - (C_0 - 1)/log r`.
pub fn size_residual(r: f64, cfg: &EulerProductConfig) -> Result<f64> {
    let le = log_euler_expectation(r, ModelVariant::Standard, cfg)?;
    Ok(le / r - r.ln().ln() - EULER_GAMMA - (c0_constant() - 1.0) / r.ln())
}
