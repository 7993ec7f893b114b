//! Special functions and quadrature: zeta and its log-derivative at real
//! arguments, the first Stieltjes constant, `E_1`, `erfc`, and adaptive
//! Gauss-Kronrod integration.

use std::sync::OnceLock;

use num_complex::Complex64;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `B_2, B_4, ..., B_20`.
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

const EM_CUT: u32 = 24;

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// Rising factorial `(s)_j` and the sum `sum_{i<j} 1/(s+i)`.
fn rising(s: f64, j: u32) -> (f64, f64) {
    let mut prod = 1.0;
    let mut harm = 0.0;
    for i in 0..j {
        prod *= s + i as f64;
        harm += 1.0 / (s + i as f64);
    }
    (prod, harm)
}

/// `sum_{n >= 1} ln(n)^k / n^s` for `k in {0, 1}` and real `s > 1`, by
/// Euler-Maclaurin summation with the tail starting at `EM_CUT`.
fn em_dirichlet(s: f64, with_log: bool) -> f64 {
    let n = EM_CUT as f64;
    let ln_n = n.ln();
    let f = |x: f64| if with_log { x.ln() * x.powf(-s) } else { x.powf(-s) };
    let mut head = 0.0;
    for k in 1..EM_CUT {
        head += f(k as f64);
    }
    let integral = if with_log {
        n.powf(1.0 - s) * (ln_n / (s - 1.0) + 1.0 / ((s - 1.0) * (s - 1.0)))
    } else {
        n.powf(1.0 - s) / (s - 1.0)
    };
    let mut tail = integral + f(n) / 2.0;
    for (i, b) in BERNOULLI.iter().enumerate() {
        let j = 2 * i as u32 + 1;
        let (poch, harm) = rising(s, j);
        // j odd: f^(j)(N) = -(s)_j N^(-s-j) [ln N - harm]   (log case)
        //               = -(s)_j N^(-s-j)                  (plain case)
        let base = -poch * n.powf(-s - j as f64);
        let deriv = if with_log { base * (ln_n - harm) } else { base };
        tail -= b / factorial(j + 1) * deriv;
    }
    head + tail
}

/// Riemann zeta at real `s > 1`.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta({s}) outside the convergent half-line");
    em_dirichlet(s, false)
}

/// `zeta'(s)` at real `s > 1`.
pub fn zeta_prime(s: f64) -> f64 {
    -em_dirichlet(s, true)
}

pub fn zeta2() -> f64 {
    std::f64::consts::PI * std::f64::consts::PI / 6.0
}

/// `zeta'(2) / zeta(2)`, computed once.
pub fn zeta_log_derivative_at_2() -> f64 {
    static V: OnceLock<f64> = OnceLock::new();
    *V.get_or_init(|| zeta_prime(2.0) / zeta2())
}

/// First Stieltjes constant `gamma_1 = lim (sum_{n<=M} ln n / n - ln^2 M / 2)`.
pub fn stieltjes_gamma1() -> f64 {
    static V: OnceLock<f64> = OnceLock::new();
    *V.get_or_init(|| {
        let n = EM_CUT as f64;
        let ln_n = n.ln();
        let mut acc = 0.0;
        for k in 1..EM_CUT {
            let k = k as f64;
            acc += k.ln() / k;
        }
        acc += -ln_n * ln_n / 2.0 + ln_n / n / 2.0;
        for (i, b) in BERNOULLI.iter().enumerate() {
            let j = 2 * i as u32 + 1;
            let (poch, harm) = rising(1.0, j);
            let deriv = -poch * n.powf(-1.0 - j as f64) * (ln_n - harm);
            acc -= b / factorial(j + 1) * deriv;
        }
        acc
    })
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

/// Exponential integral `E_1(x)` for `x > 0`.
pub fn e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1({x})");
    if x <= 1.0 {
        // -gamma - ln x + sum_{k>=1} (-1)^(k+1) x^k / (k k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // modified Lentz on the continued fraction e^-x / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue:
    Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: QuadValue>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k = k + s * WGK[i];
        if i % 2 == 1 {
            g = g + s * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).magnitude())
}

/// Integral over `[a, b]` by globally adaptive 7-15 Gauss-Kronrod bisection,
/// to absolute error `abs_tol` or relative error `rel_tol`.
pub fn integrate<T: QuadValue>(f: impl Fn(f64) -> T, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (T, f64) {
    let mut segs = vec![{
        let (v, e) = gk15(&f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..5000 {
        let total = segs.iter().fold(T::zero(), |acc, s| acc + s.2);
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if err <= abs_tol.max(rel_tol * total.magnitude()) {
            return (total, err);
        }
        let (i, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = segs.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
    }
    let total = segs.iter().fold(T::zero(), |acc, s| acc + s.2);
    (total, segs.iter().map(|s| s.3).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_values() {
        assert!((zeta(2.0) - zeta2()).abs() < 1e-14);
        assert!((zeta(4.0) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta(3.0) - 1.202_056_903_159_594_3).abs() < 1e-14);
        assert!((zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-13);
    }

    #[test]
    fn zeta_prime_matches_difference_quotient() {
        for s in [1.5, 2.0, 3.0] {
            let h = 1e-5;
            let fd = (zeta(s + h) - zeta(s - h)) / (2.0 * h);
            assert!((zeta_prime(s) - fd).abs() < 1e-8, "s = {s}");
        }
        // zeta'(2) = -0.9375482543158437
        assert!((zeta_prime(2.0) + 0.937_548_254_315_843_7).abs() < 1e-12);
        // -2 zeta'(2)/zeta(2) = 1.1399219861890...
        assert!((-2.0 * zeta_log_derivative_at_2() - 1.139_921_986_189).abs() < 1e-10);
    }

    #[test]
    fn gamma1_value() {
        // direct partial sums with a second-order correction
        let m = 200_000u32;
        let mut s = 0.0;
        for n in 1..=m {
            let n = n as f64;
            s += n.ln() / n;
        }
        let lm = (m as f64).ln();
        let direct = s - lm * lm / 2.0 - lm / (2.0 * m as f64);
        assert!((stieltjes_gamma1() - direct).abs() < 1e-9);
        assert!((stieltjes_gamma1() + 0.072_815_845_483_676_7).abs() < 1e-12);
    }

    #[test]
    fn e1_values() {
        // E1(1) = 0.21938393439552026, E1(0.1) = 1.8229239584193906, E1(5) = 0.001148295591275326
        assert!((e1(1.0) - 0.219_383_934_395_520_26).abs() < 1e-15);
        assert!((e1(0.1) - 1.822_923_958_419_390_6).abs() < 1e-14);
        assert!((e1(5.0) / 0.001_148_295_591_275_326 - 1.0).abs() < 1e-14);
        let q = integrate(|t: f64| (-t).exp() / t, 2.0, 60.0, 1e-15, 1e-14).0;
        assert!((e1(2.0) - q).abs() < 1e-13);
    }

    #[test]
    fn quadrature_polynomial_and_complex() {
        let (v, _) = integrate(|t: f64| t * t, 0.0, 3.0, 1e-14, 1e-14);
        assert!((v - 9.0).abs() < 1e-12);
        let (w, _) = integrate(|t: f64| Complex64::new(0.0, t).exp(), 0.0, std::f64::consts::PI, 1e-13, 1e-13);
        assert!((w - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }
}
