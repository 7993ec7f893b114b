//! Minimal double-double arithmetic (about 31 significant digits), used to
//! settle family membership for points inside the floating-point guard band.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

const LN2: DD = DD {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    /// Exact for every `u128` below 2^106.
    pub fn from_u128(n: u128) -> Self {
        let hi = n as f64;
        let rest = n as i128 - hi as i128;
        let (hi, lo) = quick_two_sum(hi, rest as f64);
        DD { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn mul_pow2(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        DD {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DD::ZERO;
        }
        let x = DD::from_f64(self.hi.sqrt());
        x + (self - x * x) / (x + x)
    }

    pub fn exp(self) -> Self {
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * DD::from_f64(k)).mul_pow2(-10);
        let mut term = DD::ONE;
        let mut sum = DD::ONE;
        for i in 1..=14 {
            term = term * r / DD::from_f64(i as f64);
            sum = sum + term;
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum.mul_pow2(k as i32)
    }

    pub fn ln(self) -> Self {
        assert!(self.hi > 0.0, "ln of nonpositive value");
        let mut x = DD::from_f64(self.hi.ln());
        for _ in 0..2 {
            x = x + self * (-x).exp() - DD::ONE;
        }
        x
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, o: DD) -> DD {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, o: DD) -> DD {
        self + (-o)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, o: DD) -> DD {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, o: DD) -> DD {
        let q1 = self.hi / o.hi;
        let r = self - o * DD::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * DD::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::from_f64(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: DD, b: DD, rel: f64) -> bool {
        ((a - b).to_f64()).abs() <= rel * b.to_f64().abs()
    }

    #[test]
    fn exact_integers() {
        let n = (1u128 << 100) + 12345;
        let d = DD::from_u128(n);
        assert_eq!(d.hi as u128 + 12345, n);
        assert_eq!(d.lo, 12345.0);
    }

    #[test]
    fn sqrt_squares_back() {
        for n in [2u128, 3, 5, 1_000_003, 123_456_789_012_345] {
            let x = DD::from_u128(n);
            let r = x.sqrt();
            assert!(close(r * r, x, 1e-30), "{n}");
        }
    }

    #[test]
    fn exp_ln_roundtrip() {
        for v in [0.5, 1.0, 2.0, 10.0, 1e6, 3.7e15] {
            let x = DD::from_f64(v);
            assert!(close(x.ln().exp(), x, 1e-28), "{v}");
        }
        let e = DD::ONE.exp();
        // e = 2.718281828459045 + 1.4456468917292502e-16
        assert_eq!(e.hi, std::f64::consts::E);
        assert!((e.lo - 1.445_646_891_729_250_2e-16).abs() < 1e-28);
        assert!(close(DD::from_f64(2.0).ln(), LN2, 1e-31));
    }

    #[test]
    fn division() {
        let q = DD::ONE / DD::from_f64(3.0);
        assert!(close(q * DD::from_f64(3.0), DD::ONE, 1e-31));
    }
}
