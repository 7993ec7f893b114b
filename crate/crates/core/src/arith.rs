//! Integer primitives: Kronecker symbols, discriminant tests, factorization
//! and the generalized divisor function `d_z`.

use std::sync::OnceLock;

use num_complex::Complex64;

/// Complex value used for moments, `d_z(m)` and Euler products.
pub type ComplexScalar = Complex64;

/// Size of the shared smallest-prime-factor table.
pub const SIEVE_LIMIT: usize = 1 << 21;

/// Smallest-prime-factor sieve.
#[derive(Debug, Clone)]
pub struct Sieve {
    spf: Vec<u32>,
    primes: Vec<u32>,
}

impl Sieve {
    /// Linear sieve over `[0, limit]`.
    pub fn new(limit: usize) -> Self {
        let limit = limit.max(2);
        let mut spf = vec![0u32; limit + 1];
        let mut primes = Vec::new();
        for i in 2..=limit {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                let j = i * p as usize;
                if p > si || j > limit {
                    break;
                }
                spf[j] = p;
            }
        }
        Sieve { spf, primes }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    /// Smallest prime factor of `n` (2 <= n <= limit).
    #[inline]
    pub fn spf(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Primes `p <= n` (n at most the sieve limit).
    pub fn primes_up_to(&self, n: u64) -> &[u32] {
        let k = self.primes.partition_point(|&p| (p as u64) <= n);
        &self.primes[..k]
    }
}

/// Process-wide sieve, built once and read-only afterwards.
pub fn sieve() -> &'static Sieve {
    static SIEVE: OnceLock<Sieve> = OnceLock::new();
    SIEVE.get_or_init(|| Sieve::new(SIEVE_LIMIT))
}

/// All primes up to `n`, extending past the shared table if needed.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    let s = sieve();
    if n <= s.limit() {
        return s.primes_up_to(n).iter().map(|&p| p as u64).collect();
    }
    Sieve::new(n as usize).primes().iter().map(|&p| p as u64).collect()
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|s| s > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|s| s <= n) {
        r += 1;
    }
    r
}

pub fn isqrt_u128(n: u128) -> u128 {
    let mut r = (n as f64).sqrt() as u128;
    while r.checked_mul(r).is_none_or(|s| s > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|s| s <= n) {
        r += 1;
    }
    r
}

pub fn is_square(n: u64) -> bool {
    let r = isqrt(n);
    r * r == n
}

/// Membership in the set of positive discriminants: `d = 0, 1 mod 4` and not a square.
pub fn is_discriminant(d: u64) -> bool {
    d >= 1 && (d.is_multiple_of(4) || d % 4 == 1) && !is_square(d)
}

/// Jacobi symbol `(a/n)` for odd `n >= 1`.
pub fn jacobi(a: u64, n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut a = a % n;
    let mut n = n;
    let mut acc = 1i8;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            acc = -acc;
        }
        if a % 4 == 3 && n % 4 == 3 {
            acc = -acc;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        acc
    } else {
        0
    }
}

/// Kronecker symbol `(d/m)`.
pub fn kronecker(d: i64, m: u64) -> i8 {
    if m == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let v = m.trailing_zeros();
    let odd = m >> v;
    let mut acc = 1i8;
    if v > 0 {
        if d % 2 == 0 {
            return 0;
        }
        let r = d.rem_euclid(8);
        if v % 2 == 1 && (r == 3 || r == 5) {
            acc = -1;
        }
    }
    if odd == 1 {
        return acc;
    }
    let a = (d as i128).rem_euclid(odd as i128) as u64;
    acc * jacobi(a, odd)
}

/// Prime factorization together with the 2-adic and squarefree data used by
/// the character-sum formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    /// `(p, e)` ascending in `p`.
    pub pairs: Vec<(u64, u32)>,
    /// Exponent of 2.
    pub e1: u32,
    /// Product of the odd primes with odd exponent.
    pub m0: u64,
    /// Number of primes dividing `m0`.
    pub omega_m0: u32,
    /// Number of distinct odd prime factors.
    pub eta: u32,
}

impl Factorization {
    pub fn value(&self) -> u128 {
        self.pairs
            .iter()
            .fold(1u128, |acc, &(p, e)| acc * (p as u128).pow(e))
    }

    /// Odd primes carrying an even exponent.
    pub fn even_odd_primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.pairs
            .iter()
            .filter(|&&(p, e)| p != 2 && e % 2 == 0)
            .map(|&(p, _)| p)
    }

    fn from_pairs(pairs: Vec<(u64, u32)>) -> Self {
        let mut e1 = 0;
        let mut m0 = 1;
        let mut omega_m0 = 0;
        let mut eta = 0;
        for &(p, e) in &pairs {
            if p == 2 {
                e1 = e;
                continue;
            }
            eta += 1;
            if e % 2 == 1 {
                m0 *= p;
                omega_m0 += 1;
            }
        }
        Factorization {
            pairs,
            e1,
            m0,
            omega_m0,
            eta,
        }
    }
}

fn push_factor(pairs: &mut Vec<(u64, u32)>, p: u64) {
    match pairs.last_mut() {
        Some((q, e)) if *q == p => *e += 1,
        _ => pairs.push((p, 1)),
    }
}

/// Factor `m >= 1` by table lookup, then trial division by tabulated primes.
pub fn factorize(m: u64) -> Factorization {
    assert!(m >= 1, "factorize(0)");
    let s = sieve();
    let mut pairs = Vec::new();
    let mut n = m;
    if n > s.limit() {
        for &p in s.primes() {
            let p = p as u64;
            if p * p > n || n <= s.limit() {
                break;
            }
            while n.is_multiple_of(p) {
                push_factor(&mut pairs, p);
                n /= p;
            }
        }
        if n > s.limit() {
            let mut p = s.limit() | 1;
            while p.saturating_mul(p) <= n {
                while n.is_multiple_of(p) {
                    push_factor(&mut pairs, p);
                    n /= p;
                }
                p += 2;
            }
            if n > 1 {
                push_factor(&mut pairs, n);
            }
            return Factorization::from_pairs(pairs);
        }
    }
    while n > 1 {
        let p = s.spf(n);
        push_factor(&mut pairs, p);
        n /= p;
    }
    Factorization::from_pairs(pairs)
}

/// All positive divisors of a factored number, unsorted.
pub fn divisors(f: &Factorization) -> Vec<u64> {
    let mut out = vec![1u64];
    for &(p, e) in &f.pairs {
        let len = out.len();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out
}

/// `d_z(p^nu)` by the recurrence `d_z(p^nu) = d_z(p^(nu-1)) (z + nu - 1) / nu`.
pub fn dz_prime_power(z: ComplexScalar, nu: u32) -> ComplexScalar {
    let mut v = ComplexScalar::new(1.0, 0.0);
    for k in 1..=nu {
        v = v * (z + (k - 1) as f64) / k as f64;
    }
    v
}

/// Generalized divisor function `d_z(m)`.
pub fn divisor_dz(z: ComplexScalar, m: u64) -> ComplexScalar {
    factorize(m)
        .pairs
        .iter()
        .fold(ComplexScalar::new(1.0, 0.0), |acc, &(_, e)| {
            acc * dz_prime_power(z, e)
        })
}

/// `d_z(m)` for every `m <= n` (index 0 unused), via the shared sieve.
pub fn divisor_dz_table(z: ComplexScalar, n: usize) -> Vec<ComplexScalar> {
    let s = sieve();
    assert!(n as u64 <= s.limit(), "table beyond sieve limit");
    let max_e = 64;
    let pp: Vec<ComplexScalar> = (0..max_e).map(|e| dz_prime_power(z, e)).collect();
    let mut out = vec![ComplexScalar::new(0.0, 0.0); n + 1];
    if n >= 1 {
        out[1] = ComplexScalar::new(1.0, 0.0);
    }
    for m in 2..=n {
        let p = s.spf(m as u64) as usize;
        let mut rest = m / p;
        let mut e = 1;
        while rest.is_multiple_of(p) {
            rest /= p;
            e += 1;
        }
        out[m] = out[rest] * pp[e];
    }
    out
}
