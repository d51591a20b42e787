//! Imaginary quadratic discriminants, reduced binary quadratic forms, and
//! the norm equations `p = x^2 + d y^2` and `4N = U^2 + D V^2`.

use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_traits::{One, Zero};
use thiserror::Error;

use ecpp_arith::modarith::{is_prime_trial, sqrt_mod, ArithError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuadError {
    #[error("discriminant must be negative, got {0}")]
    NotNegative(i64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("-{0} is not a fundamental discriminant")]
    NotFundamental(u64),
    #[error("precondition violated: {0}")]
    PreconditionViolated(&'static str),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Binary quadratic form `A x^2 + B xy + C y^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadForm {
    pub a: u64,
    pub b: i64,
    pub c: u64,
}

impl QuadForm {
    pub fn discriminant(&self) -> i128 {
        let b = self.b as i128;
        b * b - 4 * self.a as i128 * self.c as i128
    }

    /// `|B| ≤ A ≤ C`, with `B ≥ 0` when `|B| = A` or `A = C`.
    pub fn is_reduced(&self) -> bool {
        let babs = self.b.unsigned_abs();
        babs <= self.a && self.a <= self.c && (self.b >= 0 || (babs != self.a && self.a != self.c))
    }

    pub fn is_primitive(&self) -> bool {
        self.a.gcd(&self.b.unsigned_abs()).gcd(&self.c) == 1
    }
}

/// Whether `neg_d = -D < 0` is a fundamental discriminant: `D` free of odd
/// square factors and either `D ≡ 3 mod 4`, or `4 | D` with
/// `D/4 mod 4 ∈ {1, 2}`.
pub fn is_fundamental(neg_d: i64) -> Result<bool, QuadError> {
    if neg_d >= 0 {
        return Err(QuadError::NotNegative(neg_d));
    }
    let d = neg_d.unsigned_abs();
    let shape = match d % 4 {
        3 => true,
        0 => matches!((d / 4) % 4, 1 | 2),
        _ => false,
    };
    Ok(shape && odd_squarefree(d))
}

fn odd_squarefree(d: u64) -> bool {
    let mut m = d >> d.trailing_zeros();
    let mut p = 3u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return false;
            }
        }
        p += 2;
    }
    true
}

/// Prime discriminants attached to the prime `q`: `(-1)^((q-1)/2) q` for odd
/// `q`, and the three choices `-4, 8, -8` for `q = 2`.
pub fn prime_discriminants(q: u64) -> Result<Vec<i64>, QuadError> {
    if !is_prime_trial(q) {
        return Err(QuadError::NotPrime(q));
    }
    if q == 2 {
        return Ok(vec![-4, 8, -8]);
    }
    let q = q as i64;
    Ok(vec![if q % 4 == 1 { q } else { -q }])
}

/// All primitive reduced forms of discriminant `-D`, sorted by `(A, B)`.
pub fn reduced_forms(d: u64) -> Vec<QuadForm> {
    let mut out = Vec::new();
    let a_max = (d / 3).sqrt();
    let parity = (d % 2) as i64;
    for a in 1..=a_max.max(1) {
        let four_a = 4 * a;
        let ai = a as i64;
        // B ranges over (-A, A] with B ≡ D mod 2
        let mut b = -ai + 1;
        if b.rem_euclid(2) != parity {
            b += 1;
        }
        while b <= ai {
            let num = (b * b) as u64 + d;
            if num % four_a == 0 {
                let c = num / four_a;
                let form = QuadForm { a, b, c };
                if c >= a && (c != a || b >= 0) && form.is_primitive() {
                    out.push(form);
                }
            }
            b += 2;
        }
    }
    out
}

pub fn class_number(d: u64) -> u64 {
    reduced_forms(d).len() as u64
}

/// `2^(t-1)` where `t` counts the distinct primes dividing `D`.
pub fn genus_count(d: u64) -> u64 {
    1 << (distinct_prime_factors(d).len() - 1)
}

fn distinct_prime_factors(mut d: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= d {
        if d % p == 0 {
            out.push(p);
            while d % p == 0 {
                d /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if d > 1 {
        out.push(d);
    }
    out
}

/// A fundamental discriminant `-D` with its factorization into prime
/// discriminants, class number and genus count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscriminantInfo {
    pub d: u64,
    pub factors: Vec<i64>,
    pub t: u32,
    pub h: u64,
    pub g: u64,
}

impl DiscriminantInfo {
    pub fn new(d: u64) -> Result<Self, QuadError> {
        if d == 0 || d > i64::MAX as u64 || !is_fundamental(-(d as i64))? {
            return Err(QuadError::NotFundamental(d));
        }
        let mut factors = Vec::new();
        let mut odd_product = 1i64;
        for p in distinct_prime_factors(d) {
            if p == 2 {
                continue;
            }
            let q = prime_discriminants(p)?[0];
            odd_product *= q;
            factors.push(q);
        }
        if d % 2 == 0 {
            factors.push(-(d as i64) / odd_product);
        }
        factors.sort_by_key(|q| (q.unsigned_abs(), *q > 0));
        let t = factors.len() as u32;
        Ok(Self {
            d,
            factors,
            t,
            h: class_number(d),
            g: 1 << (t - 1),
        })
    }
}

fn low_u32(v: &BigUint) -> u32 {
    v.iter_u32_digits().next().unwrap_or(0)
}

/// Half-gcd descent on `(top, t)` stopping at the first remainder `≤ bound`,
/// tracking the cofactors `w_i = w_{i-2} + a_i w_{i-1}` modulo `2^32`. Only
/// when `r^2 + d w^2 ≡ target mod 2^32` are the cofactors replayed at full
/// precision and the equation checked exactly.
fn descent(d: u64, top: &BigUint, t: &BigUint, bound: &BigUint, target: &BigUint) -> Option<(BigUint, BigUint)> {
    let mut r_prev = top.clone();
    let mut r = t.clone();
    let (mut w_prev, mut w) = (0u32, 1u32);
    let mut quotients = Vec::new();
    while &r > bound {
        let (q, rem) = r_prev.div_rem(&r);
        let next_w = w_prev.wrapping_add(low_u32(&q).wrapping_mul(w));
        quotients.push(q);
        r_prev = std::mem::replace(&mut r, rem);
        w_prev = std::mem::replace(&mut w, next_w);
    }
    let rl = low_u32(&r);
    let lhs = rl
        .wrapping_mul(rl)
        .wrapping_add((d as u32).wrapping_mul(w).wrapping_mul(w));
    if lhs != low_u32(target) {
        return None;
    }
    let (mut w_prev, mut w) = (BigUint::zero(), BigUint::one());
    for q in &quotients {
        let next_w = &w_prev + q * &w;
        w_prev = std::mem::replace(&mut w, next_w);
    }
    if &r * &r + BigUint::from(d) * &w * &w == *target {
        Some((r, w))
    } else {
        None
    }
}

/// Cornacchia's algorithm for `p = x^2 + d y^2`, given `t^2 ≡ -d mod p` with
/// `p/2 < t < p`. Returns `(x, y)` or `None` when `p` is not represented.
pub fn cornacchia(d: u64, p: &BigUint, t: &BigUint) -> Result<Option<(BigUint, BigUint)>, QuadError> {
    if d == 0 {
        return Err(QuadError::PreconditionViolated("d must be positive"));
    }
    if !(t < p && (t << 1u32) > *p) {
        return Err(QuadError::PreconditionViolated("t must satisfy p/2 < t < p"));
    }
    if (t * t + BigUint::from(d)) % p != BigUint::zero() {
        return Err(QuadError::PreconditionViolated("t^2 ≢ -d mod p"));
    }
    Ok(descent(d, p, t, &p.sqrt(), p))
}

/// Solves `4N = U^2 + D V^2` given `root^2 ≡ -D mod N`.
///
/// The root is lifted to `t ∈ (0, N)` with `t ≡ D mod 2` (taking `N - root`
/// when the parity is wrong), so that `t^2 ≡ -D mod 4N`; the descent then
/// runs on `(2N, t)` down to `2√N`. Returns `U > 0`, `V > 0`, the pair the
/// descent lands on.
pub fn solve_4n(d: u64, n: &BigUint, root: &BigUint) -> Result<Option<(BigUint, BigUint)>, QuadError> {
    if n.is_even() || n < &BigUint::from(3u32) {
        return Err(QuadError::PreconditionViolated("N must be odd and at least 3"));
    }
    let root = root % n;
    if (&root * &root + BigUint::from(d)) % n != BigUint::zero() {
        return Err(QuadError::PreconditionViolated("root^2 ≢ -D mod N"));
    }
    if root.is_zero() {
        // N | D; nothing useful to solve
        return Ok(None);
    }
    let t = if (low_u32(&root) as u64 + d) % 2 == 0 { root } else { n - root };
    let four_n: BigUint = n << 2u32;
    let top: BigUint = n << 1u32;
    let bound = four_n.sqrt();
    Ok(descent(d, &top, &t, &bound, &four_n).filter(|(_, v)| !v.is_zero()))
}

/// `4N = U^2 + D V^2` from scratch: computes `√(-D) mod N` first and returns
/// `None` when `-D` is not a square modulo `N`.
pub fn norm_equation(d: u64, n: &BigUint) -> Result<Option<(BigUint, BigUint)>, QuadError> {
    match sqrt_mod(&BigInt::from(-(d as i64)), n) {
        Ok(root) => solve_4n(d, n, root.value()),
        Err(ArithError::NonResidue) => Ok(None),
        Err(e) => Err(e.into()),
    }
}
