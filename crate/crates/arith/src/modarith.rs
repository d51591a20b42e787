//! Modular arithmetic kernels over arbitrary-precision integers.
//!
//! Everything here is a pure function of its inputs. Square roots use
//! Tonelli-Shanks and always return the smaller of the two roots so that
//! results are reproducible; failures of the algorithm's internal
//! assumptions are reported rather than masked, because a failing square
//! root is often the first sign that a "prime" modulus is composite.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Default number of Miller-Rabin rounds.
pub const DEFAULT_PRP_ROUNDS: u32 = 20;

/// Seed of the generator that picks Miller-Rabin bases in
/// [`is_probable_prime`].
pub const PRP_SEED: u64 = 0x4543_5050_5052_5031;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("modulus must be at least 2")]
    ModulusTooSmall,
    #[error("modulus must be odd")]
    EvenModulus,
    #[error("argument is not a quadratic residue")]
    NonResidue,
    #[error("square root algorithm failed; the modulus is not prime")]
    AlgorithmFailure,
    #[error("cannot invert zero")]
    ZeroInput,
}

/// An element of Z/nZ, stored as its least nonnegative representative.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Residue {
    value: BigUint,
    modulus: BigUint,
}

impl Residue {
    pub fn new(value: &BigInt, modulus: &BigUint) -> Result<Self, ArithError> {
        if modulus < &BigUint::from(2u32) {
            return Err(ArithError::ModulusTooSmall);
        }
        Ok(Self {
            value: reduce(value, modulus),
            modulus: modulus.clone(),
        })
    }

    pub fn from_biguint(value: BigUint, modulus: &BigUint) -> Result<Self, ArithError> {
        if modulus < &BigUint::from(2u32) {
            return Err(ArithError::ModulusTooSmall);
        }
        let value = if &value >= modulus { value % modulus } else { value };
        Ok(Self {
            value,
            modulus: modulus.clone(),
        })
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn into_value(self) -> BigUint {
        self.value
    }
}

/// Least nonnegative residue of a signed integer.
pub fn reduce(a: &BigInt, n: &BigUint) -> BigUint {
    let r = a.magnitude() % n;
    if a.sign() == Sign::Minus && !r.is_zero() {
        n - r
    } else {
        r
    }
}

/// `base^exp mod n`.
pub fn mod_pow(base: &BigInt, exp: &BigUint, n: &BigUint) -> Result<Residue, ArithError> {
    if n < &BigUint::from(2u32) {
        return Err(ArithError::ModulusTooSmall);
    }
    let b = reduce(base, n);
    Ok(Residue {
        value: b.modpow(exp, n),
        modulus: n.clone(),
    })
}

/// Jacobi symbol (a/n) for odd n ≥ 3.
pub fn jacobi(a: &BigInt, n: &BigUint) -> Result<i8, ArithError> {
    if n.is_even() {
        return Err(ArithError::EvenModulus);
    }
    if n.is_one() {
        return Ok(1);
    }
    Ok(jacobi_unsigned(reduce(a, n), n.clone()))
}

fn jacobi_unsigned(mut a: BigUint, mut n: BigUint) -> i8 {
    let mut sign = 1i8;
    while !a.is_zero() {
        let tz = a.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            a >>= tz;
            let n8 = low_u64(&n) & 7;
            if tz % 2 == 1 && (n8 == 3 || n8 == 5) {
                sign = -sign;
            }
        }
        if low_u64(&a) & 3 == 3 && low_u64(&n) & 3 == 3 {
            sign = -sign;
        }
        std::mem::swap(&mut a, &mut n);
        a %= &n;
    }
    if n.is_one() {
        sign
    } else {
        0
    }
}

/// Jacobi symbol on machine words; `n` must be odd.
pub fn jacobi_i64(a: i64, n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut sign = 1i8;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && (n & 7 == 3 || n & 7 == 5) {
            sign = -sign;
        }
        if a & 3 == 3 && n & 3 == 3 {
            sign = -sign;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Kronecker symbol (a/n) for n ≥ 1, extending Jacobi to even n.
pub fn kronecker_i64(a: i64, n: u64) -> i8 {
    assert!(n > 0);
    let tz = n.trailing_zeros();
    let odd = n >> tz;
    let mut s = 1i8;
    if tz > 0 {
        if a % 2 == 0 {
            return 0;
        }
        // (a/2) = +1 for a ≡ ±1 mod 8, -1 for a ≡ ±3 mod 8
        let a8 = a.rem_euclid(8);
        if (a8 == 3 || a8 == 5) && tz % 2 == 1 {
            s = -s;
        }
    }
    if odd == 1 {
        s
    } else {
        s * jacobi_i64(a, odd)
    }
}

pub(crate) fn low_u64(n: &BigUint) -> u64 {
    n.iter_u64_digits().next().unwrap_or(0)
}

/// Square root of `a` modulo the odd probable prime `p` by Tonelli-Shanks.
///
/// Returns the smaller of the two roots. When the algorithm's assumptions
/// break (which happens only for composite `p`), `AlgorithmFailure` is
/// returned.
pub fn sqrt_mod(a: &BigInt, p: &BigUint) -> Result<Residue, ArithError> {
    if p < &BigUint::from(3u32) {
        return Err(ArithError::ModulusTooSmall);
    }
    if p.is_even() {
        return Err(ArithError::EvenModulus);
    }
    let a = reduce(a, p);
    if a.is_zero() {
        return Ok(Residue {
            value: a,
            modulus: p.clone(),
        });
    }
    match jacobi_unsigned(a.clone(), p.clone()) {
        -1 => return Err(ArithError::NonResidue),
        0 => return Err(ArithError::AlgorithmFailure),
        _ => {}
    }
    let one = BigUint::one();
    let root = if low_u64(p) & 3 == 3 {
        let e = (p + 1u32) >> 2;
        a.modpow(&e, p)
    } else {
        let pm1 = p - &one;
        let s = pm1.trailing_zeros().unwrap_or(0);
        let q = &pm1 >> s;
        let mut z = 2u64;
        loop {
            match jacobi_unsigned(BigUint::from(z), p.clone()) {
                -1 => break,
                0 => return Err(ArithError::AlgorithmFailure),
                _ => {}
            }
            z += 1;
            // a prime has a nonresidue below 2 ln(p)^2 under GRH; far past
            // that bound the modulus cannot be prime
            if z > 100_000 {
                return Err(ArithError::AlgorithmFailure);
            }
        }
        let mut m = s;
        let mut c = BigUint::from(z).modpow(&q, p);
        let mut t = a.modpow(&q, p);
        let mut r = a.modpow(&((&q + 1u32) >> 1), p);
        while !t.is_one() {
            let mut i = 0u64;
            let mut t2 = t.clone();
            while !t2.is_one() {
                t2 = &t2 * &t2 % p;
                i += 1;
                if i >= m {
                    return Err(ArithError::AlgorithmFailure);
                }
            }
            let mut b = c.clone();
            for _ in 0..(m - i - 1) {
                b = &b * &b % p;
            }
            m = i;
            c = &b * &b % p;
            t = t * &c % p;
            r = r * &b % p;
        }
        r
    };
    if &root * &root % p != a {
        return Err(ArithError::AlgorithmFailure);
    }
    let other = p - &root;
    Ok(Residue {
        value: if other < root { other } else { root },
        modulus: p.clone(),
    })
}

/// Outcome of a modular inversion: the inverse, or the factor of the
/// modulus that the failed inversion exposed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Inversion {
    Inverse(Residue),
    Factor(BigUint),
}

/// Inverse of `a` modulo `n`, or the nontrivial gcd when `a` is not a unit.
pub fn inv_mod(a: &BigInt, n: &BigUint) -> Result<Inversion, ArithError> {
    if n < &BigUint::from(2u32) {
        return Err(ArithError::ModulusTooSmall);
    }
    let a = reduce(a, n);
    inv_mod_unsigned(&a, n)
}

pub(crate) fn inv_mod_unsigned(a: &BigUint, n: &BigUint) -> Result<Inversion, ArithError> {
    if a.is_zero() {
        return Err(ArithError::ZeroInput);
    }
    match a.modinv(n) {
        Some(v) => Ok(Inversion::Inverse(Residue {
            value: v,
            modulus: n.clone(),
        })),
        None => Ok(Inversion::Factor(a.gcd(n))),
    }
}

const SMALL_PRIME_BOUND: u64 = 1000;

/// All primes `≤ bound`, ascending.
pub fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn small_primes() -> &'static [u64] {
    static PRIMES: std::sync::OnceLock<Vec<u64>> = std::sync::OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(SMALL_PRIME_BOUND))
}

/// Smallest prime factor of `n` below 1000, if any (`n` itself excluded).
pub fn small_factor(n: &BigUint) -> Option<u64> {
    if n.bits() <= 64 {
        let v = n.to_u64().unwrap_or(0);
        return small_primes()
            .iter()
            .copied()
            .find(|&p| p < v && v % p == 0);
    }
    // One bignum reduction per batch of primes whose product fits a word.
    let primes = small_primes();
    let mut i = 0;
    while i < primes.len() {
        let mut modulus = 1u64;
        let start = i;
        while i < primes.len() && modulus.checked_mul(primes[i]).is_some() {
            modulus *= primes[i];
            i += 1;
        }
        let rem = (n % modulus).to_u64().unwrap_or(0);
        if let Some(&p) = primes[start..i].iter().find(|&&p| rem % p == 0) {
            return Some(p);
        }
    }
    None
}

/// Deterministic primality by trial division; intended for `n < 2^64`
/// of modest size (cost is `O(√n)`).
pub fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 || n % 3 == 0 {
        return false;
    }
    let mut d = 5u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

/// Miller-Rabin probable-prime test with bases drawn from a generator
/// seeded with [`PRP_SEED`], preceded by trial division below 1000.
pub fn is_probable_prime(n: &BigUint, rounds: u32) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(PRP_SEED);
    is_probable_prime_with(n, rounds, &mut rng)
}

pub fn is_probable_prime_with<R: Rng + ?Sized>(n: &BigUint, rounds: u32, rng: &mut R) -> bool {
    if n < &BigUint::from(2u32) {
        return false;
    }
    if n < &BigUint::from(SMALL_PRIME_BOUND) {
        let v = n.to_u64().unwrap_or(0);
        return small_primes().contains(&v);
    }
    if small_factor(n).is_some() {
        return false;
    }
    if n < &BigUint::from(SMALL_PRIME_BOUND * SMALL_PRIME_BOUND) {
        return true;
    }
    let one = BigUint::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let two = BigUint::from(2u32);
    let upper = n - &one; // bases drawn from [2, n-2]
    'outer: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &upper);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = &x * &x % n;
            if x == nm1 {
                continue 'outer;
            }
            if x.is_one() {
                return false;
            }
        }
        return false;
    }
    true
}

/// `⌊n^(1/k)⌋`.
pub fn iroot(n: &BigUint, k: u32) -> BigUint {
    num_integer::Roots::nth_root(n, k)
}

/// `n > (N^(1/4) + 1)^2`, evaluated exactly.
///
/// Equivalent to `N < (√n - 1)^4`; expanding and squaring once gives the
/// integer test `16 n (n+1)^2 < R^2` with `R = (n+1)^2 + 4n - N > 0`.
pub fn exceeds_quartic_bound(n_prime: &BigUint, n: &BigUint) -> bool {
    if n_prime <= &BigUint::one() {
        return false;
    }
    let s = BigInt::from(n_prime.clone());
    let s1 = &s + 1u32;
    let r = &s1 * &s1 + &s * 4u32 - BigInt::from(n.clone());
    if !r.is_positive() {
        return false;
    }
    let lhs = &s1 * &s1 * &s * 16u32;
    lhs < &r * &r
}

/// Hasse interval for `m`: `(√N - 1)^2 ≤ m ≤ (√N + 1)^2`, exactly.
pub fn within_hasse_interval(m: &BigUint, n: &BigUint) -> bool {
    // |m - N - 1| ≤ 2√N  ⟺  (m - N - 1)^2 ≤ 4N
    let diff = BigInt::from(m.clone()) - BigInt::from(n.clone()) - 1u32;
    let sq = (&diff * &diff).into_parts().1;
    sq <= n << 2u32
}

/// Uniform random value of `bits` bits with the top bit set, from `rng`.
pub fn random_bits<R: Rng + ?Sized>(rng: &mut R, bits: u64) -> BigUint {
    let mut v = rng.gen_biguint(bits);
    v.set_bit(bits - 1, true);
    v
}
