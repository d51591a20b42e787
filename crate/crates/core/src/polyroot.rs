//! Polynomials over `Z/NZ` and extraction of one root of `H_D mod N`.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use ecpp_arith::modarith::{inv_mod, reduce, Inversion, Residue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("leading coefficient not invertible; factor {0} of N")]
    NonInvertibleElement(BigUint),
    #[error("polynomial has no root modulo N")]
    NoRoot,
    #[error("N is composite: factor {0}")]
    CompositeDetected(BigUint),
    #[error("modulus polynomial must have degree at least 1")]
    ConstantModulus,
    #[error("root finding did not converge")]
    NoConvergence,
}

/// Polynomial over `Z/NZ`; `coeffs[i]` multiplies `X^i`, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyModN {
    coeffs: Vec<BigUint>,
    n: BigUint,
}

impl PolyModN {
    pub fn new(coeffs: Vec<BigUint>, n: &BigUint) -> Self {
        let mut p = Self {
            coeffs: coeffs.into_iter().map(|c| c % n).collect(),
            n: n.clone(),
        };
        p.trim();
        p
    }

    pub fn from_ints(coeffs: &[BigInt], n: &BigUint) -> Self {
        Self::new(coeffs.iter().map(|c| reduce(c, n)).collect(), n)
    }

    pub fn from_u64(coeffs: &[u64], n: &BigUint) -> Self {
        Self::new(coeffs.iter().map(|&c| BigUint::from(c)).collect(), n)
    }

    pub fn zero(n: &BigUint) -> Self {
        Self {
            coeffs: Vec::new(),
            n: n.clone(),
        }
    }

    /// The polynomial `X`.
    pub fn x(n: &BigUint) -> Self {
        Self::new(vec![BigUint::zero(), BigUint::one()], n)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Residue {
        let v = self.coeffs.get(i).cloned().unwrap_or_default();
        Residue::from_biguint(v, &self.n).expect("modulus ≥ 2")
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(|c| c.is_one())
    }

    pub fn eval(&self, x: &BigUint) -> BigUint {
        let mut acc = BigUint::zero();
        for c in self.coeffs.iter().rev() {
            acc = (acc * x + c) % &self.n;
        }
        acc
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = BigUint::zero();
        let coeffs = (0..len)
            .map(|i| {
                let a = self.coeffs.get(i).unwrap_or(&zero);
                let b = other.coeffs.get(i).unwrap_or(&zero);
                (a + &self.n - b) % &self.n
            })
            .collect();
        Self::new(coeffs, &self.n)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(kronecker_mul(&self.coeffs, &other.coeffs, &self.n), &self.n)
    }

    /// Scales to a monic polynomial; a non-invertible leading coefficient
    /// exposes a factor of `N`.
    pub fn monic(&self) -> Result<Self, PolyError> {
        let Some(lead) = self.coeffs.last() else {
            return Ok(self.clone());
        };
        if lead.is_one() {
            return Ok(self.clone());
        }
        let inv = invert(lead, &self.n)?;
        Ok(Self::new(self.coeffs.iter().map(|c| c * &inv).collect(), &self.n))
    }

    /// Quotient and remainder by a nonzero divisor.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self), PolyError> {
        let n = &self.n;
        let db = divisor.degree().expect("nonzero divisor");
        let inv = invert(divisor.coeffs.last().expect("nonzero"), n)?;
        let mut r = self.coeffs.clone();
        if r.len() <= db {
            return Ok((Self::zero(n), self.clone()));
        }
        let mut q = vec![BigUint::zero(); r.len() - db];
        for i in (db..r.len()).rev() {
            let c = (&r[i] * &inv) % n;
            if c.is_zero() {
                continue;
            }
            for (j, dj) in divisor.coeffs.iter().enumerate() {
                let k = i - db + j;
                r[k] = (&r[k] + n - (&c * dj) % n) % n;
            }
            q[i - db] = c;
        }
        r.truncate(db);
        Ok((Self::new(q, n), Self::new(r, n)))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Result<Self, PolyError> {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b)?;
            a = std::mem::replace(&mut b, r);
        }
        a.monic()
    }
}

fn invert(a: &BigUint, n: &BigUint) -> Result<BigUint, PolyError> {
    match inv_mod(&BigInt::from(a.clone()), n) {
        Ok(Inversion::Inverse(r)) => Ok(r.into_value()),
        Ok(Inversion::Factor(f)) => Err(PolyError::NonInvertibleElement(f)),
        Err(_) => Err(PolyError::NonInvertibleElement(n.clone())),
    }
}

/// Product of two coefficient vectors by packing each into one integer.
fn kronecker_mul(a: &[BigUint], b: &[BigUint], n: &BigUint) -> Vec<BigUint> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = a.len().min(b.len()) as u64;
    let slot = 2 * n.bits() + 64 - len.leading_zeros() as u64 + 1;
    let prod = pack(a, slot) * pack(b, slot);
    unpack(&prod, slot, a.len() + b.len() - 1)
        .into_iter()
        .map(|c| c % n)
        .collect()
}

fn pack(coeffs: &[BigUint], slot: u64) -> BigUint {
    let total_bits = slot * coeffs.len() as u64;
    let mut words = vec![0u64; total_bits.div_ceil(64) as usize + 1];
    for (i, c) in coeffs.iter().enumerate() {
        let base = slot * i as u64;
        let (w, s) = ((base / 64) as usize, (base % 64) as u32);
        for (k, d) in c.iter_u64_digits().enumerate() {
            words[w + k] |= d << s;
            if s > 0 {
                words[w + k + 1] |= d >> (64 - s);
            }
        }
    }
    let words32: Vec<u32> = words.iter().flat_map(|&w| [w as u32, (w >> 32) as u32]).collect();
    BigUint::new(words32)
}

fn unpack(v: &BigUint, slot: u64, count: usize) -> Vec<BigUint> {
    let words: Vec<u64> = v.iter_u64_digits().collect();
    let get = |i: usize| words.get(i).copied().unwrap_or(0);
    let slot_words = slot.div_ceil(64) as usize;
    (0..count)
        .map(|i| {
            let base = slot * i as u64;
            let (w, s) = ((base / 64) as usize, (base % 64) as u32);
            let mut out = Vec::with_capacity(slot_words * 2);
            for k in 0..slot_words {
                let lo = get(w + k) >> s;
                let hi = if s > 0 { get(w + k + 1) << (64 - s) } else { 0 };
                let mut word = lo | hi;
                let used = 64 * k as u64;
                if used + 64 > slot {
                    let keep = slot - used;
                    word &= if keep >= 64 { u64::MAX } else { (1u64 << keep) - 1 };
                }
                out.push(word as u32);
                out.push((word >> 32) as u32);
            }
            BigUint::new(out)
        })
        .collect()
}

/// A monic modulus with the reversed inverse used for fast reduction.
struct Reducer {
    m: Vec<BigUint>,
    deg: usize,
    // rev(m)^(-1) mod X^(deg-1)
    inv_rev: Vec<BigUint>,
    n: BigUint,
}

impl Reducer {
    fn new(m: &PolyModN) -> Self {
        let deg = m.degree().expect("nonconstant");
        let n = m.n.clone();
        let rev: Vec<BigUint> = m.coeffs.iter().rev().cloned().collect();
        // Newton iteration g <- g (2 - f g), rev(m) has constant term 1
        let target = deg.saturating_sub(1).max(1);
        let mut g = vec![BigUint::one()];
        let mut prec = 1;
        while prec < target {
            prec = (2 * prec).min(target);
            let f: Vec<BigUint> = rev.iter().take(prec).cloned().collect();
            let mut fg = kronecker_mul(&f, &g, &n);
            fg.truncate(prec);
            // 2 - fg
            let mut e: Vec<BigUint> = fg.iter().map(|c| (&n - c) % &n).collect();
            e.resize(prec, BigUint::zero());
            e[0] = (&e[0] + 2u32) % &n;
            g = kronecker_mul(&g, &e, &n);
            g.truncate(prec);
        }
        g.truncate(target);
        Self {
            m: m.coeffs.clone(),
            deg,
            inv_rev: g,
            n,
        }
    }

    /// `a mod m` for `deg a ≤ 2 deg m - 2`.
    fn reduce(&self, mut a: Vec<BigUint>) -> Vec<BigUint> {
        while a.last().is_some_and(|c| c.is_zero()) {
            a.pop();
        }
        if a.len() <= self.deg {
            return a;
        }
        let qlen = a.len() - self.deg;
        debug_assert!(qlen <= self.inv_rev.len().max(1));
        let rev_a: Vec<BigUint> = a.iter().rev().take(qlen).cloned().collect();
        let inv: Vec<BigUint> = self.inv_rev.iter().take(qlen).cloned().collect();
        let mut q_rev = kronecker_mul(&rev_a, &inv, &self.n);
        q_rev.resize(qlen, BigUint::zero());
        let q: Vec<BigUint> = q_rev.into_iter().rev().collect();
        let mut qm = kronecker_mul(&q, &self.m, &self.n);
        qm.resize(self.deg, BigUint::zero());
        let mut r: Vec<BigUint> = a
            .into_iter()
            .take(self.deg)
            .zip(qm)
            .map(|(x, y)| (x + &self.n - y) % &self.n)
            .collect();
        while r.last().is_some_and(|c| c.is_zero()) {
            r.pop();
        }
        r
    }

    fn mulmod(&self, a: &[BigUint], b: &[BigUint]) -> Vec<BigUint> {
        self.reduce(kronecker_mul(a, b, &self.n))
    }
}

/// `base^exp mod (N, modpoly)` by left-to-right square and multiply.
pub fn poly_powmod(base: &PolyModN, exp: &BigUint, modpoly: &PolyModN) -> Result<PolyModN, PolyError> {
    match modpoly.degree() {
        None | Some(0) => return Err(PolyError::ConstantModulus),
        _ => {}
    }
    let m = modpoly.monic()?;
    let red = Reducer::new(&m);
    let n = &m.n;
    let (_, b) = base.div_rem(&m)?;
    let mut acc = vec![BigUint::one()];
    for i in (0..exp.bits()).rev() {
        acc = red.mulmod(&acc, &acc);
        if exp.bit(i) {
            acc = red.mulmod(&acc, &b.coeffs);
        }
    }
    Ok(PolyModN::new(acc, n))
}

/// Result of a root search, with the number of splitting attempts.
#[derive(Clone, Debug)]
pub struct RootSearch {
    pub root: Residue,
    pub split_rounds: u32,
}

fn factor_error(e: PolyError) -> PolyError {
    match e {
        PolyError::NonInvertibleElement(f) => PolyError::CompositeDetected(f),
        other => other,
    }
}

const MAX_SPLIT_ROUNDS: u32 = 400;

/// One root of `h` modulo the probable prime `N`.
pub fn find_root(h: &PolyModN, n: &BigUint, seed: u64) -> Result<Residue, PolyError> {
    find_root_counted(h, n, seed).map(|r| r.root)
}

pub fn find_root_counted(h: &PolyModN, n: &BigUint, seed: u64) -> Result<RootSearch, PolyError> {
    let h = PolyModN::new(h.coeffs.clone(), n).monic().map_err(factor_error)?;
    match h.degree() {
        None => return Err(PolyError::ConstantModulus),
        Some(0) => return Err(PolyError::NoRoot),
        _ => {}
    }
    // g = gcd(X^N - X, H) is the product of the linear factors of H
    let xn = poly_powmod(&PolyModN::x(n), n, &h).map_err(factor_error)?;
    let mut g = xn.sub(&PolyModN::x(n)).gcd(&h).map_err(factor_error)?;
    if g.is_zero() {
        g = h.clone();
    }
    if g.degree() == Some(0) {
        return Err(PolyError::NoRoot);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = (n - 1u32) >> 1u32;
    let mut rounds = 0;
    while g.degree() > Some(1) {
        if rounds == MAX_SPLIT_ROUNDS {
            return Err(PolyError::NoConvergence);
        }
        rounds += 1;
        let a = rng.gen_biguint_below(n);
        let xa = PolyModN::new(vec![a, BigUint::one()], n);
        let p = poly_powmod(&xa, &half, &g).map_err(factor_error)?;
        let d = p.sub(&PolyModN::new(vec![BigUint::one()], n)).gcd(&g).map_err(factor_error)?;
        let (dd, gd) = (d.degree().unwrap_or(0), g.degree().unwrap_or(0));
        if dd == 0 || dd == gd {
            continue;
        }
        // keep the smaller factor
        g = if 2 * dd <= gd {
            d
        } else {
            g.div_rem(&d).map_err(factor_error)?.0.monic().map_err(factor_error)?
        };
    }
    let c0 = g.coeffs[0].clone();
    let root = (n - &c0) % n;
    if !h.eval(&root).is_zero() {
        return Err(PolyError::CompositeDetected(root.gcd(n)));
    }
    Ok(RootSearch {
        root: Residue::from_biguint(root, n).expect("modulus ≥ 2"),
        split_rounds: rounds,
    })
}
