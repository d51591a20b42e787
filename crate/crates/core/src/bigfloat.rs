//! Minimal binary floating-point and complex arithmetic on top of `BigInt`.
//!
//! A [`BigFloat`] is `mant · 2^exp`; every operation takes the number of
//! mantissa bits to keep and truncates to it. This is all the class
//! polynomial construction needs: products, quotients, square roots, `π`
//! and the complex exponential.

use std::sync::Mutex;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigFloat {
    mant: BigInt,
    exp: i64,
}

impl BigFloat {
    pub fn zero() -> Self {
        Self {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Self { mant: v.into(), exp: 0 }
    }

    /// `mant · 2^exp`, exactly.
    pub fn from_parts(mant: BigInt, exp: i64) -> Self {
        Self { mant, exp }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    /// Exponent of the leading bit: `2^(magnitude-1) ≤ |x| < 2^magnitude`.
    /// Zero reports `i64::MIN`.
    pub fn magnitude(&self) -> i64 {
        if self.mant.is_zero() {
            i64::MIN
        } else {
            self.exp + self.mant.bits() as i64
        }
    }

    fn normalized(mut self, prec: u64) -> Self {
        let bits = self.mant.bits();
        if bits > prec {
            let shift = bits - prec;
            self.mant = truncate_shift(&self.mant, shift);
            self.exp += shift as i64;
        }
        self
    }

    pub fn round(&self, prec: u64) -> Self {
        self.clone().normalized(prec)
    }

    pub fn neg(&self) -> Self {
        Self {
            mant: -&self.mant,
            exp: self.exp,
        }
    }

    pub fn abs(&self) -> Self {
        Self {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    /// Exact multiplication by `2^k`.
    pub fn shl(&self, k: i64) -> Self {
        Self {
            mant: self.mant.clone(),
            exp: self.exp + k,
        }
    }

    pub fn add(&self, other: &Self, prec: u64) -> Self {
        if self.is_zero() {
            return other.round(prec);
        }
        if other.is_zero() {
            return self.round(prec);
        }
        // an addend far below the last kept bit cannot change the result
        let (hi, lo) = if self.magnitude() >= other.magnitude() { (self, other) } else { (other, self) };
        if lo.magnitude() < hi.magnitude() - prec as i64 - 4 {
            return hi.round(prec);
        }
        let exp = hi.exp.min(lo.exp);
        let mant = (&hi.mant << (hi.exp - exp) as u64) + (&lo.mant << (lo.exp - exp) as u64);
        Self { mant, exp }.normalized(prec)
    }

    pub fn sub(&self, other: &Self, prec: u64) -> Self {
        self.add(&other.neg(), prec)
    }

    pub fn mul(&self, other: &Self, prec: u64) -> Self {
        Self {
            mant: &self.mant * &other.mant,
            exp: self.exp + other.exp,
        }
        .normalized(prec)
    }

    pub fn mul_int(&self, k: i64, prec: u64) -> Self {
        Self {
            mant: &self.mant * k,
            exp: self.exp,
        }
        .normalized(prec)
    }

    pub fn div(&self, other: &Self, prec: u64) -> Self {
        assert!(!other.is_zero(), "division by zero");
        if self.is_zero() {
            return Self::zero();
        }
        let shift = (prec + 2 + other.mant.bits()).saturating_sub(self.mant.bits());
        let num = &self.mant << shift;
        Self {
            mant: num / &other.mant,
            exp: self.exp - other.exp - shift as i64,
        }
        .normalized(prec)
    }

    pub fn div_int(&self, k: i64, prec: u64) -> Self {
        self.div(&Self::from_int(k), prec)
    }

    pub fn sqrt(&self, prec: u64) -> Self {
        assert!(!self.is_negative(), "square root of a negative number");
        if self.is_zero() {
            return Self::zero();
        }
        let mut shift = (2 * prec + 2).saturating_sub(self.mant.bits()) as i64;
        if (self.exp - shift) % 2 != 0 {
            shift += 1;
        }
        let m = (&self.mant << shift as u64).sqrt();
        Self {
            mant: m,
            exp: (self.exp - shift) / 2,
        }
        .normalized(prec)
    }

    /// Nearest integer and the absolute distance to it.
    pub fn round_to_int(&self) -> (BigInt, BigFloat) {
        if self.exp >= 0 {
            return (&self.mant << self.exp as u64, Self::zero());
        }
        let shift = (-self.exp) as u64;
        let half = BigInt::one() << (shift - 1);
        let q = floor_shift(&(&self.mant + &half), shift);
        let back = &q << shift;
        let resid = Self {
            mant: (&self.mant - back).abs(),
            exp: self.exp,
        };
        (q, resid)
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits() as i64;
        let keep = bits.min(60);
        let top = truncate_shift(&self.mant, (bits - keep) as u64).to_f64().unwrap_or(0.0);
        top * 2f64.powi((self.exp + bits - keep).clamp(-1100, 1100) as i32)
    }

    /// `log2 |x|`, approximately; `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.mant.bits() as i64;
        let keep = bits.min(60);
        let top = truncate_shift(&self.mant.abs(), (bits - keep) as u64).to_f64().unwrap_or(1.0);
        top.log2() + (self.exp + bits - keep) as f64
    }
}

fn floor_shift(v: &BigInt, shift: u64) -> BigInt {
    // `>>` on BigInt rounds toward negative infinity
    v >> shift
}

fn truncate_shift(v: &BigInt, shift: u64) -> BigInt {
    let m = BigInt::from(v.magnitude() >> shift);
    if v.sign() == Sign::Minus {
        -m
    } else {
        m
    }
}

/// `π` to `prec` bits by Machin's formula, cached at the largest precision
/// requested so far.
pub fn pi(prec: u64) -> BigFloat {
    static CACHE: Mutex<Option<(u64, BigFloat)>> = Mutex::new(None);
    let mut guard = CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((p, v)) = guard.as_ref() {
        if *p >= prec {
            return v.round(prec);
        }
    }
    let work = prec + 32;
    // fixed point with `work` fractional bits
    let arctan_inv = |x: u64| -> BigInt {
        let x2 = BigInt::from(x * x);
        let mut term = (BigInt::one() << work) / x;
        let mut sum = term.clone();
        let mut k = 1u64;
        while !term.is_zero() {
            term /= &x2;
            let t = &term / (2 * k + 1);
            if k % 2 == 1 {
                sum -= t;
            } else {
                sum += t;
            }
            k += 1;
        }
        sum
    };
    let fixed = arctan_inv(5) * 16 - arctan_inv(239) * 4;
    let v = BigFloat::from_parts(fixed, -(work as i64)).normalized(prec + 16);
    *guard = Some((prec + 16, v.clone()));
    v.round(prec)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl BigComplex {
    pub fn new(re: BigFloat, im: BigFloat) -> Self {
        Self { re, im }
    }

    pub fn one() -> Self {
        Self::new(BigFloat::from_int(1), BigFloat::zero())
    }

    pub fn add(&self, o: &Self, prec: u64) -> Self {
        Self::new(self.re.add(&o.re, prec), self.im.add(&o.im, prec))
    }

    pub fn sub(&self, o: &Self, prec: u64) -> Self {
        Self::new(self.re.sub(&o.re, prec), self.im.sub(&o.im, prec))
    }

    pub fn mul(&self, o: &Self, prec: u64) -> Self {
        let rr = self.re.mul(&o.re, prec);
        let ii = self.im.mul(&o.im, prec);
        let ri = self.re.mul(&o.im, prec);
        let ir = self.im.mul(&o.re, prec);
        Self::new(rr.sub(&ii, prec), ri.add(&ir, prec))
    }

    pub fn sqr(&self, prec: u64) -> Self {
        let rr = self.re.mul(&self.re, prec);
        let ii = self.im.mul(&self.im, prec);
        let ri = self.re.mul(&self.im, prec).shl(1);
        Self::new(rr.sub(&ii, prec), ri)
    }

    pub fn scale(&self, k: &BigFloat, prec: u64) -> Self {
        Self::new(self.re.mul(k, prec), self.im.mul(k, prec))
    }

    pub fn shl(&self, k: i64) -> Self {
        Self::new(self.re.shl(k), self.im.shl(k))
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), self.im.neg())
    }

    pub fn norm_sqr(&self, prec: u64) -> BigFloat {
        self.re.mul(&self.re, prec).add(&self.im.mul(&self.im, prec), prec)
    }

    pub fn div(&self, o: &Self, prec: u64) -> Self {
        let den = o.norm_sqr(prec);
        let num = self.mul(&o.conj(), prec);
        Self::new(num.re.div(&den, prec), num.im.div(&den, prec))
    }

    pub fn pow(&self, mut e: u64, prec: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base, prec);
            }
            e >>= 1;
            if e > 0 {
                base = base.sqr(prec);
            }
        }
        acc
    }

    /// `log2 |z|`, approximately.
    pub fn log2_abs(&self) -> f64 {
        let a = self.re.log2_abs();
        let b = self.im.log2_abs();
        let m = a.max(b);
        if m == f64::NEG_INFINITY {
            return m;
        }
        m + 0.5 * (2f64.powf(2.0 * (a - m)) + 2f64.powf(2.0 * (b - m))).log2()
    }

    /// `e^z` by argument halving, a Taylor series, and repeated squaring.
    pub fn exp(&self, prec: u64) -> Self {
        let mag = self.log2_abs();
        let reduce_bits = ((prec as f64).sqrt() / 2.0).ceil() as i64;
        let k = if mag == f64::NEG_INFINITY { 0 } else { (mag.ceil() as i64 + reduce_bits).max(0) };
        let wp = prec + k as u64 + 24;
        let w = self.shl(-k).round_parts(wp);
        let mut sum = Self::one();
        let mut term = Self::one();
        let mut n = 1i64;
        loop {
            term = term.mul(&w, wp);
            term = Self::new(term.re.div_int(n, wp), term.im.div_int(n, wp));
            sum = sum.add(&term, wp);
            if term.log2_abs() < -(wp as f64) - 4.0 {
                break;
            }
            n += 1;
        }
        for _ in 0..k {
            sum = sum.sqr(wp);
        }
        sum.round_parts(prec)
    }

    fn round_parts(&self, prec: u64) -> Self {
        Self::new(self.re.round(prec), self.im.round(prec))
    }
}
