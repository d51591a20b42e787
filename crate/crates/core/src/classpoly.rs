//! Hilbert class polynomials `H_D(X)` from floating-point values of `j` at
//! the CM points of the reduced forms of discriminant `-D`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::One;
use thiserror::Error;

use crate::bigfloat::{pi, BigComplex, BigFloat};
use crate::quadratics::{is_fundamental, reduced_forms, QuadForm};

#[derive(Debug, Error)]
pub enum ClassPolyError {
    #[error("-{0} is not a fundamental discriminant")]
    NotFundamental(u64),
    #[error("cannot certify j to the requested precision: {0}")]
    PrecisionExhausted(&'static str),
    #[error("H_{d} coefficients not resolved at {bits} bits")]
    RoundingUncertain { d: u64, bits: u64 },
    #[error("class polynomial cache: {0}")]
    Io(#[from] io::Error),
    #[error("malformed class polynomial file: {0}")]
    Parse(String),
}

/// Monic integer polynomial; `coeffs[i]` multiplies `X^i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassPolynomial {
    pub d: u64,
    pub coeffs: Vec<BigInt>,
}

impl ClassPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

const RETRIES: u32 = 3;

/// Sum over `n ∈ Z` of `(-1)^n q^(n(3n-1)/2)`, i.e. `Π (1 - q^k)`.
///
/// Exponents are visited in increasing order; once `|q|^e < 2^-(prec+4)`
/// the rest of the series is below `2|q|^e` since `|q| < 1/2`.
fn pentagonal(q: &BigComplex, log2_q: f64, prec: u64) -> BigComplex {
    let mut acc = BigComplex::one();
    let mut power = BigComplex::one();
    let mut last = 0u64;
    for n in 1u64.. {
        for (e, sign) in [(n * (3 * n - 1) / 2, n % 2 == 0), (n * (3 * n + 1) / 2, n % 2 == 0)] {
            if e as f64 * -log2_q > prec as f64 + 4.0 {
                return acc;
            }
            power = power.mul(&q.pow(e - last, prec), prec);
            last = e;
            acc = if sign { acc.add(&power, prec) } else { acc.sub(&power, prec) };
        }
    }
    unreachable!()
}

/// `j(τ)` to about `prec` significant bits, for `τ` in the fundamental
/// domain (so that `Im τ ≥ √3/2`).
pub fn j_invariant(tau: &BigComplex, prec: u64) -> Result<BigComplex, ClassPolyError> {
    if prec < 64 {
        return Err(ClassPolyError::PrecisionExhausted("at least 64 bits are required"));
    }
    let im = tau.im.to_f64();
    if !(im > 0.85) {
        return Err(ClassPolyError::PrecisionExhausted("tau outside the fundamental domain"));
    }
    // j can be as large as |q|^-1 and cancellation at j = 0 costs a few bits
    let log2_q = -2.0 * std::f64::consts::PI * im / std::f64::consts::LN_2;
    let wp = prec + 64 + (-log2_q).log2().ceil().max(0.0) as u64;
    let two_pi = pi(wp + 8).shl(1);
    let z = BigComplex::new(tau.im.mul(&two_pi, wp).neg(), tau.re.mul(&two_pi, wp));
    let q = z.exp(wp);
    let q2 = q.sqr(wp);
    let p1 = pentagonal(&q, log2_q, wp);
    let p2 = pentagonal(&q2, 2.0 * log2_q, wp);
    // f = Δ(2τ)/Δ(τ) = q (P(q²)/P(q))^24
    let ratio = p2.div(&p1, wp);
    let f = q.mul(&ratio.pow(24, wp), wp);
    let g = f.shl(8).add(&BigComplex::one(), wp);
    let j = g.sqr(wp).mul(&g, wp).div(&f, wp);
    Ok(BigComplex::new(j.re.round(prec), j.im.round(prec)))
}

/// CM point `(-B + i√D) / 2A` of a form of discriminant `-D`.
pub fn cm_point(form: &QuadForm, d: u64, prec: u64) -> BigComplex {
    let two_a = BigFloat::from_int(2 * form.a);
    let re = BigFloat::from_int(-form.b).div(&two_a, prec);
    let im = BigFloat::from_int(d).sqrt(prec).div(&two_a, prec);
    BigComplex::new(re, im)
}

fn guard_bits(h: usize) -> u64 {
    33 + h as u64
}

/// Estimated coefficient height of `H_D` in bits plus guard bits.
pub fn precision_for(d: u64) -> u64 {
    let forms = reduced_forms(d);
    let inv_sum: f64 = forms.iter().map(|f| 1.0 / f.a as f64).sum();
    let height = std::f64::consts::PI * (d as f64).sqrt() * inv_sum / std::f64::consts::LN_2;
    height.ceil() as u64 + guard_bits(forms.len())
}

fn poly_mul(a: &[BigFloat], b: &[BigFloat], prec: u64) -> Vec<BigFloat> {
    let mut out = vec![BigFloat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (k, y) in b.iter().enumerate() {
            out[i + k] = out[i + k].add(&x.mul(y, prec), prec);
        }
    }
    out
}

fn real_root(form: &QuadForm) -> bool {
    form.b == 0 || form.b as u64 == form.a || form.a == form.c
}

/// Expands `H_D` at a working precision of `bits`, without retrying.
pub fn hilbert_class_poly_at(d: u64, bits: u64) -> Result<ClassPolynomial, ClassPolyError> {
    if d == 0 || d > i64::MAX as u64 || !is_fundamental(-(d as i64)).unwrap_or(false) {
        return Err(ClassPolyError::NotFundamental(d));
    }
    let forms = reduced_forms(d);
    let guard = guard_bits(forms.len());
    if bits < 32 {
        return Err(ClassPolyError::PrecisionExhausted("at least 32 bits are required"));
    }
    let wp = bits + 32;
    // factors paired so each is real: X - j, or X^2 - 2 Re(j) X + |j|^2
    let mut factors: Vec<Vec<BigFloat>> = Vec::new();
    // log2 of Π (1 + |j|), which bounds every coefficient of every partial product
    let mut size_bound = 0.0f64;
    for form in &forms {
        if form.b < 0 && !real_root(form) {
            continue;
        }
        let j = j_invariant(&cm_point(form, d, wp + 16), wp)?;
        let log_abs = j.log2_abs();
        let term = if log_abs > 0.0 { log_abs + 1.0 } else { 1.0 };
        size_bound += if real_root(form) { term } else { 2.0 * term };
        if real_root(form) {
            if !j.im.is_zero() && j.im.log2_abs() > -(guard as f64) {
                return Err(ClassPolyError::RoundingUncertain { d, bits });
            }
            factors.push(vec![j.re.neg(), BigFloat::from_int(1)]);
        } else {
            factors.push(vec![j.norm_sqr(wp), j.re.shl(1).neg(), BigFloat::from_int(1)]);
        }
    }
    // balanced product tree
    while factors.len() > 1 {
        let mut next = Vec::with_capacity(factors.len().div_ceil(2));
        let mut it = factors.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(poly_mul(&a, &b, wp)),
                None => next.push(a),
            }
        }
        factors = next;
    }
    if size_bound + (forms.len() as f64 + 1.0).log2() + 8.0 > wp as f64 {
        return Err(ClassPolyError::RoundingUncertain { d, bits });
    }
    let expanded = factors.pop().unwrap_or_else(|| vec![BigFloat::from_int(1)]);
    let mut coeffs = Vec::with_capacity(expanded.len());
    for c in &expanded {
        // the last kept bit must lie well below 1/4 for the residue to mean anything
        if c.magnitude() > wp as i64 - 8 {
            return Err(ClassPolyError::RoundingUncertain { d, bits });
        }
        let (n, resid) = c.round_to_int();
        if !resid.is_zero() && resid.log2_abs() >= -2.0 {
            return Err(ClassPolyError::RoundingUncertain { d, bits });
        }
        coeffs.push(n);
    }
    if coeffs.len() != forms.len() + 1 || !coeffs[forms.len()].is_one() {
        return Err(ClassPolyError::RoundingUncertain { d, bits });
    }
    Ok(ClassPolynomial { d, coeffs })
}

/// `H_D`, starting at the estimated precision and doubling it on rounding
/// failure up to three times.
pub fn hilbert_class_poly(d: u64) -> Result<ClassPolynomial, ClassPolyError> {
    hilbert_class_poly_from(d, precision_for(d))
}

pub fn hilbert_class_poly_from(d: u64, start_bits: u64) -> Result<ClassPolynomial, ClassPolyError> {
    let mut bits = start_bits.max(64);
    let mut last = None;
    for _ in 0..=RETRIES {
        match hilbert_class_poly_at(d, bits) {
            Err(e @ ClassPolyError::RoundingUncertain { .. }) => last = Some(e),
            other => return other,
        }
        bits *= 2;
    }
    Err(last.expect("at least one attempt"))
}

/// Text form: `D`, `h`, then the coefficients from leading to constant.
pub fn format_cache(poly: &ClassPolynomial) -> String {
    let mut s = format!("{}\n{}\n", poly.d, poly.degree());
    for c in poly.coeffs.iter().rev() {
        s.push_str(&c.to_string());
        s.push('\n');
    }
    s
}

pub fn parse_cache(text: &str) -> Result<ClassPolynomial, ClassPolyError> {
    let bad = |m: &str| ClassPolyError::Parse(m.to_string());
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let d: u64 = lines.next().ok_or_else(|| bad("missing D"))?.parse().map_err(|_| bad("bad D"))?;
    let h: usize = lines.next().ok_or_else(|| bad("missing h"))?.parse().map_err(|_| bad("bad h"))?;
    let mut coeffs = lines
        .map(|l| l.parse::<BigInt>().map_err(|_| bad("bad coefficient")))
        .collect::<Result<Vec<_>, _>>()?;
    if coeffs.len() != h + 1 || !coeffs[0].is_one() {
        return Err(bad("coefficient count does not match degree"));
    }
    coeffs.reverse();
    Ok(ClassPolynomial { d, coeffs })
}

pub fn cache_path(dir: &Path, d: u64) -> PathBuf {
    dir.join(format!("HD_{d}.txt"))
}

pub fn write_cache(dir: &Path, poly: &ClassPolynomial) -> Result<PathBuf, ClassPolyError> {
    fs::create_dir_all(dir)?;
    let path = cache_path(dir, poly.d);
    fs::write(&path, format_cache(poly))?;
    Ok(path)
}

/// Cached `H_D` if the directory holds a well-formed file for `D`.
pub fn read_cache(dir: &Path, d: u64) -> Result<Option<ClassPolynomial>, ClassPolyError> {
    match fs::read_to_string(cache_path(dir, d)) {
        Ok(text) => {
            let poly = parse_cache(&text)?;
            if poly.d != d {
                return Err(ClassPolyError::Parse(format!("file for D = {d} holds D = {}", poly.d)));
            }
            Ok(Some(poly))
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Looks in `dir` first, computing and storing `H_D` on a miss.
pub fn hilbert_class_poly_cached(d: u64, dir: Option<&Path>) -> Result<ClassPolynomial, ClassPolyError> {
    if let Some(dir) = dir {
        if let Some(p) = read_cache(dir, d)? {
            return Ok(p);
        }
        let p = hilbert_class_poly(d)?;
        // a read-only cache directory is not fatal
        let _ = write_cache(dir, &p);
        return Ok(p);
    }
    hilbert_class_poly(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadratics::class_number;

    fn int(s: &str) -> BigInt {
        s.parse().unwrap()
    }

    fn tau(re_num: i64, re_den: i64, d: u64, den: u64, prec: u64) -> BigComplex {
        BigComplex::new(
            BigFloat::from_int(re_num).div_int(re_den, prec),
            BigFloat::from_int(d).sqrt(prec).div_int(den as i64, prec),
        )
    }

    #[test]
    fn j_at_classical_points() {
        let j = j_invariant(&tau(0, 1, 1, 1, 300), 200).unwrap();
        let (n, r) = j.re.round_to_int();
        assert_eq!(n, BigInt::from(1728));
        assert!(r.log2_abs() < -150.0);
        assert!(j.im.log2_abs() < -150.0);

        let j = j_invariant(&tau(1, 2, 3, 2, 300), 200).unwrap();
        assert!(j.re.log2_abs() < -150.0 && j.im.log2_abs() < -150.0);

        let j = j_invariant(&tau(1, 2, 163, 2, 300), 200).unwrap();
        let (n, r) = j.re.round_to_int();
        assert_eq!(n, -BigInt::from(640_320u64).pow(3));
        assert!(r.log2_abs() < -100.0);
    }

    #[test]
    fn precision_examples() {
        assert_eq!(precision_for(3), 42);
        assert_eq!(precision_for(4), 44);
        assert_eq!(precision_for(23), 80);
    }

    #[test]
    fn small_class_polynomials() {
        assert_eq!(hilbert_class_poly(3).unwrap().coeffs, vec![int("0"), int("1")]);
        assert_eq!(hilbert_class_poly(4).unwrap().coeffs, vec![int("-1728"), int("1")]);
        assert_eq!(
            hilbert_class_poly(23).unwrap().coeffs,
            vec![int("12771880859375"), int("-5151296875"), int("3491750"), int("1")]
        );
        // h = 1 discriminants give the classical integral j-values
        assert_eq!(hilbert_class_poly(163).unwrap().coeffs[0], BigInt::from(640_320u64).pow(3));
        assert_eq!(hilbert_class_poly(8).unwrap().coeffs[0], int("-8000"));
        assert_eq!(hilbert_class_poly(7).unwrap().coeffs[0], int("3375"));
    }

    #[test]
    fn degree_equals_class_number() {
        for d in (3..400u64).filter(|&d| is_fundamental(-(d as i64)).unwrap()) {
            assert_eq!(hilbert_class_poly(d).unwrap().degree() as u64, class_number(d), "D = {d}");
        }
    }

    #[test]
    fn independent_of_starting_precision() {
        for d in [23u64, 71, 119, 255] {
            let a = hilbert_class_poly(d).unwrap();
            let b = hilbert_class_poly_from(d, precision_for(d) * 3).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn too_little_precision_is_reported() {
        assert!(matches!(hilbert_class_poly_at(23, 20), Err(ClassPolyError::PrecisionExhausted(_))));
        let half = precision_for(719) / 2;
        assert!(matches!(hilbert_class_poly_at(719, half), Err(ClassPolyError::RoundingUncertain { .. })));
        assert!(matches!(hilbert_class_poly(12), Err(ClassPolyError::NotFundamental(12))));
    }

    #[test]
    fn cache_round_trip() {
        let dir = std::env::temp_dir().join(format!("ecpp-hd-{}", std::process::id()));
        let p = hilbert_class_poly_cached(23, Some(&dir)).unwrap();
        let text = fs::read_to_string(cache_path(&dir, 23)).unwrap();
        assert_eq!(text, "23\n3\n1\n3491750\n-5151296875\n12771880859375\n");
        assert_eq!(read_cache(&dir, 23).unwrap(), Some(p));
        assert_eq!(read_cache(&dir, 31).unwrap(), None);
        assert!(parse_cache("23\n2\n1\n5\n").is_err());
        fs::remove_dir_all(&dir).unwrap();
    }
}
