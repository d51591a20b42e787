//! Independent certificate checking. Every test here is a plain
//! arithmetic identity or one scalar multiplication on the stated curve.

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use ecpp_arith::modarith::{exceeds_quartic_bound, is_prime_trial};
use ecpp_arith::{order_check, CurveError, CurveModN, ProjPoint};

use crate::model::{CertStep, Certificate, SMALL_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("N is even, divisible by 3, or too small")]
    BadModulus,
    #[error("D must be positive")]
    BadDiscriminant,
    #[error("4N != U^2 + D V^2")]
    NormEquation,
    #[error("m != N + 1 - U")]
    OrderValue,
    #[error("m != c * N'")]
    Cofactor,
    #[error("N' does not exceed (N^(1/4) + 1)^2")]
    QuarticBound,
    #[error("curve coefficients or point coordinates not reduced mod N")]
    Unreduced,
    #[error("curve is singular mod N")]
    Singular,
    #[error("point is not on the curve")]
    NotOnCurve,
    #[error("[c]P is the point at infinity")]
    TrivialPoint,
    #[error("[N'][c]P is not the point at infinity")]
    PointOrder,
    #[error("non-trivial factor of N found: {0}")]
    FactorFound(BigUint),
    #[error("curve arithmetic failed: {0}")]
    Curve(String),
    #[error("N' of one step is not N of the next")]
    Linkage,
    #[error("leaf is not below 2^32")]
    LeafTooLarge,
    #[error("leaf is not prime")]
    LeafComposite,
}

/// Rejection reason tagged with the step it applies to; `step == None`
/// refers to the leaf.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}: {reason}", match .step { Some(i) => format!("step {i}"), None => "leaf".to_string() })]
pub struct StepRejection {
    pub step: Option<usize>,
    pub reason: Rejection,
}

/// Checks one step in isolation: if `N'` is prime then so is `N`.
pub fn verify_step(s: &CertStep) -> Result<(), Rejection> {
    let n = &s.n;
    if n <= &BigUint::from(3u32) || (n % 6u32).to_u32().map_or(true, |r| r != 1 && r != 5) {
        return Err(Rejection::BadModulus);
    }
    if s.d == 0 {
        return Err(Rejection::BadDiscriminant);
    }
    let u2 = (&s.u * &s.u).into_parts().1;
    if u2 + &s.v * &s.v * s.d != n << 2u32 {
        return Err(Rejection::NormEquation);
    }
    if BigInt::from(s.m.clone()) != BigInt::from(n.clone()) + 1u32 - &s.u {
        return Err(Rejection::OrderValue);
    }
    if s.c.is_zero() || &s.c * &s.nprime != s.m {
        return Err(Rejection::Cofactor);
    }
    if !exceeds_quartic_bound(&s.nprime, n) {
        return Err(Rejection::QuarticBound);
    }
    if [&s.a, &s.b, &s.x, &s.y].iter().any(|v| *v >= n) {
        return Err(Rejection::Unreduced);
    }
    let e = CurveModN::new(&BigInt::from(s.a.clone()), &BigInt::from(s.b.clone()), n).map_err(|err| match err {
        CurveError::Singular { factor: Some(f) } => Rejection::FactorFound(f),
        CurveError::Singular { factor: None } => Rejection::Singular,
        other => Rejection::Curve(other.to_string()),
    })?;
    let p = ProjPoint::affine(s.x.clone(), s.y.clone());
    if !e.contains(&p) {
        return Err(Rejection::NotOnCurve);
    }
    match order_check(n, &s.c, &s.nprime, &e, &p) {
        Ok(true) => Ok(()),
        Ok(false) => Err(Rejection::TrivialPoint),
        Err(CurveError::OrderMismatch) => Err(Rejection::PointOrder),
        Err(CurveError::FactorFound(f)) => Err(Rejection::FactorFound(f)),
        Err(CurveError::BoundViolated) => Err(Rejection::QuarticBound),
        Err(CurveError::NotOnCurve) => Err(Rejection::NotOnCurve),
        Err(other) => Err(Rejection::Curve(other.to_string())),
    }
}

/// Checks every step, the links between them and the leaf.
pub fn verify_chain(cert: &Certificate) -> Result<(), StepRejection> {
    let at = |i: usize| move |reason| StepRejection { step: Some(i), reason };
    for (i, s) in cert.steps.iter().enumerate() {
        let next = cert.steps.get(i + 1).map_or(&cert.leaf, |t| &t.n);
        if &s.nprime != next {
            return Err(at(i)(Rejection::Linkage));
        }
        verify_step(s).map_err(at(i))?;
    }
    let leaf = |reason| StepRejection { step: None, reason };
    let small = cert.leaf.to_u64().filter(|&v| v < SMALL_THRESHOLD).ok_or(leaf(Rejection::LeafTooLarge))?;
    if !is_prime_trial(small) {
        return Err(leaf(Rejection::LeafComposite));
    }
    Ok(())
}

