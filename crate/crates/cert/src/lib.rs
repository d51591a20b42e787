//! Primality certificates for the elliptic curve method.
//!
//! A [`Certificate`] is a chain of [`CertStep`]s, each showing that `N` is
//! prime provided `N'` is, ending in a leaf small enough for trial
//! division. The verifier here relies only on curve arithmetic from
//! `ecpp-arith`; nothing in it searches for discriminants, class
//! polynomials or curves.

mod format;
mod model;
mod verify;

pub use format::{parse, serialize, ParseError, HEADER};
pub use model::{CertStep, Certificate, SMALL_THRESHOLD};
pub use verify::{verify_chain, verify_step, Rejection, StepRejection};
