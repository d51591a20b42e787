//! Elliptic curve primality proving with the square-root-pool discriminant
//! search: everything between a probable prime and its certificate chain.

pub mod bigfloat;
pub mod quadratics;
pub mod pool;
pub mod classpoly;
pub mod polyroot;
pub mod prover;
pub mod sieve;
