use num_bigint::{BigInt, BigUint};

/// Numbers below this bound are certified by trial division alone.
pub const SMALL_THRESHOLD: u64 = 1 << 32;

/// One link of the chain: the curve `y^2 = x^3 + ax + b` modulo `N` has a
/// point `(x, y)` of order `N'` after multiplication by `c`, where
/// `m = N + 1 - U = c·N'` and `4N = U^2 + D V^2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertStep {
    pub n: BigUint,
    pub d: u64,
    pub u: BigInt,
    pub v: BigUint,
    pub m: BigUint,
    pub c: BigUint,
    pub nprime: BigUint,
    pub a: BigUint,
    pub b: BigUint,
    pub x: BigUint,
    pub y: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub steps: Vec<CertStep>,
    pub leaf: BigUint,
}

impl Certificate {
    /// The number this certificate claims is prime.
    pub fn number(&self) -> &BigUint {
        self.steps.first().map(|s| &s.n).unwrap_or(&self.leaf)
    }
}
