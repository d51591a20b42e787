//! Splitting candidate orders `m = N + 1 ∓ U` into `c · N'` with `c` smooth.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use ecpp_arith::modarith::{primes_up_to, reduce};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SieveError {
    #[error("order is fully smooth, nothing left to recurse on")]
    FullySmooth,
}

/// Primes `p ≤ B` with `r = (N + 1) mod p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SieveTable {
    pub bound: u64,
    pub primes: Vec<u64>,
    pub residues: Vec<u64>,
}

fn mod_small(n: &BigUint, p: u64) -> u64 {
    (n % p).to_u64().expect("remainder below p")
}

pub fn residue_table(n: &BigUint, bound: u64) -> SieveTable {
    let primes = primes_up_to(bound);
    let n1 = n + 1u32;
    let residues = primes.iter().map(|&p| mod_small(&n1, p)).collect();
    SieveTable { bound, primes, residues }
}

/// Small primes dividing `m = N + 1 - U` and `m' = N + 1 + U`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SieveHits {
    pub minus: Vec<u64>,
    pub plus: Vec<u64>,
}

/// Compares `U mod p` with the table.
///
/// Primes inert in `Q(√-D)` are not skipped. For prime `N` such a prime
/// can only divide `m` to an even power, but it does divide it (whenever
/// `π ≡ 1 mod p`), and leaving `p^2` in `N'` would discard the order.
pub fn sieve_m(u: &BigUint, table: &SieveTable) -> SieveHits {
    let mut hits = SieveHits::default();
    for (&p, &r) in table.primes.iter().zip(&table.residues) {
        let ui = mod_small(u, p);
        if ui == r {
            hits.minus.push(p);
        }
        if (ui + r) % p == 0 {
            hits.plus.push(p);
        }
    }
    hits
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorResult {
    pub c: BigUint,
    pub nprime: BigUint,
    pub factors: Vec<(u64, u32)>,
}

/// Divides out every power of 2 and of each hit prime.
pub fn extract_cofactor(m: &BigUint, hits: &[u64], bound: u64) -> Result<FactorResult, SieveError> {
    let mut rest = m.clone();
    let mut factors = Vec::new();
    let mut strip = |p: u64, rest: &mut BigUint| {
        let mut e = 0;
        loop {
            let (q, r) = rest.div_rem(&BigUint::from(p));
            if !r.is_zero() || rest.is_zero() {
                break;
            }
            *rest = q;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    };
    strip(2, &mut rest);
    for &p in hits {
        if p != 2 && p <= bound {
            strip(p, &mut rest);
        }
    }
    if rest.is_one() || rest.is_zero() {
        return Err(SieveError::FullySmooth);
    }
    let c = m / &rest;
    Ok(FactorResult { c, nprime: rest, factors })
}

/// `N ≥ N' · 2^δ`.
pub fn early_abort_ok(n: &BigUint, nprime: &BigUint, delta: u32) -> bool {
    *n >= nprime << delta
}

/// Residue table for `N' = (N + 1 - u) / c` from the table for `N`, using
/// `r' = (r - u)/c + 1 mod p`. Pass `u = -U` for the order `N + 1 + U`.
pub fn update_table(table: &SieveTable, u: &BigInt, c: &BigUint, nprime: &BigUint) -> SieveTable {
    let residues = table
        .primes
        .iter()
        .zip(&table.residues)
        .map(|(&p, &r)| {
            let cp = mod_small(c, p);
            if cp == 0 {
                return mod_small(&(nprime + 1u32), p);
            }
            let ui = mod_small(&reduce(u, &BigUint::from(p)), p);
            let cinv = inverse_small(cp, p);
            let diff = (r + p - ui) % p;
            ((diff as u128 * cinv as u128 % p as u128) as u64 + 1) % p
        })
        .collect();
    SieveTable {
        bound: table.bound,
        primes: table.primes.clone(),
        residues,
    }
}

fn inverse_small(a: u64, p: u64) -> u64 {
    let e = i128::from(a).extended_gcd(&i128::from(p));
    e.x.rem_euclid(i128::from(p)) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn residue_table_examples() {
        let t = residue_table(&b(13), 10);
        assert_eq!(t.primes, vec![2, 3, 5, 7]);
        assert_eq!(t.residues, vec![0, 2, 4, 0]);
        let t = residue_table(&b(1), 2);
        assert_eq!((t.primes, t.residues), (vec![2], vec![0]));
        let n = 1_000_003u64;
        let t = residue_table(&b(n), 100);
        for (p, r) in t.primes.iter().zip(&t.residues) {
            assert_eq!(*r, (n + 1) % p);
        }
    }

    #[test]
    fn sieve_examples() {
        let t = residue_table(&b(13), 10);
        // 14 - 7 = 7 and 14 + 7 = 21
        let hits = sieve_m(&b(7), &t);
        assert_eq!(hits.minus, vec![7]);
        assert_eq!(hits.plus, vec![3, 7]);
        let hits = sieve_m(&b(0), &t);
        assert_eq!(hits.minus, hits.plus);
        assert_eq!(hits.minus, vec![2, 7]);
    }

    #[test]
    fn inert_primes_reported() {
        // 4·13 = 5^2 + 3·3^2; the twist with trace (5 - 9)/2 = -2 has
        // order 16, and 2 is inert for D = 3. Likewise 5 | 13 + 1 - 9.
        let t = residue_table(&b(13), 10);
        assert!(sieve_m(&b(2), &t).plus.contains(&2));
        assert!(sieve_m(&b(9), &t).minus.contains(&5));
    }

    #[test]
    fn extract_examples() {
        assert_eq!(extract_cofactor(&b(21), &[3, 7], 10), Err(SieveError::FullySmooth));
        let f = extract_cofactor(&b(2 * 97), &[], 10).unwrap();
        assert_eq!((f.c, f.nprime), (b(2), b(97)));
        let f = extract_cofactor(&b(1009), &[], 10).unwrap();
        assert_eq!((f.c, f.nprime), (b(1), b(1009)));
        let f = extract_cofactor(&b(8 * 9 * 7 * 1009), &[3, 7], 10).unwrap();
        assert_eq!(f.c, b(8 * 9 * 7));
        assert_eq!(f.factors, vec![(2, 3), (3, 2), (7, 1)]);
    }

    #[test]
    fn early_abort_examples() {
        let two = |k: u32| BigUint::one() << k;
        assert!(early_abort_ok(&two(100), &two(87), 12));
        assert!(!early_abort_ok(&two(100), &two(89), 12));
        assert!(early_abort_ok(&b(1000), &b(1), 5));
    }

    #[test]
    fn update_examples() {
        let t = residue_table(&b(13), 10);
        assert_eq!(update_table(&t, &BigInt::from(7), &b(1), &b(7)), residue_table(&b(7), 10));
        // m' = 13 + 1 + 4 = 18 = 6 * 3: both table primes 2 and 3 divide c
        assert_eq!(update_table(&t, &BigInt::from(-4), &b(6), &b(3)), residue_table(&b(3), 10));
    }

    fn brute_hits(m: u64, primes: &[u64]) -> Vec<u64> {
        primes.iter().copied().filter(|p| m % p == 0).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn hits_match_trial_division(n in 10_001u64..100_000_000, u in 0u64..10_000, bound in 2u64..1000) {
            let t = residue_table(&b(n), bound);
            let hits = sieve_m(&b(u), &t);
            prop_assert_eq!(hits.minus, brute_hits(n + 1 - u, &t.primes));
            prop_assert_eq!(hits.plus, brute_hits(n + 1 + u, &t.primes));
        }

        #[test]
        fn update_matches_recomputation(n in 1_000u64..u64::MAX / 4, u in 0u64..1_000_000, bound in 2u64..2000) {
            let n = b(n) * b(1_000_003) + 1u32;
            let t = residue_table(&n, bound);
            let m = &n + 1u32 - b(u);
            let hits: Vec<u64> = t.primes.iter().copied().filter(|p| (&m % p).is_zero()).collect();
            if let Ok(f) = extract_cofactor(&m, &hits, bound) {
                prop_assert_eq!(&f.c * &f.nprime, m.clone());
                prop_assert_eq!(update_table(&t, &BigInt::from(u), &f.c, &f.nprime), residue_table(&f.nprime, bound));
            }
            let mp = &n + 1u32 + b(u);
            let hits: Vec<u64> = t.primes.iter().copied().filter(|p| (&mp % p).is_zero()).collect();
            if let Ok(f) = extract_cofactor(&mp, &hits, bound) {
                prop_assert_eq!(update_table(&t, &-BigInt::from(u), &f.c, &f.nprime), residue_table(&f.nprime, bound));
            }
        }
    }
}
