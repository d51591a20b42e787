//! The square-root pool: roots of small prime discriminants modulo `N`,
//! multiplied together into roots of composite discriminants `-D`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use thiserror::Error;

use ecpp_arith::modarith::{is_prime_trial, jacobi, sqrt_mod, ArithError, Residue};

use crate::quadratics::{is_fundamental, DiscriminantInfo};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PoolError {
    #[error("N is composite: no square root of {q} although its symbol is +1")]
    SqrtFailed { q: i64 },
    #[error("N is composite: divisible by {0}")]
    SharedFactor(u64),
    #[error("invalid modulus for a square-root pool")]
    BadModulus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolEntry {
    pub q: i64,
    pub sqrt: Residue,
}

/// `(q*, √q* mod N)` for the smallest prime discriminants `q*` that are
/// squares modulo `N`, ordered by `|q*|`.
#[derive(Clone, Debug)]
pub struct SquareRootPool {
    modulus: BigUint,
    entries: Vec<PoolEntry>,
    // next |q*| to examine
    cursor: u64,
}

/// Prime discriminants with `|q*| = v`, in scan order.
fn discriminants_of_size(v: u64) -> Vec<i64> {
    match v {
        4 => vec![-4],
        8 => vec![8, -8],
        v if v % 2 == 1 && v >= 3 && is_prime_trial(v) => {
            let q = v as i64;
            vec![if q % 4 == 1 { q } else { -q }]
        }
        _ => Vec::new(),
    }
}

impl SquareRootPool {
    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest `|q*|` examined so far.
    pub fn scanned_up_to(&self) -> u64 {
        self.cursor.saturating_sub(1)
    }

    /// Extends the pool until it holds `r` entries.
    pub fn grow(&mut self, r: usize) -> Result<(), PoolError> {
        let n = &self.modulus;
        while self.entries.len() < r {
            let v = self.cursor;
            self.cursor += 1;
            for q in discriminants_of_size(v) {
                if BigUint::from(v) >= *n {
                    // q* ≡ q* mod N is no longer a small residue; stop growing
                    return Ok(());
                }
                let qb = BigInt::from(q);
                match jacobi(&qb, n).map_err(|_| PoolError::BadModulus)? {
                    1 => {}
                    0 => {
                        let p = if v % 2 == 0 { 2 } else { v };
                        return Err(PoolError::SharedFactor(p));
                    }
                    _ => continue,
                }
                let sqrt = match sqrt_mod(&qb, n) {
                    Ok(s) => s,
                    Err(ArithError::AlgorithmFailure) | Err(ArithError::NonResidue) => {
                        return Err(PoolError::SqrtFailed { q })
                    }
                    Err(_) => return Err(PoolError::BadModulus),
                };
                self.entries.push(PoolEntry { q, sqrt });
                if self.entries.len() >= r {
                    break;
                }
            }
        }
        Ok(())
    }
}

/// Builds a pool of the `r` smallest usable prime discriminants modulo the
/// odd probable prime `N > 3`.
pub fn build_pool(n: &BigUint, r: usize) -> Result<SquareRootPool, PoolError> {
    if *n <= BigUint::from(3u32) || !n.bit(0) {
        return Err(PoolError::BadModulus);
    }
    let mut pool = SquareRootPool {
        modulus: n.clone(),
        entries: Vec::new(),
        cursor: 3,
    };
    pool.grow(r)?;
    Ok(pool)
}

/// A discriminant ready for the norm equation, with `√(-D) mod N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateD {
    pub info: DiscriminantInfo,
    pub sqrt_d: Residue,
}

impl CandidateD {
    pub fn d(&self) -> u64 {
        self.info.d
    }

    /// Scheduling key `(h/g, h, D)`, with `h/g` compared exactly.
    pub fn key_cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.info, &other.info);
        (a.h as u128 * b.g as u128)
            .cmp(&(b.h as u128 * a.g as u128))
            .then(a.h.cmp(&b.h))
            .then(a.d.cmp(&b.d))
    }
}

/// Memoized discriminant data, shared across the levels of a descent.
#[derive(Default, Debug)]
pub struct ClassNumberCache {
    map: HashMap<u64, DiscriminantInfo>,
}

impl ClassNumberCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, d: u64) -> DiscriminantInfo {
        self.map
            .entry(d)
            .or_insert_with(|| DiscriminantInfo::new(d).expect("fundamental discriminant"))
            .clone()
    }
}

/// Every subset of at most `max_subset_size` pool entries whose product is a
/// negative fundamental discriminant.
pub fn combine(pool: &SquareRootPool, max_subset_size: usize) -> Vec<CandidateD> {
    combine_bounded(pool, max_subset_size, u64::MAX, &mut ClassNumberCache::new())
}

/// As [`combine`], keeping only `D ≤ d_max`.
pub fn combine_bounded(
    pool: &SquareRootPool,
    max_subset_size: usize,
    d_max: u64,
    cache: &mut ClassNumberCache,
) -> Vec<CandidateD> {
    let mut found = BTreeSet::new();
    let mut out = Vec::new();
    let entries = pool.entries();
    let n = pool.modulus();
    // depth-first over index-increasing subsets, carrying product and root
    let mut stack: Vec<(usize, i64, BigUint, usize)> = vec![(0, 1, BigUint::from(1u32), 0)];
    while let Some((start, prod, root, size)) = stack.pop() {
        if size > 0 && prod < 0 {
            let d = prod.unsigned_abs();
            if d <= d_max && is_fundamental(prod).unwrap_or(false) && found.insert(d) {
                let info = cache.get(d);
                let sqrt_d = Residue::from_biguint(root.clone(), n).expect("modulus ≥ 2");
                out.push(CandidateD { info, sqrt_d });
            }
        }
        if size == max_subset_size {
            continue;
        }
        for i in (start..entries.len()).rev() {
            let q = entries[i].q;
            let Some(p) = prod.checked_mul(q) else { continue };
            if p.unsigned_abs() > d_max {
                // products only grow in absolute value
                continue;
            }
            let r = (&root * entries[i].sqrt.value()) % n;
            stack.push((i + 1, p, r, size + 1));
        }
    }
    out.sort_by_key(|c| c.info.d);
    out
}

/// Expected number of discriminants to try: half of
/// `t = e^(-γ) ln N / ln B`.
pub fn discriminant_budget(n: &BigUint, smooth_bound: u64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let ln_n = ln_biguint(n);
    let t = (-EULER_GAMMA).exp() * ln_n / (smooth_bound.max(2) as f64).ln();
    t / 2.0
}

pub(crate) fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    let shift = bits.saturating_sub(60);
    (n >> shift).to_f64().unwrap_or(1.0).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Keeps candidates with `h ≤ h_max`, sorts them by `(h/g, h, D)` and cuts
/// at the shortest prefix with `Σ g/h ≥ budget`.
pub fn schedule(mut cands: Vec<CandidateD>, budget: f64, h_max: u64) -> Vec<CandidateD> {
    cands.retain(|c| c.info.h <= h_max);
    cands.sort_by(|a, b| a.key_cmp(b));
    let mut sum = 0.0;
    let mut cut = cands.len();
    for (i, c) in cands.iter().enumerate() {
        if sum >= budget {
            cut = i;
            break;
        }
        sum += c.info.g as f64 / c.info.h as f64;
    }
    cands.truncate(cut);
    cands
}
