//! The descent: find `D`, an order `m = c·N'` with `N'` a probable prime,
//! a curve of that order and a point on it, then recurse on `N'`.

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use ecpp_arith::modarith::{exceeds_quartic_bound, is_prime_trial, small_factor};
use ecpp_arith::{curve_from_j, find_point, is_probable_prime, order_check, CurveError};
use ecpp_cert::{CertStep, Certificate, SMALL_THRESHOLD};

use crate::classpoly::{hilbert_class_poly_cached, ClassPolyError, ClassPolynomial};
use crate::polyroot::{find_root_counted, PolyError, PolyModN};
use crate::pool::{build_pool, combine_bounded, schedule, CandidateD, ClassNumberCache, PoolError};
use crate::quadratics::solve_4n;
use crate::sieve::{early_abort_ok, extract_cofactor, residue_table, sieve_m, update_table, SieveTable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProverConfig {
    pub d_max: u64,
    pub h_max: u64,
    /// Initial pool size; 0 picks one from the size of `N`.
    pub pool_size: usize,
    /// Smoothness bound `B`; 0 picks one from the size of `N`.
    pub smooth_bound: u64,
    pub delta: u32,
    pub max_subset_size: usize,
    pub prp_rounds: u32,
    pub rng_seed: u64,
    pub small_threshold: u64,
    /// Only accept `m = 2N'`.
    pub strict_2n: bool,
    pub threads: usize,
    pub hd_cache: Option<PathBuf>,
}

impl Default for ProverConfig {
    fn default() -> Self {
        Self {
            d_max: 1_000_000,
            h_max: 200,
            pool_size: 0,
            smooth_bound: 0,
            delta: 12,
            max_subset_size: 2,
            prp_rounds: ecpp_arith::modarith::DEFAULT_PRP_ROUNDS,
            rng_seed: 0,
            small_threshold: SMALL_THRESHOLD,
            strict_2n: false,
            threads: 1,
            hd_cache: None,
        }
    }
}

impl ProverConfig {
    fn validate(&self) -> Result<(), ProverError> {
        let bad = |m: &str| Err(ProverError::InvalidConfig(m.to_string()));
        if self.d_max < 4 {
            return bad("d_max must be at least 4");
        }
        if self.h_max < 1 {
            return bad("h_max must be at least 1");
        }
        if !(2..=SMALL_THRESHOLD).contains(&self.small_threshold) {
            return bad("small_threshold must lie in [2, 2^32]");
        }
        if self.max_subset_size == 0 {
            return bad("subset size must be positive");
        }
        if self.prp_rounds == 0 {
            return bad("prp_rounds must be positive");
        }
        Ok(())
    }

    fn bound_for(&self, n: &BigUint) -> u64 {
        if self.smooth_bound > 0 {
            self.smooth_bound
        } else {
            (8 * n.bits()).max(1000)
        }
    }

    /// `δ`, lowered for small `N` where `N' ≤ N/2^δ` would contradict
    /// `N' > (N^(1/4) + 1)^2`. No effect once `N ≥ 2^(2δ + 4)`.
    pub fn effective_delta(&self, n: &BigUint) -> u32 {
        let room = (n.bits() as u32).saturating_sub(4) / 2;
        self.delta.min(room)
    }

    fn pool_for(&self, n: &BigUint) -> usize {
        if self.pool_size > 0 {
            self.pool_size
        } else {
            (16 + n.bits() as usize / 12).min(64)
        }
    }
}

/// Evidence that a number is composite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    SmallFactor(u64),
    FailedPrp,
    Factor(BigUint),
    SqrtFailure,
    Trivial,
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Witness::SmallFactor(p) => write!(f, "divisible by {p}"),
            Witness::FailedPrp => write!(f, "fails the Miller-Rabin test"),
            Witness::Factor(d) => write!(f, "factor {d} exposed"),
            Witness::SqrtFailure => write!(f, "square root extraction failed"),
            Witness::Trivial => write!(f, "less than 2 or a perfect composite below the leaf bound"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProverError {
    #[error("{n} is composite: {witness}")]
    Composite { n: BigUint, witness: Witness },
    /// A probable prime deeper in the chain turned out composite. The input
    /// itself is not shown to be composite.
    #[error("chain broke at step {level}: {n} is composite ({witness})")]
    ChainBroken { level: usize, n: BigUint, witness: Witness },
    #[error("no usable discriminant for {n} within d_max/h_max")]
    ResourceExhausted { n: BigUint },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("input must be at least 2")]
    InvalidInput,
    #[error(transparent)]
    ClassPoly(#[from] ClassPolyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Sqrt,
    Corn,
    Extract,
    Prp,
    Hd,
    Jmod,
    First,
    Second,
}

impl Phase {
    pub const ALL: [Phase; 8] = [
        Phase::Sqrt,
        Phase::Corn,
        Phase::Extract,
        Phase::Prp,
        Phase::Hd,
        Phase::Jmod,
        Phase::First,
        Phase::Second,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Sqrt => "SQRT",
            Phase::Corn => "CORN",
            Phase::Extract => "EXTRACT",
            Phase::Prp => "PRP",
            Phase::Hd => "HD",
            Phase::Jmod => "jmod",
            Phase::First => "1st",
            Phase::Second => "2nd",
        }
    }
}

/// Time and call counts per phase, plus shape data for the chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseStats {
    time: [Duration; 8],
    calls: [u64; 8],
    pub total: Duration,
    pub steps: usize,
    pub cert_bytes: usize,
    pub max_d: u64,
    pub max_h: u64,
}

impl PhaseStats {
    pub fn time(&self, p: Phase) -> Duration {
        self.time[p as usize]
    }

    pub fn calls(&self, p: Phase) -> u64 {
        self.calls[p as usize]
    }

    fn add(&mut self, p: Phase, t: Duration) {
        self.time[p as usize] += t;
        self.calls[p as usize] += 1;
    }

    fn merge(&mut self, o: &PhaseStats) {
        for i in 0..8 {
            self.time[i] += o.time[i];
            self.calls[i] += o.calls[i];
        }
    }
}

fn timed<T>(stats: &mut PhaseStats, p: Phase, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let r = f();
    stats.add(p, t.elapsed());
    r
}

/// One way to write `m = N + 1 - U = c·N'` for a given `D`.
#[derive(Clone, Debug)]
struct OrderHit {
    u: BigInt,
    v: BigUint,
    m: BigUint,
    c: BigUint,
    nprime: BigUint,
}

/// Result of one descent level.
#[derive(Clone, Debug)]
pub enum StepOutcome {
    Leaf,
    Step(CertStep),
}

pub struct Prover {
    config: ProverConfig,
    classes: ClassNumberCache,
    hd: HashMap<u64, Arc<ClassPolynomial>>,
    stats: PhaseStats,
    pool: Option<rayon::ThreadPool>,
}

impl Prover {
    pub fn new(config: ProverConfig) -> Result<Self, ProverError> {
        config.validate()?;
        let pool = if config.threads > 1 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| ProverError::InvalidConfig(e.to_string()))
                .map(Some)?
        } else {
            None
        };
        Ok(Self {
            config,
            classes: ClassNumberCache::new(),
            hd: HashMap::new(),
            stats: PhaseStats::default(),
            pool,
        })
    }

    pub fn config(&self) -> &ProverConfig {
        &self.config
    }

    pub fn stats(&self) -> &PhaseStats {
        &self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = PhaseStats::default();
    }

    /// Full certificate for `n`.
    pub fn prove(&mut self, n: &BigUint) -> Result<Certificate, ProverError> {
        let start = Instant::now();
        let mut steps = Vec::new();
        let mut cur = n.clone();
        let mut table: Option<SieveTable> = None;
        let result = loop {
            match self.step_with(&cur, table.take()) {
                Ok((StepOutcome::Leaf, _)) => break Ok(Certificate { steps, leaf: cur }),
                Ok((StepOutcome::Step(s), next)) => {
                    cur = s.nprime.clone();
                    table = next;
                    steps.push(s);
                }
                Err(ProverError::Composite { n: bad, witness }) if !steps.is_empty() => {
                    break Err(ProverError::ChainBroken {
                        level: steps.len(),
                        n: bad,
                        witness,
                    })
                }
                Err(e) => break Err(e),
            }
        };
        self.stats.total += start.elapsed();
        if let Ok(c) = &result {
            self.stats.steps += c.steps.len();
            self.stats.cert_bytes += ecpp_cert::serialize(c).len();
        }
        result
    }

    /// One level of the descent on `n`.
    pub fn step_once(&mut self, n: &BigUint) -> Result<StepOutcome, ProverError> {
        self.step_with(n, None).map(|(s, _)| s)
    }

    fn step_with(
        &mut self,
        n: &BigUint,
        table: Option<SieveTable>,
    ) -> Result<(StepOutcome, Option<SieveTable>), ProverError> {
        let composite = |witness| ProverError::Composite { n: n.clone(), witness };
        if n < &BigUint::from(2u32) {
            return Err(ProverError::InvalidInput);
        }
        if n < &BigUint::from(self.config.small_threshold) {
            let v = n.to_u64().expect("below 2^32");
            if is_prime_trial(v) {
                return Ok((StepOutcome::Leaf, None));
            }
            return Err(composite(match small_factor(n) {
                Some(p) => Witness::SmallFactor(p),
                None => Witness::Trivial,
            }));
        }
        let prp = timed(&mut self.stats, Phase::Prp, || is_probable_prime(n, self.config.prp_rounds));
        if !prp {
            return Err(composite(match small_factor(n) {
                Some(p) => Witness::SmallFactor(p),
                None => Witness::FailedPrp,
            }));
        }
        let bound = self.config.bound_for(n);
        let table = match table {
            Some(t) if t.bound == bound => t,
            _ => residue_table(n, bound),
        };
        let mut r = self.config.pool_for(n);
        let mut tried: HashSet<u64> = HashSet::new();
        loop {
            let t0 = Instant::now();
            let pool = timed(&mut self.stats, Phase::Sqrt, || build_pool(n, r)).map_err(|e| match e {
                PoolError::SharedFactor(p) => composite(Witness::SmallFactor(p)),
                PoolError::SqrtFailed { .. } => composite(Witness::SqrtFailure),
                PoolError::BadModulus => composite(Witness::Trivial),
            })?;
            let cands: Vec<CandidateD> =
                combine_bounded(&pool, self.config.max_subset_size, self.config.d_max, &mut self.classes)
                    .into_iter()
                    .filter(|c| !tried.contains(&c.d()))
                    .collect();
            let grown = pool.len() >= r;
            // Successive budget-sized prefixes of the sorted list are tried
            // in order, which amounts to one pass over the whole list. The
            // pool only grows once every candidate it yields has failed.
            let cands = schedule(cands, f64::INFINITY, self.config.h_max);
            self.stats.add(Phase::First, t0.elapsed());
            let chunk = self.pool.as_ref().map_or(1, |p| 2 * p.current_num_threads());
            for group in cands.chunks(chunk) {
                let results = self.first_phase(n, &table, group);
                for (cand, (stats, res)) in group.iter().zip(results) {
                    self.stats.merge(&stats);
                    tried.insert(cand.d());
                    for hit in res? {
                        let t1 = Instant::now();
                        let found = self.second_phase(n, cand, &hit);
                        self.stats.add(Phase::Second, t1.elapsed());
                        if let Some(step) = found? {
                            let next = update_table(&table, &hit.u, &hit.c, &hit.nprime);
                            return Ok((StepOutcome::Step(step), Some(next)));
                        }
                    }
                }
            }
            if pool.scanned_up_to() > self.config.d_max || !grown {
                return Err(ProverError::ResourceExhausted { n: n.clone() });
            }
            r += (r / 2).max(1);
        }
    }

    fn first_phase(
        &self,
        n: &BigUint,
        table: &SieveTable,
        group: &[CandidateD],
    ) -> Vec<(PhaseStats, Result<Vec<OrderHit>, ProverError>)> {
        let run = |c: &CandidateD| {
            let mut stats = PhaseStats::default();
            let t = Instant::now();
            let r = orders_for(n, c, table, &self.config, &mut stats);
            stats.add(Phase::First, t.elapsed());
            (stats, r)
        };
        match &self.pool {
            Some(p) => p.install(|| group.par_iter().map(run).collect()),
            None => group.iter().map(run).collect(),
        }
    }

    fn class_poly(&mut self, d: u64) -> Result<Arc<ClassPolynomial>, ProverError> {
        if let Some(p) = self.hd.get(&d) {
            return Ok(p.clone());
        }
        let t = Instant::now();
        let p = Arc::new(hilbert_class_poly_cached(d, self.config.hd_cache.as_deref())?);
        self.stats.add(Phase::Hd, t.elapsed());
        self.hd.insert(d, p.clone());
        Ok(p)
    }

    /// Class polynomial root, curves, point and order check. `None` means
    /// this `D` did not work out and the search should move on.
    fn second_phase(&mut self, n: &BigUint, cand: &CandidateD, hit: &OrderHit) -> Result<Option<CertStep>, ProverError> {
        let composite = |witness| ProverError::Composite { n: n.clone(), witness };
        let d = cand.d();
        let h = self.class_poly(d)?;
        let hmod = PolyModN::from_ints(&h.coeffs, n);
        let seed = self.config.rng_seed ^ d;
        let root = match timed(&mut self.stats, Phase::Jmod, || find_root_counted(&hmod, n, seed)) {
            Ok(r) => r.root,
            Err(PolyError::CompositeDetected(f)) | Err(PolyError::NonInvertibleElement(f)) => {
                return Err(composite(Witness::Factor(f)))
            }
            Err(_) => return Ok(None),
        };
        let curves = match curve_from_j(root.value(), n) {
            Ok(c) => c,
            Err(e) => return curve_failure(e, n),
        };
        for e in curves {
            let mut start = 1u64;
            for _ in 0..POINTS_PER_CURVE {
                let p = match find_point(&e, start) {
                    Ok(p) => p,
                    Err(CurveError::NoPointFound) => break,
                    Err(err) => return curve_failure(err, n),
                };
                start = p.x.to_u64().map_or(start + 1, |x| x + 1);
                match order_check(n, &hit.c, &hit.nprime, &e, &p) {
                    Ok(true) => {
                        self.stats.max_d = self.stats.max_d.max(d);
                        self.stats.max_h = self.stats.max_h.max(cand.info.h);
                        return Ok(Some(CertStep {
                            n: n.clone(),
                            d,
                            u: hit.u.clone(),
                            v: hit.v.clone(),
                            m: hit.m.clone(),
                            c: hit.c.clone(),
                            nprime: hit.nprime.clone(),
                            a: e.a().clone(),
                            b: e.b().clone(),
                            x: p.x.clone(),
                            y: p.y.clone(),
                        }));
                    }
                    Ok(false) => continue,
                    // wrong twist
                    Err(CurveError::OrderMismatch) => break,
                    Err(err) => return curve_failure(err, n),
                }
            }
        }
        Ok(None)
    }
}

const POINTS_PER_CURVE: usize = 5;


fn curve_failure(e: CurveError, n: &BigUint) -> Result<Option<CertStep>, ProverError> {
    let composite = |witness| Err(ProverError::Composite { n: n.clone(), witness });
    match e {
        CurveError::FactorFound(f) | CurveError::Singular { factor: Some(f) } => composite(Witness::Factor(f)),
        CurveError::SqrtFailure => composite(Witness::SqrtFailure),
        _ => Ok(None),
    }
}

/// Traces of the curves with CM by `-D` over `F_N`, as `(U, V)` with
/// `4N = U^2 + D V^2`. `D = 3` and `D = 4` have extra twists.
fn traces(d: u64, u: &BigUint, v: &BigUint) -> Vec<(BigUint, BigUint)> {
    let mut out = vec![(u.clone(), v.clone())];
    match d {
        3 => {
            let (u, v) = (BigInt::from(u.clone()), BigInt::from(v.clone()));
            let pairs: [(BigInt, BigInt); 2] = [((&u + 3 * &v) / 2, (&u - &v) / 2), ((&u - 3 * &v) / 2, (&u + &v) / 2)];
            for (uu, vv) in pairs {
                out.push((uu.into_parts().1, vv.into_parts().1));
            }
        }
        4 => out.push((v << 1u32, u >> 1u32)),
        _ => {}
    }
    out
}

/// Step 1' for one candidate: norm equation, sieve, cofactor, PRP. Hits
/// come back with the smallest `N'` first.
fn orders_for(
    n: &BigUint,
    cand: &CandidateD,
    table: &SieveTable,
    cfg: &ProverConfig,
    stats: &mut PhaseStats,
) -> Result<Vec<OrderHit>, ProverError> {
    let d = cand.d();
    let solved = timed(stats, Phase::Corn, || solve_4n(d, n, cand.sqrt_d.value()));
    let Ok(Some((u, v))) = solved else {
        return Ok(Vec::new());
    };
    let mut hits = Vec::new();
    for (u, v) in traces(d, &u, &v) {
        let t = Instant::now();
        let sieved = sieve_m(&u, table);
        let n1 = n + 1u32;
        let mut options = Vec::new();
        for (sign, primes) in [(1i8, &sieved.minus), (-1, &sieved.plus)] {
            let m = if sign > 0 { &n1 - &u } else { &n1 + &u };
            if m.is_zero() {
                continue;
            }
            let Ok(f) = extract_cofactor(&m, primes, table.bound) else { continue };
            let ok = if cfg.strict_2n {
                f.c == BigUint::from(2u32)
            } else {
                early_abort_ok(n, &f.nprime, cfg.effective_delta(n))
            };
            if ok && exceeds_quartic_bound(&f.nprime, n) {
                let ui = if sign > 0 { BigInt::from(u.clone()) } else { -BigInt::from(u.clone()) };
                options.push(OrderHit { u: ui, v: v.clone(), m, c: f.c, nprime: f.nprime });
            }
        }
        stats.add(Phase::Extract, t.elapsed());
        for o in options {
            let prime = timed(stats, Phase::Prp, || match o.nprime.to_u64() {
                Some(small) if small < SMALL_THRESHOLD => is_prime_trial(small),
                _ => is_probable_prime(&o.nprime, 1) && is_probable_prime(&o.nprime, cfg.prp_rounds),
            });
            if prime && !o.nprime.is_one() {
                hits.push(o);
            }
        }
    }
    hits.sort_by(|a, b| a.nprime.cmp(&b.nprime));
    Ok(hits)
}

/// Proves `n` with a fresh [`Prover`].
pub fn prove(n: &BigUint, config: &ProverConfig) -> Result<Certificate, ProverError> {
    Prover::new(config.clone())?.prove(n)
}

pub fn step_once(n: &BigUint, config: &ProverConfig) -> Result<StepOutcome, ProverError> {
    Prover::new(config.clone())?.step_once(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ecpp_cert::{verify_chain, verify_step};

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn small_inputs() {
        let cfg = ProverConfig::default();
        let c = prove(&b(10007), &cfg).unwrap();
        assert!(c.steps.is_empty());
        assert_eq!(verify_chain(&c), Ok(()));
        for n in [4u64, 561, 1] {
            assert!(prove(&b(n), &cfg).is_err(), "{n}");
        }
        assert!(matches!(prove(&b(561), &cfg), Err(ProverError::Composite { witness: Witness::SmallFactor(3), .. })));
    }

    #[test]
    fn traces_satisfy_norm_equation() {
        // 4·7 = 1 + 3·9 = 25 + 3·1 = 16 + 3·4
        let n = b(7);
        for (u, v) in traces(3, &b(1), &b(3)) {
            assert_eq!(&u * &u + b(3) * &v * &v, &n << 2u32);
        }
        assert_eq!(traces(3, &b(1), &b(3)).len(), 3);
        // 4·13 = 36 + 4·4
        for (u, v) in traces(4, &b(6), &b(2)) {
            assert_eq!(&u * &u + b(4) * &v * &v, b(52));
        }
    }

    #[test]
    fn one_step_contracts() {
        let n: BigUint = "1152921504606846883".parse().unwrap(); // 2^60 - 93
        let cfg = ProverConfig::default();
        let StepOutcome::Step(s) = step_once(&n, &cfg).unwrap() else { panic!("expected a step") };
        assert_eq!(verify_step(&s), Ok(()));
        assert!(&s.nprime << 12u32 <= n);
    }

    #[test]
    fn config_validation() {
        let cfg = ProverConfig { d_max: 3, ..ProverConfig::default() };
        assert!(matches!(Prover::new(cfg), Err(ProverError::InvalidConfig(_))));
        let cfg = ProverConfig { small_threshold: 1 << 33, ..ProverConfig::default() };
        assert!(matches!(Prover::new(cfg), Err(ProverError::InvalidConfig(_))));
    }
}
