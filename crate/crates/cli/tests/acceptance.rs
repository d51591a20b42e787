//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Takes several minutes in release-like builds.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint, RandBigInt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ecpp_arith::modarith::{is_prime_trial, kronecker_i64, mod_pow, small_factor, sqrt_mod};
use ecpp_arith::{divpoly_eval, find_point, is_probable_prime, scalar_mul, CurveModN};
use ecpp_cert::{parse, serialize, verify_chain, CertStep, Certificate};
use ecpp_cli::random_prime;
use ecpp_core::classpoly::hilbert_class_poly;
use ecpp_core::polyroot::{poly_powmod, PolyModN};
use ecpp_core::prover::{Prover, ProverConfig, ProverError};
use ecpp_core::quadratics::{class_number, cornacchia, is_fundamental, norm_equation, DiscriminantInfo};
use ecpp_core::sieve::{residue_table, update_table};

const SIZES: [u32; 3] = [30, 60, 100];
const PRIMES_PER_SIZE: usize = 200;

struct Report {
    failed: bool,
}

impl Report {
    fn line(&mut self, k: u32, ok: bool, detail: String, elapsed: Duration) {
        self.failed |= !ok;
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("criterion {k}: {verdict}  {detail}  [{:.1}s]", elapsed.as_secs_f64());
    }
}

fn digits_range(digits: u32) -> (BigUint, BigUint) {
    (BigUint::from(10u32).pow(digits - 1), BigUint::from(10u32).pow(digits))
}

fn prp(n: &BigUint) -> bool {
    small_factor(n).is_none() && is_probable_prime(n, 1) && is_probable_prime(n, 20)
}

fn random_composite(digits: u32, rng: &mut ChaCha8Rng) -> BigUint {
    let (lo, hi) = digits_range(digits);
    loop {
        let n = rng.gen_biguint_range(&lo, &hi) | BigUint::from(1u32);
        if !is_probable_prime(&n, 20) {
            return n;
        }
    }
}

/// `(6k + 1)(12k + 1)(18k + 1)` with all three factors prime: a Carmichael
/// number.
fn chernick(digits: u32, rng: &mut ChaCha8Rng) -> BigUint {
    let (lo, hi) = digits_range(digits);
    let klo = (&lo / 1296u32).cbrt() + 1u32;
    let khi = (&hi / 1296u32).cbrt();
    loop {
        let k = rng.gen_biguint_range(&klo, &khi);
        let f: Vec<BigUint> = [6u32, 12, 18].iter().map(|&c| &k * c + 1u32).collect();
        if f.iter().all(prp) {
            let n = &f[0] * &f[1] * &f[2];
            if n >= lo && n < hi {
                return n;
            }
        }
    }
}

/// `p (2p - 1)` with both factors prime.
fn semiprime_2p(digits: u32, rng: &mut ChaCha8Rng) -> BigUint {
    let (lo, hi) = digits_range(digits);
    let plo = (&lo >> 1u32).sqrt() + 1u32;
    let phi = (&hi >> 1u32).sqrt();
    loop {
        let p = rng.gen_biguint_range(&plo, &phi);
        let q = (&p << 1u32) - 1u32;
        if prp(&p) && prp(&q) {
            let n = &p * &q;
            if n >= lo && n < hi {
                return n;
            }
        }
    }
}

struct Proofs {
    certs: Vec<(u32, Certificate)>,
    mean_time: Vec<(u32, f64)>,
}

fn criterion_1(prover: &mut Prover, report: &mut Report) -> Proofs {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut certs = Vec::new();
    let mut mean_time = Vec::new();
    let mut failures = Vec::new();
    let mut max_100 = 0f64;
    for digits in SIZES {
        let mut total = 0f64;
        for _ in 0..PRIMES_PER_SIZE {
            let n = random_prime(digits, &mut rng);
            let t = Instant::now();
            let res = prover.prove(&n);
            let secs = t.elapsed().as_secs_f64();
            total += secs;
            if digits == 100 {
                max_100 = max_100.max(secs);
            }
            match res {
                Ok(cert) if *cert.number() == n && verify_chain(&cert).is_ok() => certs.push((digits, cert)),
                Ok(_) => failures.push(format!("{n}: certificate rejected")),
                Err(e) => failures.push(format!("{n}: {e}")),
            }
        }
        mean_time.push((digits, total / PRIMES_PER_SIZE as f64));
        eprintln!("  {digits} digits: mean {:.3}s", total / PRIMES_PER_SIZE as f64);
    }
    let mut composites = 0;
    for digits in SIZES {
        let mut batch: Vec<BigUint> = (0..30).map(|_| random_composite(digits, &mut rng)).collect();
        batch.extend((0..10).map(|_| chernick(digits, &mut rng)));
        batch.extend((0..10).map(|_| semiprime_2p(digits, &mut rng)));
        for n in batch {
            composites += 1;
            match prover.prove(&n) {
                Err(ProverError::Composite { .. }) => {}
                other => failures.push(format!("composite {n}: {:?}", other.map(|c| c.steps.len()))),
            }
        }
    }
    for f in failures.iter().take(5) {
        eprintln!("  {f}");
    }
    let ok = failures.is_empty() && max_100 < 30.0;
    report.line(
        1,
        ok,
        format!(
            "{} of {} primes proved and verified, {composites} composites, {} failures, max 100-digit time {max_100:.2}s",
            certs.len(),
            SIZES.len() * PRIMES_PER_SIZE,
            failures.len()
        ),
        t0.elapsed(),
    );
    Proofs { certs, mean_time }
}

fn criterion_2(proofs: &Proofs, report: &mut Report) {
    let t0 = Instant::now();
    let mut bad_steps = 0;
    let mut longest_100 = 0;
    for (digits, cert) in &proofs.certs {
        bad_steps += cert.steps.iter().filter(|s| (&s.nprime << 12u32) > s.n).count();
        if *digits == 100 {
            longest_100 = longest_100.max(cert.steps.len());
        }
    }
    report.line(
        2,
        bad_steps == 0 && longest_100 <= 29 && !proofs.certs.is_empty(),
        format!("{bad_steps} steps contract by less than 2^12, longest 100-digit chain {longest_100} steps"),
        t0.elapsed(),
    );
}

fn brute_representation(d: u64, p: u64) -> Option<(u64, u64)> {
    (0..).map(|y| (y, d * y * y)).take_while(|&(_, dy)| dy <= p).find_map(|(y, dy)| {
        let r = p - dy;
        let x = (r as f64).sqrt() as u64;
        (x.saturating_sub(1)..=x + 1).find(|x| x * x == r).map(|x| (x, y))
    })
}

fn criterion_3(report: &mut Report) {
    let t0 = Instant::now();
    let (mut cases, mut mismatches) = (0u64, 0u64);
    for p in (3u64..100_000).filter(|&p| is_prime_trial(p)) {
        let pb = BigUint::from(p);
        for d in 1u64..50 {
            if kronecker_i64(-(d as i64), p) != 1 {
                continue;
            }
            cases += 1;
            let mut t = sqrt_mod(&BigInt::from(-(d as i64)), &pb).unwrap().into_value();
            if &t << 1u32 < pb {
                t = &pb - t;
            }
            let got = cornacchia(d, &pb, &t)
                .unwrap()
                .map(|(x, y)| (x.iter_u64_digits().next().unwrap_or(0), y.iter_u64_digits().next().unwrap_or(0)));
            let want = brute_representation(d, p);
            let agree = match (got, want) {
                (Some(g), Some(w)) => g == w || (d == 1 && g == (w.1, w.0)),
                (None, None) => true,
                _ => false,
            };
            if !agree {
                mismatches += 1;
                if mismatches <= 5 {
                    eprintln!("  p = {p}, d = {d}: {got:?} vs {want:?}");
                }
            }
        }
    }
    report.line(3, mismatches == 0, format!("{cases} (p, d) pairs, {mismatches} mismatches"), t0.elapsed());
}

/// Dirichlet's class number formula `h = -(w / 2D) Σ_{a<D} (-D/a) a`.
fn dirichlet_class_number(d: u64) -> u64 {
    let w = match d {
        3 => 6,
        4 => 4,
        _ => 2,
    };
    let s: i64 = (1..d).map(|a| kronecker_i64(-(d as i64), a) as i64 * a as i64).sum();
    (-(w * s) / (2 * d as i64)) as u64
}

fn criterion_4(report: &mut Report) {
    let t0 = Instant::now();
    let (mut count, mut mismatches) = (0, 0);
    for d in 3u64..=10_000 {
        if !is_fundamental(-(d as i64)).unwrap() {
            continue;
        }
        count += 1;
        if class_number(d) != dirichlet_class_number(d) {
            mismatches += 1;
        }
    }
    let spot = [(23, 3), (47, 5), (71, 7)].iter().all(|&(d, h)| class_number(d) == h);
    report.line(
        4,
        mismatches == 0 && spot,
        format!("{count} fundamental discriminants, {mismatches} mismatches, spot values {}", if spot { "ok" } else { "wrong" }),
        t0.elapsed(),
    );
}

/// Number of distinct roots of `h` mod `p`, or `None` when `h` is not
/// squarefree mod `p`.
fn root_count(coeffs: &[BigInt], p: u64) -> Option<usize> {
    let pb = BigUint::from(p);
    let h = PolyModN::from_ints(coeffs, &pb);
    let deriv: Vec<BigInt> = coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i).collect();
    let dh = PolyModN::from_ints(&deriv, &pb);
    if h.gcd(&dh).unwrap().degree() != Some(0) {
        return None;
    }
    let x = PolyModN::x(&pb);
    let g = poly_powmod(&x, &pb, &h).unwrap().sub(&x).gcd(&h).unwrap();
    Some(if g.is_zero() { h.degree().unwrap() } else { g.degree().unwrap() })
}

fn criterion_5(report: &mut Report) {
    let t0 = Instant::now();
    let mut problems = Vec::new();
    let fundamental: Vec<u64> = (3u64..=2000).filter(|&d| is_fundamental(-(d as i64)).unwrap()).collect();
    for &d in &fundamental {
        let deg = hilbert_class_poly(d).ok().map(|p| p.degree() as u64);
        if deg != Some(class_number(d)) {
            problems.push(format!("deg H_{d} = {deg:?}"));
        }
    }
    let h23: Vec<BigInt> = ["12771880859375", "-5151296875", "3491750", "1"].iter().map(|c| c.parse().unwrap()).collect();
    let h23_ok = hilbert_class_poly(23).ok().map(|p| p.coeffs) == Some(h23);
    if !h23_ok {
        problems.push("H_23 coefficients".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut split_checked, mut inert_checked, mut inert_rootless) = (0, 0, 0);
    for _ in 0..10 {
        let d = loop {
            let d = fundamental[rng.gen_range(0..fundamental.len())];
            if d > 20 && class_number(d) > 1 {
                break d;
            }
        };
        let info = DiscriminantInfo::new(d).unwrap();
        let coeffs = hilbert_class_poly(d).unwrap().coeffs;
        let (mut split, mut inert) = (0, 0);
        let mut p = d + 1;
        while split < 20 || inert < 20 {
            p += 1;
            if !is_prime_trial(p) {
                continue;
            }
            let chi = kronecker_i64(-(d as i64), p);
            let splits = chi == 1 && norm_equation(d, &BigUint::from(p)).unwrap().is_some();
            let expected = if splits && split < 20 {
                info.h as usize
            } else if chi == -1 && inert < 20 {
                // Frobenius is a reflection; it has fixed points (then
                // exactly g of them) iff it agrees with complex conjugation
                // on the genus field, i.e. (q*/p) = sign(q*) for all q*
                let like_conj = info.factors.iter().all(|&q| kronecker_i64(q, p) == q.signum() as i8);
                if like_conj {
                    info.g as usize
                } else {
                    0
                }
            } else {
                continue;
            };
            let Some(roots) = root_count(&coeffs, p) else { continue };
            if splits {
                split += 1;
            } else {
                inert += 1;
                inert_rootless += (expected == 0) as u32;
            }
            if roots != expected {
                problems.push(format!("H_{d} mod {p}: {roots} roots, expected {expected}"));
            }
        }
        split_checked += split;
        inert_checked += inert;
    }
    for p in problems.iter().take(5) {
        eprintln!("  {p}");
    }
    report.line(
        5,
        problems.is_empty(),
        format!(
            "{} degrees checked, H_23 {}, {split_checked} split and {inert_checked} inert primes ({inert_rootless} without roots) over 10 D, {} problems",
            fundamental.len(),
            if h23_ok { "exact" } else { "wrong" },
            problems.len()
        ),
        t0.elapsed(),
    );
}

fn criterion_6(report: &mut Report) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut tuples, mut violations, mut torsion) = (0, 0, 0);
    while tuples < 1000 {
        let p = rng.gen_range(5u64..10_000);
        if !is_prime_trial(p) {
            continue;
        }
        let n = BigUint::from(p);
        let (a, b) = (rng.gen_range(0..p), rng.gen_range(0..p));
        let Ok(e) = CurveModN::new(&BigInt::from(a), &BigInt::from(b), &n) else { continue };
        let Ok(pt) = find_point(&e, rng.gen_range(0..p)) else { continue };
        let m = BigUint::from(rng.gen_range(1u64..=1 << 16));
        tuples += 1;
        let dp = divpoly_eval(&m, &pt.x, &pt.y, &e).unwrap();
        let sm = scalar_mul(&m, &pt, &e).point().unwrap();
        let ok = if sm.is_infinity() {
            torsion += 1;
            dp.psi == BigUint::from(0u32)
        } else {
            let q = dp.to_point(&n);
            let zi = mod_pow(&BigInt::from(q.z.clone()), &(&n - 2u32), &n).unwrap().into_value();
            dp.psi != BigUint::from(0u32) && (&q.x * &zi % &n, &q.y * &zi % &n) == (sm.x.clone(), sm.y.clone())
        };
        violations += !ok as u32;
    }
    report.line(
        6,
        violations == 0,
        format!("{tuples} tuples ({torsion} with [m]P = O), {violations} violations"),
        t0.elapsed(),
    );
}

fn criterion_7(proofs: &Proofs, report: &mut Report) {
    let t0 = Instant::now();
    let (mut chains, mut steps, mut mismatches) = (0, 0, 0);
    for (_, cert) in proofs.certs.iter().filter(|(d, _)| *d == 100).take(100) {
        chains += 1;
        let bound = 1000u64.max(8 * cert.number().bits());
        let mut table = residue_table(&cert.steps[0].n, bound);
        for s in &cert.steps {
            table = update_table(&table, &s.u, &s.c, &s.nprime);
            steps += 1;
            if table != residue_table(&s.nprime, bound) {
                mismatches += 1;
            }
        }
    }
    report.line(
        7,
        chains == 100 && mismatches == 0,
        format!("{chains} chains, {steps} table updates, {mismatches} mismatches"),
        t0.elapsed(),
    );
}

fn criterion_8(prover: &mut Prover, proofs: &Proofs, report: &mut Report) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut total = 0f64;
    let count = 8;
    let mut ok = true;
    for _ in 0..count {
        let n = random_prime(150, &mut rng);
        let t = Instant::now();
        ok &= prover.prove(&n).map(|c| verify_chain(&c).is_ok()).unwrap_or(false);
        total += t.elapsed().as_secs_f64();
    }
    let mut points = proofs.mean_time.clone();
    points.push((150, total / count as f64));
    let xy: Vec<(f64, f64)> = points.iter().map(|&(d, t)| ((d as f64).ln(), t.ln())).collect();
    let k = xy.len() as f64;
    let (mx, my) = (xy.iter().map(|p| p.0).sum::<f64>() / k, xy.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let means: Vec<String> = points.iter().map(|(d, t)| format!("{d}:{t:.3}s")).collect();
    report.line(
        8,
        ok && (2.5..=5.0).contains(&slope),
        format!("slope {slope:.2} over mean times {}", means.join(" ")),
        t0.elapsed(),
    );
}

fn mutate(cert: &Certificate, rng: &mut ChaCha8Rng) -> (Certificate, &'static str) {
    let mut c = cert.clone();
    let delta = rng.gen_range(1u64..1 << 20);
    let down = rng.gen_bool(0.5);
    let bump = |v: &mut BigUint| {
        if down && *v >= BigUint::from(delta) {
            *v -= delta;
        } else {
            *v += delta;
        }
    };
    let field = rng.gen_range(0..12);
    if field == 11 || c.steps.is_empty() {
        bump(&mut c.leaf);
        return (c, "leaf");
    }
    let i = rng.gen_range(0..c.steps.len());
    let s: &mut CertStep = &mut c.steps[i];
    let name = match field {
        0 => {
            bump(&mut s.n);
            "N"
        }
        1 => {
            s.d = if down && s.d > delta { s.d - delta } else { s.d + delta };
            "D"
        }
        2 => {
            s.u += if down { -(delta as i64) } else { delta as i64 };
            "U"
        }
        3 => {
            bump(&mut s.v);
            "V"
        }
        4 => {
            bump(&mut s.m);
            "m"
        }
        5 => {
            bump(&mut s.c);
            "c"
        }
        6 => {
            bump(&mut s.nprime);
            "N'"
        }
        7 => {
            bump(&mut s.a);
            "a"
        }
        8 => {
            bump(&mut s.b);
            "b"
        }
        9 => {
            bump(&mut s.x);
            "x"
        }
        _ => {
            bump(&mut s.y);
            "y"
        }
    };
    (c, name)
}

fn criterion_9(proofs: &Proofs, report: &mut Report) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pool: Vec<&Certificate> = proofs.certs.iter().map(|(_, c)| c).filter(|c| !c.steps.is_empty()).collect();
    let mut accepted = Vec::new();
    for _ in 0..500 {
        let (m, field) = mutate(pool[rng.gen_range(0..pool.len())], &mut rng);
        if let Ok(back) = parse(&serialize(&m)) {
            if verify_chain(&back).is_ok() {
                accepted.push(field);
            }
        }
    }
    let manifest = include_str!("../../cert/Cargo.toml");
    let sources = [
        include_str!("../../cert/src/lib.rs"),
        include_str!("../../cert/src/format.rs"),
        include_str!("../../cert/src/model.rs"),
        include_str!("../../cert/src/verify.rs"),
    ];
    let independent = !manifest.contains("ecpp-core") && sources.iter().all(|s| !s.contains("ecpp_core"));
    report.line(
        9,
        accepted.is_empty() && independent && !pool.is_empty(),
        format!(
            "500 mutations, {} accepted {:?}, verifier {} the search crate",
            accepted.len(),
            accepted,
            if independent { "does not depend on" } else { "depends on" }
        ),
        t0.elapsed(),
    );
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut report = Report { failed: false };
    let mut prover = Prover::new(ProverConfig::default()).expect("default config");
    let proofs = criterion_1(&mut prover, &mut report);
    criterion_2(&proofs, &mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    criterion_5(&mut report);
    criterion_6(&mut report);
    criterion_7(&proofs, &mut report);
    criterion_8(&mut prover, &proofs, &mut report);
    criterion_9(&proofs, &mut report);
    println!("acceptance finished in {:.0}s", start.elapsed().as_secs_f64());
    if report.failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
