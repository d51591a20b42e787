use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;

use ecpp_arith::modarith::{is_prime_trial, sqrt_mod};
use ecpp_arith::{order_check, CurveModN, ProjPoint};
use ecpp_cert::{parse, serialize, verify_chain, verify_step, CertStep, Certificate, Rejection};

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

/// Brute-force single-step certificate for a prime `n ≡ 1 mod 3`, using
/// only curves `y^2 = x^3 + b` (j = 0, D = 3).
fn one_step(n: u64) -> Option<Certificate> {
    // 4n = U^2 + 3V^2
    let mut uv = None;
    for v in 1u64.. {
        let rest = (4 * n as u128).checked_sub(3 * (v as u128) * (v as u128))?;
        let u = (rest as f64).sqrt() as u128;
        if let Some(u) = (u.saturating_sub(1)..=u + 1).find(|u| u * u == rest) {
            uv = Some((u as i64, v as i64));
            break;
        }
    }
    let (u0, v0) = uv?;
    let mut us = vec![u0, (u0 + 3 * v0) / 2, (u0 - 3 * v0) / 2];
    us.extend(us.clone().into_iter().map(|u| -u));
    let nn = big(n);
    for u in us {
        let m = (n as i64 + 1 - u) as u64;
        let mut np = m;
        for p in 2..1000 {
            while np % p == 0 && np > p {
                np /= p;
            }
        }
        if np >= 1 << 32 || !is_prime_trial(np) || np * np < 2 * n {
            continue;
        }
        let c = m / np;
        let v = ((4 * n as i128 - (u as i128) * (u as i128)) / 3) as f64;
        let v = v.sqrt().round() as u64;
        for b in 1u64..200 {
            let Ok(e) = CurveModN::new(&BigInt::from(0), &BigInt::from(b), &nn) else { continue };
            for x in 1u64..50 {
                let rhs = e.rhs(&big(x));
                let Ok(y) = sqrt_mod(&BigInt::from(rhs), &nn) else { continue };
                let p = ProjPoint::affine(big(x), y.value().clone());
                if let Ok(true) = order_check(&nn, &big(c), &big(np), &e, &p) {
                    return Some(Certificate {
                        steps: vec![CertStep {
                            n: nn,
                            d: 3,
                            u: BigInt::from(u),
                            v: big(v),
                            m: big(m),
                            c: big(c),
                            nprime: big(np),
                            a: big(0),
                            b: big(b),
                            x: big(x),
                            y: y.value().clone(),
                        }],
                        leaf: big(np),
                    });
                }
                break;
            }
        }
    }
    None
}

fn sample_cert() -> Certificate {
    static CERT: std::sync::OnceLock<Certificate> = std::sync::OnceLock::new();
    CERT.get_or_init(search).clone()
}

fn search() -> Certificate {
    let mut n = (1u64 << 40) + 1;
    loop {
        if n % 3 == 1 && is_prime_trial(n) {
            if let Some(c) = one_step(n) {
                return c;
            }
        }
        n += 2;
    }
}

#[test]
fn generated_certificate_verifies_and_round_trips() {
    let cert = sample_cert();
    assert_eq!(verify_chain(&cert), Ok(()));
    let text = serialize(&cert);
    let back = parse(&text).unwrap();
    assert_eq!(back, cert);
    assert_eq!(serialize(&back), text);
}

#[test]
fn leaf_only_certificates() {
    let ok = Certificate { steps: vec![], leaf: big(4_294_967_291) };
    assert_eq!(verify_chain(&ok), Ok(()));
    let composite = Certificate { steps: vec![], leaf: big(4_294_967_297) };
    assert_eq!(verify_chain(&composite).unwrap_err().reason, Rejection::LeafTooLarge);
    let composite = Certificate { steps: vec![], leaf: big(1001) };
    assert_eq!(verify_chain(&composite).unwrap_err().reason, Rejection::LeafComposite);
    let one = Certificate { steps: vec![], leaf: big(1) };
    assert!(verify_chain(&one).is_err());
}

#[test]
fn targeted_mutations_are_rejected() {
    let cert = sample_cert();
    let s = &cert.steps[0];
    let with = |f: &dyn Fn(&mut CertStep)| {
        let mut t = s.clone();
        f(&mut t);
        verify_step(&t)
    };
    assert_eq!(with(&|t| t.u += 1), Err(Rejection::NormEquation));
    assert_eq!(with(&|t| t.m += 1u32), Err(Rejection::OrderValue));
    assert_eq!(with(&|t| t.c += 1u32), Err(Rejection::Cofactor));
    assert_eq!(with(&|t| t.y = &t.n - &t.y), Ok(()));
    assert_eq!(with(&|t| t.y += 1u32), Err(Rejection::NotOnCurve));
    assert_eq!(with(&|t| t.x += &t.n), Err(Rejection::Unreduced));
    assert_eq!(with(&|t| t.n += 6u32), Err(Rejection::NormEquation));
    assert_eq!(with(&|t| t.n = big(9)), Err(Rejection::BadModulus));
    assert_eq!(with(&|t| t.d = 0), Err(Rejection::BadDiscriminant));
    // a divisor of m that is too small for the bound
    assert_eq!(
        with(&|t| {
            t.c = t.m.clone();
            t.nprime = big(1);
        }),
        Err(Rejection::QuarticBound)
    );
    let mut broken = cert.clone();
    broken.leaf += 2u32;
    assert_eq!(verify_chain(&broken).unwrap_err().reason, Rejection::Linkage);
}

#[test]
fn wrong_curve_is_rejected() {
    let cert = sample_cert();
    let s = &cert.steps[0];
    // the other sextic twists have different orders
    let mut rejected = 0;
    for b in 1u64..40 {
        if b == s.b.iter_u64_digits().next().unwrap() {
            continue;
        }
        let mut t = s.clone();
        t.b = big(b);
        // move the point onto the new curve: y^2 = x^3 + b, search x
        let nn = &t.n;
        let e = CurveModN::new(&BigInt::from(0), &BigInt::from(b), nn).unwrap();
        let Some((x, y)) = (1u64..100).find_map(|x| {
            sqrt_mod(&BigInt::from(e.rhs(&big(x))), nn).ok().map(|y| (x, y.value().clone()))
        }) else {
            continue;
        };
        t.x = big(x);
        t.y = y;
        if verify_step(&t).is_err() {
            rejected += 1;
        }
    }
    assert!(rejected > 10, "only {rejected} wrong curves rejected");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn text_mutations_never_verify_a_different_number(line in 2usize..13, delta in 1u64..1000) {
        let cert = sample_cert();
        let text = serialize(&cert);
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let (k, v) = lines[line].split_once('=').map(|(k, v)| (k.to_string(), v.parse::<BigInt>().unwrap())).unwrap();
        lines[line] = format!("{k}={}", v + delta);
        let mutated = lines.join("\n") + "\n";
        if let Ok(c) = parse(&mutated) {
            prop_assert!(verify_chain(&c).is_err(), "mutated {} still verifies", k);
        }
    }
}
