//! Elliptic curves `y^2 = x^3 + ax + b` over Z/NZ.
//!
//! Addition follows the chord-and-tangent law on affine coordinates. When
//! an inversion modulo `N` fails the gcd it exposes is returned through the
//! factor channel ([`PseudoResult::Factor`]); for prime `N` this never
//! happens. A point that survives pseudo-addition reduces, modulo every
//! prime `p | N`, to the sum computed on `E mod p`.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::modarith::{
    exceeds_quartic_bound, inv_mod_unsigned, jacobi, low_u64, reduce, sqrt_mod, within_hasse_interval,
    ArithError, Inversion,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CurveError {
    #[error("curve is singular modulo N")]
    Singular { factor: Option<BigUint> },
    #[error("found nontrivial factor {0} of the modulus")]
    FactorFound(BigUint),
    #[error("square root failed modulo N; N is composite")]
    SqrtFailure,
    #[error("no point with nonzero y-coordinate found")]
    NoPointFound,
    #[error("point does not have the claimed order")]
    OrderMismatch,
    #[error("prime-order bound N' > (N^(1/4) + 1)^2 violated")]
    BoundViolated,
    #[error("point at infinity is not a valid base point")]
    PointAtInfinity,
    #[error("point is not on the curve")]
    NotOnCurve,
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Curve `y^2 = x^3 + ax + b` with `gcd(4a^3 + 27b^2, N) = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveModN {
    a: BigUint,
    b: BigUint,
    n: BigUint,
}

impl CurveModN {
    pub fn new(a: &BigInt, b: &BigInt, n: &BigUint) -> Result<Self, CurveError> {
        if n < &BigUint::from(2u32) {
            return Err(ArithError::ModulusTooSmall.into());
        }
        let a = reduce(a, n);
        let b = reduce(b, n);
        let disc = (BigUint::from(4u32) * &a * &a * &a + BigUint::from(27u32) * &b * &b) % n;
        let g = disc.gcd(n);
        if !g.is_one() {
            let factor = if &g == n { None } else { Some(g) };
            return Err(CurveError::Singular { factor });
        }
        Ok(Self { a, b, n: n.clone() })
    }

    pub fn a(&self) -> &BigUint {
        &self.a
    }

    pub fn b(&self) -> &BigUint {
        &self.b
    }

    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    /// `x^3 + ax + b mod N`.
    pub fn rhs(&self, x: &BigUint) -> BigUint {
        let x2 = x * x % &self.n;
        ((x2 + &self.a) * x + &self.b) % &self.n
    }

    /// Projective membership test `y^2 z = x^3 + a x z^2 + b z^3`.
    pub fn contains(&self, p: &ProjPoint) -> bool {
        let n = &self.n;
        if p.x.is_zero() && p.y.is_zero() && p.z.is_zero() {
            return false;
        }
        let z2 = &p.z * &p.z % n;
        let lhs = &p.y * &p.y % n * &p.z % n;
        let rhs = (&p.x * &p.x % n * &p.x + &self.a * &p.x % n * &z2 + &self.b * &z2 % n * &p.z) % n;
        lhs == rhs
    }

    fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            &self.n - (b - a) % &self.n
        }
    }

    fn inverse(&self, v: &BigUint) -> Result<BigUint, BigUint> {
        match inv_mod_unsigned(v, &self.n) {
            Ok(Inversion::Inverse(r)) => Ok(r.into_value()),
            Ok(Inversion::Factor(d)) => Err(d),
            // callers never pass a zero residue
            Err(_) => Err(self.n.clone()),
        }
    }
}

/// Point `(x : y : z)` of the projective plane over Z/NZ.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProjPoint {
    pub x: BigUint,
    pub y: BigUint,
    pub z: BigUint,
}

impl ProjPoint {
    /// The neutral element `O_E = (0 : 1 : 0)`.
    pub fn infinity() -> Self {
        Self {
            x: BigUint::zero(),
            y: BigUint::one(),
            z: BigUint::zero(),
        }
    }

    pub fn affine(x: BigUint, y: BigUint) -> Self {
        Self { x, y, z: BigUint::one() }
    }

    pub fn is_infinity(&self) -> bool {
        self.z.is_zero()
    }
}

/// Result of arithmetic over Z/NZ: a point, or a divisor `1 < d < N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PseudoResult {
    Point(ProjPoint),
    Factor(BigUint),
}

impl PseudoResult {
    pub fn point(self) -> Result<ProjPoint, CurveError> {
        match self {
            PseudoResult::Point(p) => Ok(p),
            PseudoResult::Factor(d) => Err(CurveError::FactorFound(d)),
        }
    }
}

enum Affine {
    Infinity,
    Point(BigUint, BigUint),
}

fn to_affine(p: &ProjPoint, e: &CurveModN) -> Result<Affine, BigUint> {
    let z = &p.z % &e.n;
    if z.is_zero() {
        return Ok(Affine::Infinity);
    }
    if z.is_one() {
        return Ok(Affine::Point(&p.x % &e.n, &p.y % &e.n));
    }
    let zi = e.inverse(&z)?;
    Ok(Affine::Point(&p.x * &zi % &e.n, &p.y * &zi % &e.n))
}

fn add_affine(p: &Affine, q: &Affine, e: &CurveModN) -> Result<Affine, BigUint> {
    let n = &e.n;
    let (x1, y1, x2, y2) = match (p, q) {
        (Affine::Infinity, Affine::Infinity) => return Ok(Affine::Infinity),
        (Affine::Infinity, Affine::Point(x, y)) | (Affine::Point(x, y), Affine::Infinity) => {
            return Ok(Affine::Point(x.clone(), y.clone()))
        }
        (Affine::Point(x1, y1), Affine::Point(x2, y2)) => (x1, y1, x2, y2),
    };
    let lambda = if x1 != x2 {
        let inv = e.inverse(&e.sub(x2, x1))?;
        e.sub(y2, y1) * inv % n
    } else {
        let ysum = (y1 + y2) % n;
        if ysum.is_zero() {
            return Ok(Affine::Infinity);
        }
        // tangent slope (3x^2 + a) / (y1 + y2); equals the usual 2y when y1 = y2
        let inv = e.inverse(&ysum)?;
        (BigUint::from(3u32) * x1 * x1 + &e.a) % n * inv % n
    };
    let x3 = e.sub(&(&lambda * &lambda % n), &((x1 + x2) % n));
    let y3 = e.sub(&(&lambda * e.sub(x1, &x3) % n), y1);
    Ok(Affine::Point(x3, y3))
}

fn from_affine(a: Affine) -> ProjPoint {
    match a {
        Affine::Infinity => ProjPoint::infinity(),
        Affine::Point(x, y) => ProjPoint::affine(x, y),
    }
}

/// Chord-and-tangent addition over Z/NZ.
pub fn pseudo_add(p: &ProjPoint, q: &ProjPoint, e: &CurveModN) -> PseudoResult {
    let run = || -> Result<Affine, BigUint> {
        let pa = to_affine(p, e)?;
        let qa = to_affine(q, e)?;
        add_affine(&pa, &qa, e)
    };
    match run() {
        Ok(a) => PseudoResult::Point(from_affine(a)),
        Err(d) => PseudoResult::Factor(d),
    }
}

/// `[m]P` by left-to-right double-and-add.
pub fn scalar_mul(m: &BigUint, p: &ProjPoint, e: &CurveModN) -> PseudoResult {
    let run = || -> Result<Affine, BigUint> {
        let base = to_affine(p, e)?;
        if m.is_zero() {
            return Ok(Affine::Infinity);
        }
        let mut acc = match &base {
            Affine::Infinity => return Ok(Affine::Infinity),
            Affine::Point(x, y) => Affine::Point(x.clone(), y.clone()),
        };
        for i in (0..m.bits() - 1).rev() {
            acc = add_affine(&acc, &acc, e)?;
            if m.bit(i) {
                acc = add_affine(&acc, &base, e)?;
            }
        }
        Ok(acc)
    };
    match run() {
        Ok(a) => PseudoResult::Point(from_affine(a)),
        Err(d) => PseudoResult::Factor(d),
    }
}

/// Values of the division polynomials `φ_m, ψ_m, ω_m` at a point, so that
/// `[m](x, y) = (φ_m ψ_m : ω_m : ψ_m^3)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivPolyTriple {
    pub phi: BigUint,
    pub psi: BigUint,
    pub omega: BigUint,
}

impl DivPolyTriple {
    /// The projective point `(φψ : ω : ψ^3)`.
    pub fn to_point(&self, n: &BigUint) -> ProjPoint {
        let psi2 = &self.psi * &self.psi % n;
        ProjPoint {
            x: &self.phi * &self.psi % n,
            y: self.omega.clone(),
            z: psi2 * &self.psi % n,
        }
    }
}

/// Evaluates `φ_m, ψ_m, ω_m` at `(x, y)` with an `O(log m)` ladder over a
/// window of eight consecutive `ψ` values.
///
/// Uses `ψ_{2j+1} = ψ_{j+2}ψ_j^3 - ψ_{j-1}ψ_{j+1}^3` and
/// `2y ψ_{2j} = ψ_j(ψ_{j+2}ψ_{j-1}^2 - ψ_{j-2}ψ_{j+1}^2)`, which hold for all
/// integer indices with `ψ_{-j} = -ψ_j`.
pub fn divpoly_eval(
    m: &BigUint,
    x: &BigUint,
    y: &BigUint,
    e: &CurveModN,
) -> Result<DivPolyTriple, CurveError> {
    let n = &e.n;
    if m.is_zero() {
        return Err(ArithError::ZeroInput.into());
    }
    let x = x % n;
    let y = y % n;
    if y.is_zero() {
        return Err(CurveError::FactorFound(n.clone()));
    }
    let two_y = (&y << 1u32) % n;
    let inv_2y = e.inverse(&two_y).map_err(CurveError::FactorFound)?;
    let (a, b) = (&e.a, &e.b);
    let neg = |v: &BigUint| if v.is_zero() { v.clone() } else { n - v };
    let c = |k: u32| BigUint::from(k);

    let x2 = &x * &x % n;
    let x3 = &x2 * &x % n;
    let x4 = &x2 * &x2 % n;
    let x6 = &x3 * &x3 % n;
    let a2 = a * a % n;
    let a3 = &a2 * a % n;
    let b2 = b * b % n;

    let psi1 = BigUint::one();
    let psi2 = two_y.clone();
    // ψ3 = 3x^4 + 6ax^2 + 12bx - a^2
    let psi3 = e.sub(&((c(3) * &x4 + c(6) * a * &x2 + c(12) * b * &x) % n), &a2);
    // ψ4 = 4y(x^6 + 5ax^4 + 20bx^3 - 5a^2x^2 - 4abx - 8b^2 - a^3)
    let pos = (&x6 + c(5) * a * &x4 + c(20) * b * &x3) % n;
    let negs = (c(5) * &a2 * &x2 + c(4) * a * b % n * &x + c(8) * &b2 + &a3) % n;
    let psi4 = c(4) * &y % n * e.sub(&pos, &negs) % n;

    let cube = |v: &BigUint| v * v % n * v % n;
    let odd_term = |m2: &BigUint, m1: &BigUint, p0: &BigUint, p1: &BigUint| {
        // ψ_{2j+1} from ψ_{j-1}, ψ_j, ψ_{j+1}, ψ_{j+2}
        e.sub(&(m2 * cube(p0) % n), &(m1 * cube(p1) % n))
    };
    let even_term = |pm2: &BigUint, pm1: &BigUint, p0: &BigUint, p1: &BigUint, p2: &BigUint| {
        // ψ_{2j} from ψ_{j-2}..ψ_{j+2}
        let t = e.sub(&(p2 * pm1 % n * pm1 % n), &(pm2 * p1 % n * p1 % n));
        p0 * t % n * &inv_2y % n
    };
    let psi5 = odd_term(&psi4, &psi1, &psi2, &psi3);

    // window[i] = ψ_{k-3+i}
    let mut window: Vec<BigUint> = vec![
        neg(&psi2),
        neg(&psi1),
        BigUint::zero(),
        psi1.clone(),
        psi2,
        psi3,
        psi4,
        psi5,
    ];
    let mut k = BigUint::one();
    for bit in (0..m.bits() - 1).rev() {
        let shift = if m.bit(bit) { 1usize } else { 0 };
        // ψ_{2k-3} .. ψ_{2k+5}; index i ↦ ψ_{2k-3+i}
        let w = |j: isize| &window[(j + 3) as usize]; // ψ_{k+j}
        let mut next = Vec::with_capacity(9);
        for i in 0..9isize {
            let idx = i - 3; // target ψ_{2k+idx}
            let v = if idx.rem_euclid(2) == 0 {
                let j = idx / 2; // ψ_{2(k+j)}
                even_term(w(j - 2), w(j - 1), w(j), w(j + 1), w(j + 2))
            } else {
                let j = (idx - 1).div_euclid(2); // ψ_{2(k+j)+1}
                odd_term(w(j + 2), w(j - 1), w(j), w(j + 1))
            };
            next.push(v);
        }
        window = next[shift..shift + 8].to_vec();
        k = (k << 1u32) + BigUint::from(shift as u32);
    }
    debug_assert_eq!(&k, m);
    let p = |j: isize| &window[(j + 3) as usize];
    let psi = p(0).clone();
    let phi = e.sub(&(&x * &psi % n * &psi % n), &(p(1) * p(-1) % n));
    let inv_4y = &inv_2y * e.inverse(&c(2)).map_err(CurveError::FactorFound)? % n;
    let omega = e.sub(&(p(2) * p(-1) % n * p(-1) % n), &(p(-2) * p(1) % n * p(1) % n)) * inv_4y % n;
    Ok(DivPolyTriple { phi, psi, omega })
}

/// Smallest quadratic nonresidue modulo the odd prime `n`.
fn smallest_nonresidue(n: &BigUint) -> Result<BigUint, CurveError> {
    let mut c = 2u64;
    loop {
        match jacobi(&BigInt::from(c), n)? {
            -1 => return Ok(BigUint::from(c)),
            0 => return Err(CurveError::FactorFound(BigUint::from(c).gcd(n))),
            _ => {}
        }
        c += 1;
        if c > 100_000 {
            return Err(CurveError::SqrtFailure);
        }
    }
}

/// Curves over Z/NZ with j-invariant `j0`: the curve and its twists.
///
/// Generic `j0` gives `E = (3k, 2k)` with `k = j0 / (1728 - j0)` and its
/// quadratic twist by the smallest nonresidue; `j0 = 0` gives the sextic
/// twists of `y^2 = x^3 + 1` and `j0 = 1728` the quartic twists of
/// `y^2 = x^3 + x`.
pub fn curve_from_j(j0: &BigUint, n: &BigUint) -> Result<Vec<CurveModN>, CurveError> {
    if n <= &BigUint::from(3u32) || n.is_even() {
        return Err(ArithError::EvenModulus.into());
    }
    let j0 = j0 % n;
    let j1728 = BigUint::from(1728u32) % n;
    let one = BigUint::one();
    let zero = BigInt::zero();
    if j0.is_zero() {
        let g = if (n % 3u32).is_one() {
            // needs a non-square that is also a non-cube
            let e3 = (n - &one) / 3u32;
            let mut g = 2u64;
            loop {
                let gb = BigUint::from(g);
                let j = jacobi(&BigInt::from(g), n)?;
                if j == 0 {
                    return Err(CurveError::FactorFound(gb.gcd(n)));
                }
                if j == -1 && !gb.modpow(&e3, n).is_one() {
                    break gb;
                }
                g += 1;
                if g > 100_000 {
                    return Err(CurveError::SqrtFailure);
                }
            }
        } else {
            smallest_nonresidue(n)?
        };
        let count = if (n % 3u32).is_one() { 6 } else { 2 };
        let mut b = one.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(CurveModN::new(&zero, &BigInt::from(b.clone()), n)?);
            b = b * &g % n;
        }
        return Ok(out);
    }
    if j0 == j1728 {
        let g = smallest_nonresidue(n)?;
        let count = if (n % 4u32).is_one() { 4 } else { 2 };
        let mut a = one.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(CurveModN::new(&BigInt::from(a.clone()), &zero, n)?);
            a = a * &g % n;
        }
        return Ok(out);
    }
    let denom = if j1728 >= j0 { &j1728 - &j0 } else { n - (&j0 - &j1728) };
    let inv = match inv_mod_unsigned(&denom, n)? {
        Inversion::Inverse(r) => r.into_value(),
        Inversion::Factor(d) => return Err(CurveError::FactorFound(d)),
    };
    let k = &j0 * inv % n;
    let a1 = BigUint::from(3u32) * &k % n;
    let b1 = BigUint::from(2u32) * &k % n;
    let c = smallest_nonresidue(n)?;
    let c2 = &c * &c % n;
    let c3 = &c2 * &c % n;
    let e1 = CurveModN::new(&BigInt::from(a1.clone()), &BigInt::from(b1.clone()), n)?;
    let e2 = CurveModN::new(&BigInt::from(a1 * c2 % n), &BigInt::from(b1 * c3 % n), n)?;
    Ok(vec![e1, e2])
}

/// First affine point with `x ≥ start` and `y ≠ 0`; `y` is the smaller
/// square root of `x^3 + ax + b`.
pub fn find_point(e: &CurveModN, start: u64) -> Result<ProjPoint, CurveError> {
    let n = &e.n;
    let limit = if n.bits() <= 24 {
        low_u64(n)
    } else {
        crate::modarith::iroot(n, 2).iter_u64_digits().next().unwrap_or(u64::MAX)
    };
    let mut x = BigUint::from(start) % n;
    for _ in 0..limit.max(1) {
        let r = e.rhs(&x);
        if !r.is_zero() {
            match jacobi(&BigInt::from(r.clone()), n)? {
                1 => {
                    let y = match sqrt_mod(&BigInt::from(r), n) {
                        Ok(y) => y.into_value(),
                        Err(ArithError::AlgorithmFailure) => return Err(CurveError::SqrtFailure),
                        Err(err) => return Err(err.into()),
                    };
                    if y.gcd(n).is_one() {
                        return Ok(ProjPoint::affine(x, y));
                    }
                }
                0 => {
                    let g = r.gcd(n);
                    if &g != n {
                        return Err(CurveError::FactorFound(g));
                    }
                }
                _ => {}
            }
        }
        x += 1u32;
        if &x == n {
            x = BigUint::zero();
        }
    }
    Err(CurveError::NoPointFound)
}

/// Order test for `m = c·N'`: `Q = [c]P ≠ O_E` and `[N']Q = O_E`, with the
/// bound `N' > (N^(1/4) + 1)^2`.
///
/// Returns `Ok(false)` when the point is unusable and another point should
/// be tried (`Q = O_E`, or for `c = 2` when `ψ_{N'}(P) ≡ 0`). For `c = 2`
/// the result is cross-checked against the division polynomials:
/// `ψ_{2N'}(x, y) ≡ 0` and `gcd(ψ_{N'}(x, y), N) = 1`, with `2N'` in the
/// Hasse interval.
pub fn order_check(
    n: &BigUint,
    c: &BigUint,
    n_prime: &BigUint,
    e: &CurveModN,
    p: &ProjPoint,
) -> Result<bool, CurveError> {
    if &e.n != n {
        return Err(CurveError::NotOnCurve);
    }
    if p.is_infinity() {
        return Err(CurveError::PointAtInfinity);
    }
    if !e.contains(p) {
        return Err(CurveError::NotOnCurve);
    }
    if c.is_zero() || !exceeds_quartic_bound(n_prime, n) {
        return Err(CurveError::BoundViolated);
    }
    let two = BigUint::from(2u32);
    if c == &two && !within_hasse_interval(&(n_prime << 1u32), n) {
        return Err(CurveError::BoundViolated);
    }
    let q = scalar_mul(c, p, e).point()?;
    if q.is_infinity() {
        return Ok(false);
    }
    let r = scalar_mul(n_prime, &q, e).point()?;
    if !r.is_infinity() {
        return Err(CurveError::OrderMismatch);
    }
    if c == &two {
        let (x, y) = match to_affine(p, e) {
            Ok(Affine::Point(x, y)) => (x, y),
            Ok(Affine::Infinity) => return Err(CurveError::PointAtInfinity),
            Err(d) => return Err(CurveError::FactorFound(d)),
        };
        let full = divpoly_eval(&(n_prime << 1u32), &x, &y, e)?;
        if !full.psi.is_zero() {
            return Err(CurveError::OrderMismatch);
        }
        let half = divpoly_eval(n_prime, &x, &y, e)?;
        if half.psi.is_zero() {
            return Ok(false);
        }
        let g = half.psi.gcd(n);
        if !g.is_one() {
            return Err(CurveError::FactorFound(g));
        }
    }
    Ok(true)
}
