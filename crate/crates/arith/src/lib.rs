//! Arithmetic kernels shared by the ECPP prover and the certificate
//! verifier: modular arithmetic over big integers and elliptic curves
//! over Z/NZ.

pub mod curve;
pub mod modarith;

pub use curve::{
    curve_from_j, divpoly_eval, find_point, order_check, pseudo_add, scalar_mul, CurveError, CurveModN,
    DivPolyTriple, ProjPoint, PseudoResult,
};
pub use modarith::{
    inv_mod, is_probable_prime, jacobi, mod_pow, sqrt_mod, ArithError, Inversion, Residue,
};
