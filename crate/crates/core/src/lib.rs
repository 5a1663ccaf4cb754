//! Numerical laboratory for the discrete Carleson operator with polynomial
//! modulations `e(lambda |y|^(2d))` on `Z^n`.
//!
//! The floating-point parts are generic over [`Real`] (`f32` or `f64`);
//! integer and rational arithmetic is exact. Aliases fixing `f64` are
//! provided at the crate root for the common case.

pub mod error;
pub mod expsums;
pub mod fft;
pub mod kernels;
pub mod multipliers;
pub mod operators;
pub mod oscint;
pub mod quad;
pub mod rationals;
pub mod scalar;
pub mod smooth;

pub use error::{Error, Result};
pub use num_complex::Complex;
pub use rationals::{ArcPair, ArcParams, ReducedRational};
pub use scalar::Real;

pub use kernels::{KernelFamily, Omega};
pub use multipliers::{CutoffSpec, MultiplierGrid};
pub use operators::{LambdaGrid, LatticeFunction};
pub use oscint::QuadratureSpec;

pub type C64 = Complex<f64>;
pub type KernelFamily64 = KernelFamily<f64>;
pub type LatticeFunction64 = LatticeFunction<f64>;
pub type MultiplierGrid64 = MultiplierGrid<f64>;
pub type CutoffSpec64 = CutoffSpec<f64>;
pub type WeylSumResult64 = expsums::WeylSumResult<f64>;
