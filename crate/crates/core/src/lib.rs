//! Sparse coding with a locally competitive algorithm (LCA), in two flavors:
//!
//! * a floating-point reference solver ([`solver`]) that iterates the LCA
//!   dynamics directly, and
//! * a bit-accurate emulation ([`emu`]) of a fixed-point, graded-spike
//!   neuromorphic implementation, in one-layer and two-layer topologies.
//!
//! The emulation is generic over its value type: run it over [`fixedpoint::FxValue`]
//! to reproduce the integer hardware arithmetic bit for bit, or over `f64` to get
//! the same event-driven schedule in floating point.

pub mod dictionary;
pub mod emu;
pub mod error;
pub mod fixedpoint;
pub mod idx;
pub mod mat;
pub mod metrics;
pub mod solver;

pub use error::{Error, Result};

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type for dictionaries and the reference solver.
///
/// Everything numeric in the float path is written against this trait so the
/// same code instantiates at `f32` and `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// Double-precision dictionary, the common instantiation.
pub type Dictionary64 = dictionary::Dictionary<f64>;
/// Single-precision dictionary, matching the on-disk element type.
pub type Dictionary32 = dictionary::Dictionary<f32>;

/// Reference LCA solver over `f64`.
pub type Solver64 = solver::Solver<f64>;

/// Network wired for hardware-style fixed-point arithmetic.
pub type FixedNetwork = emu::Network<fixedpoint::FxValue>;
/// Network running the same event schedule in floating point.
pub type FloatNetwork = emu::Network<f64>;

/// Emulation instance over fixed-point values.
pub type FixedEmulation<'n> = emu::Emulation<'n, fixedpoint::FxValue>;
/// Emulation instance over floating-point values.
pub type FloatEmulation<'n> = emu::Emulation<'n, f64>;
