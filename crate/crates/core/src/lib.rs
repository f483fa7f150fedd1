//! Numerical laboratory for random walks `G_n x = g_n ... g_1 x` of i.i.d.
//! invertible matrices acting on real projective space.
//!
//! * [`projgeom`]: points, dual points, the bracket `delta`, cocycles.
//! * [`ensemble`]: finitely supported laws `mu` and condition diagnostics.
//! * [`montecarlo`]: path simulation and Monte Carlo estimators.
//! * [`transferop`]: grid discretizations of the transfer operators, their
//!   eigentriples, exponential tilting and the Fourier local limit check.
//! * [`zeroone`]: mass of level sets and algebraic sets under empirical
//!   stationary measures.

pub mod ensemble;
pub mod error;
pub mod measure;
pub mod montecarlo;
pub mod projgeom;
pub mod rng;
pub mod stats;
pub mod transferop;
pub mod zeroone;

pub use ensemble::MatrixEnsemble;
pub use error::{Error, Result};
pub use measure::EmpiricalMeasure;
pub use projgeom::{DualProjPoint, Matrix, ProjPoint};
pub use rng::Streams;
