//! Grid discretizations of the transfer operators `P_s`, `P_s^*`, `Q_s` and
//! `P_{it}`, their dominant eigentriples, the exponentially tilted sampler and
//! the Fourier form of the local limit theorem.
//!
//! Angle grids (`d = 2`) use linear interpolation in angle; point clouds
//! (`d >= 3`) use nearest-node transport and are low-accuracy.

pub mod fourier;
pub mod grid;
pub mod operator;
pub mod smoothing;
pub mod spectral;
pub mod tilt;

pub use fourier::{llt_fourier_check, llt_fourier_sweep, perturbed_power, Bump, FourierCheck, FourierSetup};
pub use grid::{GridSpec, ProjGrid};
pub use operator::{build_dual_operator, build_operator, build_perturbed, OperatorMatrix, Side};
pub use spectral::{
    dominant_eigen, dual_spectral, eigenfunction_consistency, kappa_expansion, markov_q, EigenTriple, SpectralResult,
};
pub use tilt::{harmonicity_max, harmonicity_residual, tilt_density, tilted_sample, tilted_statistics, TiltMode};
