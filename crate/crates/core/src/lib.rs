//! Exact memory kernels of the generalized Langevin equation obtained by
//! coarse-graining a one-dimensional harmonic lattice with first- and
//! second-neighbour springs, together with the tools used to check their
//! asymptotics: block-size scaling of `Θ₀,₀(0)`, spatial decay of `Θ₀,J(0)`
//! and the `t^{-1/2}` temporal decay of `Θ₀,₀(t)`.
//!
//! The kernel is evaluated two independent ways: by Brillouin-zone
//! quadrature of its block Fourier symbol ([`kernel`]) and by dense
//! eigendecomposition of a finite periodic chain ([`oracle`]).

pub mod asymptotics;
pub mod coarse;
pub mod error;
pub mod kernel;
pub mod lattice;
pub mod linalg;
pub mod oracle;
pub mod report;
pub mod validate;

pub use coarse::WeightingScheme;
pub use error::{Error, Result};
pub use kernel::{KernelSeries, QuadratureGrid};

pub use lattice::ForceConstants;
