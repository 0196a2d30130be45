//! Numerical toolkit for transition-layer energies of divergence-constrained
//! Modica–Mortola models.
//!
//! The crate evaluates and cross-validates several routes to the transition
//! energy density between two wells of a potential `W`:
//!
//! * exact 1D profile energies `∫ √W` along the connecting segment,
//! * matrix calibration functionals `g`, `f`, the conjugate `f*` and the
//!   smooth regularisations `f_k`,
//! * anisotropic masses of parametrised vector-valued 1-currents
//!   (segment, diamond, symmetric curve pairs, cross-tie),
//! * a PDE criterion built from polynomial calibrations,
//! * the curve functional `Z_{λ,h}` and its minimisation over polylines,
//! * a discrete `L^p` approximation of the `L^∞` calibration problem.
//!
//! All sampling loops and grid assemblies run through [`exec`], which keeps
//! reductions in a fixed chunk order so results do not depend on the number
//! of worker threads (`parallel` feature).

pub mod curve;
pub mod currents;
pub mod error;
pub mod exec;
pub mod lbfgs;
pub mod lp;
pub mod mat;
pub mod oracle;
pub mod pde;
pub mod poly;
pub mod potential;
pub mod quad;
pub mod theta;

pub use error::{Error, Result};
pub use mat::{Mat2, QCoords};
pub use potential::{Potential, SegmentSpec};
