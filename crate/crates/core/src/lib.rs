//! Spectra of periodic and limit-periodic Jacobi operators
//!
//! `(J u)(n) = a(n-1) u(n-1) + b(n) u(n) + a(n) u(n+1)`
//!
//! Band spectra come from the periodic and antiperiodic restrictions, break
//! points from the discriminant, and the limit-periodic construction from
//! repeated gap opening with per-step certificates.
//!
//! ```
//! use lpspec::{band_spectrum, construct, ConstructionOptions, PeriodicJacobi, PeriodicSequence};
//!
//! let j = PeriodicJacobi::schrodinger(vec![0.0, 0.3])?;
//! assert_eq!(band_spectrum(&j)?.open_gaps().len(), 1);
//!
//! let b0 = PeriodicSequence::new(vec![0.0])?;
//! let a = PeriodicSequence::constant(1.0, 1)?;
//! let run = construct(&b0, &a, 0.5, 0.5, &[2, 2], 2, &ConstructionOptions::default())?;
//! assert_eq!(run.depth(), 2);
//! # Ok::<(), lpspec::Error>(())
//! ```

pub mod eigen;
pub mod error;
pub mod floquet;
pub mod gap_opening;
pub mod homogenize;
pub mod hull;
pub mod ids;
pub mod intervals;
pub mod jacobi;
pub mod mat2;

pub use error::{Error, Result};
pub use floquet::{
    band_spectrum, break_points, genericity_metrics, BandSpectrum, BreakPoint, BreakPointSet,
    FloquetOptions, Gap, Metrics,
};
pub use gap_opening::{find_generic, perturb_last, GenericPerturbation};
pub use homogenize::{
    construct, ConstructionOptions, ConstructionRun, ConstructionStep, RunStatus,
};
pub use hull::{HullSpec, SamplingFunction};
pub use intervals::{HomogeneityReport, IntervalSet, ProfileGrid};
pub use jacobi::{BoundarySign, PeriodicJacobi, PeriodicSequence};
pub use mat2::Mat2;
