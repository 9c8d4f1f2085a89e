//! Simulation and analysis of anomalous diffusion in one dimension.
//!
//! * [`stable`]: symmetric and one-sided α-stable laws (density, sampling,
//!   least-squares fitting, Hill tail estimates).
//! * [`ctrw`]: Lévy-walk Monte Carlo with heavy-tailed trapping and optional
//!   velocity/flight-duration coupling.
//! * [`lattice`]: semiclassical and quantum-trajectory models of atoms in a
//!   1D lin⊥lin Sisyphus lattice.
//! * [`analysis`]: FWHM power laws, the self-similarity collapse measure, and
//!   Lévy shape fits.
//! * [`io`]: snapshot files and ingestion of external curves.

pub mod analysis;
pub mod ctrw;
pub mod error;
pub mod io;
pub mod lattice;
pub mod lm;
pub mod quad;
pub mod rng;
pub mod snapshot;
pub mod stable;

pub use analysis::{CollapseResult, ExponentFit, FitMethod};
pub use error::{Error, ErrorKind, Result};
pub use snapshot::{DensitySnapshot, HistogramSpec};
pub use stable::{SampleBatch, Sidedness, StableParams};
