//! Differentially private synthetic data on the unit cube: the private
//! measure mechanism (hierarchical noisy counts made consistent) and the
//! private signed measure mechanism (noisy grid counts projected to a
//! probability measure), with exact W1 and bounded-Lipschitz evaluation and
//! an exact privacy auditor.

pub mod audit;
pub mod dataset;
pub mod dlaplace;
pub mod error;
pub mod experiment;
pub mod io;
mod lattice;
pub mod lp;
pub mod metrics;
pub mod partition;
pub mod pmm;
pub mod psmm;

pub use dataset::{linf, Dataset};
pub use dlaplace::DiscreteLaplace;
pub use error::{Error, Result};
pub use experiment::{ExperimentManifest, Mechanism, RateReport};
pub use metrics::DiscreteSignedMeasure;
pub use partition::{BinaryPartition, CellBox, CellIndex};
