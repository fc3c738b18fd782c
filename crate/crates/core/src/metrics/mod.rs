//! Exact W1 and bounded-Lipschitz distances between discrete measures under
//! the ℓ∞ ground metric.

mod measure;
mod snapped;
mod transport;

pub use measure::{align, DiscreteSignedMeasure, MASS_TOLERANCE};
pub use snapped::{snap_lattice, w1_grid_snapped, w1_lattice_snapped, w1_lattice_snapped_with, SnapRoute, SnappedDistance, LATTICE_NODE_LIMIT};
pub use transport::{d_bl, d_bl_with, w1_1d, w1_lp, w1_lp_with, Route, SUPPORT_LIMIT};
