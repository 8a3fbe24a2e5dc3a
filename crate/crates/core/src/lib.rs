//! Slice-stack volumetry by quasi-Monte Carlo area sampling.
//!
//! Each slice of a binary mask volume is sampled with a deterministic 2-D
//! point stream (a Halton sequence, or a seeded pseudorandom baseline). The
//! fraction of points landing inside the region scales the slice area, and
//! consecutive slice areas are combined with the frustum rule
//! `h * (S_i + S_{i+1} + sqrt(S_i * S_{i+1})) / 3`.
//!
//! Modules:
//! - [`sequences`]: radical inverse, Halton points, pseudorandom stream.
//! - [`maskio`]: slice geometry, binary masks, manifest + raw file I/O.
//! - [`phantoms`]: rasterized solids with known volumes.
//! - [`estimator`]: per-slice area estimation and frustum integration.
//! - [`analysis`]: relative error, convergence sweeps, points-to-target.

pub mod analysis;
pub mod error;
pub mod estimator;
pub mod maskio;
pub mod phantoms;
pub mod sequences;

pub use error::{Error, Result};
pub use estimator::{estimate_slice_area, estimate_volume, frustum_sum, AreaEstimate, VolumeReport};
pub use maskio::{contains, load_volume, save_volume, Encoding, MaskVolume, SliceGeometry, SliceMask};
pub use sequences::{halton_point, radical_inverse, stream, Point2, SequenceKind, SequenceSpec};
