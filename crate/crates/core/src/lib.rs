//! Density Peak Clustering with index structures for fast `rho` and `delta`.
//!
//! Every backend implements [`DensityIndex`] and must return a
//! [`DensityProfile`] bit-identical to the brute-force [`oracle`] (the
//! reduced neighbor list is exact only for objects it marks resolved).

pub mod backend;
pub mod ch;
pub mod clustering;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod index;
pub mod list;
pub mod oracle;
pub mod persist;
pub mod profile;
pub mod quadtree;
pub mod rnlist;
pub mod rtree;
pub mod testing;
pub mod tree;

pub use backend::{AnyIndex, BackendSpec};
pub use clustering::{assign, select_centers, CenterSelection, Clustering};
pub use dataset::{generate, load_csv, Dataset, GeneratorKind, GeneratorSpec};
pub use error::{DpcError, Result};
pub use evaluation::{pair_metrics, PairMetrics};
pub use index::{DeltaOutput, DensityIndex};
pub use profile::{DensityOrder, DensityProfile};
