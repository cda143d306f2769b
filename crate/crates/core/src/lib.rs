//! Cumulant densities and integrated cumulants for multivariate linear Hawkes models.
//!
//! The crate computes cumulant densities and integrated cumulants of any
//! order by enumerating leaf-labeled rooted trees, one integral term per
//! tree, and checks the results against exact Poisson-cluster simulation
//! with full lineage tracking.
//!
//! Module map:
//!
//! - [`model`]: kernels, stability, stationary rates, the resolvent and the
//!   time-resolved renewal density.
//! - [`trees`]: enumeration, counting and canonical forms of rooted trees
//!   with labeled leaves.
//! - [`cumulants`]: tree terms, integrated cumulants, the motif series and
//!   cumulant densities on a time grid.
//! - [`simulate`]: cluster sampler with lineage and an Ogata thinning
//!   sampler.
//! - [`estimate`]: set-partition cumulants, binned-count estimators, pair
//!   histograms and same-cluster coincidence histograms.
//! - [`cli`]: the `hawkes` command line front end.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default). Every such loop has a sequential path selected through
//! [`Execution`], and both produce bit-identical output.

pub mod cli;
pub mod cumulants;
pub mod error;
pub mod estimate;
pub mod exec;
pub mod io;
pub mod model;
pub mod partitions;
pub mod simulate;
pub mod trees;

pub use error::{HawkesError, Result};
pub use exec::Execution;
pub use model::{build_summary, BranchingSummary, HawkesModel, Kernel, RenewalDensity};
pub use trees::{count_trees, enumerate_trees, LeafLabeledTree};
