//! Finite-window computations for relative topological entropy, relative
//! mean dimension and the induced action on probability measures, for
//! sliding block codes between subshifts.
//!
//! Everything is exact: weights, distances and bounds are rationals, and
//! every search result comes with a certificate that can be re-checked
//! without the search code.

pub mod combinatorics;
pub mod entropy;
pub mod error;
pub mod group;
pub mod instances;
pub mod meandim;
pub mod rational;
pub mod symbolic;
pub mod transport;

pub use error::{Error, Result};
