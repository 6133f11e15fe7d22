//! Descent-set-preserving bijections between pattern-avoidance classes.
//!
//! - [`west`]: `f`/`g` between `S_n(12…(k-2)k(k-1))` and `S_n(H_k, Q_k)`
//! - [`slide`]: `Phi`/`Psi` between `S_n(23…k1)` and `S_n(H_k, Q_k)`
//! - [`equivalence`]: their compositions and distribution tables
//! - [`verify`]: exhaustive checks over a small grid

pub mod equivalence;
pub mod error;
pub mod pattern;
pub mod perm;
pub mod slide;
pub mod verify;
pub mod west;

pub use equivalence::{theta_f_to_g, theta_g_to_f, CountTable, KeyKind, Side};
pub use error::{Error, Result};
pub use pattern::{Occurrence, PatternSpec};
pub use perm::{Block, BlockDecomposition, Permutation, PositionSet, Square};
pub use slide::{phi_map, psi_map};
pub use west::{f_map, g_map};
