//! Zigzag MDS array codes.
//!
//! Finite-field arithmetic, the row-index lattice `Z_r^m`, zigzag code
//! construction and encoding, access-optimal rebuilding of systematic nodes,
//! the any-node variant, error detection/correction from syndromes, and a
//! sharded on-disk format used by the `zgz` binary.

pub mod access;
pub mod anynode;
pub mod array;
pub mod bounds;
pub mod codec;
pub mod error;
pub mod error_decoder;
pub mod field;
pub mod matrix;
pub mod rebuild;
pub mod rowspace;
pub mod shard;
pub mod zigzag;

pub use error::{Error, Result};
pub use field::{Elem, Field};
