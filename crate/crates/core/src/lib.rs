//! Finite-state and pushdown compressors, finite-state complexity, and depth
//! profiling tools for binary sequences.

pub mod bits;
pub mod codec;
pub mod fst;
pub mod kfs;
pub mod pushdown;
pub mod lz78;
pub mod seqgen;
pub mod profile;
