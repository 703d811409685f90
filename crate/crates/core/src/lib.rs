//! Shape-from-Template reconstruction for surfaces that tear or disconnect.
//!
//! The pipeline fits radial-basis warps to template/image correspondences,
//! computes the classical isometric depth closed form as an initial
//! reconstruction, then optimizes a displacement field that re-indexes the
//! initial depth function so that distortion around tears is removed.

pub mod geometry;
pub mod harness;
pub mod par;
pub mod refine;
pub mod sft;
pub mod synthgen;
pub mod warps;
