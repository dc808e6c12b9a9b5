//! Structured bitmap-to-mesh triangulation.
//!
//! A bitmap boundary is traced into polygonal chains, an equilateral scaffold is laid
//! over it, three threshold rules (snap, repel, eliminate) move the scaffold into an
//! admissible state, and every face crossed by the boundary is replaced by a patch
//! taken from a static lookup table.

pub mod boundary;
pub mod classify;
pub mod error;
pub mod exec;
pub mod fem;
pub mod fixtures;
pub mod geom;
pub mod mesh;
pub mod preprocess;
pub mod quality;
pub mod registry;
pub mod remesh;
pub mod scaffold;
pub mod svg;
pub mod templates;

pub use error::{Error, Result};
pub use geom::{Point2, Tolerance};
pub use mesh::HalfEdgeMesh;
