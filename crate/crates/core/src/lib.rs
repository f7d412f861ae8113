//! Injective 3D deformations built from stacked 2D Tutte embeddings.
//!
//! Every type is generic over the scalar ([`Real`], implemented for `f32` and
//! `f64`); the aliases at the bottom fix the common choices.

pub mod deform;
pub mod energy;
pub mod error;
pub mod grad;
pub mod linalg;
pub mod mesh2d;
pub mod optim;
pub mod prism;
pub mod scalar;
pub mod solver;
pub mod synth;
pub mod tutte;

pub use deform::{DeformationNet, Orbit, PointSet};
pub use error::{Error, Result};
pub use linalg::{Mat2, Mat3, Vec2, Vec3};
pub use mesh2d::{AffinePiece, Mesh2D, PLMap2D};
pub use prism::{triplane_frames, Frame, PrismLayer};
pub use scalar::Real;
pub use tutte::{solve_tutte, TutteEmbedding, TutteLayerParams};

pub type Mesh2DF64 = Mesh2D<f64>;
pub type Mesh2DF32 = Mesh2D<f32>;
pub type PLMap2DF64 = PLMap2D<f64>;
pub type PLMap2DF32 = PLMap2D<f32>;
pub type TutteLayerParamsF64 = TutteLayerParams<f64>;
pub type TutteLayerParamsF32 = TutteLayerParams<f32>;
pub type PointSetF64 = PointSet<f64>;
pub type PointSetF32 = PointSet<f32>;
pub type DeformationNetF64 = DeformationNet<f64>;
pub type DeformationNetF32 = DeformationNet<f32>;
