//! The composite map `f = Φᵏ⁻¹ ∘ … ∘ Φ⁰`, batched over point sets.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::mesh2d::Mesh2D;
use crate::prism::{Frame, PrismLayer};
use crate::scalar::Real;
use crate::tutte::{solve_tutte, TutteLayerParams, TutteSystem};

/// Points with optional nonnegative density weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet<T> {
    pub points: Vec<Vec3<T>>,
    pub weights: Option<Vec<T>>,
}

impl<T: Real> PointSet<T> {
    pub fn new(points: Vec<Vec3<T>>) -> Self {
        PointSet { points, weights: None }
    }

    pub fn with_weights(points: Vec<Vec3<T>>, weights: Vec<T>) -> Result<Self> {
        if weights.len() != points.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} points",
                weights.len(),
                points.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("weight {i} is negative or not finite")));
        }
        Ok(PointSet {
            points,
            weights: Some(weights),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Weight of point `i` (1 when unweighted).
    pub fn weight(&self, i: usize) -> T {
        self.weights.as_ref().map_or(T::one(), |w| w[i])
    }
}

/// Where a point travels through the net: per layer, its local coordinates and triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit<T> {
    pub locals: Vec<Vec3<T>>,
    pub triangles: Vec<usize>,
    pub output: Vec3<T>,
}

/// An ordered stack of prism layers sharing one mesh.
#[derive(Clone, Debug)]
pub struct DeformationNet<T> {
    mesh: Arc<Mesh2D<T>>,
    params: Vec<TutteLayerParams<T>>,
    frames: Vec<Frame<T>>,
    layers: Vec<PrismLayer<T>>,
    systems: Vec<TutteSystem<T>>,
}

/// Runs `f` over `0..n` in parallel, returning results in order and the lowest-index error.
fn par_indexed<R: Send, F>(n: usize, f: F) -> Result<Vec<R>>
where
    F: Fn(usize) -> Result<R> + Sync + Send,
{
    let out: Vec<Result<R>> = (0..n).into_par_iter().map(|i| f(i).map_err(|e| e.at_point(i))).collect();
    out.into_iter().collect()
}

impl<T: Real> DeformationNet<T> {
    /// Solves every layer's Tutte embedding and lifts it through its frame.
    ///
    /// The mesh resolution must be odd: with an even resolution the corner
    /// triangles of the square have all three vertices on one boundary side
    /// and collapse.
    pub fn realize(mesh: Arc<Mesh2D<T>>, params: Vec<TutteLayerParams<T>>, frames: Vec<Frame<T>>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidArgument("a net needs at least one layer".into()));
        }
        if params.len() != frames.len() {
            return Err(Error::InvalidArgument(format!(
                "{} parameter sets for {} frames",
                params.len(),
                frames.len()
            )));
        }
        let n = mesh.resolution();
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "mesh resolution must be odd and at least 3, got {n}"
            )));
        }
        let solved: Vec<Result<_>> = params
            .par_iter()
            .enumerate()
            .map(|(i, p)| solve_tutte(&mesh, p).map_err(|e| e.at_layer(i)))
            .collect();
        let mut layers = Vec::with_capacity(params.len());
        let mut systems = Vec::with_capacity(params.len());
        for (i, s) in solved.into_iter().enumerate() {
            let emb = s?;
            layers.push(PrismLayer::new(frames[i], emb.plmap, i));
            systems.push(emb.system);
        }
        Ok(DeformationNet {
            mesh,
            params,
            frames,
            layers,
            systems,
        })
    }

    /// All-zero parameters: every layer is the identity.
    pub fn identity(mesh: Arc<Mesh2D<T>>, frames: Vec<Frame<T>>) -> Result<Self> {
        let params = vec![TutteLayerParams::zeros(&mesh); frames.len()];
        Self::realize(mesh, params, frames)
    }

    /// Same mesh and frames, new parameters.
    pub fn with_params(&self, params: Vec<TutteLayerParams<T>>) -> Result<Self> {
        Self::realize(self.mesh.clone(), params, self.frames.clone())
    }

    pub fn mesh(&self) -> &Arc<Mesh2D<T>> {
        &self.mesh
    }

    pub fn params(&self) -> &[TutteLayerParams<T>] {
        &self.params
    }

    pub fn frames(&self) -> &[Frame<T>] {
        &self.frames
    }

    pub fn layers(&self) -> &[PrismLayer<T>] {
        &self.layers
    }

    pub fn systems(&self) -> &[TutteSystem<T>] {
        &self.systems
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    /// Layers `range` as a net of their own (layer indices renumbered from 0).
    pub fn sub_net(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.is_empty() || range.end > self.layers.len() {
            return Err(Error::InvalidArgument(format!("bad layer range {range:?}")));
        }
        let mut layers: Vec<PrismLayer<T>> = self.layers[range.clone()].to_vec();
        for (i, l) in layers.iter_mut().enumerate() {
            l.layer_index = i;
        }
        Ok(DeformationNet {
            mesh: self.mesh.clone(),
            params: self.params[range.clone()].to_vec(),
            frames: self.frames[range.clone()].to_vec(),
            layers,
            systems: self.systems[range].to_vec(),
        })
    }

    /// Smallest per-triangle determinant of each layer, with its triangle.
    pub fn layer_min_dets(&self) -> Vec<(usize, T)> {
        self.layers.iter().map(|l| l.plmap.min_det()).collect()
    }

    /// Re-checks every layer's determinant certificate.
    pub fn certify(&self) -> Result<()> {
        for (i, l) in self.layers.iter().enumerate() {
            l.plmap.certify().map_err(|e| e.at_layer(i))?;
        }
        Ok(())
    }

    pub fn forward_point(&self, p: Vec3<T>) -> Result<Vec3<T>> {
        self.layers.iter().try_fold(p, |p, l| l.apply(p))
    }

    pub fn inverse_point(&self, r: Vec3<T>) -> Result<Vec3<T>> {
        self.layers.iter().rev().try_fold(r, |r, l| l.invert(r))
    }

    /// Per-layer local coordinates and triangles along the forward path of `p`.
    pub fn orbit(&self, p: Vec3<T>) -> Result<Orbit<T>> {
        let k = self.layers.len();
        let mut locals = Vec::with_capacity(k);
        let mut triangles = Vec::with_capacity(k);
        let mut x = p;
        for l in &self.layers {
            let (q, t) = l.locate(x)?;
            x = l.apply_local(t, q);
            locals.push(q);
            triangles.push(t);
        }
        Ok(Orbit {
            locals,
            triangles,
            output: x,
        })
    }

    /// Containing triangle per layer along the orbit of `p`.
    pub fn signature(&self, p: Vec3<T>) -> Result<Vec<usize>> {
        Ok(self.orbit(p)?.triangles)
    }

    /// `D f(p) = J^{k−1} ⋯ J^0`, each factor evaluated along the orbit.
    pub fn jacobian_point(&self, p: Vec3<T>) -> Result<Mat3<T>> {
        let mut x = p;
        let mut j = Mat3::identity();
        for l in &self.layers {
            let (q, t) = l.locate(x)?;
            x = l.apply_local(t, q);
            j = l.jacobian_in(t) * j;
        }
        Ok(j)
    }

    /// Image point and Jacobian together.
    pub fn forward_with_jacobian(&self, p: Vec3<T>) -> Result<(Vec3<T>, Mat3<T>)> {
        let mut x = p;
        let mut j = Mat3::identity();
        for l in &self.layers {
            let (q, t) = l.locate(x)?;
            x = l.apply_local(t, q);
            j = l.jacobian_in(t) * j;
        }
        Ok((x, j))
    }

    /// `D f⁻¹(r)`, from the inverse chain of `R · lift(A⁻¹) · Rᵀ` factors.
    pub fn inverse_jacobian_point(&self, r: Vec3<T>) -> Result<Mat3<T>> {
        let mut x = r;
        let mut j = Mat3::identity();
        for l in self.layers.iter().rev() {
            let (q, t) = l.locate_in_image(x)?;
            x = l.invert_local(t, q);
            j = l.inverse_jacobian_in(t) * j;
        }
        Ok(j)
    }

    /// Maps a point set; weights pass through unchanged.
    pub fn forward(&self, ps: &PointSet<T>) -> Result<PointSet<T>> {
        Ok(PointSet {
            points: self.forward_points(&ps.points)?,
            weights: ps.weights.clone(),
        })
    }

    pub fn inverse(&self, ps: &PointSet<T>) -> Result<PointSet<T>> {
        Ok(PointSet {
            points: self.inverse_points(&ps.points)?,
            weights: ps.weights.clone(),
        })
    }

    pub fn forward_points(&self, ps: &[Vec3<T>]) -> Result<Vec<Vec3<T>>> {
        par_indexed(ps.len(), |i| self.forward_point(ps[i]))
    }

    pub fn inverse_points(&self, ps: &[Vec3<T>]) -> Result<Vec<Vec3<T>>> {
        par_indexed(ps.len(), |i| self.inverse_point(ps[i]))
    }

    pub fn jacobians(&self, ps: &[Vec3<T>]) -> Result<Vec<Mat3<T>>> {
        par_indexed(ps.len(), |i| self.jacobian_point(ps[i]))
    }

    pub fn inverse_jacobians(&self, ps: &[Vec3<T>]) -> Result<Vec<Mat3<T>>> {
        par_indexed(ps.len(), |i| self.inverse_jacobian_point(ps[i]))
    }

    pub fn orbits(&self, ps: &[Vec3<T>]) -> Result<Vec<Orbit<T>>> {
        par_indexed(ps.len(), |i| self.orbit(ps[i]))
    }
}

/// First pair of points closer than `delta` (sort-and-sweep on x), if any.
pub fn find_collision<T: Real>(points: &[Vec3<T>], delta: T) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x().partial_cmp(&points[b].x()).unwrap_or(std::cmp::Ordering::Equal));
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if points[b].x() - points[a].x() >= delta {
                break;
            }
            if (points[b] - points[a]).norm() < delta {
                return Some((a.min(b), a.max(b)));
            }
        }
    }
    None
}
