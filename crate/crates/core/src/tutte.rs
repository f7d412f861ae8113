//! Injective 2D mesh maps from unconstrained parameters via Tutte's embedding.
//!
//! Each undirected mesh edge carries one raw weight and each boundary vertex
//! one raw angle increment. Raw values are squashed into bounded positive
//! ranges, boundary increments are normalised to a full turn and turned into
//! points on the square boundary, and interior vertices solve the weighted
//! Laplace equations `Σ_j w_ij (u_j − u_i) = 0`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::mesh2d::{Mesh2D, PLMap2D};
use crate::scalar::Real;
use crate::solver::{BandedCholesky, SymmetricBand};

/// Squashing margin for edge weights: weights lie in `(0.2, 0.8)`.
pub const EDGE_EPSILON: f64 = 0.2;
/// Squashing margin for boundary angle increments: squashed values lie in `(0.1, 0.9)`.
pub const BOUNDARY_EPSILON: f64 = 0.1;

#[inline]
fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `sigmoid(x)·(1 − 2ε) + ε`, a monotone map of ℝ onto `(ε, 1 − ε)`.
#[inline]
pub fn squash<T: Real>(x: T, eps: T) -> T {
    sigmoid(x) * (T::one() - eps - eps) + eps
}

/// Derivative of [`squash`] with respect to `x`.
#[inline]
pub fn squash_derivative<T: Real>(x: T, eps: T) -> T {
    let s = sigmoid(x);
    s * (T::one() - s) * (T::one() - eps - eps)
}

/// Unconstrained parameters of one Tutte layer.
#[derive(Clone, Debug, PartialEq)]
pub struct TutteLayerParams<T> {
    /// One raw weight per mesh edge, in [`Mesh2D::edges`] order.
    pub edge_weights: Vec<T>,
    /// One raw angle increment per boundary vertex, in boundary-loop order.
    pub boundary_increments: Vec<T>,
}

impl<T: Real> TutteLayerParams<T> {
    /// All-zero parameters: uniform weights and the rest boundary, i.e. the identity map.
    pub fn zeros(mesh: &Mesh2D<T>) -> Self {
        TutteLayerParams {
            edge_weights: vec![T::zero(); mesh.edges().len()],
            boundary_increments: vec![T::zero(); mesh.boundary_loop().len()],
        }
    }

    pub fn len(&self) -> usize {
        self.edge_weights.len() + self.boundary_increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat view: edge weights first, then boundary increments.
    pub fn get(&self, k: usize) -> T {
        let ne = self.edge_weights.len();
        if k < ne {
            self.edge_weights[k]
        } else {
            self.boundary_increments[k - ne]
        }
    }

    pub fn get_mut(&mut self, k: usize) -> &mut T {
        let ne = self.edge_weights.len();
        if k < ne {
            &mut self.edge_weights[k]
        } else {
            &mut self.boundary_increments[k - ne]
        }
    }

    pub fn validate(&self, mesh: &Mesh2D<T>) -> Result<()> {
        if self.edge_weights.len() != mesh.edges().len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} edge weights, got {}",
                mesh.edges().len(),
                self.edge_weights.len()
            )));
        }
        if self.boundary_increments.len() != mesh.boundary_loop().len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} boundary increments, got {}",
                mesh.boundary_loop().len(),
                self.boundary_increments.len()
            )));
        }
        if let Some(k) = (0..self.len()).find(|&k| !self.get(k).is_finite()) {
            return Err(Error::InvalidArgument(format!("parameter {k} is not finite")));
        }
        Ok(())
    }
}

/// Point where the ray from the origin at angle `beta` leaves the square,
/// with its derivative with respect to `beta` and the side index hit
/// (0 right, 1 top, 2 left, 3 bottom).
pub fn square_ray_point<T: Real>(beta: T) -> (Vec2<T>, Vec2<T>, u8) {
    let (s, c) = beta.sin_cos();
    if c.abs() >= s.abs() {
        let sg = c.signum();
        let p = Vec2::new(sg, s / c.abs());
        let d = Vec2::new(T::zero(), sg / (c * c));
        (p, d, if sg > T::zero() { 0 } else { 2 })
    } else {
        let sg = s.signum();
        let p = Vec2::new(c / s.abs(), sg);
        let d = Vec2::new(-sg / (s * s), T::zero());
        (p, d, if sg > T::zero() { 1 } else { 3 })
    }
}

/// Convex boundary polygon of one layer.
#[derive(Clone, Debug)]
pub struct ConvexBoundary<T> {
    /// Angle increments `α_i > 0`, `Σ α_i = 2π`; `α_i` separates boundary vertices `i` and `i + 1`.
    pub increments: Vec<T>,
    /// Cumulative angles `β_j`, with `β_0` fixed at the rest direction of the first boundary vertex.
    pub angles: Vec<T>,
    /// Boundary positions on the square.
    pub points: Vec<Vec2<T>>,
    /// `d points / d angles`.
    pub tangents: Vec<Vec2<T>>,
    /// Square side each point lies on.
    pub sides: Vec<u8>,
    squashed: Vec<T>,
    slopes: Vec<T>,
    rest_weights: Vec<T>,
    normalizer: T,
}

impl<T: Real> ConvexBoundary<T> {
    /// Builds the boundary from raw increments (one per boundary vertex).
    ///
    /// `α_i = 2π·w_i·s_i / Σ_j w_j·s_j` where `s_i = squash(raw_i, 0.1)` and
    /// `w_i` is the rest angle between boundary vertices `i` and `i + 1`, so
    /// zero parameters reproduce the square's own boundary vertices.
    pub fn build(mesh: &Mesh2D<T>, raw: &[T]) -> Self {
        let rest = mesh.boundary_rest_angles();
        let k = rest.len();
        assert_eq!(raw.len(), k, "one boundary increment per boundary vertex");
        let tau = T::TAU();
        let rest_weights: Vec<T> = (0..k)
            .map(|i| if i + 1 < k { rest[i + 1] - rest[i] } else { rest[0] + tau - rest[i] })
            .collect();
        let eps = T::lit(BOUNDARY_EPSILON);
        let squashed: Vec<T> = raw.iter().map(|&x| squash(x, eps)).collect();
        let slopes: Vec<T> = raw.iter().map(|&x| squash_derivative(x, eps)).collect();
        let normalizer: T = rest_weights.iter().zip(&squashed).map(|(&w, &s)| w * s).sum();
        let increments: Vec<T> = rest_weights
            .iter()
            .zip(&squashed)
            .map(|(&w, &s)| tau * w * s / normalizer)
            .collect();
        let mut angles = Vec::with_capacity(k);
        let mut beta = rest[0];
        for i in 0..k {
            angles.push(beta);
            beta += increments[i];
        }
        let mut points = Vec::with_capacity(k);
        let mut tangents = Vec::with_capacity(k);
        let mut sides = Vec::with_capacity(k);
        for &b in &angles {
            let (p, d, side) = square_ray_point(b);
            points.push(p);
            tangents.push(d);
            sides.push(side);
        }
        ConvexBoundary {
            increments,
            angles,
            points,
            tangents,
            sides,
            squashed,
            slopes,
            rest_weights,
            normalizer,
        }
    }

    /// Pulls a cotangent on the boundary points back to the raw increments.
    pub fn pullback(&self, d_points: &[Vec2<T>]) -> Vec<T> {
        let k = self.points.len();
        let tau = T::TAU();
        // dβ_j; β_0 is a constant.
        let d_angles: Vec<T> = (0..k).map(|j| d_points[j].dot(&self.tangents[j])).collect();
        // β_j = β_0 + Σ_{i<j} α_i  ⇒  dα_i = Σ_{j>i} dβ_j.
        let mut d_inc = vec![T::zero(); k];
        let mut acc = T::zero();
        for i in (0..k).rev() {
            d_inc[i] = acc;
            acc += d_angles[i];
        }
        let mixed: T = d_inc.iter().zip(&self.increments).map(|(&g, &a)| g * a).sum();
        (0..k)
            .map(|m| {
                let c = self.rest_weights[m] / self.normalizer;
                let d_s = c * (tau * d_inc[m] - mixed);
                d_s * self.slopes[m]
            })
            .collect()
    }

    pub fn squashed(&self) -> &[T] {
        &self.squashed
    }
}

/// Squashed edge weights and the interior Laplacian of the Tutte system.
#[derive(Clone, Debug)]
pub struct Laplacian<T> {
    /// `w_e = squash(raw_e, 0.2)` per mesh edge.
    pub weights: Vec<T>,
    /// `d w_e / d raw_e`.
    pub slopes: Vec<T>,
    /// Interior-interior block: `Σ_j w_ij` on the diagonal, `−w_ij` off it.
    pub matrix: SymmetricBand<T>,
}

/// Assembles squashed weights and the interior system matrix.
pub fn assemble_laplacian<T: Real>(mesh: &Mesh2D<T>, raw_edge_weights: &[T]) -> Laplacian<T> {
    let eps = T::lit(EDGE_EPSILON);
    let weights: Vec<T> = raw_edge_weights.iter().map(|&x| squash(x, eps)).collect();
    let slopes: Vec<T> = raw_edge_weights.iter().map(|&x| squash_derivative(x, eps)).collect();
    let m = mesh.interior_ids().len();
    let bw = (mesh.resolution() - 1).min(m.saturating_sub(1));
    let mut matrix = SymmetricBand::zeros(m, bw);
    for (e, &[p, q]) in mesh.edges().iter().enumerate() {
        let w = weights[e];
        let (sp, sq) = (mesh.interior_slot(p), mesh.interior_slot(q));
        if let Some(i) = sp {
            matrix.add(i, i, w);
        }
        if let Some(j) = sq {
            matrix.add(j, j, w);
        }
        if let (Some(i), Some(j)) = (sp, sq) {
            matrix.add(i, j, -w);
        }
    }
    Laplacian {
        weights,
        slopes,
        matrix,
    }
}

/// Factorised system and boundary of a solved layer, kept for the adjoint pass.
#[derive(Clone, Debug)]
pub struct TutteSystem<T> {
    pub laplacian: Laplacian<T>,
    pub factor: BandedCholesky<T>,
    pub boundary: ConvexBoundary<T>,
}

/// A solved Tutte layer.
#[derive(Clone, Debug)]
pub struct TutteEmbedding<T> {
    pub system: TutteSystem<T>,
    pub plmap: PLMap2D<T>,
}

/// Solves Tutte's embedding for one layer.
///
/// Fails with [`Error::InjectivityViolation`] if any triangle comes out
/// non-positively oriented, which cannot happen for odd resolutions and
/// indicates a bug (or a flat corner ear on even resolutions).
pub fn solve_tutte<T: Real>(mesh: &Arc<Mesh2D<T>>, params: &TutteLayerParams<T>) -> Result<TutteEmbedding<T>> {
    params.validate(mesh)?;
    let laplacian = assemble_laplacian(mesh, &params.edge_weights);
    let boundary = ConvexBoundary::build(mesh, &params.boundary_increments);

    let m = mesh.interior_ids().len();
    let mut rhs_x = vec![T::zero(); m];
    let mut rhs_y = vec![T::zero(); m];
    for (e, &[p, q]) in mesh.edges().iter().enumerate() {
        let w = laplacian.weights[e];
        for (a, b) in [(p, q), (q, p)] {
            if let (Some(i), Some(k)) = (mesh.interior_slot(a), mesh.boundary_slot(b)) {
                rhs_x[i] += w * boundary.points[k].x();
                rhs_y[i] += w * boundary.points[k].y();
            }
        }
    }
    let factor = BandedCholesky::factor(&laplacian.matrix)?;
    factor.solve_in_place(&mut rhs_x);
    factor.solve_in_place(&mut rhs_y);

    let mut u = vec![Vec2::zero(); mesh.vertices().len()];
    for (k, &v) in mesh.boundary_loop().iter().enumerate() {
        u[v] = boundary.points[k];
    }
    for (i, &v) in mesh.interior_ids().iter().enumerate() {
        u[v] = Vec2::new(rhs_x[i], rhs_y[i]);
    }
    if let Some(v) = u.iter().position(|p| !p.is_finite()) {
        return Err(Error::Numerical(format!("non-finite Tutte position at vertex {v}")));
    }
    let plmap = PLMap2D::realize(mesh.clone(), u)?;
    plmap.certify()?;
    Ok(TutteEmbedding {
        system: TutteSystem {
            laplacian,
            factor,
            boundary,
        },
        plmap,
    })
}

/// Largest interior residual `|Σ_j w_ij (u_j − u_i)|`, relative to `Σ_j w_ij |u_j − u_i|`.
pub fn interior_residual<T: Real>(mesh: &Mesh2D<T>, weights: &[T], u: &[Vec2<T>]) -> T {
    let nv = mesh.vertices().len();
    let mut sum = vec![Vec2::zero(); nv];
    let mut scale = vec![T::zero(); nv];
    for (e, &[p, q]) in mesh.edges().iter().enumerate() {
        let d = (u[q] - u[p]) * weights[e];
        sum[p] += d;
        sum[q] -= d;
        scale[p] += d.norm();
        scale[q] += d.norm();
    }
    mesh.interior_ids()
        .iter()
        .map(|&v| sum[v].norm() / scale[v].max(T::min_positive_value()))
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh(n: usize) -> Arc<Mesh2D<f64>> {
        Arc::new(Mesh2D::build(n).unwrap())
    }

    fn random_params(mesh: &Mesh2D<f64>, rng: &mut ChaCha8Rng, scale: f64) -> TutteLayerParams<f64> {
        let mut p = TutteLayerParams::zeros(mesh);
        for k in 0..p.len() {
            *p.get_mut(k) = rng.gen_range(-scale..scale);
        }
        p
    }

    #[test]
    fn squash_values() {
        assert_eq!(squash(0.0f64, 0.2), 0.5);
        assert!((squash(60.0f64, 0.2) - 0.8).abs() < 1e-15);
        assert!((squash(-60.0f64, 0.2) - 0.2).abs() < 1e-15);
        let expected = 0.1 + 0.8 / (1.0 + (-1.0f64).exp());
        assert!((squash(1.0f64, 0.1) - expected).abs() < 1e-15);
        assert!((squash(1.0f64, 0.1) - 0.684847).abs() < 1e-6);
    }

    #[test]
    fn squash_derivative_matches_finite_difference() {
        for &x in &[-5.0f64, -1.0, 0.0, 0.3, 2.0, 7.0] {
            for &eps in &[0.1, 0.2] {
                let h = 1e-6;
                let fd = (squash(x + h, eps) - squash(x - h, eps)) / (2.0 * h);
                assert!((fd - squash_derivative(x, eps)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn uniform_boundary_for_three_by_three() {
        let m = mesh(3);
        let b = ConvexBoundary::build(&m, &[0.0; 8]);
        for a in &b.increments {
            assert!((a - std::f64::consts::TAU / 8.0).abs() < 1e-14);
        }
        // Corners and side midpoints: symmetric under quarter turns.
        for k in 0..8 {
            let p = b.points[k];
            let q = b.points[(k + 2) % 8];
            assert!((Vec2::new(-p.y(), p.x()) - q).norm() < 1e-12);
        }
    }

    #[test]
    fn boundary_sums_to_full_turn_and_is_convex() {
        let m = mesh(7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..50 {
            let mut raw: Vec<f64> = (0..24).map(|_| rng.gen_range(-4.0..4.0)).collect();
            if trial == 0 {
                raw = vec![-30.0; 24];
                raw[0] = 30.0;
            }
            let b = ConvexBoundary::build(&m, &raw);
            let total: f64 = b.increments.iter().sum();
            assert!((total - std::f64::consts::TAU).abs() < 1e-12);
            assert!(b.increments.iter().all(|&a| a > 0.0));
            for k in 0..24 {
                let (p0, p1, p2) = (b.points[k], b.points[(k + 1) % 24], b.points[(k + 2) % 24]);
                assert!((p1 - p0).cross(&(p2 - p1)) >= -1e-15, "reflex turn at {k}");
                assert!((p0.x().abs().max(p0.y().abs()) - 1.0).abs() < 1e-12);
            }
            if trial == 0 {
                // Max ratio: 0.9/0.1 between the first and the others (times rest weights).
                let r = b.increments[0] / b.increments[1];
                let w = &b.rest_weights;
                assert!((r - 9.0 * w[0] / w[1]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn boundary_pullback_matches_finite_difference() {
        let m = mesh(5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let raw: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cot: Vec<Vec2<f64>> = (0..16).map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let b = ConvexBoundary::build(&m, &raw);
        let g = b.pullback(&cot);
        let f = |r: &[f64]| -> f64 {
            let b = ConvexBoundary::build(&m, r);
            b.points.iter().zip(&cot).map(|(p, c)| p.dot(c)).sum()
        };
        for k in 0..16 {
            let h = 1e-6;
            let mut rp = raw.clone();
            rp[k] += h;
            let mut rm = raw.clone();
            rm[k] -= h;
            let bp = ConvexBoundary::build(&m, &rp);
            let bm = ConvexBoundary::build(&m, &rm);
            if bp.sides != b.sides || bm.sides != b.sides {
                continue;
            }
            let fd = (f(&rp) - f(&rm)) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-6 * (1.0 + fd.abs()), "k={k}: fd {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn zero_params_reproduce_grid() {
        for n in [3, 5, 7, 11, 25] {
            let m = mesh(n);
            let emb = solve_tutte(&m, &TutteLayerParams::zeros(&m)).unwrap();
            for (u, v) in emb.plmap.deformed_vertices().iter().zip(m.vertices()) {
                assert!((*u - *v).norm() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn uniform_weights_all_half() {
        let m = mesh(5);
        let lap = assemble_laplacian(&m, &vec![0.0; m.edges().len()]);
        assert!(lap.weights.iter().all(|&w| w == 0.5));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let raw: Vec<f64> = (0..m.edges().len()).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let lap = assemble_laplacian(&m, &raw);
        assert!(lap.weights.iter().all(|&w| w > 0.2 && w < 0.8));
    }

    #[test]
    fn random_params_certificate_and_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[7, 11, 25] {
            let m = mesh(n);
            for _ in 0..(if n == 25 { 20 } else { 100 }) {
                let p = random_params(&m, &mut rng, 3.0);
                let emb = solve_tutte(&m, &p).unwrap();
                assert!(emb.plmap.min_det().1 > 0.0);
                let u = emb.plmap.deformed_vertices();
                for (k, &v) in m.boundary_loop().iter().enumerate() {
                    assert_eq!(u[v], emb.system.boundary.points[k]);
                }
                assert!(interior_residual(&m, &emb.system.laplacian.weights, u) < 1e-8);
            }
        }
    }

    #[test]
    fn rotated_boundary_stays_injective() {
        let m = mesh(7);
        let mut p = TutteLayerParams::zeros(&m);
        // Skew the increments so most of the turn happens early: a strong boundary slide.
        for (k, x) in p.boundary_increments.iter_mut().enumerate() {
            *x = if k < 6 { 3.0 } else { -3.0 };
        }
        let emb = solve_tutte(&m, &p).unwrap();
        assert!(emb.plmap.min_det().1 > 0.0);
    }

    #[test]
    fn rejects_wrong_lengths() {
        let m = mesh(5);
        let mut p = TutteLayerParams::zeros(&m);
        p.edge_weights.pop();
        assert!(matches!(solve_tutte(&m, &p), Err(Error::InvalidArgument(_))));
        let mut p = TutteLayerParams::zeros(&m);
        p.boundary_increments[0] = f64::NAN;
        assert!(matches!(solve_tutte(&m, &p), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_precision_solve() {
        let m = Arc::new(Mesh2D::<f32>::build(11).unwrap());
        let mut p = TutteLayerParams::zeros(&m);
        for k in 0..p.len() {
            *p.get_mut(k) = ((k * 7919) % 13) as f32 / 4.0 - 1.5;
        }
        let emb = solve_tutte(&m, &p).unwrap();
        assert!(emb.plmap.min_det().1 > 0.0);
    }
}
