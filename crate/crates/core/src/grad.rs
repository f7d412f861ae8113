//! Exact gradients of the losses with respect to every raw layer parameter.
//!
//! Losses are first pulled back to cotangents on each layer's deformed
//! vertices `U` (through point maps, Jacobian products and the per-triangle
//! affine realisation). Each layer then runs one adjoint solve with its cached
//! Cholesky factor to reach the edge weights and boundary positions, and the
//! boundary chain (ray intersection, cumulative angles, normalisation,
//! squash) finishes the job.
//!
//! Point work is split into fixed-size chunks whose partial sums are reduced
//! in chunk order, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::deform::{DeformationNet, PointSet};
use crate::energy::{
    strain_energy_3d, strain_energy_gradient_2d, strain_energy_gradient_3d, FittingProblem, HandleConstraint,
    LossWeights,
};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Mat3, Vec2, Vec3};
use crate::mesh2d::{Mesh2D, PLMap2D};
use crate::scalar::Real;
use crate::tutte::{TutteLayerParams, TutteSystem};

const CHUNK: usize = 1024;

/// Gradient of a scalar with respect to every layer's raw parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGradient<T> {
    pub layers: Vec<TutteLayerParams<T>>,
}

impl<T: Real> ParamGradient<T> {
    pub fn zeros_like(params: &[TutteLayerParams<T>]) -> Self {
        ParamGradient {
            layers: params
                .iter()
                .map(|p| TutteLayerParams {
                    edge_weights: vec![T::zero(); p.edge_weights.len()],
                    boundary_increments: vec![T::zero(); p.boundary_increments.len()],
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, layer: usize, k: usize) -> T {
        self.layers[layer].get(k)
    }

    pub fn norm(&self) -> T {
        self.layers
            .iter()
            .flat_map(|l| l.edge_weights.iter().chain(&l.boundary_increments))
            .map(|&g| g * g)
            .sum::<T>()
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.layers
            .iter()
            .flat_map(|l| l.edge_weights.iter().chain(&l.boundary_increments))
            .fold(T::zero(), |m, &g| m.max(g.abs()))
    }

    /// Errors on the first non-finite entry, naming its layer and parameter.
    pub fn check_finite(&self) -> Result<()> {
        for (l, p) in self.layers.iter().enumerate() {
            if let Some(k) = (0..p.len()).find(|&k| !p.get(k).is_finite()) {
                let ne = p.edge_weights.len();
                let what = if k < ne {
                    format!("edge weight {k}")
                } else {
                    format!("boundary increment {}", k - ne)
                };
                return Err(Error::Numerical(format!("non-finite gradient: layer {l}, {what}")));
            }
        }
        Ok(())
    }
}

/// Cotangents on one layer's deformed vertices and affine pieces.
#[derive(Clone, Debug)]
struct LayerCotangent<T> {
    du: Vec<Vec2<T>>,
    da: Vec<Mat2<T>>,
}

#[derive(Clone, Debug)]
struct Accum<T> {
    layers: Vec<LayerCotangent<T>>,
}

impl<T: Real> Accum<T> {
    fn zeros(net: &DeformationNet<T>) -> Self {
        let mesh = net.mesh();
        Accum {
            layers: (0..net.num_layers())
                .map(|_| LayerCotangent {
                    du: vec![Vec2::zero(); mesh.vertices().len()],
                    da: vec![Mat2::zero(); mesh.triangles().len()],
                })
                .collect(),
        }
    }

    fn add(&mut self, other: &Accum<T>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.du.iter_mut().zip(&b.du) {
                *x += *y;
            }
            for (x, y) in a.da.iter_mut().zip(&b.da) {
                *x += *y;
            }
        }
    }
}

/// Pulls an output cotangent `c` and/or a Jacobian cotangent `g` of one point back onto the layers.
fn backprop_point<T: Real>(
    net: &DeformationNet<T>,
    p: Vec3<T>,
    c_out: Option<Vec3<T>>,
    g_jac: Option<&mut dyn FnMut(&Mat3<T>) -> Option<Mat3<T>>>,
    acc: &mut Accum<T>,
) -> Result<(Vec3<T>, Option<Mat3<T>>)> {
    let orbit = net.orbit(p)?;
    let layers = net.layers();
    let k = layers.len();
    let mut jac_out = None;
    if let Some(gf) = g_jac {
        let js: Vec<Mat3<T>> = (0..k).map(|i| layers[i].jacobian_in(orbit.triangles[i])).collect();
        let mut prefix = Vec::with_capacity(k);
        let mut prod = Mat3::identity();
        for j in &js {
            prefix.push(prod);
            prod = *j * prod;
        }
        jac_out = Some(prod);
        if let Some(g) = gf(&prod) {
            let mut suffix = Mat3::identity();
            for i in (0..k).rev() {
                let dj = suffix.transpose() * g * prefix[i].transpose();
                let r = layers[i].frame.matrix();
                let local = r.transpose() * dj * *r;
                acc.layers[i].da[orbit.triangles[i]] += local.upper_left();
                suffix = suffix * js[i];
            }
        }
    }
    if let Some(c0) = c_out {
        let mut c = c0;
        for i in (0..k).rev() {
            let layer = &layers[i];
            let tri = orbit.triangles[i];
            let q = orbit.locals[i];
            let r = layer.frame.matrix();
            let cl = r.transpose() * c;
            let cxy = cl.xy();
            let mesh = layer.plmap.mesh();
            let bary = mesh.barycentric(tri, q.xy());
            let verts = mesh.triangles()[tri];
            for m in 0..3 {
                acc.layers[i].du[verts[m]] += cxy * bary[m];
            }
            let back = layer.plmap.piece(tri).a.transpose() * cxy;
            c = *r * Vec3::new(back.x(), back.y(), cl.z());
        }
    }
    Ok((orbit.output, jac_out))
}

/// Runs `f` over points in fixed chunks, summing values and cotangents in chunk order.
fn point_pass<T, F>(net: &DeformationNet<T>, n: usize, f: F) -> Result<(T, T, Accum<T>)>
where
    T: Real,
    F: Fn(usize, &mut Accum<T>) -> Result<(T, T)> + Sync + Send,
{
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
    let parts: Vec<Result<(T, T, Accum<T>)>> = starts
        .par_iter()
        .map(|&s| {
            let mut acc = Accum::zeros(net);
            let mut value = T::zero();
            let mut peak = T::zero();
            for i in s..(s + CHUNK).min(n) {
                let (v, m) = f(i, &mut acc).map_err(|e| e.at_point(i))?;
                value += v;
                peak = peak.max(m);
            }
            Ok((value, peak, acc))
        })
        .collect();
    let mut total = Accum::zeros(net);
    let mut value = T::zero();
    let mut peak = T::zero();
    for part in parts {
        let (v, m, a) = part?;
        value += v;
        peak = peak.max(m);
        total.add(&a);
    }
    Ok((value, peak, total))
}

/// Adjoint of one Tutte solve: maps `dL/dU` to the layer's raw parameters.
pub fn tutte_adjoint<T: Real>(
    mesh: &Mesh2D<T>,
    system: &TutteSystem<T>,
    plmap: &PLMap2D<T>,
    du: &[Vec2<T>],
) -> TutteLayerParams<T> {
    let interior = mesh.interior_ids();
    let mut lx: Vec<T> = interior.iter().map(|&v| du[v].x()).collect();
    let mut ly: Vec<T> = interior.iter().map(|&v| du[v].y()).collect();
    system.factor.solve_in_place(&mut lx);
    system.factor.solve_in_place(&mut ly);
    let lambda = |v: usize| match mesh.interior_slot(v) {
        Some(i) => Vec2::new(lx[i], ly[i]),
        None => Vec2::zero(),
    };
    let u = plmap.deformed_vertices();
    let weights = &system.laplacian.weights;
    let mut d_points: Vec<Vec2<T>> = mesh.boundary_loop().iter().map(|&v| du[v]).collect();
    let edge_weights = mesh
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &[p, q])| {
            let (lp, lq) = (lambda(p), lambda(q));
            if let (Some(i), Some(k)) = (mesh.interior_slot(p), mesh.boundary_slot(q)) {
                d_points[k] += Vec2::new(lx[i], ly[i]) * weights[e];
            }
            if let (Some(i), Some(k)) = (mesh.interior_slot(q), mesh.boundary_slot(p)) {
                d_points[k] += Vec2::new(lx[i], ly[i]) * weights[e];
            }
            -(lp - lq).dot(&(u[p] - u[q])) * system.laplacian.slopes[e]
        })
        .collect();
    TutteLayerParams {
        edge_weights,
        boundary_increments: system.boundary.pullback(&d_points),
    }
}

/// One term of a loss to differentiate, with its weight.
#[derive(Clone, Copy, Debug)]
pub enum LossTerm<'a, T> {
    /// `scale · (1/N) Σ m_p w_p E(D f(p))` with adaptive multipliers held fixed.
    Elastic {
        samples: &'a PointSet<T>,
        weights: &'a LossWeights<T>,
        scale: T,
    },
    /// `scale · Σ_c mean_p ‖f(p) − target_c(p)‖²`.
    Handle {
        constraints: &'a [HandleConstraint<T>],
        scale: T,
    },
    /// `scale · Σ_layers Σ_t |t| E(A_t)`.
    Regularization { scale: T },
    /// `scale · (vertex + w·gradient)`.
    Fitting { problem: &'a FittingProblem<T>, scale: T },
}

/// Loss value, unscaled per-term values, and the largest strain energy seen by elastic samples.
#[derive(Clone, Debug, PartialEq)]
pub struct GradEval<T> {
    pub total: T,
    pub terms: Vec<T>,
    pub max_distortion: T,
    /// Vertex and gradient parts of the fitting term, when present.
    pub fitting: Option<(T, T)>,
}

/// Loss value and exact gradient with respect to all raw parameters.
pub fn grad_total<T: Real>(net: &DeformationNet<T>, terms: &[LossTerm<'_, T>]) -> Result<(GradEval<T>, ParamGradient<T>)> {
    let mut acc = Accum::zeros(net);
    let mut eval = GradEval {
        total: T::zero(),
        terms: Vec::with_capacity(terms.len()),
        max_distortion: T::zero(),
        fitting: None,
    };
    for term in terms {
        let (value, scale) = match *term {
            LossTerm::Elastic { samples, weights, scale } => {
                let n = samples.len();
                if n == 0 {
                    (T::zero(), scale)
                } else {
                    let inv_n = T::one() / T::from_count(n);
                    let (v, peak, a) = point_pass(net, n, |i, acc| {
                        let w = samples.weight(i);
                        let mut e = T::zero();
                        let mut contrib = T::zero();
                        let mut g = |j: &Mat3<T>| {
                            e = strain_energy_3d(j);
                            let m = weights.distortion_multiplier(e);
                            contrib = m * w * e * inv_n;
                            Some(strain_energy_gradient_3d(j) * (scale * m * w * inv_n))
                        };
                        backprop_point(net, samples.points[i], None, Some(&mut g), acc)?;
                        Ok((contrib, e))
                    })?;
                    acc.add(&a);
                    eval.max_distortion = eval.max_distortion.max(peak);
                    (v, scale)
                }
            }
            LossTerm::Handle { constraints, scale } => {
                let mut total = T::zero();
                for c in constraints {
                    let n = c.points.len();
                    if n == 0 {
                        continue;
                    }
                    let inv_n = T::one() / T::from_count(n);
                    let (v, _, a) = point_pass(net, n, |i, acc| {
                        let p = c.points.points[i];
                        let fp = net.forward_point(p)?;
                        let d = fp - c.target(p);
                        backprop_point(net, p, Some(d * (T::lit(2.0) * scale * inv_n)), None, acc)?;
                        Ok((d.norm_sq() * inv_n, T::zero()))
                    })?;
                    acc.add(&a);
                    total += v;
                }
                (total, scale)
            }
            LossTerm::Regularization { scale } => {
                let mut total = T::zero();
                for (li, layer) in net.layers().iter().enumerate() {
                    let mesh = layer.plmap.mesh();
                    for (t, piece) in layer.plmap.pieces().iter().enumerate() {
                        let area = mesh.area(t);
                        total += area * crate::energy::strain_energy_2d(&piece.a);
                        acc.layers[li].da[t] += strain_energy_gradient_2d(&piece.a) * (scale * area);
                    }
                }
                (total, scale)
            }
            LossTerm::Fitting { problem, scale } => {
                let x = net.forward_points(&problem.source)?;
                let fe = problem.evaluate(&x)?;
                let n = x.len();
                let two = T::lit(2.0);
                let inv_n = T::one() / T::from_count(n);
                let mut cot: Vec<Vec3<T>> = x
                    .iter()
                    .zip(&problem.target)
                    .map(|(a, b)| (*a - *b) * (two * inv_n * scale))
                    .collect();
                let op = &problem.operator;
                if !op.is_empty() {
                    let gs = scale * problem.gradient_weight * two / T::from_count(op.len());
                    for t in 0..op.len() {
                        let gamma = (op.gradient(t, &x) - problem.target_gradients[t]) * gs;
                        let [a, b, c] = op.triangles[t];
                        let [p0, p1] = *op.pinv(t);
                        let (db, dc) = (gamma * p0, gamma * p1);
                        cot[b] += db;
                        cot[c] += dc;
                        cot[a] -= db + dc;
                    }
                }
                let (_, _, a) = point_pass(net, n, |i, acc| {
                    backprop_point(net, problem.source[i], Some(cot[i]), None, acc)?;
                    Ok((T::zero(), T::zero()))
                })?;
                acc.add(&a);
                eval.fitting = Some((fe.vertex, fe.gradient));
                (fe.total, scale)
            }
        };
        eval.total += scale * value;
        eval.terms.push(value);
    }
    let grad = pull_back_layers(net, acc);
    grad.check_finite()?;
    Ok((eval, grad))
}

fn pull_back_layers<T: Real>(net: &DeformationNet<T>, acc: Accum<T>) -> ParamGradient<T> {
    let mesh = net.mesh();
    let layers: Vec<TutteLayerParams<T>> = acc
        .layers
        .into_par_iter()
        .enumerate()
        .map(|(i, mut lc)| {
            for (t, da) in lc.da.iter().enumerate() {
                let g = mesh.barycentric_gradients(t);
                let verts = mesh.triangles()[t];
                for m in 0..3 {
                    lc.du[verts[m]] += *da * g[m];
                }
            }
            tutte_adjoint(mesh, &net.systems()[i], &net.layers()[i].plmap, &lc.du)
        })
        .collect();
    ParamGradient { layers }
}

/// Everything a finite-difference check must hold fixed for the loss to be smooth:
/// the triangle visited by each point in each layer, the square side of each
/// boundary point, and each elastic sample's reweighting tier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmoothnessSignature {
    pub triangles: Vec<Vec<usize>>,
    pub sides: Vec<Vec<u8>>,
    pub tiers: Vec<u8>,
}

/// Signature of `net` over `points`, with tiers of `energies_for` samples under `weights`.
pub fn smoothness_signature<T: Real>(
    net: &DeformationNet<T>,
    points: &[Vec3<T>],
    elastic: Option<(&[Vec3<T>], &LossWeights<T>)>,
) -> Result<SmoothnessSignature> {
    let triangles = net.orbits(points)?.into_iter().map(|o| o.triangles).collect();
    let sides = net.systems().iter().map(|s| s.boundary.sides.clone()).collect();
    let tiers = match elastic {
        Some((ps, w)) => net
            .jacobians(ps)?
            .iter()
            .map(|j| {
                let e = strain_energy_3d(j);
                let [(t1, _), (t2, _)] = w.distortion_tiers;
                u8::from(e > t1) + u8::from(e > t2)
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(SmoothnessSignature { triangles, sides, tiers })
}
