//! Losses: strain energy, elastic and handle terms, exact layer
//! regularisation, and the fitting loss.
//!
//! Integrals over samples are estimated as means, so loss magnitudes do not
//! depend on the sample count.

use rayon::prelude::*;

use crate::deform::{DeformationNet, PointSet};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Mat3, Vec3};
use crate::mesh2d::PLMap2D;
use crate::scalar::Real;

/// `‖JᵀJ − I‖²_F`
pub fn strain_energy_3d<T: Real>(j: &Mat3<T>) -> T {
    (j.transpose() * *j - Mat3::identity()).frobenius_sq()
}

/// `‖AᵀA − I‖²_F`
pub fn strain_energy_2d<T: Real>(a: &Mat2<T>) -> T {
    (a.transpose() * *a - Mat2::identity()).frobenius_sq()
}

/// `dE/dJ = 4 J (JᵀJ − I)`
pub fn strain_energy_gradient_3d<T: Real>(j: &Mat3<T>) -> Mat3<T> {
    (*j * (j.transpose() * *j - Mat3::identity())) * T::lit(4.0)
}

/// `dE/dA = 4 A (AᵀA − I)`
pub fn strain_energy_gradient_2d<T: Real>(a: &Mat2<T>) -> Mat2<T> {
    (*a * (a.transpose() * *a - Mat2::identity())) * T::lit(4.0)
}

/// Whether a handle's motion is prescribed or fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HandleKind {
    Moving,
    Static,
}

/// A point region that should follow a rigid motion `p ↦ R (p − c) + c + t`.
#[derive(Clone, Debug)]
pub struct HandleConstraint<T> {
    pub points: PointSet<T>,
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
    pub pivot: Vec3<T>,
    pub kind: HandleKind,
}

impl<T: Real> HandleConstraint<T> {
    pub fn moving(points: PointSet<T>, rotation: Mat3<T>, translation: Vec3<T>, pivot: Vec3<T>) -> Result<Self> {
        crate::prism::Frame::new(rotation)
            .map_err(|e| Error::InvalidArgument(format!("handle rotation: {e}")))?;
        Ok(HandleConstraint {
            points,
            rotation,
            translation,
            pivot,
            kind: HandleKind::Moving,
        })
    }

    pub fn fixed(points: PointSet<T>) -> Self {
        HandleConstraint {
            points,
            rotation: Mat3::identity(),
            translation: Vec3::zero(),
            pivot: Vec3::zero(),
            kind: HandleKind::Static,
        }
    }

    #[inline]
    pub fn target(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation * (p - self.pivot) + self.pivot + self.translation
    }
}

/// Loss weights and their schedules.
#[derive(Clone, Debug, PartialEq)]
pub struct LossWeights<T> {
    pub elastic_initial: T,
    pub elastic_decrement: T,
    pub elastic_interval: usize,
    pub elastic_floor: T,
    pub handle: T,
    pub regularization: T,
    /// `(threshold, multiplier)` pairs for distortion-adaptive reweighting, ascending.
    pub distortion_tiers: [(T, T); 2],
}

impl<T: Real> Default for LossWeights<T> {
    fn default() -> Self {
        LossWeights {
            elastic_initial: T::lit(0.004),
            elastic_decrement: T::lit(0.001),
            elastic_interval: 600,
            elastic_floor: T::lit(0.001),
            handle: T::one(),
            regularization: T::lit(0.005),
            distortion_tiers: [(T::lit(0.02), T::lit(2.0)), (T::lit(0.05), T::lit(5.0))],
        }
    }
}

impl<T: Real> LossWeights<T> {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.elastic_initial,
            self.elastic_decrement,
            self.elastic_floor,
            self.handle,
            self.regularization,
        ];
        if vals.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidArgument("loss weights must be finite and nonnegative".into()));
        }
        if self.elastic_floor > self.elastic_initial {
            return Err(Error::InvalidArgument("elastic floor exceeds its initial value".into()));
        }
        if self.elastic_interval == 0 {
            return Err(Error::InvalidArgument("elastic interval must be positive".into()));
        }
        let [(t1, m1), (t2, m2)] = self.distortion_tiers;
        if !(t1 <= t2) || !(m1 > T::zero()) || !(m2 > T::zero()) {
            return Err(Error::InvalidArgument("distortion tiers must be ascending with positive multipliers".into()));
        }
        Ok(())
    }

    /// Elastic weight at `step`: decremented every interval down to the floor.
    pub fn elastic_weight(&self, step: usize) -> T {
        let k = T::from_count(step / self.elastic_interval);
        (self.elastic_initial - self.elastic_decrement * k).max(self.elastic_floor)
    }

    /// Sample multiplier for measured strain energy `e`.
    pub fn distortion_multiplier(&self, e: T) -> T {
        let [(t1, m1), (t2, m2)] = self.distortion_tiers;
        if e > t2 {
            m2
        } else if e > t1 {
            m1
        } else {
            T::one()
        }
    }
}

/// Elastic loss with per-sample diagnostics.
#[derive(Clone, Debug)]
pub struct ElasticEval<T> {
    pub loss: T,
    /// Strain energy per sample (before weighting).
    pub energies: Vec<T>,
    /// Adaptive multiplier per sample.
    pub multipliers: Vec<T>,
    pub max_distortion: T,
}

/// `(1/N) Σ_p m_p w_p E(D f(p))`.
pub fn elastic_loss<T: Real>(net: &DeformationNet<T>, samples: &PointSet<T>, weights: &LossWeights<T>) -> Result<ElasticEval<T>> {
    let jac = net.jacobians(&samples.points)?;
    let energies: Vec<T> = jac.par_iter().map(strain_energy_3d).collect();
    let multipliers: Vec<T> = energies.iter().map(|&e| weights.distortion_multiplier(e)).collect();
    let n = samples.len();
    let loss = if n == 0 {
        T::zero()
    } else {
        let s: T = (0..n).map(|i| multipliers[i] * samples.weight(i) * energies[i]).sum();
        s / T::from_count(n)
    };
    let max_distortion = energies.iter().copied().fold(T::zero(), T::max);
    Ok(ElasticEval {
        loss,
        energies,
        multipliers,
        max_distortion,
    })
}

/// Mean squared residual `‖f(p) − target(p)‖²` of one constraint.
pub fn handle_residual<T: Real>(net: &DeformationNet<T>, c: &HandleConstraint<T>) -> Result<T> {
    if c.points.is_empty() {
        return Ok(T::zero());
    }
    let out = net.forward_points(&c.points.points)?;
    let s: T = out
        .iter()
        .zip(&c.points.points)
        .map(|(f, p)| (*f - c.target(*p)).norm_sq())
        .sum();
    Ok(s / T::from_count(out.len()))
}

/// Sum over constraints of each constraint's mean squared residual.
pub fn handle_loss<T: Real>(net: &DeformationNet<T>, constraints: &[HandleConstraint<T>]) -> Result<T> {
    constraints.iter().map(|c| handle_residual(net, c)).sum()
}

/// Exact integral of the 2D strain energy over the square: `Σ_t |t| E(A_t)`.
pub fn layer_regularization<T: Real>(plmap: &PLMap2D<T>) -> T {
    let mesh = plmap.mesh();
    plmap
        .pieces()
        .iter()
        .enumerate()
        .map(|(t, p)| mesh.area(t) * strain_energy_2d(&p.a))
        .sum()
}

/// Regularisation summed over all layers.
pub fn regularization<T: Real>(net: &DeformationNet<T>) -> T {
    net.layers().iter().map(|l| layer_regularization(&l.plmap)).sum()
}

/// Per-triangle deformation-gradient operator of a 3D surface mesh.
///
/// For edge vectors `D = [x_b − x_a, x_c − x_a]` (3×2), stores the rows of
/// `D⁺ = (DᵀD)⁻¹Dᵀ`; the gradient of a deformed copy `X` is `[X_b − X_a, X_c − X_a] D⁺`.
#[derive(Clone, Debug)]
pub struct SurfaceGradientOperator<T> {
    pub triangles: Vec<[usize; 3]>,
    pinv: Vec<[Vec3<T>; 2]>,
}

impl<T: Real> SurfaceGradientOperator<T> {
    pub fn new(vertices: &[Vec3<T>], triangles: &[[usize; 3]]) -> Result<Self> {
        let mut pinv = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("triangle {t} references a missing vertex")));
            }
            let d1 = vertices[tri[1]] - vertices[tri[0]];
            let d2 = vertices[tri[2]] - vertices[tri[0]];
            let m = Mat2::new(d1.dot(&d1), d1.dot(&d2), d1.dot(&d2), d2.dot(&d2));
            let det = m.det();
            if !(det > T::epsilon() * m.frobenius_sq()) {
                return Err(Error::InvalidArgument(format!("source triangle {t} is degenerate")));
            }
            let mi = m.inverse();
            pinv.push([d1 * mi.0[0][0] + d2 * mi.0[0][1], d1 * mi.0[1][0] + d2 * mi.0[1][1]]);
        }
        Ok(SurfaceGradientOperator {
            triangles: triangles.to_vec(),
            pinv,
        })
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Pseudo-inverse rows of triangle `t`.
    pub fn pinv(&self, t: usize) -> &[Vec3<T>; 2] {
        &self.pinv[t]
    }

    pub fn gradient(&self, t: usize, x: &[Vec3<T>]) -> Mat3<T> {
        let [a, b, c] = self.triangles[t];
        let [p0, p1] = self.pinv[t];
        Mat3::outer(x[b] - x[a], p0) + Mat3::outer(x[c] - x[a], p1)
    }

    pub fn gradients(&self, x: &[Vec3<T>]) -> Vec<Mat3<T>> {
        (0..self.len()).map(|t| self.gradient(t, x)).collect()
    }
}

/// Source/target pair for the fitting loss.
#[derive(Clone, Debug)]
pub struct FittingProblem<T> {
    pub source: Vec<Vec3<T>>,
    pub target: Vec<Vec3<T>>,
    pub operator: SurfaceGradientOperator<T>,
    pub target_gradients: Vec<Mat3<T>>,
    /// Weight of the gradient term.
    pub gradient_weight: T,
}

impl<T: Real> FittingProblem<T> {
    /// Builds the problem; target gradients come from the source mesh's operator.
    pub fn new(source: Vec<Vec3<T>>, triangles: &[[usize; 3]], target: Vec<Vec3<T>>) -> Result<Self> {
        if source.len() != target.len() {
            return Err(Error::InvalidArgument(format!(
                "{} source vertices but {} target vertices",
                source.len(),
                target.len()
            )));
        }
        if source.is_empty() {
            return Err(Error::InvalidArgument("empty fitting problem".into()));
        }
        let operator = SurfaceGradientOperator::new(&source, triangles)?;
        let target_gradients = operator.gradients(&target);
        Ok(FittingProblem {
            source,
            target,
            operator,
            target_gradients,
            gradient_weight: T::lit(0.1),
        })
    }

    /// Fitting terms for already deformed source vertices.
    pub fn evaluate(&self, deformed: &[Vec3<T>]) -> Result<FitEval<T>> {
        if deformed.len() != self.target.len() {
            return Err(Error::InvalidArgument(format!(
                "{} deformed vertices for {} targets",
                deformed.len(),
                self.target.len()
            )));
        }
        let v: T = deformed.iter().zip(&self.target).map(|(a, b)| (*a - *b).norm_sq()).sum();
        let vertex = v / T::from_count(deformed.len());
        let gradient = if self.operator.is_empty() {
            T::zero()
        } else {
            let g: T = (0..self.operator.len())
                .map(|t| (self.operator.gradient(t, deformed) - self.target_gradients[t]).frobenius_sq())
                .sum();
            g / T::from_count(self.operator.len())
        };
        Ok(FitEval {
            vertex,
            gradient,
            total: vertex + self.gradient_weight * gradient,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitEval<T> {
    pub vertex: T,
    pub gradient: T,
    pub total: T,
}

/// Vertex and gradient terms of the fitting loss for `net` applied to the source.
pub fn fitting_loss<T: Real>(net: &DeformationNet<T>, problem: &FittingProblem<T>) -> Result<FitEval<T>> {
    problem.evaluate(&net.forward_points(&problem.source)?)
}

/// Weighted total of the elastic workflow with its parts.
#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown<T> {
    pub elastic: T,
    pub handle: T,
    pub regularization: T,
    pub w_elastic: T,
    pub total: T,
    pub max_distortion: T,
}

/// `λ_elastic(step)·L_elastic + λ_handle·L_handle + λ_reg·L_reg`.
pub fn total_loss<T: Real>(
    net: &DeformationNet<T>,
    constraints: &[HandleConstraint<T>],
    samples: &PointSet<T>,
    weights: &LossWeights<T>,
    step: usize,
) -> Result<LossBreakdown<T>> {
    let el = elastic_loss(net, samples, weights)?;
    let handle = handle_loss(net, constraints)?;
    let reg = regularization(net);
    let w_elastic = weights.elastic_weight(step);
    Ok(LossBreakdown {
        elastic: el.loss,
        handle,
        regularization: reg,
        w_elastic,
        total: w_elastic * el.loss + weights.handle * handle + weights.regularization * reg,
        max_distortion: el.max_distortion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vec2;
    use crate::mesh2d::Mesh2D;
    use crate::prism::triplane_frames;
    use crate::tutte::{solve_tutte, TutteLayerParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_net(layers: usize, n: usize, scale: f64, seed: u64) -> DeformationNet<f64> {
        let mesh = Arc::new(Mesh2D::build(n).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..layers)
            .map(|_| {
                let mut p = TutteLayerParams::zeros(&mesh);
                for k in 0..p.len() {
                    *p.get_mut(k) = rng.gen_range(-scale..scale);
                }
                p
            })
            .collect();
        DeformationNet::realize(mesh, params, triplane_frames(layers)).unwrap()
    }

    fn points(n: usize, seed: u64) -> PointSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointSet::new(
            (0..n)
                .map(|_| Vec3::new(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)))
                .collect(),
        )
    }

    #[test]
    fn strain_energy_values() {
        assert_eq!(strain_energy_3d(&Mat3::<f64>::identity()), 0.0);
        assert_eq!(strain_energy_3d(&Mat3::diag(2.0, 1.0, 1.0)), 9.0);
        assert_eq!(strain_energy_2d(&Mat2::diag(2.0, 1.0)), 9.0);
        let r = Mat3::rotation(Vec3::new(0.3, -1.0, 0.2), 1.1);
        assert!(strain_energy_3d(&r) < 1e-28);
    }

    #[test]
    fn strain_gradient_matches_finite_differences() {
        let j = Mat3([[1.1f64, 0.2, -0.3], [0.05, 0.9, 0.1], [0.2, -0.1, 1.3]]);
        let g = strain_energy_gradient_3d(&j);
        for r in 0..3 {
            for c in 0..3 {
                let h = 1e-6;
                let mut jp = j;
                jp.0[r][c] += h;
                let mut jm = j;
                jm.0[r][c] -= h;
                let fd = (strain_energy_3d(&jp) - strain_energy_3d(&jm)) / (2.0 * h);
                assert!((fd - g.0[r][c]).abs() < 1e-7);
            }
        }
        let a = Mat2::new(0.8f64, 0.3, -0.2, 1.4);
        let g = strain_energy_gradient_2d(&a);
        for r in 0..2 {
            for c in 0..2 {
                let h = 1e-6;
                let mut ap = a;
                ap.0[r][c] += h;
                let mut am = a;
                am.0[r][c] -= h;
                let fd = (strain_energy_2d(&ap) - strain_energy_2d(&am)) / (2.0 * h);
                assert!((fd - g.0[r][c]).abs() < 1e-7);
            }
        }
    }

    proptest! {
        #[test]
        fn strain_energy_is_rotation_invariant(
            axis in proptest::array::uniform3(-1.0f64..1.0),
            angle in -3.0f64..3.0,
            entries in proptest::array::uniform9(-2.0f64..2.0),
        ) {
            prop_assume!(Vec3(axis).norm() > 1e-3);
            let r = Mat3::rotation(Vec3(axis), angle);
            let j = Mat3([[entries[0], entries[1], entries[2]], [entries[3], entries[4], entries[5]], [entries[6], entries[7], entries[8]]]);
            let (a, b) = (strain_energy_3d(&(r * j)), strain_energy_3d(&j));
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b));
        }
    }

    #[test]
    fn schedule_values() {
        let w = LossWeights::<f64>::default();
        assert_eq!(w.elastic_weight(0), 0.004);
        assert!((w.elastic_weight(599) - 0.004).abs() < 1e-18);
        assert!((w.elastic_weight(600) - 0.003).abs() < 1e-15);
        assert!((w.elastic_weight(1200) - 0.002).abs() < 1e-15);
        assert!((w.elastic_weight(1800) - 0.001).abs() < 1e-15);
        assert_eq!(w.elastic_weight(100_000), 0.001);
        assert_eq!(w.distortion_multiplier(0.01), 1.0);
        assert_eq!(w.distortion_multiplier(0.03), 2.0);
        assert_eq!(w.distortion_multiplier(0.06), 5.0);
        w.validate().unwrap();
        let bad = LossWeights {
            elastic_floor: 0.01,
            ..w
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn identity_net_losses_vanish() {
        let mesh = Arc::new(Mesh2D::build(7).unwrap());
        let net = DeformationNet::identity(mesh, triplane_frames(3)).unwrap();
        let w = LossWeights::default();
        let s = points(200, 1);
        assert!(elastic_loss(&net, &s, &w).unwrap().loss < 1e-20);
        let c = HandleConstraint::fixed(points(50, 2));
        assert!(handle_loss(&net, &[c]).unwrap() < 1e-20);
        assert!(regularization(&net) < 1e-20);
        let b = total_loss(&net, &[], &s, &w, 0).unwrap();
        assert!(b.total < 1e-20);
    }

    #[test]
    fn handle_translation_residual() {
        let mesh = Arc::new(Mesh2D::build(7).unwrap());
        let net = DeformationNet::identity(mesh, triplane_frames(3)).unwrap();
        let t = Vec3::new(0.05, -0.02, 0.01);
        let c = HandleConstraint::moving(points(40, 3), Mat3::identity(), t, Vec3::zero()).unwrap();
        assert!((handle_loss(&net, &[c]).unwrap() - t.norm_sq()).abs() < 1e-15);
        assert!(HandleConstraint::moving(points(4, 3), Mat3::diag(1.0, 1.0, 2.0), t, Vec3::zero()).is_err());
    }

    #[test]
    fn handle_zero_exactly_when_matched() {
        let net = random_net(4, 7, 1.0, 3);
        let ps = points(30, 4);
        let out = net.forward(&ps).unwrap();
        let id = DeformationNet::identity(net.mesh().clone(), triplane_frames(4)).unwrap();
        assert!(handle_loss(&id, &[HandleConstraint::fixed(out)]).unwrap() < 1e-24);
        assert!(handle_loss(&net, &[HandleConstraint::fixed(ps)]).unwrap() > 1e-6);
    }

    #[test]
    fn weighted_elastic_loss() {
        let net = random_net(3, 7, 1.0, 5);
        let w = LossWeights::default();
        let ps = points(100, 6);
        let zero = PointSet::with_weights(ps.points.clone(), vec![0.0; 100]).unwrap();
        assert_eq!(elastic_loss(&net, &zero, &w).unwrap().loss, 0.0);
        let full = elastic_loss(&net, &ps, &w).unwrap();
        let expected: f64 = full
            .energies
            .iter()
            .map(|&e| w.distortion_multiplier(e) * e)
            .sum::<f64>()
            / 100.0;
        assert!((full.loss - expected).abs() < 1e-15);
        assert!(full.max_distortion > 0.0);
    }

    #[test]
    fn regularization_of_uniform_scale() {
        let mesh = Arc::new(Mesh2D::build(5).unwrap());
        for s in [0.5, 0.9, 1.0, 1.3] {
            let u = mesh.vertices().iter().map(|v| *v * s).collect();
            let m = PLMap2D::realize(mesh.clone(), u).unwrap();
            let expected = 4.0 * 2.0 * (s * s - 1.0f64).powi(2);
            assert!((layer_regularization(&m) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn regularization_matches_monte_carlo() {
        let mesh = Arc::new(Mesh2D::build(11).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut p = TutteLayerParams::zeros(&mesh);
        for k in 0..p.len() {
            *p.get_mut(k) = rng.gen_range(-3.0..3.0);
        }
        let plmap = solve_tutte(&mesh, &p).unwrap().plmap;
        let exact = layer_regularization(&plmap);
        let n = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let q = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let t = mesh.locate_triangle(q).unwrap();
            let e = 4.0 * strain_energy_2d(&plmap.piece(t).a);
            sum += e;
            sum_sq += e * e;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - exact).abs() <= 3.0 * se, "exact {exact} mc {mean} se {se}");
    }

    fn tetra() -> (Vec<Vec3<f64>>, Vec<[usize; 3]>) {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.5, 0.0, 0.0),
            Vec3::new(0.0, 0.5, 0.0),
            Vec3::new(0.0, 0.0, 0.5),
        ];
        let t = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        (v, t)
    }

    #[test]
    fn surface_gradient_recovers_linear_maps() {
        let (v, t) = tetra();
        let op = SurfaceGradientOperator::new(&v, &t).unwrap();
        let a = Mat3([[1.2, 0.1, 0.0], [0.3, 0.8, -0.2], [0.0, 0.4, 1.1]]);
        let x: Vec<Vec3<f64>> = v.iter().map(|p| a * *p + Vec3::new(0.3, 0.1, -0.2)).collect();
        for tri in 0..t.len() {
            let g = op.gradient(tri, &x);
            // G agrees with A on the triangle's tangent plane.
            let [i, j, k] = t[tri];
            for e in [v[j] - v[i], v[k] - v[i]] {
                assert!((g * e - a * e).norm() < 1e-12);
            }
        }
        assert!(SurfaceGradientOperator::new(&[Vec3::zero(), Vec3::zero(), Vec3::new(1.0, 0.0, 0.0)], &[[0, 1, 2]]).is_err());
    }

    #[test]
    fn fitting_terms() {
        let (v, t) = tetra();
        let mesh = Arc::new(Mesh2D::build(5).unwrap());
        let id = DeformationNet::identity(mesh, triplane_frames(3)).unwrap();
        let prob = FittingProblem::new(v.clone(), &t, v.clone()).unwrap();
        let f = fitting_loss(&id, &prob).unwrap();
        assert!(f.vertex < 1e-24 && f.gradient < 1e-24);
        let d = Vec3::new(0.01, -0.02, 0.03);
        let shifted: Vec<Vec3<f64>> = v.iter().map(|p| *p + d).collect();
        let prob = FittingProblem::new(v.clone(), &t, shifted).unwrap();
        let f = fitting_loss(&id, &prob).unwrap();
        assert!((f.vertex - d.norm_sq()).abs() < 1e-15);
        assert!(f.gradient < 1e-24);
        assert!((f.total - f.vertex).abs() < 1e-15);
        assert!(FittingProblem::new(v.clone(), &t, v[..3].to_vec()).is_err());
    }

    #[test]
    fn fitting_gradient_term_translation_invariant() {
        let (v, t) = tetra();
        let net = random_net(3, 7, 1.0, 9);
        let target: Vec<Vec3<f64>> = v.iter().map(|p| *p * 1.1).collect();
        let prob = FittingProblem::new(v.clone(), &t, target).unwrap();
        let x = net.forward_points(&v).unwrap();
        let base = prob.evaluate(&x).unwrap();
        let moved: Vec<Vec3<f64>> = x.iter().map(|p| *p + Vec3::new(0.2, 0.1, -0.3)).collect();
        let shifted = prob.evaluate(&moved).unwrap();
        assert!((base.gradient - shifted.gradient).abs() < 1e-14);
    }
}
