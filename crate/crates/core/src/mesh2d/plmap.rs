use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::scalar::Real;

use super::Mesh2D;

/// Barycentric slack accepted when testing containment in a deformed triangle.
const IMAGE_TOLERANCE: f64 = 1e-12;

/// Affine restriction `q ↦ A q + δ` of a piecewise-linear map to one triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffinePiece<T> {
    pub a: Mat2<T>,
    pub delta: Vec2<T>,
    pub a_inv: Mat2<T>,
    pub det: T,
}

/// Continuous piecewise-linear map of the square mesh, given by deformed vertex positions.
#[derive(Clone, Debug)]
pub struct PLMap2D<T> {
    mesh: Arc<Mesh2D<T>>,
    deformed: Vec<Vec2<T>>,
    pieces: Vec<AffinePiece<T>>,
}

impl<T: Real> PLMap2D<T> {
    /// Realises the per-triangle affine maps sending each source vertex `v_i` to `u_i`.
    pub fn realize(mesh: Arc<Mesh2D<T>>, deformed: Vec<Vec2<T>>) -> Result<Self> {
        if deformed.len() != mesh.vertices().len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} deformed vertices, got {}",
                mesh.vertices().len(),
                deformed.len()
            )));
        }
        let pieces = mesh
            .triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let u0 = deformed[tri[0]];
                let f = Mat2::from_cols(deformed[tri[1]] - u0, deformed[tri[2]] - u0);
                let a = f * *mesh.edge_inverse(t);
                let delta = u0 - a * mesh.vertices()[tri[0]];
                AffinePiece {
                    a,
                    delta,
                    a_inv: a.inverse(),
                    det: a.det(),
                }
            })
            .collect();
        Ok(PLMap2D {
            mesh,
            deformed,
            pieces,
        })
    }

    pub fn identity(mesh: Arc<Mesh2D<T>>) -> Self {
        let u = mesh.vertices().to_vec();
        Self::realize(mesh, u).expect("vertex count matches")
    }

    pub fn mesh(&self) -> &Arc<Mesh2D<T>> {
        &self.mesh
    }

    pub fn deformed_vertices(&self) -> &[Vec2<T>] {
        &self.deformed
    }

    pub fn pieces(&self) -> &[AffinePiece<T>] {
        &self.pieces
    }

    pub fn piece(&self, tri: usize) -> &AffinePiece<T> {
        &self.pieces[tri]
    }

    /// Smallest triangle determinant and its triangle.
    pub fn min_det(&self) -> (usize, T) {
        self.pieces
            .iter()
            .enumerate()
            .fold((0, T::infinity()), |acc, (t, p)| if p.det < acc.1 { (t, p.det) } else { acc })
    }

    /// Errors unless every triangle keeps its orientation.
    pub fn certify(&self) -> Result<()> {
        for (t, p) in self.pieces.iter().enumerate() {
            if !(p.det > T::zero()) || !p.a_inv.is_finite() {
                return Err(Error::InjectivityViolation {
                    layer: None,
                    triangle: t,
                    det: p.det.as_f64(),
                });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn apply_in(&self, tri: usize, q: Vec2<T>) -> Vec2<T> {
        let p = &self.pieces[tri];
        p.a * q + p.delta
    }

    /// Evaluates the map at `q` (in the closed square).
    pub fn apply(&self, q: Vec2<T>) -> Result<Vec2<T>> {
        let q = self.mesh.clamp_to_domain(q)?;
        let t = self.mesh.locate_triangle(q)?;
        Ok(self.apply_in(t, q))
    }

    #[inline]
    pub fn invert_in(&self, tri: usize, r: Vec2<T>) -> Vec2<T> {
        let p = &self.pieces[tri];
        p.a_inv * (r - p.delta)
    }

    /// Barycentric coordinates of `r` with respect to the deformed copy of `tri`.
    #[inline]
    fn image_barycentric(&self, tri: usize, r: Vec2<T>) -> [T; 3] {
        self.mesh.barycentric(tri, self.invert_in(tri, r))
    }

    fn image_contains(&self, tri: usize, r: Vec2<T>) -> bool {
        let tol = -T::lit(IMAGE_TOLERANCE);
        self.image_barycentric(tri, r).iter().all(|&l| l >= tol)
    }

    /// Index of a triangle whose deformed copy contains `r` (lowest index on ties).
    ///
    /// Walks the deformed triangulation from the triangle under `r` in the
    /// source mesh, crossing the edge with the most negative barycentric
    /// coordinate. Leaving through a boundary edge means `r` is outside the
    /// (convex) image; a brute-force scan confirms before reporting it.
    pub fn locate_in_image(&self, r: Vec2<T>) -> Result<usize> {
        let not_in_image = || Error::NotInImage {
            layer: None,
            point_index: None,
            point: [r.x().as_f64(), r.y().as_f64(), 0.0],
        };
        if !r.is_finite() {
            return Err(not_in_image());
        }
        let one = T::one();
        let seed = Vec2::new(r.x().max(-one).min(one), r.y().max(-one).min(one));
        let mut tri = self.mesh.locate_triangle(seed)?;
        let max_steps = 4 * self.pieces.len() + 16;
        let tol = -T::lit(IMAGE_TOLERANCE);
        let mut found = None;
        for _ in 0..max_steps {
            let l = self.image_barycentric(tri, r);
            let (k, min) = (0..3).fold((0, l[0]), |acc, k| if l[k] < acc.1 { (k, l[k]) } else { acc });
            if min >= tol {
                found = Some((tri, min));
                break;
            }
            match self.mesh.neighbor(tri, k) {
                Some(next) => tri = next,
                None => break,
            }
        }
        let (tri, min) = match found {
            Some(f) => f,
            None => {
                let t = (0..self.pieces.len())
                    .find(|&t| self.image_contains(t, r))
                    .ok_or_else(not_in_image)?;
                (t, T::zero())
            }
        };
        if min > -tol {
            return Ok(tri);
        }
        // Near an edge or vertex: any other containing triangle shares a vertex with `tri`.
        let best = self.mesh.triangles()[tri]
            .iter()
            .flat_map(|&v| self.mesh.vertex_triangles(v).iter().copied())
            .filter(|&t| t < tri && self.image_contains(t, r))
            .min()
            .unwrap_or(tri);
        Ok(best)
    }

    /// Evaluates the inverse map at `r` (which must lie in the image).
    pub fn invert(&self, r: Vec2<T>) -> Result<Vec2<T>> {
        let t = self.locate_in_image(r)?;
        Ok(self.invert_in(t, r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(n: usize) -> Arc<Mesh2D<f64>> {
        Arc::new(Mesh2D::build(n).unwrap())
    }

    fn close(a: Mat2<f64>, b: Mat2<f64>, tol: f64) -> bool {
        (a - b).frobenius_sq().sqrt() <= tol
    }

    #[test]
    fn identity_pieces() {
        let m = PLMap2D::identity(mesh(4));
        for p in m.pieces() {
            assert!(close(p.a, Mat2::identity(), 1e-12));
            assert!(p.delta.norm() < 1e-12);
        }
    }

    #[test]
    fn uniform_scale_pieces() {
        let mesh = mesh(4);
        let u = mesh.vertices().iter().map(|v| *v * 2.0).collect();
        let m = PLMap2D::realize(mesh, u).unwrap();
        for p in m.pieces() {
            assert!(close(p.a, Mat2::diag(2.0, 2.0), 1e-12));
            assert!(p.delta.norm() < 1e-12);
        }
        let q = m.apply(Vec2::new(0.1, 0.1)).unwrap();
        assert!((q - Vec2::new(0.2, 0.2)).norm() < 1e-12);
    }

    #[test]
    fn rotation_pieces() {
        let mesh = mesh(3);
        let u = mesh.vertices().iter().map(|v| Vec2::new(-v.y(), v.x())).collect();
        let m = PLMap2D::realize(mesh, u).unwrap();
        for p in m.pieces() {
            assert!(close(p.a, Mat2::new(0.0, -1.0, 1.0, 0.0), 1e-12));
            assert!((p.det - 1.0).abs() < 1e-12);
            assert!(close(p.a_inv * p.a, Mat2::identity(), 1e-10));
        }
    }

    #[test]
    fn identity_apply_and_inverse_location() {
        let mesh = mesh(6);
        let m = PLMap2D::identity(mesh.clone());
        let q = Vec2::new(0.3, -0.2);
        assert!((m.apply(q).unwrap() - q).norm() < 1e-15);
        for q in [Vec2::new(0.3, -0.2), Vec2::new(-0.91, 0.77), Vec2::new(0.0, 0.0), Vec2::new(1.0, -1.0)] {
            assert_eq!(m.locate_in_image(q).unwrap(), mesh.locate_triangle(q).unwrap());
        }
    }

    #[test]
    fn far_point_not_in_image() {
        let m = PLMap2D::identity(mesh(5));
        assert!(matches!(m.locate_in_image(Vec2::new(3.0, 0.2)), Err(Error::NotInImage { .. })));
        assert!(matches!(m.locate_in_image(Vec2::new(1.01, 0.0)), Err(Error::NotInImage { .. })));
    }

    #[test]
    fn wrong_vertex_count() {
        assert!(matches!(
            PLMap2D::realize(mesh(3), vec![Vec2::zero(); 3]),
            Err(Error::InvalidArgument(_))
        ));
    }
}
