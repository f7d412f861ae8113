//! Prismatic layers: a 2D PL map applied in a rotated plane, keeping the
//! orthogonal coordinate. `Φ(p) = R Ψ̃(Rᵀ p)` with `Ψ̃(x, y, z) = (Ψ(x, y), z)`.

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec2, Vec3};
use crate::mesh2d::PLMap2D;
use crate::scalar::Real;

/// Proper rotation taking local layer coordinates to world coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame<T> {
    r: Mat3<T>,
}

impl<T: Real> Frame<T> {
    /// Orthonormality tolerance: `1e-10`, loosened to the type's precision for `f32`.
    pub fn tolerance() -> T {
        T::lit(1e-10).max(T::epsilon() * T::lit(100.0))
    }

    /// Validates `RᵀR = I` and `det R = 1`.
    pub fn new(r: Mat3<T>) -> Result<Self> {
        let tol = Self::tolerance();
        if !r.is_finite() {
            return Err(Error::InvalidArgument("frame has non-finite entries".into()));
        }
        let off = (r.transpose() * r - Mat3::identity()).frobenius_sq().sqrt();
        if off > tol {
            return Err(Error::InvalidArgument(format!(
                "frame is not orthonormal (|RᵀR − I| = {:e})",
                off.as_f64()
            )));
        }
        if (r.det() - T::one()).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "frame is not a proper rotation (det = {})",
                r.det()
            )));
        }
        Ok(Frame { r })
    }

    pub fn identity() -> Self {
        Frame { r: Mat3::identity() }
    }

    /// Frame whose local z axis is world axis `axis` (0 = x, 1 = y, 2 = z),
    /// with the local x, y axes the next two world axes in cyclic order.
    pub fn axis_aligned(axis: usize) -> Self {
        let e = |i: usize| {
            let mut v = Vec3::zero();
            v.0[i % 3] = T::one();
            v
        };
        Frame {
            r: Mat3::from_cols(e(axis + 1), e(axis + 2), e(axis)),
        }
    }

    pub fn matrix(&self) -> &Mat3<T> {
        &self.r
    }

    /// World direction of the preserved local z axis.
    pub fn normal(&self) -> Vec3<T> {
        self.r.col(2)
    }

    #[inline]
    pub fn to_local(&self, p: Vec3<T>) -> Vec3<T> {
        self.r.transpose() * p
    }

    #[inline]
    pub fn to_world(&self, q: Vec3<T>) -> Vec3<T> {
        self.r * q
    }
}

/// Frames cycling through local z = world x, y, z (layer `i` gets `i mod 3`).
pub fn triplane_frames<T: Real>(count: usize) -> Vec<Frame<T>> {
    (0..count).map(|i| Frame::axis_aligned(i % 3)).collect()
}

/// A realised prism layer.
#[derive(Clone, Debug)]
pub struct PrismLayer<T> {
    pub frame: Frame<T>,
    pub plmap: PLMap2D<T>,
    pub layer_index: usize,
}

impl<T: Real> PrismLayer<T> {
    pub fn new(frame: Frame<T>, plmap: PLMap2D<T>, layer_index: usize) -> Self {
        PrismLayer {
            frame,
            plmap,
            layer_index,
        }
    }

    fn out_of_domain(&self, p: Vec3<T>) -> Error {
        Error::OutOfDomain {
            layer: Some(self.layer_index),
            point_index: None,
            point: p.to_f64(),
        }
    }

    /// Local coordinates of `p` (xy clamped into the square) and the triangle containing them.
    pub fn locate(&self, p: Vec3<T>) -> Result<(Vec3<T>, usize)> {
        let q = self.frame.to_local(p);
        let mesh = self.plmap.mesh();
        let xy = mesh.clamp_to_domain(q.xy()).map_err(|_| self.out_of_domain(p))?;
        let tri = mesh.locate_triangle(xy).map_err(|_| self.out_of_domain(p))?;
        Ok((Vec3::new(xy.x(), xy.y(), q.z()), tri))
    }

    /// Image of a point already expressed in local coordinates inside triangle `tri`.
    #[inline]
    pub fn apply_local(&self, tri: usize, q: Vec3<T>) -> Vec3<T> {
        let r = self.plmap.apply_in(tri, q.xy());
        self.frame.to_world(Vec3::new(r.x(), r.y(), q.z()))
    }

    pub fn apply(&self, p: Vec3<T>) -> Result<Vec3<T>> {
        let (q, tri) = self.locate(p)?;
        Ok(self.apply_local(tri, q))
    }

    /// `R · lift(A_t) · Rᵀ`
    #[inline]
    pub fn jacobian_in(&self, tri: usize) -> Mat3<T> {
        let r = self.frame.matrix();
        *r * Mat3::lift(&self.plmap.piece(tri).a) * r.transpose()
    }

    /// `R · lift(A_t⁻¹) · Rᵀ`
    #[inline]
    pub fn inverse_jacobian_in(&self, tri: usize) -> Mat3<T> {
        let r = self.frame.matrix();
        *r * Mat3::lift(&self.plmap.piece(tri).a_inv) * r.transpose()
    }

    pub fn jacobian(&self, p: Vec3<T>) -> Result<Mat3<T>> {
        let (_, tri) = self.locate(p)?;
        Ok(self.jacobian_in(tri))
    }

    /// Local coordinates of `r` and the triangle whose deformed copy contains them.
    pub fn locate_in_image(&self, r: Vec3<T>) -> Result<(Vec3<T>, usize)> {
        let q = self.frame.to_local(r);
        let tri = self.plmap.locate_in_image(q.xy()).map_err(|_| Error::NotInImage {
            layer: Some(self.layer_index),
            point_index: None,
            point: r.to_f64(),
        })?;
        Ok((q, tri))
    }

    #[inline]
    pub fn invert_local(&self, tri: usize, q: Vec3<T>) -> Vec3<T> {
        let p = self.plmap.invert_in(tri, q.xy());
        self.frame.to_world(Vec3::new(p.x(), p.y(), q.z()))
    }

    pub fn invert(&self, r: Vec3<T>) -> Result<Vec3<T>> {
        let (q, tri) = self.locate_in_image(r)?;
        Ok(self.invert_local(tri, q))
    }
}

/// `Φ(p)` for one layer.
pub fn apply_prism<T: Real>(layer: &PrismLayer<T>, p: Vec3<T>) -> Result<Vec3<T>> {
    layer.apply(p)
}

/// Jacobian of `Φ` at `p`, constant on each prism cell.
pub fn prism_jacobian<T: Real>(layer: &PrismLayer<T>, p: Vec3<T>) -> Result<Mat3<T>> {
    layer.jacobian(p)
}

/// `Φ⁻¹(r)` for one layer.
pub fn invert_prism<T: Real>(layer: &PrismLayer<T>, r: Vec3<T>) -> Result<Vec3<T>> {
    layer.invert(r)
}

/// Whether `q` lies at least `margin` away from every edge of its triangle, in barycentric units.
pub fn interior_to_cell<T: Real>(layer: &PrismLayer<T>, p: Vec3<T>, margin: T) -> bool {
    match layer.locate(p) {
        Ok((q, tri)) => {
            let l = layer.plmap.mesh().barycentric(tri, Vec2::new(q.x(), q.y()));
            l.iter().all(|&x| x > margin)
        }
        Err(_) => false,
    }
}
