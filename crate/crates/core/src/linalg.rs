//! Fixed-size vectors and matrices (2D and 3D) used throughout the crate.
//!
//! Matrices are row-major: `m.0[row][col]`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2<T>(pub [T; 2]);

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3<T>(pub [T; 3]);

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat2<T>(pub [[T; 2]; 2]);

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Real> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Vec2([x, y])
    }

    #[inline]
    pub fn zero() -> Self {
        Vec2([T::zero(); 2])
    }

    #[inline]
    pub fn x(&self) -> T {
        self.0[0]
    }

    #[inline]
    pub fn y(&self) -> T {
        self.0[1]
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.0[0] * o.0[0] + self.0[1] * o.0[1]
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(&self, o: &Self) -> T {
        self.0[0] * o.0[1] - self.0[1] * o.0[0]
    }

    #[inline]
    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Vec2<U> {
        Vec2([U::lit(self.0[0].as_f64()), U::lit(self.0[1].as_f64())])
    }
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Vec3([x, y, z])
    }

    #[inline]
    pub fn zero() -> Self {
        Vec3([T::zero(); 3])
    }

    #[inline]
    pub fn x(&self) -> T {
        self.0[0]
    }

    #[inline]
    pub fn y(&self) -> T {
        self.0[1]
    }

    #[inline]
    pub fn z(&self) -> T {
        self.0[2]
    }

    #[inline]
    pub fn xy(&self) -> Vec2<T> {
        Vec2([self.0[0], self.0[1]])
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn cross(&self, o: &Self) -> Self {
        let [a, b, c] = self.0;
        let [d, e, f] = o.0;
        Vec3([b * f - c * e, c * d - a * f, a * e - b * d])
    }

    #[inline]
    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn max_abs(&self) -> T {
        self.0[0].abs().max(self.0[1].abs()).max(self.0[2].abs())
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [self.0[0].as_f64(), self.0[1].as_f64(), self.0[2].as_f64()]
    }

    pub fn from_f64(p: [f64; 3]) -> Self {
        Vec3([T::lit(p[0]), T::lit(p[1]), T::lit(p[2])])
    }
}

macro_rules! impl_vec_ops {
    ($v:ident, $n:expr) => {
        impl<T: Real> Add for $v<T> {
            type Output = Self;
            #[inline]
            fn add(self, o: Self) -> Self {
                let mut r = self;
                for i in 0..$n {
                    r.0[i] += o.0[i];
                }
                r
            }
        }

        impl<T: Real> Sub for $v<T> {
            type Output = Self;
            #[inline]
            fn sub(self, o: Self) -> Self {
                let mut r = self;
                for i in 0..$n {
                    r.0[i] -= o.0[i];
                }
                r
            }
        }

        impl<T: Real> Neg for $v<T> {
            type Output = Self;
            #[inline]
            fn neg(self) -> Self {
                let mut r = self;
                for i in 0..$n {
                    r.0[i] = -r.0[i];
                }
                r
            }
        }

        impl<T: Real> Mul<T> for $v<T> {
            type Output = Self;
            #[inline]
            fn mul(self, s: T) -> Self {
                let mut r = self;
                for i in 0..$n {
                    r.0[i] *= s;
                }
                r
            }
        }

        impl<T: Real> AddAssign for $v<T> {
            #[inline]
            fn add_assign(&mut self, o: Self) {
                for i in 0..$n {
                    self.0[i] += o.0[i];
                }
            }
        }

        impl<T: Real> SubAssign for $v<T> {
            #[inline]
            fn sub_assign(&mut self, o: Self) {
                for i in 0..$n {
                    self.0[i] -= o.0[i];
                }
            }
        }

        impl<T> Index<usize> for $v<T> {
            type Output = T;
            #[inline]
            fn index(&self, i: usize) -> &T {
                &self.0[i]
            }
        }

        impl<T> IndexMut<usize> for $v<T> {
            #[inline]
            fn index_mut(&mut self, i: usize) -> &mut T {
                &mut self.0[i]
            }
        }
    };
}

impl_vec_ops!(Vec2, 2);
impl_vec_ops!(Vec3, 3);

impl<T: Real> Mat2<T> {
    #[inline]
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2([[a, b], [c, d]])
    }

    #[inline]
    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    #[inline]
    pub fn zero() -> Self {
        Mat2([[T::zero(); 2]; 2])
    }

    #[inline]
    pub fn diag(a: T, d: T) -> Self {
        Self::new(a, T::zero(), T::zero(), d)
    }

    /// Matrix with the given columns.
    #[inline]
    pub fn from_cols(c0: Vec2<T>, c1: Vec2<T>) -> Self {
        Self::new(c0.0[0], c1.0[0], c0.0[1], c1.0[1])
    }

    #[inline]
    pub fn row(&self, r: usize) -> Vec2<T> {
        Vec2(self.0[r])
    }

    #[inline]
    pub fn col(&self, c: usize) -> Vec2<T> {
        Vec2([self.0[0][c], self.0[1][c]])
    }

    #[inline]
    pub fn det(&self) -> T {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        Self::new(self.0[0][0], self.0[1][0], self.0[0][1], self.0[1][1])
    }

    /// Inverse by the adjugate; entries are non-finite when `det == 0`.
    #[inline]
    pub fn inverse(&self) -> Self {
        let inv = T::one() / self.det();
        Self::new(
            self.0[1][1] * inv,
            -self.0[0][1] * inv,
            -self.0[1][0] * inv,
            self.0[0][0] * inv,
        )
    }

    #[inline]
    pub fn frobenius_sq(&self) -> T {
        let m = &self.0;
        m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]
    }

    /// `a bᵀ`
    #[inline]
    pub fn outer(a: Vec2<T>, b: Vec2<T>) -> Self {
        Self::new(a.0[0] * b.0[0], a.0[0] * b.0[1], a.0[1] * b.0[0], a.0[1] * b.0[1])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

impl<T: Real> Mat3<T> {
    #[inline]
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Mat3([[o, z, z], [z, o, z], [z, z, o]])
    }

    #[inline]
    pub fn zero() -> Self {
        Mat3([[T::zero(); 3]; 3])
    }

    #[inline]
    pub fn diag(a: T, b: T, c: T) -> Self {
        let z = T::zero();
        Mat3([[a, z, z], [z, b, z], [z, z, c]])
    }

    /// Matrix with the given columns.
    #[inline]
    pub fn from_cols(c0: Vec3<T>, c1: Vec3<T>, c2: Vec3<T>) -> Self {
        Mat3([
            [c0.0[0], c1.0[0], c2.0[0]],
            [c0.0[1], c1.0[1], c2.0[1]],
            [c0.0[2], c1.0[2], c2.0[2]],
        ])
    }

    #[inline]
    pub fn col(&self, c: usize) -> Vec3<T> {
        Vec3([self.0[0][c], self.0[1][c], self.0[2][c]])
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    #[inline]
    pub fn det(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse by the adjugate; entries are non-finite when singular.
    pub fn inverse(&self) -> Self {
        let m = &self.0;
        let inv_det = T::one() / self.det();
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        Mat3([
            [c(1, 2, 1, 2) * inv_det, -c(0, 2, 1, 2) * inv_det, c(0, 1, 1, 2) * inv_det],
            [-c(1, 2, 0, 2) * inv_det, c(0, 2, 0, 2) * inv_det, -c(0, 1, 0, 2) * inv_det],
            [c(1, 2, 0, 1) * inv_det, -c(0, 2, 0, 1) * inv_det, c(0, 1, 0, 1) * inv_det],
        ])
    }

    #[inline]
    pub fn frobenius_sq(&self) -> T {
        self.0.iter().flatten().fold(T::zero(), |acc, &v| acc + v * v)
    }

    /// `a bᵀ`
    #[inline]
    pub fn outer(a: Vec3<T>, b: Vec3<T>) -> Self {
        let mut r = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] = a.0[i] * b.0[j];
            }
        }
        r
    }

    /// Embeds a 2×2 block in the upper-left corner with 1 in the (3,3) entry.
    #[inline]
    pub fn lift(a: &Mat2<T>) -> Self {
        let (z, o) = (T::zero(), T::one());
        Mat3([[a.0[0][0], a.0[0][1], z], [a.0[1][0], a.0[1][1], z], [z, z, o]])
    }

    /// Upper-left 2×2 block.
    #[inline]
    pub fn upper_left(&self) -> Mat2<T> {
        Mat2([[self.0[0][0], self.0[0][1]], [self.0[1][0], self.0[1][1]]])
    }

    /// Rotation by `angle` radians about the (not necessarily unit) `axis`.
    pub fn rotation(axis: Vec3<T>, angle: T) -> Self {
        let n = axis.norm();
        if n == T::zero() {
            return Self::identity();
        }
        let k = axis * (T::one() / n);
        let (s, c) = angle.sin_cos();
        let t = T::one() - c;
        let [x, y, z] = k.0;
        Mat3([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }

    /// Rotation from an axis-angle vector (direction = axis, norm = angle in radians).
    pub fn from_axis_angle(v: Vec3<T>) -> Self {
        Self::rotation(v, v.norm())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn to_f64(&self) -> [[f64; 3]; 3] {
        self.0.map(|r| r.map(|v| v.as_f64()))
    }

    pub fn from_f64(m: [[f64; 3]; 3]) -> Self {
        Mat3(m.map(|r| r.map(T::lit)))
    }
}

macro_rules! impl_mat_ops {
    ($m:ident, $v:ident, $n:expr) => {
        impl<T: Real> Add for $m<T> {
            type Output = Self;
            #[inline]
            fn add(self, o: Self) -> Self {
                let mut r = self;
                for i in 0..$n {
                    for j in 0..$n {
                        r.0[i][j] += o.0[i][j];
                    }
                }
                r
            }
        }

        impl<T: Real> Sub for $m<T> {
            type Output = Self;
            #[inline]
            fn sub(self, o: Self) -> Self {
                let mut r = self;
                for i in 0..$n {
                    for j in 0..$n {
                        r.0[i][j] -= o.0[i][j];
                    }
                }
                r
            }
        }

        impl<T: Real> AddAssign for $m<T> {
            #[inline]
            fn add_assign(&mut self, o: Self) {
                for i in 0..$n {
                    for j in 0..$n {
                        self.0[i][j] += o.0[i][j];
                    }
                }
            }
        }

        impl<T: Real> Mul<T> for $m<T> {
            type Output = Self;
            #[inline]
            fn mul(self, s: T) -> Self {
                let mut r = self;
                for i in 0..$n {
                    for j in 0..$n {
                        r.0[i][j] *= s;
                    }
                }
                r
            }
        }

        impl<T: Real> Mul<$v<T>> for $m<T> {
            type Output = $v<T>;
            #[inline]
            fn mul(self, v: $v<T>) -> $v<T> {
                let mut r = $v([T::zero(); $n]);
                for i in 0..$n {
                    let mut acc = T::zero();
                    for j in 0..$n {
                        acc += self.0[i][j] * v.0[j];
                    }
                    r.0[i] = acc;
                }
                r
            }
        }

        impl<T: Real> Mul for $m<T> {
            type Output = Self;
            #[inline]
            fn mul(self, o: Self) -> Self {
                let mut r = $m([[T::zero(); $n]; $n]);
                for i in 0..$n {
                    for j in 0..$n {
                        let mut acc = T::zero();
                        for k in 0..$n {
                            acc += self.0[i][k] * o.0[k][j];
                        }
                        r.0[i][j] = acc;
                    }
                }
                r
            }
        }
    };
}

impl_mat_ops!(Mat2, Vec2, 2);
impl_mat_ops!(Mat3, Vec3, 3);
