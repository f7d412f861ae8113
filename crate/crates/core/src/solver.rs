//! Banded Cholesky factorisation for the symmetric positive definite Tutte systems.
//!
//! With interior unknowns numbered row-major, every grid-Laplacian coupling
//! lies within `n - 1` of the diagonal, so a dense band is both simple and
//! exact. Factor once, then solve any number of right-hand sides (the forward
//! x/y solves and the adjoint solve share one factor).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetric matrix stored as its lower band, row by row.
#[derive(Clone, Debug)]
pub struct SymmetricBand<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Real> SymmetricBand<T> {
    /// Zero `n × n` matrix with `half_bandwidth` sub-diagonals.
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        SymmetricBand {
            n,
            bw: half_bandwidth,
            data: vec![T::zero(); n * (half_bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Entry `(i, j)` of the full symmetric matrix.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            T::zero()
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        assert!(i - j <= self.bw, "entry ({i},{j}) outside the band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.data[self.slot(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }
}

/// Lower-triangular banded factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct BandedCholesky<T> {
    n: usize,
    bw: usize,
    l: Vec<T>,
}

impl<T: Real> BandedCholesky<T> {
    pub fn factor(a: &SymmetricBand<T>) -> Result<Self> {
        let (n, bw) = (a.n, a.bw);
        let w = bw + 1;
        let mut l = a.data.clone();
        let at = |i: usize, j: usize| i * w + (j + bw - i);
        for i in 0..n {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let mut sum = l[at(i, j)];
                for k in lo..j {
                    sum -= l[at(i, k)] * l[at(j, k)];
                }
                if i == j {
                    if !(sum > T::zero()) {
                        return Err(Error::Numerical(format!(
                            "matrix not positive definite at pivot {i} (value {:e})",
                            sum.as_f64()
                        )));
                    }
                    l[at(i, i)] = sum.sqrt();
                } else {
                    l[at(i, j)] = sum / l[at(j, j)];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.l[i * (self.bw + 1) + (j + self.bw - i)]
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.at(i, k) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in (i + 1)..(i + 1 + self.bw).min(self.n) {
                s -= self.at(k, i) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_1d(n: usize) -> SymmetricBand<f64> {
        let mut a = SymmetricBand::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i + 1 < n {
                a.add(i + 1, i, -1.0);
            }
        }
        a
    }

    #[test]
    fn solves_tridiagonal() {
        let a = laplacian_1d(6);
        let f = BandedCholesky::factor(&a).unwrap();
        let x_true: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = f.solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = SymmetricBand::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(BandedCholesky::factor(&a).is_err());
    }

    proptest! {
        #[test]
        fn random_diagonally_dominant_systems(
            n in 1usize..30,
            bw in 0usize..6,
            seed in proptest::collection::vec(-1.0f64..1.0, 30 * 7 + 30),
        ) {
            let mut a = SymmetricBand::zeros(n, bw);
            let mut k = 0;
            for i in 0..n {
                for j in i.saturating_sub(bw)..i {
                    a.add(i, j, seed[k % seed.len()]);
                    k += 1;
                }
            }
            for i in 0..n {
                let row: f64 = (0..n).filter(|&j| j != i).map(|j| a.get(i, j).abs()).sum();
                a.add(i, i, row + 1.0);
            }
            let f = BandedCholesky::factor(&a).unwrap();
            let x_true: Vec<f64> = (0..n).map(|i| seed[(i * 7) % seed.len()]).collect();
            let x = f.solve(&a.mul_vec(&x_true));
            for (u, v) in x.iter().zip(&x_true) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }
}
