//! The fixed triangulated square `[-1,1]²` shared by every layer, and
//! piecewise-linear maps over it.
//!
//! Vertices form a regular `n × n` grid in row-major order (index `j * n + i`
//! for column `i`, row `j`). Each grid cell `(a, b)` is split into two
//! right-isosceles triangles by one of its diagonals, alternating in a
//! checkerboard: cells with even `a + b` use the bottom-left/top-right
//! diagonal, cells with odd `a + b` the top-left/bottom-right one. For odd `n`
//! this leaves no interior edge joining two boundary vertices, and every
//! interior vertex stencil is point-symmetric, so the uniform-weight Laplacian
//! reproduces the grid exactly.
//!
//! Cell `c = b * (n - 1) + a` owns triangles `2c` (the one containing the
//! cell's bottom-left corner) and `2c + 1`.

mod plmap;

pub use plmap::{AffinePiece, PLMap2D};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::scalar::Real;

/// Points farther than this outside the square are rejected; closer ones are clamped.
pub const DOMAIN_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Mesh2D<T> {
    resolution: usize,
    spacing: T,
    vertices: Vec<Vec2<T>>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    boundary_loop: Vec<usize>,
    interior_ids: Vec<usize>,
    interior_slot: Vec<Option<usize>>,
    boundary_slot: Vec<Option<usize>>,
    neighbors: Vec<[Option<usize>; 3]>,
    vertex_triangles: Vec<Vec<usize>>,
    // Inverse of [v1 - v0, v2 - v0] per triangle; rows are barycentric gradients.
    edge_inv: Vec<Mat2<T>>,
    areas: Vec<T>,
    boundary_rest_angles: Vec<T>,
}

impl<T: Real> Mesh2D<T> {
    /// Builds the regular triangulation with `resolution` vertices per side.
    pub fn build(resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "mesh resolution must be >= 2, got {resolution}"
            )));
        }
        let n = resolution;
        let cells = n - 1;
        let spacing = T::lit(2.0) / T::from_count(cells);

        let coord = |i: usize| -T::one() + spacing * T::from_count(i);
        let mut vertices = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                // Snap the last column/row so the square's edge is exact.
                let x = if i == cells { T::one() } else { coord(i) };
                let y = if j == cells { T::one() } else { coord(j) };
                vertices.push(Vec2::new(x, y));
            }
        }

        let vid = |i: usize, j: usize| j * n + i;
        let mut triangles = Vec::with_capacity(2 * cells * cells);
        for b in 0..cells {
            for a in 0..cells {
                let (v00, v10, v01, v11) = (vid(a, b), vid(a + 1, b), vid(a, b + 1), vid(a + 1, b + 1));
                if (a + b) % 2 == 0 {
                    triangles.push([v00, v10, v11]);
                    triangles.push([v00, v11, v01]);
                } else {
                    triangles.push([v00, v10, v01]);
                    triangles.push([v10, v11, v01]);
                }
            }
        }

        let mut edges: Vec<[usize; 2]> = triangles
            .iter()
            .flat_map(|t| [[t[0], t[1]], [t[1], t[2]], [t[2], t[0]]])
            .map(|[p, q]| [p.min(q), p.max(q)])
            .collect();
        edges.sort_unstable();
        edges.dedup();

        let mut boundary_loop = Vec::with_capacity(4 * cells);
        boundary_loop.extend((0..cells).map(|i| vid(i, 0)));
        boundary_loop.extend((0..cells).map(|j| vid(cells, j)));
        boundary_loop.extend((1..=cells).rev().map(|i| vid(i, cells)));
        boundary_loop.extend((1..=cells).rev().map(|j| vid(0, j)));

        let mut boundary_slot = vec![None; n * n];
        for (k, &v) in boundary_loop.iter().enumerate() {
            boundary_slot[v] = Some(k);
        }
        let interior_ids: Vec<usize> = (0..n * n).filter(|&v| boundary_slot[v].is_none()).collect();
        let mut interior_slot = vec![None; n * n];
        for (k, &v) in interior_ids.iter().enumerate() {
            interior_slot[v] = Some(k);
        }

        let mut edge_owner: HashMap<[usize; 2], Vec<(usize, usize)>> = HashMap::new();
        let mut vertex_triangles = vec![Vec::new(); n * n];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (p, q) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                edge_owner.entry([p.min(q), p.max(q)]).or_default().push((t, k));
                vertex_triangles[tri[k]].push(t);
            }
        }
        let mut neighbors = vec![[None; 3]; triangles.len()];
        for owners in edge_owner.values() {
            if let [(t0, k0), (t1, k1)] = owners[..] {
                neighbors[t0][k0] = Some(t1);
                neighbors[t1][k1] = Some(t0);
            }
        }

        let mut edge_inv = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let e = Mat2::from_cols(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]);
            let det = e.det();
            if !(det > T::zero()) {
                return Err(Error::Numerical(format!("degenerate source triangle {tri:?}")));
            }
            edge_inv.push(e.inverse());
            areas.push(det * T::lit(0.5));
        }

        let mut boundary_rest_angles: Vec<T> = Vec::with_capacity(boundary_loop.len());
        for &v in &boundary_loop {
            let p = vertices[v];
            let mut theta = p.y().atan2(p.x());
            if let Some(&prev) = boundary_rest_angles.last() {
                while theta <= prev {
                    theta += T::TAU();
                }
            }
            boundary_rest_angles.push(theta);
        }

        Ok(Mesh2D {
            resolution,
            spacing,
            vertices,
            triangles,
            edges,
            boundary_loop,
            interior_ids,
            interior_slot,
            boundary_slot,
            neighbors,
            vertex_triangles,
            edge_inv,
            areas,
            boundary_rest_angles,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Grid spacing `2 / (n - 1)`.
    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Boundary vertices, counter-clockwise from the corner `(-1,-1)`.
    pub fn boundary_loop(&self) -> &[usize] {
        &self.boundary_loop
    }

    pub fn interior_ids(&self) -> &[usize] {
        &self.interior_ids
    }

    /// Position of vertex `v` among the interior unknowns.
    pub fn interior_slot(&self, v: usize) -> Option<usize> {
        self.interior_slot[v]
    }

    /// Position of vertex `v` in the boundary loop.
    pub fn boundary_slot(&self, v: usize) -> Option<usize> {
        self.boundary_slot[v]
    }

    /// Neighbouring triangle across the edge opposite local corner `k`.
    pub fn neighbor(&self, tri: usize, k: usize) -> Option<usize> {
        self.neighbors[tri][k]
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    pub fn area(&self, tri: usize) -> T {
        self.areas[tri]
    }

    /// Unwrapped polar angles of the boundary vertices (strictly increasing, span < 2π).
    pub fn boundary_rest_angles(&self) -> &[T] {
        &self.boundary_rest_angles
    }

    pub fn num_cells_per_side(&self) -> usize {
        self.resolution - 1
    }

    /// Inverse source edge matrix of `tri`.
    pub fn edge_inverse(&self, tri: usize) -> &Mat2<T> {
        &self.edge_inv[tri]
    }

    /// Barycentric coordinates of `q` with respect to source triangle `tri`.
    #[inline]
    pub fn barycentric(&self, tri: usize, q: Vec2<T>) -> [T; 3] {
        let v0 = self.vertices[self.triangles[tri][0]];
        let l = self.edge_inv[tri] * (q - v0);
        [T::one() - l.0[0] - l.0[1], l.0[0], l.0[1]]
    }

    /// Gradients of the three barycentric coordinate functions of `tri`.
    #[inline]
    pub fn barycentric_gradients(&self, tri: usize) -> [Vec2<T>; 3] {
        let e = &self.edge_inv[tri];
        let (r0, r1) = (e.row(0), e.row(1));
        [-(r0 + r1), r0, r1]
    }

    /// Clamps `q` onto the closed square if it lies within [`DOMAIN_TOLERANCE`] of it.
    pub fn clamp_to_domain(&self, q: Vec2<T>) -> Result<Vec2<T>> {
        let lim = T::one() + T::lit(DOMAIN_TOLERANCE);
        if !(q.x().abs() <= lim && q.y().abs() <= lim) {
            return Err(Error::OutOfDomain {
                layer: None,
                point_index: None,
                point: [q.x().as_f64(), q.y().as_f64(), 0.0],
            });
        }
        let one = T::one();
        Ok(Vec2::new(q.x().max(-one).min(one), q.y().max(-one).min(one)))
    }

    /// Index of a triangle whose closed region contains `q`; the lowest such
    /// index when `q` lies on shared edges or vertices.
    pub fn locate_triangle(&self, q: Vec2<T>) -> Result<usize> {
        let q = self.clamp_to_domain(q)?;
        let cells = self.resolution - 1;
        let inv_h = T::one() / self.spacing;
        let s = (q.x() + T::one()) * inv_h;
        let t = (q.y() + T::one()) * inv_h;
        let a = s.floor().to_usize().unwrap_or(0).min(cells - 1);
        let b = t.floor().to_usize().unwrap_or(0).min(cells - 1);
        let fs = s - T::from_count(a);
        let ft = t - T::from_count(b);
        let zero = T::zero();
        let one = T::one();
        if fs > zero && fs < one && ft > zero && ft < one {
            let c = b * cells + a;
            if (a + b).is_multiple_of(2) {
                if fs > ft {
                    return Ok(2 * c);
                } else if ft > fs {
                    return Ok(2 * c + 1);
                }
            } else if fs + ft < one {
                return Ok(2 * c);
            } else if fs + ft > one {
                return Ok(2 * c + 1);
            }
        }
        Ok(self.containing_in_grid(s, t)[0])
    }

    /// All triangles whose closed region contains `q`, ascending.
    pub fn containing_triangles(&self, q: Vec2<T>) -> Result<Vec<usize>> {
        let q = self.clamp_to_domain(q)?;
        let inv_h = T::one() / self.spacing;
        Ok(self.containing_in_grid((q.x() + T::one()) * inv_h, (q.y() + T::one()) * inv_h))
    }

    fn containing_in_grid(&self, s: T, t: T) -> Vec<usize> {
        let cells = self.resolution - 1;
        let candidates = |g: T| -> Vec<usize> {
            let f = g.floor();
            let k = f.to_usize().unwrap_or(0);
            if g == f {
                let mut v = Vec::with_capacity(2);
                if k >= 1 && k - 1 < cells {
                    v.push(k - 1);
                }
                if k < cells {
                    v.push(k);
                }
                v
            } else {
                vec![k.min(cells - 1)]
            }
        };
        let (one, zero) = (T::one(), T::zero());
        let mut out = Vec::with_capacity(6);
        for b in candidates(t) {
            for a in candidates(s) {
                let fs = s - T::from_count(a);
                let ft = t - T::from_count(b);
                if fs < zero || fs > one || ft < zero || ft > one {
                    continue;
                }
                let c = b * cells + a;
                let (first, second) = if (a + b) % 2 == 0 {
                    (fs >= ft, ft >= fs)
                } else {
                    (fs + ft <= one, fs + ft >= one)
                };
                if first {
                    out.push(2 * c);
                }
                if second {
                    out.push(2 * c + 1);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signed_area(a: Vec2<f64>, b: Vec2<f64>, c: Vec2<f64>) -> f64 {
        0.5 * (b - a).cross(&(c - a))
    }

    #[test]
    fn counts_match_grid_formula() {
        for (n, nv, nt) in [(2, 4, 2), (11, 121, 200), (25, 625, 1152)] {
            let m = Mesh2D::<f64>::build(n).unwrap();
            assert_eq!(m.vertices().len(), nv);
            assert_eq!(m.triangles().len(), nt);
            assert_eq!(m.boundary_loop().len(), 4 * (n - 1));
            assert_eq!(m.interior_ids().len(), (n - 2) * (n - 2));
        }
    }

    #[test]
    fn rejects_tiny_resolution() {
        assert!(matches!(Mesh2D::<f64>::build(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn triangles_positive_and_boundary_ccw() {
        for n in [2, 3, 4, 7] {
            let m = Mesh2D::<f64>::build(n).unwrap();
            let v = m.vertices();
            let h = m.spacing();
            for t in m.triangles() {
                let a = signed_area(v[t[0]], v[t[1]], v[t[2]]);
                assert!((a - 0.5 * h * h).abs() < 1e-14);
            }
            let bl = m.boundary_loop();
            assert_eq!(v[bl[0]], Vec2::new(-1.0, -1.0));
            let shoelace: f64 = (0..bl.len())
                .map(|k| v[bl[k]].cross(&v[bl[(k + 1) % bl.len()]]))
                .sum();
            assert!((shoelace * 0.5 - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_incidence_is_one_or_two() {
        let m = Mesh2D::<f64>::build(5).unwrap();
        let mut count = HashMap::new();
        for t in m.triangles() {
            for k in 0..3 {
                let (p, q) = (t[k], t[(k + 1) % 3]);
                *count.entry([p.min(q), p.max(q)]).or_insert(0) += 1;
            }
        }
        assert_eq!(count.len(), m.edges().len());
        for (e, c) in count {
            let on_boundary = m.boundary_slot(e[0]).is_some() && m.boundary_slot(e[1]).is_some();
            let boundary_edge = on_boundary && c == 1;
            assert!(c == 2 || boundary_edge, "edge {e:?} has {c} triangles");
        }
    }

    #[test]
    fn no_dividing_edges_for_odd_resolution() {
        for n in [3, 5, 7, 11, 25] {
            let m = Mesh2D::<f64>::build(n).unwrap();
            for t in 0..m.triangles().len() {
                for k in 0..3 {
                    if m.neighbor(t, k).is_none() {
                        continue;
                    }
                    let tri = m.triangles()[t];
                    let (p, q) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                    assert!(
                        m.boundary_slot(p).is_none() || m.boundary_slot(q).is_none(),
                        "n={n}: interior edge ({p},{q}) joins two boundary vertices"
                    );
                }
            }
        }
    }

    #[test]
    fn locate_tie_break_on_diagonal() {
        let m = Mesh2D::<f64>::build(2).unwrap();
        assert_eq!(m.locate_triangle(Vec2::new(0.0, 0.0)).unwrap(), 0);
        assert_eq!(m.containing_triangles(Vec2::new(0.0, 0.0)).unwrap(), vec![0, 1]);
    }

    #[test]
    fn locate_lower_triangle() {
        let m = Mesh2D::<f64>::build(2).unwrap();
        let t = m.locate_triangle(Vec2::new(-0.5, -0.9)).unwrap();
        assert_eq!(t, 0);
        let tri = m.triangles()[t];
        let v = m.vertices();
        let q = Vec2::new(-0.5, -0.9);
        for k in 0..3 {
            assert!(signed_area(v[tri[k]], v[tri[(k + 1) % 3]], q) >= 0.0);
        }
    }

    #[test]
    fn locate_out_of_domain() {
        let m = Mesh2D::<f64>::build(5).unwrap();
        assert!(matches!(
            m.locate_triangle(Vec2::new(1.5, 0.0)),
            Err(Error::OutOfDomain { .. })
        ));
        // Within tolerance: clamped.
        assert!(m.locate_triangle(Vec2::new(1.0 + 1e-10, -1.0 - 1e-10)).is_ok());
    }

    #[test]
    fn locate_vertices_use_lowest_incident_triangle() {
        let m = Mesh2D::<f64>::build(5).unwrap();
        for (v, p) in m.vertices().iter().enumerate() {
            let expect = *m.vertex_triangles(v).iter().min().unwrap();
            assert_eq!(m.locate_triangle(*p).unwrap(), expect, "vertex {v}");
        }
    }

    #[test]
    fn rest_angles_increase_by_total_turn() {
        let m = Mesh2D::<f64>::build(6).unwrap();
        let a = m.boundary_rest_angles();
        assert!(a.windows(2).all(|w| w[1] > w[0]));
        assert!((a[0] + 0.75 * std::f64::consts::PI).abs() < 1e-15);
        assert!(a[a.len() - 1] - a[0] < std::f64::consts::TAU);
    }
}
