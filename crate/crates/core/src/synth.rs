//! Synthetic geometry for tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deform::PointSet;
use crate::energy::HandleConstraint;
use crate::error::Result;
use crate::linalg::{Mat3, Vec3};
use crate::optim::ElasticInput;
use crate::scalar::Real;

/// Latitude-longitude sphere with `bands` latitude bands and `segments` meridians.
///
/// Has `2 + (bands − 1)·segments` vertices (poles first and last) and
/// outward-facing triangles. `bands = 41`, `segments = 50` gives 2002 vertices.
pub fn uv_sphere<T: Real>(bands: usize, segments: usize, radius: T) -> (Vec<Vec3<T>>, Vec<[usize; 3]>) {
    assert!(bands >= 2 && segments >= 3);
    let pi = T::PI();
    let tau = T::TAU();
    let mut v = vec![Vec3::new(T::zero(), T::zero(), radius)];
    for i in 1..bands {
        let theta = pi * T::from_count(i) / T::from_count(bands);
        let (st, ct) = theta.sin_cos();
        for j in 0..segments {
            let phi = tau * T::from_count(j) / T::from_count(segments);
            let (sp, cp) = phi.sin_cos();
            v.push(Vec3::new(radius * st * cp, radius * st * sp, radius * ct));
        }
    }
    let south = v.len();
    v.push(Vec3::new(T::zero(), T::zero(), -radius));
    let ring = |i: usize, j: usize| 1 + (i - 1) * segments + (j % segments);
    let mut t = Vec::new();
    for j in 0..segments {
        t.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..bands - 1 {
        for j in 0..segments {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            t.push([a, c, d]);
            t.push([a, d, b]);
        }
    }
    for j in 0..segments {
        t.push([south, ring(bands - 1, j + 1), ring(bands - 1, j)]);
    }
    (v, t)
}

/// Rotation about the z axis by `max_angle · z / half_height`.
pub fn twist<T: Real>(points: &[Vec3<T>], max_angle: T, half_height: T) -> Vec<Vec3<T>> {
    points
        .iter()
        .map(|p| {
            let (s, c) = (max_angle * p.z() / half_height).sin_cos();
            Vec3::new(c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z())
        })
        .collect()
}

/// Uniform random points in the bar `[-0.6, 0.6] × [-0.15, 0.15]²`.
pub fn bar_cloud<T: Real>(n: usize, seed: u64) -> Vec<Vec3<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Vec3::new(
                T::lit(rng.gen_range(-0.6..0.6)),
                T::lit(rng.gen_range(-0.15..0.15)),
                T::lit(rng.gen_range(-0.15..0.15)),
            )
        })
        .collect()
}

/// Points inside the closed box `[lo, hi]`.
pub fn select_box<T: Real>(points: &[Vec3<T>], lo: Vec3<T>, hi: Vec3<T>) -> Vec<Vec3<T>> {
    points.iter().copied().filter(|p| in_box(p, lo, hi)).collect()
}

fn in_box<T: Real>(p: &Vec3<T>, lo: Vec3<T>, hi: Vec3<T>) -> bool {
    (0..3).all(|k| p.0[k] >= lo.0[k] && p.0[k] <= hi.0[k])
}

/// Bar bend: the end `x ≥ 0.45` turns by `angle` about the z axis through
/// `(0.45, 0, 0)` while the end `x ≤ −0.45` stays fixed.
pub fn bar_bend_input<T: Real>(n: usize, seed: u64, angle: T) -> Result<ElasticInput<T>> {
    let pts = bar_cloud::<T>(n, seed);
    let big = T::lit(0.7);
    let cut = T::lit(0.45);
    let (base_lo, base_hi) = (Vec3::new(-big, -big, -big), Vec3::new(-cut, big, big));
    let (tip_lo, tip_hi) = (Vec3::new(cut, -big, -big), Vec3::new(big, big, big));
    let base = select_box(&pts, base_lo, base_hi);
    let tip = select_box(&pts, tip_lo, tip_hi);
    let free: Vec<Vec3<T>> = pts
        .iter()
        .copied()
        .filter(|p| !in_box(p, base_lo, base_hi) && !in_box(p, tip_lo, tip_hi))
        .collect();
    let rotation = Mat3::rotation(Vec3::new(T::zero(), T::zero(), T::one()), angle);
    Ok(ElasticInput {
        handles: vec![
            HandleConstraint::moving(PointSet::new(tip), rotation, Vec3::zero(), Vec3::new(cut, T::zero(), T::zero()))?,
            HandleConstraint::fixed(PointSet::new(base)),
        ],
        free: PointSet::new(free),
    })
}
