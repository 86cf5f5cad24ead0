//! Shared helpers for the integration suites: an independent iterative QP
//! solver used as the oracle against the closed-form operations, and
//! deterministic instance generators.
//!
//! Each test target compiles its own copy, so helpers unused by one target
//! are expected.
#![allow(dead_code)]

use nalgebra::DVector;
use pdscbf_core::{sampling, Interconnection, MetricMatrix};

/// Projected-gradient solver for `min ‖μ − f‖²_P s.t. wᵀμ + b ≥ 0`.
///
/// Independent of the closed-form path: plain gradient steps on the
/// P-weighted objective with Euclidean projection onto the half-space. The
/// fixed points of the step-then-project map are exactly the KKT points.
pub fn pgd_halfspace_qp(
    metric: &MetricMatrix,
    f: &DVector<f64>,
    w: &DVector<f64>,
    b: f64,
    max_iters: usize,
) -> DVector<f64> {
    let project = |mut v: DVector<f64>| {
        let wn2 = w.norm_squared();
        if wn2 > 0.0 {
            let slack = w.dot(&v) + b;
            if slack < 0.0 {
                v += w * (-slack / wn2);
            }
        }
        v
    };
    let step = 0.45 / metric.lambda_max();
    let mut mu = project(f.clone());
    for _ in 0..max_iters {
        let grad = metric.p() * (&mu - f) * 2.0;
        let next = project(&mu - grad * step);
        let moved = (&next - &mu).norm();
        mu = next;
        if moved <= 1e-14 * (1.0 + mu.norm()) {
            break;
        }
    }
    mu
}

/// Deterministic vectors in `[-scale, scale]^dim`, skipping the first Halton
/// indices already consumed elsewhere is not needed since streams are
/// per-call.
pub fn direction_samples(dim: usize, scale: f64, count: usize) -> Vec<DVector<f64>> {
    sampling::halton_seq(dim)
        .take(count)
        .map(|u| DVector::from_iterator(dim, u.iter().map(|&ui| scale * (2.0 * ui - 1.0))))
        .collect()
}

/// Representative magnitude of the nominal field over the grid, for scaling
/// random test vectors per scenario.
pub fn field_scale(sys: &Interconnection) -> f64 {
    let zs = sys.z_box().sample(16);
    let xs = sys.set().bounding_box().sample(32);
    let mut scale: f64 = 1.0;
    for z in &zs {
        for x in &xs {
            if sys.set().eval_h(x).unwrap() >= 0.0 {
                scale = scale.max(sys.eval_f(z, x).unwrap().norm());
            }
        }
    }
    scale
}

/// Evenly strided subset of `n` items.
pub fn strided_subset<T: Clone>(items: &[T], want: usize) -> Vec<T> {
    if items.len() <= want {
        return items.to_vec();
    }
    let stride = items.len() as f64 / want as f64;
    (0..want)
        .map(|i| items[(i as f64 * stride) as usize].clone())
        .collect()
}
