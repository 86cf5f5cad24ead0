//! Deterministic grid estimation of the perturbation constants.
//!
//! The constants quantify how the CBF field sits inside an inflated version
//! of the PDS normal-cone inclusion:
//! - `M₁`, `M₂`: min/max of `‖∇h‖` over `∂S`;
//! - `ε = eps_fraction · M₁`;
//! - `α* = max |L_f h| / γ⁻¹((M₁ − ε)/L_∇h)`: the smallest barrier gain the
//!   certificates are stated for;
//! - `M₃ = M₂ + L_∇h · γ(max|L_f h|/α*)`: gradient-norm bound on the active
//!   region;
//! - `L₁`: Lipschitz bound on the normalized-gradient map;
//! - `σ(α)`: the perturbation radius, vanishing as `α → ∞`;
//! - `δ`: the truncation bound on the normal-cone elements.
//!
//! All maxima/minima are taken over deterministic lattices (`𝒵 × S` on a
//! per-dimension-resolution grid, analytic or projected samples of `∂S`),
//! so reports are reproducible and refine monotonically. Lipschitz constants
//! come from difference quotients over lattice neighbor pairs at dyadic
//! strides and are lower estimates of the true constants; the sampling
//! density is part of the report.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Interconnection;
use crate::error::{Error, Result};
use crate::sampling::Lattice;

/// Sampling resolution knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    /// Lattice points per `ζ` dimension.
    pub res_z: usize,
    /// Lattice points per `ξ` dimension.
    pub res_x: usize,
    /// Requested `∂S` sample count.
    pub boundary_count: usize,
}

impl GridSpec {
    /// Resolution chosen so the product lattice stays near 10⁵ points.
    pub fn for_system(sys: &Interconnection) -> GridSpec {
        let dims = sys.m() + sys.n();
        let res = match dims {
            0..=3 => 21,
            4 => 13,
            5 => 9,
            _ => 7,
        };
        GridSpec {
            res_z: res,
            res_x: res,
            boundary_count: 1024,
        }
    }

    pub fn with_resolution(res: usize) -> GridSpec {
        GridSpec {
            res_z: res,
            res_x: res,
            boundary_count: 1024,
        }
    }

    /// Refinement that keeps the coarse lattice as a subset (`r → 2r − 1`).
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            res_z: 2 * self.res_z - 1,
            res_x: 2 * self.res_x - 1,
            boundary_count: 2 * self.boundary_count,
        }
    }
}

/// One row of the `α → σ(α)` table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SigmaEntry {
    pub alpha: f64,
    pub sigma: f64,
}

/// Every estimated constant plus the sampling resolution behind it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsReport {
    pub eps: f64,
    pub alpha_star: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    /// Sampled lower estimate of the Lipschitz constant of `f` on `𝒵 × S`.
    pub l_f: f64,
    /// Sampled lower estimate of the Lipschitz constant of `∇h` on `S`.
    pub l_grad_h: f64,
    pub l1: f64,
    pub delta: f64,
    /// `max |L_f h|` over the grid; the numerator of `α*` and the argument
    /// scale of `σ`.
    pub max_abs_lfh: f64,
    /// `max ‖f‖` over the grid.
    pub max_f_norm: f64,
    /// `λ̄(P) / λ̲(P)`.
    pub lambda_ratio: f64,
    pub sigma_table: Vec<SigmaEntry>,
    /// Per-dimension lattice counts, `ζ` dimensions first.
    pub grid_resolution: Vec<usize>,
    pub boundary_samples: usize,
}

impl BoundsReport {
    /// Ordering and decay invariants of the constants.
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < self.m1) {
            return Err(Error::Config(format!(
                "need 0 < eps < M1, got eps = {}, M1 = {}",
                self.eps, self.m1
            )));
        }
        if !(self.m1 <= self.m2 && self.m2 <= self.m3) {
            return Err(Error::Config(format!(
                "need M1 <= M2 <= M3, got {}, {}, {}",
                self.m1, self.m2, self.m3
            )));
        }
        if self.delta + 1e-12 < self.lambda_ratio.sqrt() * self.max_f_norm {
            return Err(Error::Config(
                "delta fell below the solution-equivalence floor sqrt(ratio)*max|f|".into(),
            ));
        }
        for pair in self.sigma_table.windows(2) {
            if self.max_abs_lfh > 0.0 && !(pair[1].sigma < pair[0].sigma) {
                return Err(Error::Config(format!(
                    "sigma table must be strictly decreasing, got {} then {}",
                    pair[0].sigma, pair[1].sigma
                )));
            }
        }
        if let (Some(first), Some(last)) = (self.sigma_table.first(), self.sigma_table.last()) {
            if last.alpha >= 100.0 * first.alpha
                && self.max_abs_lfh > 0.0
                && !(last.sigma < 0.1 * first.sigma)
            {
                return Err(Error::Config(format!(
                    "sigma must decay by 10x over a 100x alpha span, got {} -> {}",
                    first.sigma, last.sigma
                )));
            }
        }
        Ok(())
    }
}

/// Feasible lattice points of `𝒵 × S` (the `x` part satisfies `h ≥ 0`).
pub fn grid_points(sys: &Interconnection, spec: &GridSpec) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    let (z_lat, x_lat) = lattices(sys, spec);
    let mut out = Vec::new();
    for x in x_lat.points() {
        if sys.set().eval_h(&x)? >= 0.0 {
            for z in z_lat.points() {
                out.push((z.clone(), x.clone()));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no lattice point of the bounding box lies in S".into()));
    }
    Ok(out)
}

fn lattices(sys: &Interconnection, spec: &GridSpec) -> (Lattice, Lattice) {
    let zb = sys.z_box();
    let xb = sys.set().bounding_box();
    (
        Lattice::uniform(zb.lo().clone(), zb.hi().clone(), spec.res_z),
        Lattice::uniform(xb.lo().clone(), xb.hi().clone(), spec.res_x),
    )
}

/// Estimates every constant on the configured grid.
///
/// `alpha_grid` feeds the `σ` table; the table applies the `σ` formula at
/// each requested `α` whether or not it exceeds `α*` (the pointwise
/// [`sigma_of_alpha`] accessor enforces `α ≥ α*`).
pub fn estimate_constants(
    sys: &Interconnection,
    eps_fraction: f64,
    alpha_grid: &[f64],
    spec: &GridSpec,
) -> Result<BoundsReport> {
    if !(eps_fraction > 0.0 && eps_fraction < 1.0) {
        return Err(Error::Config(format!(
            "eps_fraction must lie in (0, 1), got {eps_fraction}"
        )));
    }
    if alpha_grid.is_empty() {
        return Err(Error::Config("alpha grid must be nonempty".into()));
    }
    if alpha_grid.windows(2).any(|w| !(w[0] < w[1])) || alpha_grid[0] <= 0.0 {
        return Err(Error::Config("alpha grid must be increasing and positive".into()));
    }

    let boundary = sys.set().boundary_samples(spec.boundary_count)?;
    if boundary.is_empty() {
        return Err(Error::Config("empty boundary sample".into()));
    }
    let mut m1 = f64::INFINITY;
    let mut m2: f64 = 0.0;
    for y in &boundary {
        let norm = sys.set().eval_grad_h(y)?.norm();
        m1 = m1.min(norm);
        m2 = m2.max(norm);
    }
    if m1 <= 0.0 {
        return Err(Error::Regularity("gradient vanishes somewhere on ∂S".into()));
    }
    let eps = eps_fraction * m1;

    let (z_lat, x_lat) = lattices(sys, spec);
    let x_feasible: Vec<bool> = x_lat
        .points()
        .map(|x| sys.set().eval_h(&x).map(|h| h >= 0.0))
        .collect::<Result<_>>()?;
    if !x_feasible.iter().any(|&b| b) {
        return Err(Error::Config("no lattice point of the bounding box lies in S".into()));
    }

    // Lipschitz lower estimate of grad h over in-S lattice pairs.
    let grads: Vec<Option<DVector<f64>>> = x_lat
        .points()
        .zip(x_feasible.iter())
        .map(|(x, &ok)| {
            if ok {
                sys.set().eval_grad_h(&x).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let mut l_grad_h: f64 = 0.0;
    for (i, j) in x_lat.dyadic_pairs() {
        if let (Some(gi), Some(gj)) = (&grads[i], &grads[j]) {
            let dist = (x_lat.point(i) - x_lat.point(j)).norm();
            if dist > 1e-14 {
                l_grad_h = l_grad_h.max((gi - gj).norm() / dist);
            }
        }
    }

    // Cache f over the product lattice (z-major, x trailing).
    let x_total = x_lat.len();
    let z_total = z_lat.len();
    let total = x_total * z_total;
    let per_point: Vec<Option<(DVector<f64>, f64, f64)>> = (0..total)
        .into_par_iter()
        .map(|flat| -> Result<Option<(DVector<f64>, f64, f64)>> {
            let ix = flat % x_total;
            if !x_feasible[ix] {
                return Ok(None);
            }
            let iz = flat / x_total;
            let z = z_lat.point(iz);
            let x = x_lat.point(ix);
            let f = sys.eval_f(&z, &x)?;
            let grad = grads[ix].as_ref().expect("feasible points have gradients");
            let lfh = grad.dot(&f).abs();
            let fnorm = f.norm();
            Ok(Some((f, lfh, fnorm)))
        })
        .collect::<Result<_>>()?;

    let max_abs_lfh = per_point
        .iter()
        .flatten()
        .map(|(_, lfh, _)| *lfh)
        .fold(0.0f64, f64::max);
    let max_f_norm = per_point
        .iter()
        .flatten()
        .map(|(_, _, fnorm)| *fnorm)
        .fold(0.0f64, f64::max);

    // Lipschitz lower estimate of f over product-lattice pairs.
    let combined = Lattice::new(
        {
            let mut lo = z_lat_vals(&z_lat, true);
            lo.extend(x_lat_vals(&x_lat, true));
            DVector::from_vec(lo)
        },
        {
            let mut hi = z_lat_vals(&z_lat, false);
            hi.extend(x_lat_vals(&x_lat, false));
            DVector::from_vec(hi)
        },
        z_lat
            .res()
            .iter()
            .chain(x_lat.res().iter())
            .copied()
            .collect(),
    );
    let pairs: Vec<(usize, usize)> = combined.dyadic_pairs().collect();
    let l_f = pairs
        .par_iter()
        .map(|&(i, j)| match (&per_point[i], &per_point[j]) {
            (Some((fi, _, _)), Some((fj, _, _))) => {
                let dist = (combined.point(i) - combined.point(j)).norm();
                if dist > 1e-14 {
                    (fi - fj).norm() / dist
                } else {
                    0.0
                }
            }
            _ => 0.0,
        })
        .reduce(|| 0.0f64, f64::max);

    // alpha* and the derived constants.
    let gamma_arg = (m1 - eps) / l_grad_h.max(1e-300);
    let gamma_inv = sys.set().gamma_inverse(gamma_arg).map_err(|e| {
        Error::Domain(format!(
            "gamma inverse failed for (M1 - eps)/L_grad_h = {gamma_arg:.3e} \
             (eps_fraction may be too large): {e}"
        ))
    })?;
    if gamma_inv <= 0.0 && max_abs_lfh > 0.0 {
        return Err(Error::Domain(
            "gamma_inverse((M1 - eps)/L_grad_h) = 0; eps_fraction too large".into(),
        ));
    }
    let alpha_star = if max_abs_lfh > 0.0 {
        max_abs_lfh / gamma_inv
    } else {
        0.0
    };
    let gamma_at_star = if alpha_star > 0.0 {
        sys.set().gamma(max_abs_lfh / alpha_star)
    } else {
        0.0
    };
    let m3 = m2 + l_grad_h * gamma_at_star;

    let ratio = sys.metric().lambda_max() / sys.metric().lambda_min();
    let l1 = ratio / (eps * eps) * l_grad_h * (1.0 + m2 * ratio * (m2 + m3) / (m1 * m1));

    let delta = per_point
        .par_iter()
        .flatten()
        .map(|(_, lfh, fnorm)| {
            let inflation = if alpha_star > 0.0 && *lfh > 0.0 {
                sys.set().gamma(lfh / alpha_star) * l_grad_h / m1
            } else {
                0.0
            };
            (1.0 + inflation) * ratio * fnorm
        })
        .reduce(|| 0.0f64, f64::max);

    let lfh_values: Vec<f64> = per_point.iter().flatten().map(|(_, lfh, _)| *lfh).collect();
    let sigma_table = alpha_grid
        .iter()
        .map(|&alpha| SigmaEntry {
            alpha,
            sigma: sigma_over_grid(sys, &lfh_values, l_f, l1, alpha),
        })
        .collect();

    let mut grid_resolution = vec![spec.res_z; sys.m()];
    grid_resolution.extend(vec![spec.res_x; sys.n()]);

    Ok(BoundsReport {
        eps,
        alpha_star,
        m1,
        m2,
        m3,
        l_f,
        l_grad_h,
        l1,
        delta,
        max_abs_lfh,
        max_f_norm,
        lambda_ratio: ratio,
        sigma_table,
        grid_resolution,
        boundary_samples: boundary.len(),
    })
}

fn z_lat_vals(lat: &Lattice, lo: bool) -> Vec<f64> {
    (0..lat.dim())
        .map(|axis| lat.axis_coord(axis, if lo { 0 } else { lat.res()[axis] - 1 }))
        .collect()
}

fn x_lat_vals(lat: &Lattice, lo: bool) -> Vec<f64> {
    z_lat_vals(lat, lo)
}

/// Literal per-point maximum of
/// `max{γ(|L_f h|/α), (L_f + L₁|L_f h|)·γ(|L_f h|/α)}`.
fn sigma_over_grid(
    sys: &Interconnection,
    lfh_values: &[f64],
    l_f: f64,
    l1: f64,
    alpha: f64,
) -> f64 {
    lfh_values
        .iter()
        .map(|&lfh| {
            let g = sys.set().gamma(lfh / alpha);
            g.max((l_f + l1 * lfh) * g)
        })
        .fold(0.0f64, f64::max)
}

/// `σ(α)` from a finished report. Both factors of the per-point term grow
/// with `|L_f h|`, so the grid maximum is attained at `max_abs_lfh`.
pub fn sigma_of_alpha(
    set: &crate::geometry::ConstraintSet,
    report: &BoundsReport,
    alpha: f64,
) -> Result<f64> {
    if alpha < report.alpha_star {
        return Err(Error::Precondition(format!(
            "sigma is stated for alpha >= alpha_star = {}, got {alpha}",
            report.alpha_star
        )));
    }
    if report.max_abs_lfh == 0.0 {
        return Ok(0.0);
    }
    let g = set.gamma(report.max_abs_lfh / alpha);
    Ok(g.max((report.l_f + report.l1 * report.max_abs_lfh) * g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AxisBox, ConstraintSet};
    use crate::projection::MetricMatrix;
    use crate::scenarios::build_feedback_opt;

    fn zero_f_system() -> Interconnection {
        Interconnection::new(
            1,
            1,
            Box::new(|_z, _x| DVector::zeros(1)),
            Box::new(|_z, _x| DVector::zeros(1)),
            ConstraintSet::interval(-0.6, 0.6).unwrap(),
            MetricMatrix::identity(1),
            AxisBox::from_slices(&[-1.0], &[1.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn boundary_gradient_extrema_interval() {
        let (sys, _) = build_feedback_opt().unwrap();
        let spec = GridSpec::with_resolution(9);
        let report = estimate_constants(&sys, 0.5, &[1.0, 10.0, 100.0, 1000.0], &spec).unwrap();
        assert!((report.m1 - 1.2).abs() < 1e-12);
        assert!((report.m2 - 1.2).abs() < 1e-12);
        assert!((report.l_grad_h - 2.0).abs() < 1e-12);
        report.validate().unwrap();
    }

    #[test]
    fn ball_gradient_norm_is_two_r() {
        let sys = Interconnection::new(
            1,
            2,
            Box::new(|_z, _x| DVector::zeros(1)),
            Box::new(|_z, _x| DVector::zeros(2)),
            ConstraintSet::ball(DVector::from_vec(vec![0.0, 4000.0]), 500.0).unwrap(),
            MetricMatrix::identity(2),
            AxisBox::from_slices(&[-1.0], &[1.0]).unwrap(),
        )
        .unwrap();
        let report =
            estimate_constants(&sys, 0.5, &[1.0], &GridSpec::with_resolution(9)).unwrap();
        assert!((report.m1 - 1000.0).abs() < 1e-6);
        assert!((report.m2 - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn zero_field_gives_zero_sigma() {
        let sys = zero_f_system();
        let report =
            estimate_constants(&sys, 0.5, &[1.0, 10.0], &GridSpec::with_resolution(9)).unwrap();
        assert_eq!(report.max_abs_lfh, 0.0);
        for entry in &report.sigma_table {
            assert_eq!(entry.sigma, 0.0);
        }
    }

    #[test]
    fn sigma_monotone_in_alpha() {
        let (sys, _) = build_feedback_opt().unwrap();
        let report =
            estimate_constants(&sys, 0.5, &[1.0, 10.0, 100.0, 1000.0], &GridSpec::with_resolution(9))
                .unwrap();
        for w in report.sigma_table.windows(2) {
            assert!(w[1].sigma < w[0].sigma);
        }
        assert!(report.sigma_table.last().unwrap().sigma < report.sigma_table[0].sigma / 10.0);
    }

    #[test]
    fn sigma_accessor_matches_table_and_guards_alpha() {
        let (sys, _) = build_feedback_opt().unwrap();
        let report =
            estimate_constants(&sys, 0.5, &[50.0, 500.0], &GridSpec::with_resolution(9)).unwrap();
        for entry in &report.sigma_table {
            if entry.alpha >= report.alpha_star {
                let sigma = sigma_of_alpha(sys.set(), &report, entry.alpha).unwrap();
                assert_eq!(sigma, entry.sigma);
            }
        }
        assert!(matches!(
            sigma_of_alpha(sys.set(), &report, report.alpha_star * 0.5),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn feedback_opt_constants_match_hand_computation() {
        // S = [-0.6, 0.6], Z = [-2,2]^2: M1 = M2 = 1.2, L_grad_h = 2,
        // max |L_f h| = 7.2 at the lattice corner, alpha* = 7.2 / 0.18 = 40.
        let (sys, _) = build_feedback_opt().unwrap();
        let report =
            estimate_constants(&sys, 0.5, &[1.0, 10.0], &GridSpec::with_resolution(9)).unwrap();
        assert!((report.max_abs_lfh - 7.2).abs() < 1e-10, "{}", report.max_abs_lfh);
        assert!((report.alpha_star - 40.0).abs() < 1e-6, "{}", report.alpha_star);
        assert!((report.eps - 0.6).abs() < 1e-12);
        assert!((report.m3 - 1.8).abs() < 1e-6);
        // L1 = (1/0.36)*2*(1 + 1.2*3.0/1.44) = 19.444...
        assert!((report.l1 - 35.0 / 1.8).abs() < 1e-6, "{}", report.l1);
    }

    #[test]
    fn refinement_never_shrinks_maxima() {
        let (sys, _) = build_feedback_opt().unwrap();
        let coarse_spec = GridSpec::with_resolution(7);
        let coarse =
            estimate_constants(&sys, 0.5, &[10.0, 100.0], &coarse_spec).unwrap();
        let fine =
            estimate_constants(&sys, 0.5, &[10.0, 100.0], &coarse_spec.refined()).unwrap();
        assert!(fine.m2 >= coarse.m2 - 1e-12);
        assert!(fine.alpha_star >= coarse.alpha_star - 1e-12);
        assert!(fine.delta >= coarse.delta - 1e-12);
        for (c, f) in coarse.sigma_table.iter().zip(fine.sigma_table.iter()) {
            assert!(f.sigma >= c.sigma - 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let (sys, _) = build_feedback_opt().unwrap();
        let spec = GridSpec::with_resolution(5);
        assert!(estimate_constants(&sys, 1.5, &[1.0], &spec).is_err());
        assert!(estimate_constants(&sys, 0.5, &[], &spec).is_err());
        assert!(estimate_constants(&sys, 0.5, &[5.0, 2.0], &spec).is_err());
    }
}
