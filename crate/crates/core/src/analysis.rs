//! Convergence and perturbation diagnostics.
//!
//! [`run_sweep`] measures how CBF trajectories approach the PDS reference as
//! `α` grows: one `ProjectedEuler` reference run, one `Rk4` CBF run per `α`
//! on the same record grid, sup-distances taken on `[0, t′]` (uniform
//! convergence is only guaranteed on compact subintervals of the horizon).
//! [`perturbation_certificate`] rebuilds, sample by sample, the witness that
//! places the CBF field inside the inflated normal-cone inclusion.
//! [`sigma_perturbation_member`] is a one-sided membership test for the
//! `σ`-inflated inclusion, using single witnesses rather than convex-hull
//! search.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{sigma_of_alpha, BoundsReport};
use crate::dynamics::{di_residual, Interconnection};
use crate::error::{Error, Result};
use crate::integrate::{integrate, refine_check, IntegrationConfig, Scheme};
use crate::dynamics::FieldKind;
use crate::projection::project_point_to_set;
use crate::sampling;

/// Result of one α-sweep against a common PDS reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub alphas: Vec<f64>,
    /// Per α: `max_{t ≤ t_prime} ‖(ζ,ξ)_cbf(t) − (ζ,ξ)_pds(t)‖`.
    pub sup_distances: Vec<f64>,
    /// Per α: minimum of `h` along the CBF trajectory.
    pub invariance_margins: Vec<f64>,
    /// Per α: the CBF trajectory stayed in `𝒵 × S`.
    pub containment: Vec<bool>,
    /// Step-halving discrepancy of the PDS reference; distances below this
    /// scale are indistinguishable from discretization error.
    pub reference_scheme_gap: f64,
    pub t_prime: f64,
}

impl SweepResult {
    /// CSV rows `alpha,sup_distance,invariance_margin,containment`.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "alpha,sup_distance,invariance_margin,containment")?;
        for i in 0..self.alphas.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{}",
                self.alphas[i], self.sup_distances[i], self.invariance_margins[i], self.containment[i]
            )?;
        }
        Ok(())
    }
}

/// Integrates the PDS reference once and one CBF trajectory per `α`, all on
/// the grid of `cfg` (the reference uses `ProjectedEuler`, the CBF runs
/// `Rk4`, whatever `cfg.scheme` says).
///
/// Exiting `𝒵` is recorded in `containment`, not raised: containment is
/// only predicted for sufficiently large `α`.
pub fn run_sweep(
    sys: &Interconnection,
    z0: &DVector<f64>,
    x0: &DVector<f64>,
    cfg: &IntegrationConfig,
    alphas: &[f64],
    t_prime: f64,
) -> Result<SweepResult> {
    if alphas.is_empty() {
        return Err(Error::Config("alpha list must be nonempty".into()));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::Config("alpha values must be positive and finite".into()));
    }
    if !(t_prime > 0.0 && t_prime <= cfg.t_end) {
        return Err(Error::Config(format!(
            "t_prime must lie in (0, t_end], got {t_prime} with t_end = {}",
            cfg.t_end
        )));
    }
    let pds_cfg = IntegrationConfig {
        scheme: Scheme::ProjectedEuler,
        ..*cfg
    };
    let cbf_cfg = IntegrationConfig {
        scheme: Scheme::Rk4,
        ..*cfg
    };
    let reference = integrate(sys, FieldKind::Pds, z0, x0, &pds_cfg)?;
    let reference_scheme_gap = refine_check(sys, FieldKind::Pds, z0, x0, &pds_cfg)?;

    let per_alpha: Vec<(f64, f64, bool)> = alphas
        .par_iter()
        .map(|&alpha| -> Result<(f64, f64, bool)> {
            let traj = integrate(sys, FieldKind::Cbf(alpha), z0, x0, &cbf_cfg)?;
            let sup = traj.sup_distance(&reference, t_prime)?;
            let contained = traj.in_zbox && traj.min_h >= -cfg.invariance_tol;
            Ok((sup, traj.min_h, contained))
        })
        .collect::<Result<_>>()?;

    Ok(SweepResult {
        alphas: alphas.to_vec(),
        sup_distances: per_alpha.iter().map(|r| r.0).collect(),
        invariance_margins: per_alpha.iter().map(|r| r.1).collect(),
        containment: per_alpha.iter().map(|r| r.2).collect(),
        reference_scheme_gap,
        t_prime,
    })
}

/// Per-sample outcome of the perturbation-membership certificate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CertificateSample {
    /// Whether the barrier constraint is active at the sample
    /// (`L_f h + αh ≤ 0`); inactive samples pass trivially.
    pub case_active: bool,
    /// `‖f_cbf(z,x) − (f(z,y) − P⁻¹η)‖` for the proof witness `y`, `η`.
    pub residual: f64,
    /// `‖x − y‖`, required `≤ σ(α)`.
    pub witness_distance: f64,
    /// `‖P⁻¹η‖`, required `≤ δ`.
    pub eta_norm: f64,
    pub sigma_alpha: f64,
    /// The per-sample bound `(L_f + L₁|L_f h|)·γ(|L_f h|/α)` the residual
    /// must also satisfy.
    pub sigma1_bound: f64,
    pub delta: f64,
    pub pass: bool,
}

const CERT_SLACK: f64 = 1e-9;

/// Rebuilds the perturbation witness at each sample: the nearest boundary
/// point `y`, the normal-cone element `η = (L_f h + αh)·∇h(y)/‖∇h(y)‖²_{P⁻¹}`,
/// and the residual of the CBF field against `f(z,y) − P⁻¹η`.
pub fn perturbation_certificate(
    sys: &Interconnection,
    alpha: f64,
    report: &BoundsReport,
    samples: &[(DVector<f64>, DVector<f64>)],
) -> Result<Vec<CertificateSample>> {
    if alpha < report.alpha_star {
        return Err(Error::Precondition(format!(
            "certificate is stated for alpha >= alpha_star = {}, got {alpha}",
            report.alpha_star
        )));
    }
    let sigma_alpha = sigma_of_alpha(sys.set(), report, alpha)?;
    samples
        .iter()
        .map(|(z, x)| certificate_at(sys, alpha, report, sigma_alpha, z, x))
        .collect()
}

fn certificate_at(
    sys: &Interconnection,
    alpha: f64,
    report: &BoundsReport,
    sigma_alpha: f64,
    z: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<CertificateSample> {
    let h = sys.set().eval_h(x)?;
    if h < -sys.set().boundary_tol() || !sys.z_box().contains(z) {
        return Err(Error::Domain("certificate samples must lie in Z x S".into()));
    }
    let grad_x = sys.set().eval_grad_h(x)?;
    let f_x = sys.eval_f(z, x)?;
    let lfh = grad_x.dot(&f_x);
    let psi = lfh + alpha * h;
    if psi > 0.0 {
        return Ok(CertificateSample {
            case_active: false,
            residual: 0.0,
            witness_distance: 0.0,
            eta_norm: 0.0,
            sigma_alpha,
            sigma1_bound: 0.0,
            delta: report.delta,
            pass: true,
        });
    }

    let y = sys.set().nearest_boundary_point(x).map_err(|e| {
        Error::Estimation(format!("witness construction found no boundary point: {e}"))
    })?;
    let grad_y = sys.set().eval_grad_h(&y)?;
    let denom_y = sys.metric().norm_p_inv_sq(&grad_y);
    let denom_x = sys.metric().norm_p_inv_sq(&grad_x);
    if denom_y <= 1e-24 || denom_x <= 1e-24 {
        return Err(Error::Regularity(
            "vanishing gradient in the certificate witness".into(),
        ));
    }
    let p_inv_eta = (sys.metric().p_inv() * &grad_y) * (psi / denom_y);
    let eta_norm = p_inv_eta.norm();
    let f_cbf = &f_x - (sys.metric().p_inv() * &grad_x) * (psi / denom_x);
    let f_y = sys.eval_f(z, &y)?;
    let residual = (&f_cbf - (&f_y - &p_inv_eta)).norm();
    let witness_distance = (x - &y).norm();
    let gamma_term = sys.set().gamma(lfh.abs() / alpha);
    let sigma1_bound = (report.l_f + report.l1 * lfh.abs()) * gamma_term;

    let pass = witness_distance <= sigma_alpha + CERT_SLACK
        && eta_norm <= report.delta + CERT_SLACK
        && residual <= sigma_alpha + CERT_SLACK
        && residual <= sigma1_bound + CERT_SLACK;
    Ok(CertificateSample {
        case_active: true,
        residual,
        witness_distance,
        eta_norm,
        sigma_alpha,
        sigma1_bound,
        delta: report.delta,
        pass,
    })
}

/// Options for the σ-ball witness search.
#[derive(Debug, Clone, Copy)]
pub struct MembershipOptions {
    /// Low-discrepancy witness count inside the σ-ball.
    pub ball_samples: usize,
    /// Slack added to σ when comparing residuals.
    pub tolerance: f64,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions {
            ball_samples: 64,
            tolerance: 1e-8,
        }
    }
}

/// One-sided membership test of `candidate_xdot` in the σ-inflation of the
/// normal-cone inclusion: true iff some witness `y ∈ (x + σ𝔹) ∩ S` gives
/// `di_residual(z, y, candidate, δ) ≤ σ + tolerance`.
///
/// Witnesses are `x` itself, the nearest boundary point (when within reach),
/// and a deterministic Halton pattern of the ball; the convex hull of the
/// inclusion is not explored beyond single witnesses, so `false` is
/// conservative.
pub fn sigma_perturbation_member(
    sys: &Interconnection,
    report: &BoundsReport,
    sigma: f64,
    z: &DVector<f64>,
    x: &DVector<f64>,
    candidate_xdot: &DVector<f64>,
    opts: &MembershipOptions,
) -> Result<bool> {
    if sigma < 0.0 {
        return Err(Error::Config("sigma must be nonnegative".into()));
    }
    let h = sys.set().eval_h(x)?;
    if h < -sys.set().boundary_tol() {
        // x may sit in the σ-inflation of S only.
        let proj = project_point_to_set(sys.set(), x)?;
        if (x - &proj).norm() > sigma + opts.tolerance {
            return Err(Error::Domain(format!(
                "point lies {:.3e} outside S, beyond the sigma inflation {sigma:.3e}",
                (x - &proj).norm()
            )));
        }
    }

    let mut witnesses: Vec<DVector<f64>> = Vec::new();
    if h >= -sys.set().boundary_tol() {
        witnesses.push(x.clone());
    }
    if let Ok(y) = sys.set().nearest_boundary_point(x) {
        if (x - &y).norm() <= sigma + opts.tolerance {
            witnesses.push(y);
        }
    }
    if sigma > 0.0 {
        for u in sampling::unit_ball_points(sys.n()).take(opts.ball_samples) {
            let y = x + u * sigma;
            if sys.set().eval_h(&y)? >= -sys.set().boundary_tol() {
                witnesses.push(y);
            }
        }
    }

    for y in &witnesses {
        if di_residual(sys, z, y, candidate_xdot, report.delta)? <= sigma + opts.tolerance {
            return Ok(true);
        }
    }
    Ok(false)
}
