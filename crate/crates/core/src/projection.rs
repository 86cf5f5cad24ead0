//! `P`-metric minimizations.
//!
//! Everything here is a single-halfspace quadratic program and is solved in
//! closed form: the projection of a vector onto the tangent cone (the PDS
//! right-hand side), the CBF field, and the generic half-space QP
//! [`qp_oracle`] the first two are tested against. [`project_point_to_set`]
//! projects a *point* onto `S` for the reference PDS discretization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{Classification, ConstraintSet, Shape};

/// Symmetric positive-definite metric with cached inverse and eigenvalue
/// bounds.
#[derive(Debug, Clone)]
pub struct MetricMatrix {
    p: DMatrix<f64>,
    p_inv: DMatrix<f64>,
    lambda_min: f64,
    lambda_max: f64,
}

impl MetricMatrix {
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        if p.nrows() != p.ncols() || p.nrows() == 0 {
            return Err(Error::Config("metric must be square and nonempty".into()));
        }
        let scale = p.amax();
        if (&p - p.transpose()).amax() > 1e-12 * scale.max(1.0) {
            return Err(Error::Config("metric must be symmetric".into()));
        }
        let eigen = p.clone().symmetric_eigen();
        let lambda_min = eigen.eigenvalues.min();
        let lambda_max = eigen.eigenvalues.max();
        if lambda_min <= 0.0 {
            return Err(Error::Config(format!(
                "metric must be positive definite (min eigenvalue {lambda_min:.3e})"
            )));
        }
        let p_inv = p
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Config("metric Cholesky factorization failed".into()))?
            .inverse();
        let residual = (&p * &p_inv - DMatrix::identity(p.nrows(), p.ncols())).amax();
        if residual > 1e-10 {
            return Err(Error::Config(format!(
                "metric inverse residual {residual:.3e} exceeds 1e-10"
            )));
        }
        Ok(Self {
            p,
            p_inv,
            lambda_min,
            lambda_max,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            p: DMatrix::identity(n, n),
            p_inv: DMatrix::identity(n, n),
            lambda_min: 1.0,
            lambda_max: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn p_inv(&self) -> &DMatrix<f64> {
        &self.p_inv
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `‖v‖²_P = vᵀ P v`.
    pub fn norm_p_sq(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.p * v))
    }

    /// `‖v‖²_{P⁻¹} = vᵀ P⁻¹ v`.
    pub fn norm_p_inv_sq(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.p_inv * v))
    }
}

/// `argmin_{μ ∈ T_S(x)} ‖μ − v‖²_P`.
///
/// Interior points and inward vectors pass through unchanged; on the
/// boundary an outward `v` is projected onto the tangent half-space.
pub fn project_tangent(
    set: &ConstraintSet,
    metric: &MetricMatrix,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    let cone = set.classify(x)?;
    match cone.classification {
        Classification::Outside => Err(Error::Domain(format!(
            "tangent projection requested outside S (h = {:.3e})",
            set.eval_h(x)?
        ))),
        Classification::Interior => Ok(v.clone()),
        Classification::Boundary => {
            let w = cone
                .normal_generator
                .expect("boundary classification carries the gradient");
            if w.norm() <= 1e-12 {
                return Err(Error::Regularity(
                    "gradient vanishes on the boundary; tangent cone degenerate".into(),
                ));
            }
            let slope = w.dot(v);
            if slope >= 0.0 {
                Ok(v.clone())
            } else {
                let denom = metric.norm_p_inv_sq(&w);
                Ok(v - (metric.p_inv() * &w) * (slope / denom))
            }
        }
    }
}

/// Closed form of the CBF quadratic program
/// `argmin ‖μ − f‖²_P s.t. L_μ h + α h ≥ 0`:
/// `f − min(0, L_f h + α h) · P⁻¹∇h / ‖∇h‖²_{P⁻¹}`.
///
/// `lfh` is `∇h(x)ᵀ f`, `h_val` is `h(x)`, `grad` is `∇h(x)`. When the
/// constraint is inactive the nominal `f` is returned exactly (no arithmetic
/// on it).
pub fn cbf_field_value(
    metric: &MetricMatrix,
    f_val: &DVector<f64>,
    lfh: f64,
    h_val: f64,
    grad: &DVector<f64>,
    alpha: f64,
) -> Result<DVector<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("alpha must be positive and finite, got {alpha}")));
    }
    let psi = lfh + alpha * h_val;
    if psi >= 0.0 {
        return Ok(f_val.clone());
    }
    let denom = metric.norm_p_inv_sq(grad);
    if denom <= 1e-24 {
        return Err(Error::Regularity(
            "gradient vanishes while the barrier constraint is active".into(),
        ));
    }
    Ok(f_val - (metric.p_inv() * grad) * (psi / denom))
}

/// Exact KKT solution of `min ‖μ − f‖²_P s.t. wᵀμ + b ≥ 0`.
pub fn qp_oracle(
    metric: &MetricMatrix,
    f_val: &DVector<f64>,
    w: &DVector<f64>,
    b: f64,
) -> Result<DVector<f64>> {
    let wnorm_sq = w.norm_squared();
    if wnorm_sq <= 1e-24 {
        return if b >= 0.0 {
            Ok(f_val.clone())
        } else {
            Err(Error::Infeasible(format!(
                "zero constraint vector with negative offset b = {b}"
            )))
        };
    }
    let slack = w.dot(f_val) + b;
    if slack >= 0.0 {
        Ok(f_val.clone())
    } else {
        let denom = metric.norm_p_inv_sq(w);
        Ok(f_val - (metric.p_inv() * w) * (slack / denom))
    }
}

/// KKT residuals for a candidate minimizer of the half-space QP with
/// constraint `wᵀμ + b ≥ 0`. All three residuals must vanish (to tolerance)
/// at the true solution:
/// primal feasibility, a stationarity decomposition `P(v − μ) = λw` with
/// `λ ≤ 0`, and complementary slackness.
#[derive(Debug, Clone, Copy)]
pub struct KktCertificate {
    /// `max(0, −(wᵀμ + b))`, scaled.
    pub feasibility: f64,
    /// Norm of the component of `P(v − μ)` orthogonal to `w`, plus any
    /// positive part of the multiplier.
    pub stationarity: f64,
    /// `|λ| · |wᵀμ + b|`, scaled.
    pub complementarity: f64,
    /// The recovered multiplier `λ` in `P(v − μ) = λ w`.
    pub multiplier: f64,
}

impl KktCertificate {
    pub fn max_residual(&self) -> f64 {
        self.feasibility.max(self.stationarity).max(self.complementarity)
    }
}

/// Evaluates the KKT certificate of `mu` as a solution of
/// `min ‖μ − v‖²_P s.t. wᵀμ + b ≥ 0`.
pub fn tangent_kkt_certificate(
    metric: &MetricMatrix,
    w: &DVector<f64>,
    b: f64,
    v: &DVector<f64>,
    mu: &DVector<f64>,
) -> KktCertificate {
    let scale = 1.0 + v.norm().max(mu.norm());
    let wnorm = w.norm().max(1e-300);
    let slack = w.dot(mu) + b;
    let feasibility = (-slack).max(0.0) / (wnorm * scale);

    let residual_vec = metric.p() * &(v - mu);
    let multiplier = w.dot(&residual_vec) / (wnorm * wnorm);
    let off_ray = (&residual_vec - w * multiplier).norm() / scale;
    let sign_violation = multiplier.max(0.0) * wnorm / scale;
    let stationarity = off_ray + sign_violation;

    let complementarity = (multiplier * slack).abs() / scale;
    KktCertificate {
        feasibility,
        stationarity,
        complementarity,
        multiplier,
    }
}

/// Euclidean projection of a point onto `S`: closed form for the interval
/// and ball shapes, SQP iteration for custom sets. Points already in `S`
/// are returned unchanged.
pub fn project_point_to_set(set: &ConstraintSet, x: &DVector<f64>) -> Result<DVector<f64>> {
    // Guard against projecting from garbage states: allow one half-width of
    // slack per side around the bounding box.
    if !set.bounding_box().inflate(1.0).contains(x) {
        return Err(Error::Domain(
            "point lies outside the inflated bounding box".into(),
        ));
    }
    if set.eval_h(x)? >= -set.boundary_tol() {
        return Ok(x.clone());
    }
    match set.shape() {
        Shape::Interval { center, radius } => {
            let u = x[0].clamp(center - radius, center + radius);
            Ok(DVector::from_vec(vec![u]))
        }
        Shape::Ball { center, radius } => {
            let offset = x - center;
            let norm = offset.norm();
            Ok(center + offset * (radius / norm))
        }
        Shape::Custom { .. } => {
            let y = set.nearest_boundary_point(x)?;
            // Nudge inward until h(y) >= -boundary_tol.
            let mut y = y;
            for _ in 0..50 {
                let hv = set.eval_h(&y)?;
                if hv >= -set.boundary_tol() {
                    let tangential = stationarity_residual(set, x, &y)?;
                    if tangential > 1e-8 * (1.0 + (x - &y).norm()) {
                        return Err(Error::Projection(format!(
                            "stationarity residual {tangential:.3e} after refinement"
                        )));
                    }
                    return Ok(y);
                }
                let g = set.eval_grad_h(&y)?;
                let gsq = g.norm_squared();
                if gsq < 1e-24 {
                    return Err(Error::Regularity(
                        "vanishing gradient during point projection".into(),
                    ));
                }
                y += &g * (-hv / gsq);
            }
            Err(Error::Projection(
                "point projection did not reach the feasible side".into(),
            ))
        }
    }
}

/// Norm of the component of `x − y` orthogonal to `∇h(y)`; zero at a
/// first-order-optimal boundary projection.
fn stationarity_residual(
    set: &ConstraintSet,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<f64> {
    let g = set.eval_grad_h(y)?;
    let gnorm = g.norm();
    if gnorm <= 1e-300 {
        return Ok((x - y).norm());
    }
    let diff = x - y;
    let radial = g.clone() * (diff.dot(&g) / (gnorm * gnorm));
    Ok((diff - radial).norm())
}
