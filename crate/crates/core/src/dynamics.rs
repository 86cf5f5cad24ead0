//! Interconnected right-hand sides.
//!
//! An [`Interconnection`] couples free dynamics `ζ̇ = g(ζ, ξ)` on `ℝᵐ` with
//! constrained dynamics on `ξ ∈ S ⊂ ℝⁿ`. [`eval_field`] assembles the three
//! variants of the `ξ` equation — nominal, tangent-cone projected, and
//! CBF-filtered — while the `ζ` equation is never modified (the block metric
//! `diag(I, P)` leaves it free).

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Classification, ConstraintSet};
use crate::projection::{cbf_field_value, project_tangent, MetricMatrix};

type Field = dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync;

/// Which `ξ̇` assembly to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    /// `ξ̇ = f(ζ, ξ)`, unconstrained.
    Nominal,
    /// `ξ̇ = Π_S^P(ξ, f(ζ, ξ))`, discontinuous on `∂S`.
    Pds,
    /// `ξ̇ = f − min(0, L_f h + αh) P⁻¹∇h/‖∇h‖²_{P⁻¹}`, locally Lipschitz.
    Cbf(f64),
}

impl FieldKind {
    pub fn validate(&self) -> Result<()> {
        if let FieldKind::Cbf(alpha) = self {
            if !(alpha.is_finite() && *alpha > 0.0) {
                return Err(Error::Config(format!(
                    "Cbf field requires finite alpha > 0, got {alpha}"
                )));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            FieldKind::Nominal => "nominal".into(),
            FieldKind::Pds => "pds".into(),
            FieldKind::Cbf(a) => format!("cbf(alpha={a})"),
        }
    }
}

/// The coupled system `ζ̇ = g(ζ, ξ)`, `ξ̇ ~ f(ζ, ξ)` constrained to `S`,
/// together with the compact box `𝒵` the `ζ`-trajectories are expected to
/// stay in (used by the bounds estimator and containment checks).
pub struct Interconnection {
    m: usize,
    n: usize,
    g: Box<Field>,
    f: Box<Field>,
    set: ConstraintSet,
    metric: MetricMatrix,
    z_box: AxisBox,
}

impl std::fmt::Debug for Interconnection {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("Interconnection")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("set", &self.set)
            .finish()
    }
}

impl Interconnection {
    pub fn new(
        m: usize,
        n: usize,
        g: Box<Field>,
        f: Box<Field>,
        set: ConstraintSet,
        metric: MetricMatrix,
        z_box: AxisBox,
    ) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Config("state dimensions must be positive".into()));
        }
        if set.dim() != n {
            return Err(Error::Config(format!(
                "constraint set dimension {} does not match n = {n}",
                set.dim()
            )));
        }
        if metric.dim() != n {
            return Err(Error::Config(format!(
                "metric dimension {} does not match n = {n}",
                metric.dim()
            )));
        }
        if z_box.dim() != m {
            return Err(Error::Config(format!(
                "z box dimension {} does not match m = {m}",
                z_box.dim()
            )));
        }
        Ok(Self {
            m,
            n,
            g,
            f,
            set,
            metric,
            z_box,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn set(&self) -> &ConstraintSet {
        &self.set
    }

    pub fn metric(&self) -> &MetricMatrix {
        &self.metric
    }

    pub fn z_box(&self) -> &AxisBox {
        &self.z_box
    }

    pub fn eval_g(&self, z: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
        let v = (self.g)(z, x);
        if v.len() != self.m {
            return Err(Error::Config("g returned wrong dimension".into()));
        }
        if v.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(Error::eval("g", x))
        }
    }

    pub fn eval_f(&self, z: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
        let v = (self.f)(z, x);
        if v.len() != self.n {
            return Err(Error::Config("f returned wrong dimension".into()));
        }
        if v.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(Error::eval("f", x))
        }
    }

    /// `L_f h(z, x) = ∇h(x)ᵀ f(z, x)`.
    pub fn lie_derivative_h(&self, z: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
        Ok(self.set.eval_grad_h(x)?.dot(&self.eval_f(z, x)?))
    }

    /// Samples `g` and `f` over `𝒵 × bounding_box` for finiteness and a
    /// bounded finite-difference Lipschitz quotient of `f`.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let zs = self.z_box.sample(samples.max(2));
        let xs = self.set.bounding_box().sample(samples.max(2));
        let mut prev: Option<(DVector<f64>, DVector<f64>, DVector<f64>)> = None;
        for (z, x) in zs.iter().zip(xs.iter()) {
            if self.set.eval_h(x)? < 0.0 {
                continue;
            }
            let fv = self.eval_f(z, x)?;
            self.eval_g(z, x)?;
            if let Some((pz, px, pf)) = prev {
                let dist = ((&pz - z).norm_squared() + (&px - x).norm_squared()).sqrt();
                if dist > 1e-12 {
                    let quotient = (&pf - &fv).norm() / dist;
                    if !quotient.is_finite() {
                        return Err(Error::Eval {
                            what: "f Lipschitz quotient",
                            point: x.iter().copied().collect(),
                        });
                    }
                }
            }
            prev = Some((z.clone(), x.clone(), fv));
        }
        Ok(())
    }
}

/// Assembles `(ζ̇, ξ̇)` for the requested field kind.
pub fn eval_field(
    sys: &Interconnection,
    kind: FieldKind,
    z: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    kind.validate()?;
    let zdot = sys.eval_g(z, x)?;
    let xdot = match kind {
        FieldKind::Nominal => sys.eval_f(z, x)?,
        FieldKind::Pds => {
            let f = sys.eval_f(z, x)?;
            project_tangent(sys.set(), sys.metric(), x, &f)?
        }
        FieldKind::Cbf(alpha) => {
            let f = sys.eval_f(z, x)?;
            let grad = sys.set().eval_grad_h(x)?;
            let h = sys.set().eval_h(x)?;
            let lfh = grad.dot(&f);
            cbf_field_value(sys.metric(), &f, lfh, h, &grad, alpha)?
        }
    };
    Ok((zdot, xdot))
}

/// Distance from a candidate `ξ̇` to the normal-cone inclusion right-hand
/// side `f(z, x) − (P⁻¹ N_S(x) ∩ d_cap·𝔹)`.
///
/// In the interior the normal cone is `{0}` and the residual is
/// `‖ξ̇ − f‖`. On the boundary the cone is one-parameter, so the minimum is
/// a 1-D least-squares problem clamped to the cap on `‖P⁻¹η‖`; a residual
/// below ~1e-8 certifies membership.
pub fn di_residual(
    sys: &Interconnection,
    z: &DVector<f64>,
    x: &DVector<f64>,
    xdot: &DVector<f64>,
    d_cap: f64,
) -> Result<f64> {
    if d_cap < 0.0 {
        return Err(Error::Config("d_cap must be nonnegative".into()));
    }
    let cone = sys.set().classify(x)?;
    let f = sys.eval_f(z, x)?;
    let r = xdot - &f;
    match cone.classification {
        Classification::Outside => Err(Error::Domain(
            "inclusion residual requested outside S".into(),
        )),
        Classification::Interior => Ok(r.norm()),
        Classification::Boundary => {
            let grad = cone
                .normal_generator
                .expect("boundary classification carries the gradient");
            let q = sys.metric().p_inv() * &grad;
            let qnorm_sq = q.norm_squared();
            if qnorm_sq <= 1e-300 {
                return Ok(r.norm());
            }
            // Element of the rhs: f - lambda * P^{-1} grad, lambda <= 0,
            // |lambda| ||P^{-1} grad|| <= d_cap.
            let lambda_cap = if d_cap.is_finite() {
                d_cap / qnorm_sq.sqrt()
            } else {
                f64::INFINITY
            };
            let lambda_free = -r.dot(&q) / qnorm_sq;
            let lambda = lambda_free.clamp(-lambda_cap, 0.0);
            Ok((r + q * lambda).norm())
        }
    }
}
