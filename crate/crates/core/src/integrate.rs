//! Fixed-step integration producing [`Trajectory`] records.
//!
//! Three schemes:
//! - `Rk4`: classical Runge–Kutta for the locally Lipschitz nominal and CBF
//!   fields (not valid for the discontinuous PDS field);
//! - `ProjectedEuler`: the reference PDS discretization
//!   `x⁺ = proj_S(x + dt·f)`, `z⁺ = z + dt·g`;
//! - `TangentEvent`: explicit Euler on the tangent-cone-projected field with
//!   step halving when a step would exit `S`, then projection of the
//!   residual violation.
//!
//! All comparisons in the crate rely on trajectories of equal configuration
//! sharing their time grid exactly, so steps are never adapted, only halved
//! inside a step in `TangentEvent`.

use nalgebra::DVector;

use crate::dynamics::{eval_field, FieldKind, Interconnection};
use crate::error::{Error, Result};
use crate::projection::project_point_to_set;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Rk4,
    ProjectedEuler,
    TangentEvent,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct IntegrationConfig {
    /// Horizon `T` in the scenario's time units.
    pub t_end: f64,
    /// Base step.
    pub dt: f64,
    pub scheme: Scheme,
    /// Store every k-th step (step 0 and the final step are always stored).
    pub record_stride: usize,
    /// Allowed transient negativity of `h` along constrained trajectories.
    pub invariance_tol: f64,
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.dt < self.t_end) {
            return Err(Error::Config(format!(
                "need 0 < dt < t_end, got dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be >= 1".into()));
        }
        if self.invariance_tol < 0.0 {
            return Err(Error::Config("invariance_tol must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }

    /// Same grid at half the step: records land on identical times.
    pub fn halved(&self) -> IntegrationConfig {
        IntegrationConfig {
            dt: 0.5 * self.dt,
            record_stride: self.record_stride * 2,
            ..*self
        }
    }
}

/// Recorded solution samples plus run diagnostics.
///
/// `min_h` and `in_zbox` are accumulated over every accepted step, not just
/// recorded ones, so they bound the whole discrete trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub zs: Vec<DVector<f64>>,
    pub xs: Vec<DVector<f64>>,
    pub kind: FieldKind,
    pub config: IntegrationConfig,
    pub min_h: f64,
    pub in_zbox: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal(&self) -> (&DVector<f64>, &DVector<f64>) {
        (
            self.zs.last().expect("nonempty trajectory"),
            self.xs.last().expect("nonempty trajectory"),
        )
    }

    /// Sup over the shared record grid (restricted to `t ≤ t_max`) of the
    /// Euclidean distance between the stacked states.
    pub fn sup_distance(&self, other: &Trajectory, t_max: f64) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Config(format!(
                "trajectories have different record counts ({} vs {})",
                self.len(),
                other.len()
            )));
        }
        let mut sup: f64 = 0.0;
        for i in 0..self.len() {
            let (ta, tb) = (self.times[i], other.times[i]);
            if (ta - tb).abs() > 1e-9 * (1.0 + ta.abs()) {
                return Err(Error::Config("trajectories do not share a time grid".into()));
            }
            if ta > t_max + 1e-12 {
                break;
            }
            let dz = (&self.zs[i] - &other.zs[i]).norm_squared();
            let dx = (&self.xs[i] - &other.xs[i]).norm_squared();
            sup = sup.max((dz + dx).sqrt());
        }
        Ok(sup)
    }

    /// CSV with header `t,z1..zm,x1..xn,h`, 17 significant digits.
    pub fn write_csv<W: std::io::Write>(
        &self,
        sys: &Interconnection,
        out: &mut W,
    ) -> std::io::Result<()> {
        write!(out, "t")?;
        for i in 1..=sys.m() {
            write!(out, ",z{i}")?;
        }
        for i in 1..=sys.n() {
            write!(out, ",x{i}")?;
        }
        writeln!(out, ",h")?;
        for k in 0..self.len() {
            write!(out, "{:.16e}", self.times[k])?;
            for v in self.zs[k].iter() {
                write!(out, ",{v:.16e}")?;
            }
            for v in self.xs[k].iter() {
                write!(out, ",{v:.16e}")?;
            }
            let h = sys
                .set()
                .eval_h(&self.xs[k])
                .map_err(|e| std::io::Error::other(e.to_string()))?;
            writeln!(out, ",{h:.16e}")?;
        }
        Ok(())
    }
}

struct Recorder<'a> {
    sys: &'a Interconnection,
    cfg: IntegrationConfig,
    times: Vec<f64>,
    zs: Vec<DVector<f64>>,
    xs: Vec<DVector<f64>>,
    min_h: f64,
    in_zbox: bool,
}

impl<'a> Recorder<'a> {
    fn new(sys: &'a Interconnection, cfg: IntegrationConfig) -> Self {
        Self {
            sys,
            cfg,
            times: Vec::new(),
            zs: Vec::new(),
            xs: Vec::new(),
            min_h: f64::INFINITY,
            in_zbox: true,
        }
    }

    fn observe(&mut self, step: usize, total: usize, t: f64, z: &DVector<f64>, x: &DVector<f64>) -> Result<()> {
        let h = self.sys.set().eval_h(x)?;
        self.min_h = self.min_h.min(h);
        self.in_zbox &= self.sys.z_box().contains(z);
        if step % self.cfg.record_stride == 0 || step == total {
            self.times.push(t);
            self.zs.push(z.clone());
            self.xs.push(x.clone());
        }
        Ok(())
    }

    fn finish(self, kind: FieldKind) -> Trajectory {
        Trajectory {
            times: self.times,
            zs: self.zs,
            xs: self.xs,
            kind,
            config: self.cfg,
            min_h: self.min_h,
            in_zbox: self.in_zbox,
        }
    }
}

/// Integrates the interconnection from `(z0, x0)`.
pub fn integrate(
    sys: &Interconnection,
    kind: FieldKind,
    z0: &DVector<f64>,
    x0: &DVector<f64>,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    kind.validate()?;
    if z0.len() != sys.m() || x0.len() != sys.n() {
        return Err(Error::Config("initial condition dimension mismatch".into()));
    }
    match (cfg.scheme, kind) {
        (Scheme::Rk4, FieldKind::Pds) => {
            return Err(Error::Config(
                "Rk4 cannot integrate the discontinuous Pds field; use ProjectedEuler or TangentEvent"
                    .into(),
            ))
        }
        (Scheme::ProjectedEuler, k) | (Scheme::TangentEvent, k) if k != FieldKind::Pds => {
            return Err(Error::Config(format!(
                "{:?} integrates only the Pds kind, got {}",
                cfg.scheme,
                k.label()
            )))
        }
        _ => {}
    }
    let h0 = sys.set().eval_h(x0)?;
    if h0 < -sys.set().boundary_tol() {
        return Err(Error::Domain(format!(
            "initial state lies outside S (h = {h0:.3e})"
        )));
    }
    if !sys.z_box().contains(z0) {
        return Err(Error::Domain("initial z lies outside the z box".into()));
    }

    let total = cfg.steps();
    let mut rec = Recorder::new(sys, *cfg);
    let mut z = z0.clone();
    let mut x = x0.clone();
    rec.observe(0, total, 0.0, &z, &x)?;

    for step in 1..=total {
        match cfg.scheme {
            Scheme::Rk4 => rk4_step(sys, kind, &mut z, &mut x, cfg.dt)?,
            Scheme::ProjectedEuler => projected_euler_step(sys, &mut z, &mut x, cfg.dt)?,
            Scheme::TangentEvent => tangent_event_step(sys, &mut z, &mut x, cfg.dt, cfg.invariance_tol)?,
        }
        rec.observe(step, total, step as f64 * cfg.dt, &z, &x)?;
    }
    let traj = rec.finish(kind);
    if matches!(kind, FieldKind::Pds | FieldKind::Cbf(_)) && traj.min_h < -cfg.invariance_tol {
        log::warn!(
            "{} trajectory left S beyond the invariance tolerance (min h = {:.3e})",
            kind.label(),
            traj.min_h
        );
    }
    Ok(traj)
}

fn rk4_step(
    sys: &Interconnection,
    kind: FieldKind,
    z: &mut DVector<f64>,
    x: &mut DVector<f64>,
    dt: f64,
) -> Result<()> {
    let (k1z, k1x) = eval_field(sys, kind, z, x)?;
    let (k2z, k2x) = eval_field(
        sys,
        kind,
        &(&*z + &k1z * (0.5 * dt)),
        &(&*x + &k1x * (0.5 * dt)),
    )?;
    let (k3z, k3x) = eval_field(
        sys,
        kind,
        &(&*z + &k2z * (0.5 * dt)),
        &(&*x + &k2x * (0.5 * dt)),
    )?;
    let (k4z, k4x) = eval_field(sys, kind, &(&*z + &k3z * dt), &(&*x + &k3x * dt))?;
    *z += (k1z + k2z * 2.0 + k3z * 2.0 + k4z) * (dt / 6.0);
    *x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0);
    Ok(())
}

fn projected_euler_step(
    sys: &Interconnection,
    z: &mut DVector<f64>,
    x: &mut DVector<f64>,
    dt: f64,
) -> Result<()> {
    let g = sys.eval_g(z, x)?;
    let f = sys.eval_f(z, x)?;
    let free = &*x + f * dt;
    *x = project_point_to_set(sys.set(), &free)?;
    *z += g * dt;
    Ok(())
}

/// Euler on the projected field; sub-steps are halved (up to 2⁻²⁰ dt) until
/// the post-step state satisfies `h ≥ −invariance_tol`, and any residual
/// violation is projected away before continuing.
fn tangent_event_step(
    sys: &Interconnection,
    z: &mut DVector<f64>,
    x: &mut DVector<f64>,
    dt: f64,
    invariance_tol: f64,
) -> Result<()> {
    let mut remaining = dt;
    let min_step = dt * 2f64.powi(-20);
    while remaining > 1e-300 {
        let (gz, px) = eval_field(sys, FieldKind::Pds, z, x)?;
        let mut step = remaining;
        let mut x_trial = &*x + &px * step;
        while sys.set().eval_h(&x_trial)? < -invariance_tol && step > min_step {
            step *= 0.5;
            x_trial = &*x + &px * step;
        }
        if sys.set().eval_h(&x_trial)? < -sys.set().boundary_tol() {
            x_trial = project_point_to_set(sys.set(), &x_trial)?;
        }
        *z += gz * step;
        *x = x_trial;
        remaining -= step;
    }
    Ok(())
}

/// Integrates at `dt` and `dt/2` and returns the sup-norm discrepancy on the
/// shared record grid; small values certify the step is fine enough for the
/// distances being measured.
pub fn refine_check(
    sys: &Interconnection,
    kind: FieldKind,
    z0: &DVector<f64>,
    x0: &DVector<f64>,
    cfg: &IntegrationConfig,
) -> Result<f64> {
    let coarse = integrate(sys, kind, z0, x0, cfg)?;
    let fine = integrate(sys, kind, z0, x0, &cfg.halved())?;
    coarse.sup_distance(&fine, cfg.t_end)
}
