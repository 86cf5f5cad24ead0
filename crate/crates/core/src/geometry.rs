//! Constraint sets `S = {x : h(x) ≥ 0}` and their cone data.
//!
//! A [`ConstraintSet`] bundles the scalar barrier `h`, its analytic gradient,
//! a class-K∞ comparison function `γ` with `d(x, ∂S) ≤ γ(h(x))` on `S`, and a
//! bounding box used by all samplers. Points are classified against a small
//! absolute tolerance on `h`; on the boundary the tangent cone is the
//! half-space `{v : ∇h(x)ᵀ v ≥ 0}` and the normal cone is spanned by
//! nonpositive multiples of `∇h(x)`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::sampling;

/// Absolute tolerance on `h` below which a point counts as boundary.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-9;

type ScalarFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type GammaFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Axis-aligned box, used both as the sampling region around `S` and as the
/// compact set `𝒵` constraining the interconnected state.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    lo: DVector<f64>,
    hi: DVector<f64>,
}

impl AxisBox {
    pub fn new(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Config("box bounds have mismatched dimensions".into()));
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| l > h || !l.is_finite() || !h.is_finite()) {
            return Err(Error::Config("box requires finite lo <= hi per axis".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn from_slices(lo: &[f64], hi: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(lo), DVector::from_row_slice(hi))
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &DVector<f64> {
        &self.lo
    }

    pub fn hi(&self) -> &DVector<f64> {
        &self.hi
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(self.hi.iter()))
                .all(|(&xi, (&l, &h))| xi >= l && xi <= h)
    }

    /// Box grown by `frac` of its half-widths on every side.
    pub fn inflate(&self, frac: f64) -> AxisBox {
        let half = (&self.hi - &self.lo) * (0.5 * frac);
        AxisBox {
            lo: &self.lo - &half,
            hi: &self.hi + &half,
        }
    }

    pub fn diameter(&self) -> f64 {
        (&self.hi - &self.lo).norm()
    }

    /// Halton points inside the box, 1-based start.
    pub fn sample(&self, count: usize) -> Vec<DVector<f64>> {
        sampling::box_points(&self.lo, &self.hi).take(count).collect()
    }
}

/// Closed-form backing for the shipped set families. `Custom` sets fall back
/// to the iterative geometry routines.
#[derive(Debug, Clone)]
pub enum Shape {
    /// 1-D set `[c − r, c + r]` with `h(u) = r² − (u − c)²`.
    Interval { center: f64, radius: f64 },
    /// `h(x) = r² − ‖x − c‖²`.
    Ball { center: DVector<f64>, radius: f64 },
    /// Named set registered by the scenario catalog.
    Custom { name: String },
}

/// Point classification relative to `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Interior,
    Boundary,
    Outside,
}

/// Cone data at a classified point. `normal_generator` is `∇h(x)` and is
/// present exactly when the point is on the boundary; the normal cone is the
/// set of nonpositive multiples of it.
#[derive(Debug, Clone)]
pub struct ConeData {
    pub classification: Classification,
    pub normal_generator: Option<DVector<f64>>,
}

/// The set `S = {x : h(x) ≥ 0}` with the data every other module needs.
pub struct ConstraintSet {
    dim: usize,
    h: Box<ScalarFn>,
    grad_h: Box<VectorFn>,
    gamma: Box<GammaFn>,
    boundary_tol: f64,
    bounding_box: AxisBox,
    shape: Shape,
}

impl std::fmt::Debug for ConstraintSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConstraintSet")
            .field("dim", &self.dim)
            .field("shape", &self.shape)
            .field("boundary_tol", &self.boundary_tol)
            .finish()
    }
}

impl ConstraintSet {
    /// 1-D interval `[lo, hi]` as the barrier `h(u) = r² − (u − c)²`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config("interval requires finite lo < hi".into()));
        }
        let center = 0.5 * (lo + hi);
        let radius = 0.5 * (hi - lo);
        Ok(Self {
            dim: 1,
            h: Box::new(move |x| radius * radius - (x[0] - center) * (x[0] - center)),
            grad_h: Box::new(move |x| DVector::from_vec(vec![-2.0 * (x[0] - center)])),
            gamma: Box::new(move |s| s / radius),
            boundary_tol: DEFAULT_BOUNDARY_TOL,
            bounding_box: AxisBox::from_slices(&[lo], &[hi])?,
            shape: Shape::Interval { center, radius },
        })
    }

    /// Euclidean ball with `h(x) = r² − ‖x − c‖²` and `γ(s) = s/r`.
    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("ball requires finite center and radius > 0".into()));
        }
        let dim = center.len();
        let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
        let c_h = center.clone();
        let c_g = center.clone();
        Ok(Self {
            dim,
            h: Box::new(move |x| radius * radius - (x - &c_h).norm_squared()),
            grad_h: Box::new(move |x| (x - &c_g) * -2.0),
            gamma: Box::new(move |s| s / radius),
            boundary_tol: DEFAULT_BOUNDARY_TOL,
            bounding_box: AxisBox::from_slices(&lo, &hi)?,
            shape: Shape::Ball { center, radius },
        })
    }

    /// Fully user-specified set. `gamma` must satisfy `d(x, ∂S) ≤ γ(h(x))`
    /// on `S`; [`ConstraintSet::validate`] samples that requirement.
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        h: Box<ScalarFn>,
        grad_h: Box<VectorFn>,
        gamma: Box<GammaFn>,
        bounding_box: AxisBox,
    ) -> Result<Self> {
        if bounding_box.dim() != dim {
            return Err(Error::Config("bounding box dimension mismatch".into()));
        }
        Ok(Self {
            dim,
            h,
            grad_h,
            gamma,
            boundary_tol: DEFAULT_BOUNDARY_TOL,
            bounding_box,
            shape: Shape::Custom { name: name.into() },
        })
    }

    pub fn with_boundary_tol(mut self, tol: f64) -> Self {
        self.boundary_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boundary_tol(&self) -> f64 {
        self.boundary_tol
    }

    pub fn bounding_box(&self) -> &AxisBox {
        &self.bounding_box
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Evaluates `h(x)`, rejecting non-finite results.
    pub fn eval_h(&self, x: &DVector<f64>) -> Result<f64> {
        let v = (self.h)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::eval("h", x))
        }
    }

    /// Evaluates `∇h(x)`, rejecting non-finite results.
    pub fn eval_grad_h(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let g = (self.grad_h)(x);
        if g.len() != self.dim {
            return Err(Error::Config("grad_h returned wrong dimension".into()));
        }
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(Error::eval("grad_h", x))
        }
    }

    pub fn gamma(&self, s: f64) -> f64 {
        (self.gamma)(s)
    }

    /// `γ⁻¹(target)` by bisection to absolute tolerance 1e-12, bracket grown
    /// geometrically from the bounding-box diameter.
    pub fn gamma_inverse(&self, target: f64) -> Result<f64> {
        if target < 0.0 {
            return Err(Error::Domain(format!("gamma_inverse of negative value {target}")));
        }
        if target == 0.0 {
            return Ok(0.0);
        }
        let mut hi = self.bounding_box.diameter().max(1.0);
        let mut grow = 0;
        while self.gamma(hi) < target {
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(Error::Estimation(format!(
                    "gamma bracket did not reach target {target}; gamma may not be class-K-infinity"
                )));
            }
        }
        let mut lo = 0.0;
        // 1e-12 tolerance relative to the bracket scale; the cap covers the
        // case where the bracket shrinks to adjacent floats first.
        for _ in 0..200 {
            if hi - lo <= 1e-12 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.gamma(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Classifies `x` against `S` and attaches the normal-cone generator on
    /// the boundary.
    pub fn classify(&self, x: &DVector<f64>) -> Result<ConeData> {
        if x.len() != self.dim || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "classify requires a finite {}-dimensional point",
                self.dim
            )));
        }
        let h = self.eval_h(x)?;
        if h > self.boundary_tol {
            Ok(ConeData {
                classification: Classification::Interior,
                normal_generator: None,
            })
        } else if h < -self.boundary_tol {
            Ok(ConeData {
                classification: Classification::Outside,
                normal_generator: None,
            })
        } else {
            Ok(ConeData {
                classification: Classification::Boundary,
                normal_generator: Some(self.eval_grad_h(x)?),
            })
        }
    }

    /// Half-space description of the tangent cone: `None` in the interior
    /// (the cone is all of `ℝⁿ`), the generator `w = ∇h(x)` on the boundary
    /// (the cone is `{v : wᵀv ≥ 0}`). Outside points have no tangent cone
    /// here.
    pub fn tangent_halfspace(&self, cone: &ConeData) -> Result<Option<DVector<f64>>> {
        match cone.classification {
            Classification::Interior => Ok(None),
            Classification::Boundary => Ok(Some(
                cone.normal_generator
                    .clone()
                    .ok_or_else(|| Error::Config("boundary cone without generator".into()))?,
            )),
            Classification::Outside => Err(Error::Domain(
                "tangent cone is undefined outside the constraint set".into(),
            )),
        }
    }

    /// Nearest boundary point to `x`. Closed form for interval/ball shapes,
    /// bracketed line search along `−∇h` plus SQP refinement for custom sets.
    pub fn nearest_boundary_point(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.shape {
            Shape::Interval { center, radius } => {
                let side = if x[0] - center >= 0.0 { 1.0 } else { -1.0 };
                Ok(DVector::from_vec(vec![center + side * radius]))
            }
            Shape::Ball { center, radius } => {
                let offset = x - center;
                let norm = offset.norm();
                if norm < 1e-300 {
                    // Center point: every boundary point is nearest; pick the
                    // first-axis one.
                    let mut y = center.clone();
                    y[0] += radius;
                    Ok(y)
                } else {
                    Ok(center + offset * (radius / norm))
                }
            }
            Shape::Custom { .. } => self.nearest_boundary_iterative(x),
        }
    }

    fn nearest_boundary_iterative(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let h0 = self.eval_h(x)?;
        let y0 = if h0.abs() <= self.boundary_tol {
            x.clone()
        } else {
            self.bracket_boundary(x, h0)?
        };
        self.refine_boundary_projection(x, y0)
    }

    /// Walks from `x` until `h` changes sign, then bisects the crossing.
    fn bracket_boundary(&self, x: &DVector<f64>, h0: f64) -> Result<DVector<f64>> {
        let grad = self.eval_grad_h(x)?;
        let mut dirs: Vec<DVector<f64>> = Vec::new();
        let gnorm = grad.norm();
        if gnorm > 1e-12 {
            // h decreases along −∇h; from inside that walks toward ∂S.
            let sign = if h0 > 0.0 { -1.0 } else { 1.0 };
            dirs.push(&grad * (sign / gnorm));
        } else {
            for axis in 0..self.dim {
                let mut e = DVector::zeros(self.dim);
                e[axis] = 1.0;
                dirs.push(e.clone());
                dirs.push(-e);
            }
        }
        let max_travel = self.bounding_box.inflate(0.2).diameter();
        let mut best: Option<(f64, DVector<f64>)> = None;
        for dir in &dirs {
            if let Some((t, y)) = self.bisect_crossing(x, dir, h0, max_travel)? {
                if best.as_ref().map_or(true, |(bt, _)| t < *bt) {
                    best = Some((t, y));
                }
            }
        }
        best.map(|(_, y)| y).ok_or_else(|| {
            Error::Estimation("boundary search found no sign change within the bounding box".into())
        })
    }

    fn bisect_crossing(
        &self,
        x: &DVector<f64>,
        dir: &DVector<f64>,
        h0: f64,
        max_travel: f64,
    ) -> Result<Option<(f64, DVector<f64>)>> {
        let mut t_lo = 0.0;
        let mut t_hi = max_travel * 2f64.powi(-30);
        let mut found = false;
        while t_hi <= max_travel {
            let h = self.eval_h(&(x + dir * t_hi))?;
            if h.signum() != h0.signum() || h == 0.0 {
                found = true;
                break;
            }
            t_lo = t_hi;
            t_hi *= 2.0;
        }
        if !found {
            return Ok(None);
        }
        for _ in 0..200 {
            let mid = 0.5 * (t_lo + t_hi);
            let h = self.eval_h(&(x + dir * mid))?;
            if h.signum() == h0.signum() && h != 0.0 {
                t_lo = mid;
            } else {
                t_hi = mid;
            }
            if t_hi - t_lo < 1e-15 * (1.0 + t_hi) {
                break;
            }
        }
        let t = 0.5 * (t_lo + t_hi);
        Ok(Some((t, x + dir * t)))
    }

    /// SQP refinement of a boundary point toward `argmin_{h(y)=0} ‖y − x‖`.
    /// Each step solves the linearized problem in closed form.
    fn refine_boundary_projection(
        &self,
        x: &DVector<f64>,
        mut y: DVector<f64>,
    ) -> Result<DVector<f64>> {
        for _ in 0..100 {
            let g = self.eval_grad_h(&y)?;
            let gsq = g.norm_squared();
            if gsq < 1e-24 {
                return Err(Error::Regularity(
                    "vanishing gradient during boundary projection".into(),
                ));
            }
            let hv = self.eval_h(&y)?;
            let step = (g.dot(&(x - &y)) + hv) / gsq;
            let y_next = x - &g * step;
            let moved = (&y_next - &y).norm();
            y = y_next;
            if moved <= 1e-13 * (1.0 + x.norm()) {
                break;
            }
        }
        // Polish h(y) = 0 along the gradient.
        for _ in 0..5 {
            let hv = self.eval_h(&y)?;
            if hv.abs() <= 1e-14 * (1.0 + hv.abs()) {
                break;
            }
            let g = self.eval_grad_h(&y)?;
            let gsq = g.norm_squared();
            if gsq < 1e-24 {
                break;
            }
            y += &g * (-hv / gsq);
        }
        Ok(y)
    }

    /// Estimated distance from `x ∈ S` to `∂S`, an upper bound accurate to
    /// 1e-6 on the shipped set families.
    pub fn distance_to_boundary(&self, x: &DVector<f64>) -> Result<f64> {
        let h = self.eval_h(x)?;
        if h < -self.boundary_tol {
            return Err(Error::Domain(format!(
                "distance_to_boundary requires a point of S (h = {h:.3e})"
            )));
        }
        let y = self.nearest_boundary_point(x)?;
        Ok((x - &y).norm())
    }

    /// Deterministic samples of `∂S`. Analytic parametrization for the
    /// closed-form shapes, interior Halton points projected to the boundary
    /// for custom sets.
    pub fn boundary_samples(&self, count: usize) -> Result<Vec<DVector<f64>>> {
        if count == 0 {
            return Err(Error::Config("boundary sample count must be positive".into()));
        }
        match &self.shape {
            Shape::Interval { center, radius } => Ok((0..count)
                .map(|i| {
                    let side = if i % 2 == 0 { 1.0 } else { -1.0 };
                    DVector::from_vec(vec![center + side * radius])
                })
                .collect()),
            Shape::Ball { center, radius } => {
                if self.dim == 1 {
                    return Ok((0..count)
                        .map(|i| {
                            let side = if i % 2 == 0 { 1.0 } else { -1.0 };
                            DVector::from_vec(vec![center[0] + side * radius])
                        })
                        .collect());
                }
                if self.dim == 2 {
                    return Ok((0..count)
                        .map(|i| {
                            let theta = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                            DVector::from_vec(vec![
                                center[0] + radius * theta.cos(),
                                center[1] + radius * theta.sin(),
                            ])
                        })
                        .collect());
                }
                let mut out = Vec::with_capacity(count);
                for p in sampling::unit_ball_points(self.dim) {
                    let norm = p.norm();
                    if norm > 1e-6 {
                        out.push(center + p * (radius / norm));
                        if out.len() == count {
                            break;
                        }
                    }
                }
                Ok(out)
            }
            Shape::Custom { .. } => {
                let mut out = Vec::with_capacity(count);
                for x in sampling::box_points(self.bounding_box.lo(), self.bounding_box.hi()) {
                    if self.eval_h(&x)? >= 0.0 {
                        out.push(self.nearest_boundary_point(&x)?);
                        if out.len() == count {
                            break;
                        }
                    }
                    if out.len() >= count {
                        break;
                    }
                }
                if out.len() < count {
                    return Err(Error::Estimation(
                        "could not collect the requested number of boundary samples".into(),
                    ));
                }
                Ok(out)
            }
        }
    }

    /// Halton points of the bounding box lying in `S`.
    pub fn interior_samples(&self, count: usize) -> Result<Vec<DVector<f64>>> {
        let mut out = Vec::with_capacity(count);
        let mut tried = 0usize;
        for x in sampling::box_points(self.bounding_box.lo(), self.bounding_box.hi()) {
            tried += 1;
            if self.eval_h(&x)? > self.boundary_tol {
                out.push(x);
                if out.len() == count {
                    return Ok(out);
                }
            }
            if tried > 1000 * count.max(10) {
                break;
            }
        }
        Err(Error::Estimation(
            "bounding box sampling produced too few interior points".into(),
        ))
    }

    /// Samples the standing assumptions: gradient consistency against central
    /// differences, `γ(0) = 0` and monotonicity, `d(x,∂S) ≤ γ(h(x))`, and a
    /// nonvanishing gradient on the boundary.
    pub fn validate(&self, interior_points: usize, boundary_points: usize) -> Result<()> {
        self.check_gradient(interior_points.min(1000))?;

        if self.gamma(0.0).abs() > 1e-12 {
            return Err(Error::Config("gamma(0) must be 0".into()));
        }
        let mut prev = 0.0;
        for k in 1..=64 {
            let s = k as f64 * 0.1;
            let g = self.gamma(s);
            if !(g > prev) {
                return Err(Error::Config(format!(
                    "gamma must be strictly increasing; gamma({s}) = {g}"
                )));
            }
            prev = g;
        }

        for x in self.interior_samples(interior_points)? {
            let d = self.distance_to_boundary(&x)?;
            let bound = self.gamma(self.eval_h(&x)?);
            if d > bound + 1e-6 {
                return Err(Error::Config(format!(
                    "comparison function violated: d = {d:.6e} > gamma(h) = {bound:.6e}"
                )));
            }
        }

        for y in self.boundary_samples(boundary_points)? {
            if self.eval_grad_h(&y)?.norm() <= 1e-12 {
                return Err(Error::Regularity(
                    "gradient vanishes at a boundary sample".into(),
                ));
            }
        }
        Ok(())
    }

    /// Central-difference check of `grad_h` at deterministic interior points.
    pub fn check_gradient(&self, points: usize) -> Result<()> {
        let scale = self.bounding_box.diameter().max(1.0);
        let step = 1e-6 * scale;
        for x in self.interior_samples(points)? {
            let g = self.eval_grad_h(&x)?;
            let mut fd = DVector::zeros(self.dim);
            for axis in 0..self.dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[axis] += step;
                xm[axis] -= step;
                fd[axis] = (self.eval_h(&xp)? - self.eval_h(&xm)?) / (2.0 * step);
            }
            let err = (&g - &fd).norm();
            if err > 1e-5 * (1.0 + g.norm()) {
                return Err(Error::Config(format!(
                    "analytic gradient disagrees with finite differences by {err:.3e} at {:?}",
                    x.as_slice()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval_set() -> ConstraintSet {
        ConstraintSet::interval(-0.6, 0.6).unwrap()
    }

    fn unit_disk() -> ConstraintSet {
        ConstraintSet::ball(DVector::from_vec(vec![0.0, 0.0]), 1.0).unwrap()
    }

    #[test]
    fn classify_interval_cases() {
        let s = interval_set();
        let c = s.classify(&DVector::from_vec(vec![0.0])).unwrap();
        assert_eq!(c.classification, Classification::Interior);
        assert!(c.normal_generator.is_none());

        let c = s.classify(&DVector::from_vec(vec![0.6])).unwrap();
        assert_eq!(c.classification, Classification::Boundary);
        let g = c.normal_generator.unwrap();
        assert!((g[0] + 1.2).abs() < 1e-14);
    }

    #[test]
    fn classify_outside_disk() {
        let s = unit_disk();
        let c = s.classify(&DVector::from_vec(vec![2.0, 0.0])).unwrap();
        assert_eq!(c.classification, Classification::Outside);
    }

    #[test]
    fn classify_boundary_respects_tol() {
        let s = interval_set();
        for u in [0.6, 0.599999, 0.6000001, 0.0, -0.61] {
            let x = DVector::from_vec(vec![u]);
            let c = s.classify(&x).unwrap();
            let h = s.eval_h(&x).unwrap();
            if c.classification == Classification::Boundary {
                assert!(h.abs() <= s.boundary_tol());
            }
        }
    }

    #[test]
    fn tangent_halfspace_cases() {
        let s = interval_set();
        let interior = s.classify(&DVector::from_vec(vec![0.0])).unwrap();
        assert!(s.tangent_halfspace(&interior).unwrap().is_none());

        let boundary = s.classify(&DVector::from_vec(vec![0.6])).unwrap();
        let w = s.tangent_halfspace(&boundary).unwrap().unwrap();
        assert!((w[0] + 1.2).abs() < 1e-14);

        let disk = unit_disk();
        let b = disk.classify(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let w = disk.tangent_halfspace(&b).unwrap().unwrap();
        assert!((w[0] + 2.0).abs() < 1e-14 && w[1].abs() < 1e-14);

        let outside = disk.classify(&DVector::from_vec(vec![2.0, 0.0])).unwrap();
        assert!(matches!(
            disk.tangent_halfspace(&outside),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn distance_to_boundary_closed_forms() {
        let s = interval_set();
        let d = s.distance_to_boundary(&DVector::from_vec(vec![0.1])).unwrap();
        assert!((d - 0.5).abs() < 1e-12);

        let disk = unit_disk();
        let d = disk
            .distance_to_boundary(&DVector::from_vec(vec![0.5, 0.0]))
            .unwrap();
        assert!((d - 0.5).abs() < 1e-12);

        let big = ConstraintSet::ball(DVector::from_vec(vec![0.0, 4000.0]), 500.0).unwrap();
        let d = big
            .distance_to_boundary(&DVector::from_vec(vec![0.0, 4000.0]))
            .unwrap();
        assert!((d - 500.0).abs() < 1e-9);
    }

    #[test]
    fn distance_rejects_outside_points() {
        let s = interval_set();
        assert!(matches!(
            s.distance_to_boundary(&DVector::from_vec(vec![0.9])),
            Err(Error::Domain(_))
        ));
    }

    /// Annulus `(r₂² − ‖x‖²)(‖x‖² − r₁²) ≥ 0` exercises the iterative path.
    fn annulus() -> ConstraintSet {
        let (r1sq, r2sq) = (0.25, 2.25);
        ConstraintSet::custom(
            "annulus-test",
            2,
            Box::new(move |x: &DVector<f64>| {
                let q = x.norm_squared();
                (r2sq - q) * (q - r1sq)
            }),
            Box::new(move |x: &DVector<f64>| x * (2.0 * (r2sq + r1sq - 2.0 * x.norm_squared()))),
            Box::new(|s| s), // d <= h / (r1 (r2^2 - r1^2)) = h
            AxisBox::from_slices(&[-1.5, -1.5], &[1.5, 1.5]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn custom_boundary_projection_matches_radial_answer() {
        let s = annulus();
        // Nearest boundary of an annulus point is radial.
        let x = DVector::from_vec(vec![0.0, 0.8]);
        let y = s.nearest_boundary_point(&x).unwrap();
        assert!((y.norm() - 0.5).abs() < 1e-9, "inner circle, got {:?}", y.as_slice());
        let d = s.distance_to_boundary(&x).unwrap();
        assert!((d - 0.3).abs() < 1e-9);

        let x = DVector::from_vec(vec![1.2, 0.0]);
        let d = s.distance_to_boundary(&x).unwrap();
        assert!((d - 0.3).abs() < 1e-9);
    }

    #[test]
    fn gamma_inverse_round_trip() {
        let s = unit_disk();
        for t in [0.1, 0.33, 0.9] {
            let inv = s.gamma_inverse(t).unwrap();
            assert!((s.gamma(inv) - t).abs() < 1e-10);
        }
        assert_eq!(s.gamma_inverse(0.0).unwrap(), 0.0);
    }

    #[test]
    fn gamma_comparison_holds_on_ball_sets() {
        // d(x, dS) <= gamma(h(x)) at 10^4 interior samples.
        for set in [unit_disk(), ConstraintSet::ball(DVector::from_vec(vec![0.0, 4000.0]), 500.0).unwrap()] {
            for x in set.interior_samples(10_000).unwrap() {
                let d = set.distance_to_boundary(&x).unwrap();
                assert!(d <= set.gamma(set.eval_h(&x).unwrap()) + 1e-9);
            }
        }
    }

    #[test]
    fn validate_accepts_shipped_shapes() {
        interval_set().validate(200, 64).unwrap();
        unit_disk().validate(200, 64).unwrap();
        annulus().validate(200, 64).unwrap();
    }

    #[test]
    fn validate_rejects_wrong_gradient_sign() {
        let bad = ConstraintSet::custom(
            "broken",
            1,
            Box::new(|x: &DVector<f64>| 0.36 - x[0] * x[0]),
            Box::new(|x: &DVector<f64>| DVector::from_vec(vec![2.0 * x[0]])),
            Box::new(|s| s / 0.6),
            AxisBox::from_slices(&[-0.6], &[0.6]).unwrap(),
        )
        .unwrap();
        assert!(bad.check_gradient(100).is_err());
    }
}
