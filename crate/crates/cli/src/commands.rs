//! The four subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use pdscbf_core::*;
use serde_json::json;

use crate::manifest::RunManifest;
use crate::svg::{line_chart, Series};
use crate::{CliError, CliResult};

type CheckResult = std::result::Result<(), String>;

/// Loads the scenario either by name or from a JSON config file.
pub fn resolve_scenario(
    scenario: &Option<String>,
    config: &Option<PathBuf>,
) -> CliResult<(Interconnection, ScenarioConfig)> {
    match (scenario, config) {
        (Some(name), None) => scenario_by_name(name).map_err(CliError::config),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let cfg = ScenarioConfig::from_json(&text).map_err(CliError::config)?;
            let sys = build_from_config(&cfg).map_err(CliError::config)?;
            Ok((sys, cfg))
        }
        _ => Err(CliError::Config(
            "exactly one of --scenario or --config is required".into(),
        )),
    }
}

fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn cmd_simulate(
    scenario: &Option<String>,
    config: &Option<PathBuf>,
    kind: &str,
    alpha: Option<f64>,
    out: &Path,
) -> CliResult<()> {
    let (sys, cfg) = resolve_scenario(scenario, config)?;
    let (field_kind, scheme) = match kind {
        "nominal" => (FieldKind::Nominal, Scheme::Rk4),
        "pds" => (FieldKind::Pds, Scheme::ProjectedEuler),
        "cbf" => {
            let alpha = alpha.ok_or_else(|| {
                CliError::Config("--alpha is required when --kind cbf".into())
            })?;
            (FieldKind::Cbf(alpha), Scheme::Rk4)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown kind '{other}' (expected nominal, pds, cbf)"
            )))
        }
    };
    if alpha.is_some() && !matches!(field_kind, FieldKind::Cbf(_)) {
        return Err(CliError::Config("--alpha only applies to --kind cbf".into()));
    }

    let started = Instant::now();
    let traj = integrate(&sys, field_kind, &cfg.z0(), &cfg.x0(), &cfg.integration(scheme))
        .map_err(CliError::runtime)?;

    let mut file = std::fs::File::create(out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    traj.write_csv(&sys, &mut file)
        .map_err(|e| CliError::Runtime(format!("csv write failed: {e}")))?;

    let (zt, xt) = traj.terminal();
    let mut manifest = RunManifest::new("simulate", cfg);
    manifest.parameters = json!({ "kind": kind, "alpha": alpha, "scheme": format!("{scheme:?}") });
    manifest.summary = json!({
        "records": traj.len(),
        "min_h": traj.min_h,
        "in_zbox": traj.in_zbox,
        "terminal_z": zt.as_slice(),
        "terminal_x": xt.as_slice(),
    });
    manifest.outputs = vec![out.to_path_buf()];
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest
        .write(&manifest_path_for(out))
        .map_err(|e| CliError::Runtime(format!("manifest write failed: {e}")))?;
    println!(
        "simulate {}: {} records, min h = {:.3e} -> {}",
        kind,
        traj.len(),
        traj.min_h,
        out.display()
    );
    Ok(())
}

pub fn cmd_sweep(
    scenario: &Option<String>,
    config: &Option<PathBuf>,
    alphas: &Option<String>,
    out_dir: &Path,
) -> CliResult<()> {
    let (sys, cfg) = resolve_scenario(scenario, config)?;
    let alphas: Vec<f64> = match alphas {
        None => cfg.alpha_grid.clone(),
        Some(list) => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Config(format!("bad alpha '{s}': {e}")))
            })
            .collect::<CliResult<_>>()?,
    };
    if alphas.is_empty() {
        return Err(CliError::Config("alpha list is empty".into()));
    }

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let started = Instant::now();
    let t_prime = 0.95 * cfg.t_end;
    let icfg = cfg.integration(Scheme::Rk4);
    let result = run_sweep(&sys, &cfg.z0(), &cfg.x0(), &icfg, &alphas, t_prime)
        .map_err(CliError::runtime)?;

    let json_path = out_dir.join("sweep.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&result).unwrap())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let csv_path = out_dir.join("sweep.csv");
    let mut csv = std::fs::File::create(&csv_path).map_err(|e| CliError::Runtime(e.to_string()))?;
    result
        .write_csv(&mut csv)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut outputs = vec![json_path, csv_path];
    outputs.push(distance_plot(out_dir, &result)?);
    outputs.extend(overlay_plots(out_dir, &sys, &cfg, &alphas)?);

    let mut manifest = RunManifest::new("sweep", cfg);
    manifest.parameters = json!({ "alphas": alphas, "t_prime": t_prime });
    manifest.summary = json!({
        "sup_distances": result.sup_distances,
        "invariance_margins": result.invariance_margins,
        "containment": result.containment,
        "reference_scheme_gap": result.reference_scheme_gap,
    });
    manifest.outputs = outputs;
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest
        .write(&out_dir.join("manifest.json"))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!(
        "sweep over {} alphas: distances {:?} -> {}",
        alphas.len(),
        result
            .sup_distances
            .iter()
            .map(|d| format!("{d:.3e}"))
            .collect::<Vec<_>>(),
        out_dir.display()
    );
    Ok(())
}

fn distance_plot(out_dir: &Path, result: &SweepResult) -> CliResult<PathBuf> {
    let path = out_dir.join("distance_vs_alpha.svg");
    line_chart(
        &path,
        "sup-distance to the projected reference",
        "alpha",
        "sup distance",
        true,
        true,
        &[Series {
            label: "sup distance".into(),
            points: result
                .alphas
                .iter()
                .zip(result.sup_distances.iter())
                .map(|(a, d)| (*a, *d))
                .collect(),
        }],
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(path)
}

/// One time-series overlay per state coordinate: the projected reference
/// plus one barrier-filtered trajectory per alpha.
fn overlay_plots(
    out_dir: &Path,
    sys: &Interconnection,
    cfg: &ScenarioConfig,
    alphas: &[f64],
) -> CliResult<Vec<PathBuf>> {
    let icfg = cfg.integration(Scheme::ProjectedEuler);
    let reference = integrate(sys, FieldKind::Pds, &cfg.z0(), &cfg.x0(), &icfg)
        .map_err(CliError::runtime)?;
    let cbf_cfg = cfg.integration(Scheme::Rk4);
    let mut cbf_runs = Vec::new();
    for &alpha in alphas {
        cbf_runs.push((
            alpha,
            integrate(sys, FieldKind::Cbf(alpha), &cfg.z0(), &cfg.x0(), &cbf_cfg)
                .map_err(CliError::runtime)?,
        ));
    }

    let subsample = (reference.len() / 1500).max(1);
    let coord = |traj: &Trajectory, idx: usize| -> Vec<(f64, f64)> {
        (0..traj.len())
            .step_by(subsample)
            .map(|k| {
                let v = if idx < sys.m() {
                    traj.zs[k][idx]
                } else {
                    traj.xs[k][idx - sys.m()]
                };
                (traj.times[k], v)
            })
            .collect()
    };

    let mut outputs = Vec::new();
    for idx in 0..sys.m() + sys.n() {
        let name = if idx < sys.m() {
            format!("z{}", idx + 1)
        } else {
            format!("x{}", idx - sys.m() + 1)
        };
        let mut series = vec![Series {
            label: "pds".into(),
            points: coord(&reference, idx),
        }];
        for (alpha, traj) in &cbf_runs {
            series.push(Series {
                label: format!("cbf alpha={alpha}"),
                points: coord(traj, idx),
            });
        }
        let path = out_dir.join(format!("overlay_{name}.svg"));
        line_chart(
            &path,
            &format!("{name}(t), projected vs barrier-filtered"),
            "t",
            &name,
            false,
            false,
            &series,
        )
        .map_err(|e| CliError::Runtime(e.to_string()))?;
        outputs.push(path);
    }
    Ok(outputs)
}

pub fn cmd_bounds(
    scenario: &Option<String>,
    config: &Option<PathBuf>,
    grid_res: Option<usize>,
    out: &Path,
) -> CliResult<()> {
    let (sys, cfg) = resolve_scenario(scenario, config)?;
    let spec = match grid_res {
        Some(res) if res < 2 => {
            return Err(CliError::Config("--grid-res must be at least 2".into()))
        }
        Some(res) => GridSpec::with_resolution(res),
        None => GridSpec::for_system(&sys),
    };
    let started = Instant::now();
    let report =
        estimate_constants(&sys, 0.5, &cfg.alpha_grid, &spec).map_err(CliError::runtime)?;
    std::fs::write(out, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut manifest = RunManifest::new("bounds", cfg);
    manifest.parameters = json!({ "eps_fraction": 0.5, "grid": spec });
    manifest.summary = json!({
        "alpha_star": report.alpha_star,
        "m1": report.m1,
        "delta": report.delta,
        "sigma_table": report.sigma_table,
    });
    manifest.outputs = vec![out.to_path_buf()];
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest
        .write(&manifest_path_for(out))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!(
        "bounds: alpha* = {:.6}, M1 = {:.6}, delta = {:.6} -> {}",
        report.alpha_star,
        report.m1,
        report.delta,
        out.display()
    );
    Ok(())
}

pub fn cmd_verify(
    scenario: &Option<String>,
    config: &Option<PathBuf>,
    grid_res: Option<usize>,
) -> CliResult<()> {
    let (sys, cfg) = resolve_scenario(scenario, config)?;
    let spec = match grid_res {
        Some(res) if res < 2 => {
            return Err(CliError::Config("--grid-res must be at least 2".into()))
        }
        Some(res) => GridSpec::with_resolution(res),
        None => GridSpec::for_system(&sys),
    };
    let started = Instant::now();
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, result: CheckResult| match result {
        Ok(()) => println!("check {name}: ok"),
        Err(msg) => {
            println!("check {name}: FAILED — {msg}");
            failures.push(name.to_string());
        }
    };

    check(
        "gradient-consistency",
        sys.set().check_gradient(1000).map_err(|e| e.to_string()),
    );
    check(
        "set-validation",
        sys.set().validate(500, 256).map_err(|e| e.to_string()),
    );
    check("field-validation", sys.validate(64).map_err(|e| e.to_string()));
    check("oracle-equivalence", oracle_check(&sys, &cfg, false));
    check("kkt-certificate", oracle_check(&sys, &cfg, true));

    let report = match estimate_constants(&sys, 0.5, &cfg.alpha_grid, &spec) {
        Ok(r) => Some(r),
        Err(e) => {
            check("bounds-report", Err(e.to_string()));
            None
        }
    };
    if let Some(report) = &report {
        check("bounds-report", report.validate().map_err(|e| e.to_string()));
        check("lemma-suite", lemma_check(&sys, report, &spec));
        let cert_alphas: Vec<f64> = cfg
            .alpha_grid
            .iter()
            .copied()
            .filter(|a| *a >= report.alpha_star)
            .collect();
        if cert_alphas.is_empty() {
            println!(
                "check perturbation-certificate: skipped (all alphas in the grid are below alpha* = {:.3})",
                report.alpha_star
            );
        } else {
            check(
                "perturbation-certificate",
                certificate_check(&sys, report, &spec, &cert_alphas),
            );
        }
    }

    let mut manifest = RunManifest::new("verify", cfg);
    manifest.parameters = json!({ "grid": spec });
    manifest.summary = json!({ "failures": failures });
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    println!("{}", serde_json::to_string(&manifest).unwrap());

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "failing checks: {}",
            failures.join(", ")
        )))
    }
}

/// Closed-form operations against the exact KKT oracle on deterministic
/// instances; with `kkt` the multiplier certificate is checked instead.
fn oracle_check(sys: &Interconnection, cfg: &ScenarioConfig, kkt: bool) -> CheckResult {
    let set = sys.set();
    let metric = sys.metric();
    let scale = {
        let mut s: f64 = 1.0;
        for z in sys.z_box().sample(8) {
            for x in set.bounding_box().sample(16) {
                if set.eval_h(&x).map_err(|e| e.to_string())? >= 0.0 {
                    s = s.max(sys.eval_f(&z, &x).map_err(|e| e.to_string())?.norm());
                }
            }
        }
        s
    };
    let boundary = set.boundary_samples(1000).map_err(|e| e.to_string())?;
    let vectors: Vec<DVector<f64>> = sampling::halton_seq(sys.n())
        .take(1000)
        .map(|u| DVector::from_iterator(sys.n(), u.iter().map(|&ui| scale * (2.0 * ui - 1.0))))
        .collect();
    let mut worst: f64 = 0.0;
    for (x, v) in boundary.iter().zip(vectors.iter()) {
        let w = set.eval_grad_h(x).map_err(|e| e.to_string())?;
        let mu = project_tangent(set, metric, x, v).map_err(|e| e.to_string())?;
        if kkt {
            worst = worst.max(tangent_kkt_certificate(metric, &w, 0.0, v, &mu).max_residual());
        } else {
            let oracle = qp_oracle(metric, v, &w, 0.0).map_err(|e| e.to_string())?;
            worst = worst.max((&mu - &oracle).norm() / (1.0 + v.norm()));
        }
    }
    let interiors = set.interior_samples(1000).map_err(|e| e.to_string())?;
    for (i, (x, f)) in interiors.iter().zip(vectors.iter()).enumerate() {
        let alpha = cfg.alpha_grid[i % cfg.alpha_grid.len()];
        let h = set.eval_h(x).map_err(|e| e.to_string())?;
        let grad = set.eval_grad_h(x).map_err(|e| e.to_string())?;
        let mu = cbf_field_value(metric, f, grad.dot(f), h, &grad, alpha).map_err(|e| e.to_string())?;
        if kkt {
            worst =
                worst.max(tangent_kkt_certificate(metric, &grad, alpha * h, f, &mu).max_residual());
        } else {
            let oracle = qp_oracle(metric, f, &grad, alpha * h).map_err(|e| e.to_string())?;
            worst = worst.max((&mu - &oracle).norm() / (1.0 + f.norm()));
        }
    }
    if worst <= 1e-8 {
        Ok(())
    } else {
        Err(format!("worst residual {worst:.3e} exceeds 1e-8"))
    }
}

fn lemma_check(
    sys: &Interconnection,
    report: &BoundsReport,
    spec: &GridSpec,
) -> CheckResult {
    let grid = pdscbf_core::bounds::grid_points(sys, spec).map_err(|e| e.to_string())?;
    let alpha = if report.alpha_star > 0.0 {
        2.0 * report.alpha_star
    } else {
        return Ok(());
    };
    let mut violations = 0usize;
    for (z, x) in &grid {
        let h = sys.set().eval_h(x).map_err(|e| e.to_string())?;
        let grad = sys.set().eval_grad_h(x).map_err(|e| e.to_string())?;
        let f = sys.eval_f(z, x).map_err(|e| e.to_string())?;
        let lfh = grad.dot(&f);
        if lfh + alpha * h > 0.0 {
            continue;
        }
        let d = sys.set().distance_to_boundary(x).map_err(|e| e.to_string())?;
        if d > sys.set().gamma(lfh.abs() / alpha) + 1e-8 {
            violations += 1;
        }
        let gnorm = grad.norm();
        if gnorm + 1e-8 < report.eps || gnorm > report.m3 + 1e-8 {
            violations += 1;
        }
        let y = sys.set().nearest_boundary_point(x).map_err(|e| e.to_string())?;
        let grad_y = sys.set().eval_grad_h(&y).map_err(|e| e.to_string())?;
        let n_x = sys.metric().p_inv() * &grad / sys.metric().norm_p_inv_sq(&grad);
        let n_y = sys.metric().p_inv() * &grad_y / sys.metric().norm_p_inv_sq(&grad_y);
        if (n_x - n_y).norm() > report.l1 * (x - &y).norm() + 1e-8 {
            violations += 1;
        }
    }
    if violations == 0 {
        Ok(())
    } else {
        Err(format!("{violations} pointwise violations on the grid"))
    }
}

fn certificate_check(
    sys: &Interconnection,
    report: &BoundsReport,
    spec: &GridSpec,
    alphas: &[f64],
) -> CheckResult {
    let grid = pdscbf_core::bounds::grid_points(sys, spec).map_err(|e| e.to_string())?;
    let stride = (grid.len() / 200).max(1);
    let samples: Vec<_> = grid.iter().step_by(stride).cloned().collect();
    for &alpha in alphas {
        let results =
            perturbation_certificate(sys, alpha, report, &samples).map_err(|e| e.to_string())?;
        let failed = results.iter().filter(|r| !r.pass).count();
        if failed > 0 {
            return Err(format!("{failed}/{} samples failed at alpha = {alpha}", results.len()));
        }
    }
    Ok(())
}
