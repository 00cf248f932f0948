use std::fs;
use std::path::Path;

use folitor::chart::{develop, loop_residual, ChartConfig, LeafPatch};
use folitor::diophantine::{analyze, find_liouville_modes, Classification, LiouvilleMode, Thresholds};
use folitor::foliation::density_check;
use folitor::homotopy::{integrate_path_partial, BeltramiField, HomotopyPath, HomotopySolution};
use folitor::metric::{
    assemble_closed_form, build_h, counterexample_family, euclidean_metric, obstruction_detect, solve_nu_along_family,
    LeafForm, MetricConfig, NuSolveConfig, GRAM_LABELS,
};
use folitor::spectral::{random_beltrami, FieldDocument, RippleSpec};
use folitor::verify::{run_battery, VerifyConfig};
use folitor::{Dim, Error, Field, Geometry};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::args::{AnalyzeArgs, ChartArgs, Common, CounterexampleArgs, Dimension, SolveArgs, VerifyArgs};
use crate::report::Report;

/// How a command failed; the variant fixes the exit code.
#[derive(Debug)]
pub enum Failure {
    Checks(String),
    Validation(String),
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Checks(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Checks(m) | Failure::Validation(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

/// Mode components can exceed 64 bits, so they are written as decimal strings.
fn liouville_json(modes: &[LiouvilleMode]) -> serde_json::Value {
    modes
        .iter()
        .map(|m| {
            json!({
                "N": m.n.map(|x| x.to_string()),
                "absN": m.abs_n,
                "log2_inv_lambda": m.log2_inv_lambda,
                "target_s": m.target_s,
                "achieved_exponent": m.achieved_exponent,
            })
        })
        .collect()
}

pub fn common_config(c: &Common) -> serde_json::Value {
    let (a1, a2) = c.slopes();
    json!({
        "slope_a1": {"label": a1.label, "value": a1.value, "exact": a1.is_exact()},
        "slope_a2": {"label": a2.label, "value": a2.value, "exact": a2.is_exact()},
        "dimension": c.dimension.as_str(),
        "seed": c.seed,
    })
}

fn extend(mut base: serde_json::Value, extra: serde_json::Value) -> serde_json::Value {
    if let (Some(b), serde_json::Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

pub fn solve_config(a: &SolveArgs) -> serde_json::Value {
    extend(
        common_config(&a.common),
        json!({
            "cutoff": a.cutoff,
            "in_field": a.in_field.as_ref().map(|p| p.display().to_string()),
            "mean_max": a.mean_max,
            "category": a.category,
            "radius": a.radius,
            "path": a.path,
            "residual_tol": a.residual_tol,
            "vanish_guard": a.vanish_guard,
            "resolvent_tol": a.resolvent_tol,
        }),
    )
}

pub fn analyze_cmd(a: &AnalyzeArgs, rep: &mut Report) -> Outcome {
    let params = a.common.params();
    let th = Thresholds::default();
    let scan = analyze(&params, a.cutoff, &th)?;
    rep.put("classification", scan.classification.as_str());
    rep.put("density", density_check(&params, a.cutoff.min(10_000))?);
    let lm = find_liouville_modes(&params, &[2.0, 4.0, 6.0], u64::MAX as u128);
    rep.warnings.extend(lm.warnings.iter().cloned());
    rep.put("liouville_modes", liouville_json(&lm.modes));
    rep.put("scan", &scan);
    Ok(())
}

fn read_field(path: &Path) -> Result<Field, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    Field::from_json(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn load_mu(a: &SolveArgs, dim: Dim, rep: &mut Report) -> Result<Field, Failure> {
    let m = match &a.in_field {
        Some(p) => {
            let mu = read_field(p)?;
            if mu.dim() != dim {
                return Err(Failure::Validation(format!(
                    "{}: field has dim {} but --dimension is {}",
                    p.display(),
                    mu.dim().rank(),
                    dim.rank()
                )));
            }
            let m = a.cutoff.unwrap_or(mu.cutoff().max(2));
            if mu.out_of_band_norm(m) > 0.0 {
                rep.warn(format!("input field truncated to cutoff {m}"));
            }
            return check_cutoff(m).map(|_| mu.resized(m));
        }
        None => a.cutoff.unwrap_or(6),
    };
    check_cutoff(m)?;
    let spec = RippleSpec {
        mean_max: a.mean_max,
        ..RippleSpec::default()
    };
    if !(a.mean_max >= 0.0 && spec.sup_bound() < 1.0) {
        return Err(Failure::Validation("--mean-max must lie in [0, 0.95)".into()));
    }
    Ok(random_beltrami(dim, m, &spec, &mut ChaCha8Rng::seed_from_u64(a.common.seed)))
}

fn check_cutoff(m: usize) -> Result<(), Failure> {
    if m < 2 {
        return Err(Failure::Validation(format!("cutoff must be at least 2, got {m}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct StepRow {
    t: f64,
    step: f64,
    closedness_residual: f64,
    in_band: f64,
    spill: f64,
    min_abs_f: f64,
    norm_h0: f64,
    norm_h1: f64,
    norm_h2: f64,
    error_estimate: f64,
    resolvent_iterations: usize,
}

fn write_steps(path: &Path, sol: &HomotopySolution<f64>) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::Validation(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in &sol.records {
        w.serialize(StepRow {
            t: r.t,
            step: r.step,
            closedness_residual: r.residual.total,
            in_band: r.residual.in_band,
            spill: r.residual.spill,
            min_abs_f: r.min_abs_f,
            norm_h0: r.norm_h0,
            norm_h1: r.norm_h1,
            norm_h2: r.norm_h2,
            error_estimate: r.error_estimate,
            resolvent_iterations: r.resolvent_iterations,
        })
        .map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display())))
}

/// Shared front half of solve, metric and chart.
fn run_solver(a: &SolveArgs, rep: &mut Report) -> Result<(Geometry<f64>, BeltramiField<f64>, Field), Failure> {
    let geom = a.common.geometry();
    let cfg = a.solver_config()?;
    let mu = load_mu(a, geom.dim(), rep)?;
    rep.put("cutoff", mu.cutoff());
    rep.put("mu", FieldDocument::from_field(&mu));
    let b = BeltramiField::with_oversample(mu, cfg.oversample.max(4))?;
    rep.put("delta_hat", b.delta());
    let (sol, err) = integrate_path_partial(&geom, &HomotopyPath::scaled(&b, cfg.path), &cfg);
    rep.warnings.extend(sol.warnings.iter().cloned());
    if let Some(p) = &a.csv {
        if !sol.records.is_empty() {
            write_steps(p, &sol)?;
        }
    }
    let summary = if sol.fields.is_empty() {
        json!(null)
    } else {
        let r = sol.final_record();
        let f = sol.final_field();
        let avg = f.average();
        json!({
            "final_time": sol.final_time(),
            "steps": sol.records.len(),
            "rejected_steps": sol.rejected_steps,
            "under_resolved": sol.under_resolved,
            "closedness_residual": r.residual,
            "min_abs_f": r.min_abs_f,
            "min_at": r.min_at,
            "norms": {"h0": r.norm_h0, "h1": r.norm_h1, "h2": r.norm_h2},
            "f_average": [avg.re, avg.im],
            "resolvent_iterations": sol.records.iter().map(|r| r.resolvent_iterations).sum::<usize>(),
        })
    };
    rep.put("solve", summary);
    if let Some(f) = sol.fields.last() {
        rep.put("f", FieldDocument::from_field(f));
    }
    if let Some(e) = err {
        return Err(e.into());
    }
    let f = sol.final_field().clone();
    Ok((geom, b, f))
}

pub fn solve_cmd(a: &SolveArgs, rep: &mut Report) -> Outcome {
    run_solver(a, rep).map(|_| ())
}

pub fn metric_cmd(a: &SolveArgs, rep: &mut Report) -> Outcome {
    if a.common.dimension == Dimension::Torus2 {
        return Err(Failure::Validation("metric needs --dimension torus3".into()));
    }
    let params = a.common.params();
    let scan = analyze(&params, 2000, &Thresholds::default())?;
    rep.put("slope_classification", scan.classification.as_str());
    if scan.classification != Classification::DiophantineEvidence {
        rep.warn(format!(
            "slope classified as {}; the closure may not converge",
            scan.classification.as_str()
        ));
    }
    let (geom, b, f) = run_solver(a, rep)?;
    let form = LeafForm::new(f, b.into_inner())?;
    let cfg = MetricConfig::default();
    let cl = build_h(&geom, &form, &cfg)?;
    rep.warnings.extend(cl.warnings.iter().cloned());
    rep.put(
        "closure",
        json!({
            "residual1": cl.residual1,
            "residual2": cl.residual2,
            "max_amplification": cl.max_amplification,
            "amplification_argmax": cl.amplification_argmax.to_array(),
        }),
    );
    rep.put("h", FieldDocument::from_field(&cl.h));
    let om = assemble_closed_form(&geom, &form, &cl)?;
    rep.put(
        "closed_form",
        json!({"dform_residual": om.dform_residual, "component_residuals": om.component_residuals}),
    );
    let m = euclidean_metric(&geom, &form, &om, &cfg)?;
    rep.put(
        "metric",
        json!({
            "gram_labels": GRAM_LABELS,
            "gram_mean": m.gram_mean,
            "min_eigenvalue": m.min_eigenvalue,
            "min_at": m.min_at,
            "max_eigenvalue": m.max_eigenvalue,
            "samples": m.samples,
            "positive_definite": m.positive_definite,
            "conformal_factor": [m.conformal_factor.0, m.conformal_factor.1],
            "curvature": m.curvature,
            "non_flat": m.non_flat,
        }),
    );
    Ok(())
}

pub fn counterexample_config(a: &CounterexampleArgs) -> serde_json::Value {
    extend(
        common_config(&a.common),
        json!({
            "modes": a.modes,
            "s_targets": a.s_targets,
            "t": a.t,
            "cutoff": a.cutoff,
            "steps": a.steps,
            "vanish_guard": a.vanish_guard,
        }),
    )
}

pub fn counterexample_cmd(a: &CounterexampleArgs, rep: &mut Report) -> Outcome {
    if a.modes == 0 || a.modes > 3 {
        return Err(Failure::Validation("--modes must be 1, 2 or 3".into()));
    }
    if a.s_targets.len() < a.modes {
        return Err(Failure::Validation(format!("--s-targets needs at least {} values", a.modes)));
    }
    check_cutoff(a.cutoff)?;
    let params = a.common.params();
    let found = find_liouville_modes(&params, &a.s_targets[..a.modes], u128::MAX);
    rep.warnings.extend(found.warnings.iter().cloned());
    rep.put("liouville_modes", liouville_json(&found.modes));
    if found.modes.len() < a.modes {
        rep.warn(format!("requested {} modes, found {}", a.modes, found.modes.len()));
    }
    if found.modes.is_empty() {
        return Err(Failure::Validation("no Liouville modes found for this slope".into()));
    }
    let modes: Vec<[i128; 3]> = found.modes.iter().map(|m| m.n).collect();
    let fam = counterexample_family(&params, &modes, a.t)?;
    rep.warnings.extend(fam.warnings.iter().cloned());
    let coefficients: Vec<[f64; 2]> = fam.coefficients.iter().map(|c| [c.re, c.im]).collect();
    rep.put(
        "family",
        json!({
            "modes": fam.modes.iter().map(|n| n.map(|x| x.to_string())).collect::<Vec<_>>(),
            "coefficients": coefficients,
            "smoothness": fam.smoothness,
        }),
    );
    let obs = obstruction_detect(&fam.geometry, &fam.at(a.t, 1), &fam.abstract_modes(), Some(a.t))?;
    let forced: Vec<_> = obs
        .forced
        .iter()
        .map(|h| json!({"N": h.n.map(|x| x.to_string()), "h": h.h, "abs": h.abs}))
        .collect();
    rep.put(
        "obstruction",
        json!({
            "forced": forced,
            "partial_l2": obs.partial_l2,
            "magnitude_spread": obs.magnitude_spread,
            "matches_t": obs.matches_t,
            "verdict": obs.verdict.as_str(),
        }),
    );
    rep.put("verdict", obs.verdict.as_str());
    let cfg = NuSolveConfig {
        steps: a.steps.max(1),
        cutoff: a.cutoff,
        vanish_guard: a.vanish_guard,
    };
    let family = fam.family(cfg.cutoff);
    let sol = solve_nu_along_family(&fam.geometry, &family, a.t, &cfg)?;
    rep.put(
        "nu",
        json!({
            "sup_nu": sol.sup_nu.last(),
            "min_abs_f": sol.min_abs_f.iter().cloned().fold(f64::INFINITY, f64::min),
            "closedness_residual": sol.residual,
            "identity_defect": sol.identity_defect,
            "field": FieldDocument::from_field(sol.final_nu()),
        }),
    );
    Ok(())
}

pub fn chart_config(a: &ChartArgs) -> serde_json::Value {
    extend(
        solve_config(&a.solve),
        json!({"patch_radius": a.patch_radius, "grid": a.grid, "base": a.base, "loops": a.loops}),
    )
}

pub fn chart_cmd(a: &ChartArgs, rep: &mut Report) -> Outcome {
    if a.base.len() != 3 {
        return Err(Failure::Validation("--base needs three coordinates".into()));
    }
    let patch = LeafPatch::new([a.base[0], a.base[1], a.base[2]], a.patch_radius, a.grid)?;
    let mut solve = a.solve.clone();
    let csv_path = solve.csv.take();
    let (geom, b, f) = run_solver(&solve, rep)?;
    let delta = b.delta();
    let form = LeafForm::new(f, b.into_inner())?;
    let ch = develop(&geom, &form, &patch, &ChartConfig::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.solve.common.seed);
    let lr = loop_residual(&geom, &form, &patch, a.loops, &mut rng)?;
    if let Some(p) = csv_path {
        let io = |e: csv::Error| Failure::Validation(format!("cannot write {}: {e}", p.display()));
        let mut w = csv::Writer::from_path(&p).map_err(io)?;
        w.write_record(["re_z", "im_z", "re_psi", "im_psi", "K"]).map_err(io)?;
        for q in &ch.points {
            w.serialize((q.z[0], q.z[1], q.psi[0], q.psi[1], q.dilatation)).map_err(io)?;
        }
        w.flush().map_err(|e| Failure::Validation(format!("cannot write {}: {e}", p.display())))?;
    }
    rep.put(
        "chart",
        json!({
            "points": ch.points.len(),
            "closedness_residual": ch.closedness_residual,
            "loop_residual": lr,
            "derivative_error": ch.derivative_error,
            "derivative_checks": ch.derivative_checks,
            "min_jacobian": ch.min_jacobian,
            "min_numeric_jacobian": ch.min_numeric_jacobian,
            "max_dilatation": ch.max_dilatation,
            "dilatation_bound": (1.0 + delta) / (1.0 - delta),
            "psi_corners": [
                [ch.psi(0, 0).re, ch.psi(0, 0).im],
                [ch.psi(a.grid - 1, a.grid - 1).re, ch.psi(a.grid - 1, a.grid - 1).im],
            ],
        }),
    );
    Ok(())
}

pub fn verify_config(a: &VerifyArgs) -> serde_json::Value {
    extend(common_config(&a.common), json!({"cutoff": a.cutoff}))
}

pub fn verify_cmd(a: &VerifyArgs, rep: &mut Report) -> Outcome {
    check_cutoff(a.cutoff)?;
    let mut cfg = VerifyConfig::new(a.common.geometry(), a.cutoff, a.common.seed);
    if let Some(f) = &a.inject_fault {
        cfg.fault = Some(f.parse()?);
    }
    let out = run_battery(&cfg)?;
    rep.put("passed", out.passed);
    rep.put("checks", &out.checks);
    if out.passed {
        Ok(())
    } else {
        Err(Failure::Checks(format!("failed checks: {}", out.failures().join(", "))))
    }
}
