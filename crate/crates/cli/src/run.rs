//! Experiment dispatch and output writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hypoctl_core::diagnostics_lab::{
    bernstein_audit, classify_cylinders, cylinder_lattice, faa_di_bruno_sum, necessity_experiment,
    rising_factorial_ratio, CylinderClass, CylinderConstants,
};
use hypoctl_core::flows_kalman::{analyze_hypoellipticity, gramian_curve, log_grid};
use hypoctl_core::hum_synthesizer::{
    certify_with, duality_check_with, solve_unchecked, CertifyConfig, CertifyStatus, CgStatus, GramianOperator,
    HumProblem, SolutionManifest,
};
use hypoctl_core::quadrature::TimeGrid;
use hypoctl_core::spectral_field::SpectralField;
use hypoctl_core::support_geometry::{thickness_profile, threshold_bisect, ThresholdConfig};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{DatumDecl, ExperimentDecl, LoadedScenario};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Negative,
}

#[derive(Debug, Default, Clone)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub emit_fields: bool,
}

struct Outcome {
    verdict: Verdict,
    results: Value,
    tables: Vec<(&'static str, String)>,
    fields: Vec<(&'static str, SpectralField)>,
}

impl Outcome {
    fn new(pass: bool, results: Value) -> Self {
        Self {
            verdict: if pass { Verdict::Pass } else { Verdict::Negative },
            results,
            tables: Vec::new(),
            fields: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub verdict: Verdict,
    pub output_dir: PathBuf,
    pub summary: Value,
    pub files: Vec<String>,
}

pub fn execute(loaded: &LoadedScenario, opts: &RunOptions) -> Result<RunReport, CliError> {
    let sc = &loaded.scenario;
    let seed = opts.seed.unwrap_or(sc.seed);
    let output_dir = opts
        .output_dir
        .clone()
        .or_else(|| sc.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(&sc.name));

    let start = Instant::now();
    let outcome = dispatch(loaded, seed)?;
    let wall = start.elapsed().as_secs_f64();

    let summary = json!({
        "scenario": sc.name,
        "description": sc.description,
        "experiment": sc.experiment.name(),
        "config_sha256": loaded.config_hash(),
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "verdict": outcome.verdict,
        "parameters": sc.experiment,
        "results": outcome.results,
    });

    fs::create_dir_all(&output_dir).map_err(|e| CliError::io(&output_dir, e))?;
    let mut files = vec!["summary.json".to_string()];
    write(&output_dir.join("summary.json"), &pretty(&summary))?;
    for (name, csv) in &outcome.tables {
        write(&output_dir.join(name), csv)?;
        files.push(name.to_string());
    }
    if opts.emit_fields {
        for (name, field) in &outcome.fields {
            let path = output_dir.join(name);
            field.write_binary(&path).map_err(|e| CliError::io(&path, e))?;
            files.push(name.to_string());
        }
    }
    let ledger = json!({
        "scenario": sc.name,
        "config_sha256": loaded.config_hash(),
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
        "wall_time_s": wall,
        "files": files,
        "constants": {
            "stall_window": hypoctl_core::hum_synthesizer::STALL_WINDOW,
            "certificate_slack": hypoctl_core::hum_synthesizer::CERTIFICATE_SLACK,
            "rank_threshold": hypoctl_core::flows_kalman::RANK_THRESHOLD,
            "min_thickness_samples": hypoctl_core::support_geometry::MIN_SAMPLES,
        },
    });
    write(&output_dir.join("run_ledger.json"), &pretty(&ledger))?;
    files.push("run_ledger.json".into());

    Ok(RunReport {
        verdict: outcome.verdict,
        output_dir,
        summary,
        files,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn dispatch(loaded: &LoadedScenario, seed: u64) -> Result<Outcome, CliError> {
    let sc = &loaded.scenario;
    let horizon = sc.equation.horizon();
    let core = |e: hypoctl_core::Error| CliError::Run {
        scenario: sc.name.clone(),
        source: e,
    };
    match &sc.experiment {
        ExperimentDecl::Kalman(p) => {
            let pair = loaded.pair()?;
            let report = analyze_hypoellipticity(&pair).map_err(core)?;
            let mut out_results = json!({ "kalman": to_json(&report) });
            let mut tables = Vec::new();
            if report.kalman_holds {
                let curve =
                    gramian_curve(&pair, &log_grid(p.tau_min, p.tau_max, p.points), p.sphere_samples).map_err(core)?;
                let expected = report.k0.map(|k| (2 * k + 1) as f64);
                out_results["gramian"] = json!({
                    "fitted_exponent": curve.fitted_exponent,
                    "fit_residual": curve.fit_residual,
                    "expected_exponent": expected,
                });
                let mut csv = String::from("tau,inf_gramian\n");
                for (t, v) in curve.tau_grid.iter().zip(&curve.values) {
                    csv.push_str(&format!("{t},{v}\n"));
                }
                tables.push(("gramian_curve.csv", csv));
            }
            let mut out = Outcome::new(report.kalman_holds, out_results);
            out.tables = tables;
            Ok(out)
        }
        ExperimentDecl::Thickness(p) => {
            let sup = loaded.support(horizon)?;
            let centers = p.centers.build();
            let prof = thickness_profile(&sup, p.r, &centers, p.samples, seed).map_err(core)?;
            let mut csv = String::from("x,value,std_err\n");
            for e in &prof.estimates {
                csv.push_str(&format!("{},{},{}\n", join(&e.center), e.value, e.std_err));
            }
            let mut out = Outcome::new(
                prof.min > 0.0,
                json!({ "min": prof.min, "argmin": prof.argmin, "min_std_err": prof.min_std_err, "centers": centers.len() }),
            );
            out.tables.push(("thickness.csv", csv));
            Ok(out)
        }
        ExperimentDecl::Threshold(p) => {
            let cfg = ThresholdConfig {
                r: p.r,
                gamma_floor: p.gamma_floor,
                samples: p.samples,
                seed,
                bracket: (p.bracket[0], p.bracket[1]),
                tol: p.tol,
            };
            // construction errors surface before the bisection starts
            loaded.support(p.bracket[1])?;
            let family = |t: f64| {
                loaded.support(t).map_err(|e| match e {
                    CliError::Config { message, .. } => hypoctl_core::Error::InvalidArgument(message),
                    other => hypoctl_core::Error::InvalidArgument(other.to_string()),
                })
            };
            match threshold_bisect(family, &p.centers.build(), &cfg) {
                Ok(res) => {
                    let in_range = p.expected.is_none_or(|[a, b]| (a..=b).contains(&res.t_star));
                    let mut csv = String::from("horizon,min_value,min_std_err,holds\n");
                    for e in &res.evaluations {
                        csv.push_str(&format!(
                            "{},{},{},{}\n",
                            e.horizon, e.min_value, e.min_std_err, e.holds
                        ));
                    }
                    let mut out = Outcome::new(
                        in_range,
                        json!({
                            "threshold_reached": true,
                            "t_star": res.t_star,
                            "lower": res.lower,
                            "upper": res.upper,
                            "expected": p.expected,
                            "in_expected_range": in_range,
                            "evaluations": res.evaluations.len(),
                        }),
                    );
                    out.tables.push(("threshold.csv", csv));
                    Ok(out)
                }
                Err(hypoctl_core::Error::ThresholdNotReached {
                    horizon,
                    min_value,
                    floor,
                }) => Ok(Outcome::new(
                    false,
                    json!({ "threshold_reached": false, "horizon": horizon, "min_value": min_value, "floor": floor }),
                )),
                Err(e) => Err(core(e)),
            }
        }
        ExperimentDecl::Synthesize(p) => {
            let prob = hum_problem(loaded, p.datum.as_ref(), p.epsilon, p.cost, p.nodes)?;
            let op = GramianOperator::for_problem(&prob).map_err(core)?;
            let sol = solve_unchecked(&op, &prob, p.cg_tol, p.max_iter, None).map_err(core)?;
            let defect = duality_check_with(&op, &prob, &sol, p.duality_probes, seed).map_err(core)?;
            let converged = sol.ledger.cg_status == CgStatus::Converged;
            let manifest = SolutionManifest::new(&prob, &sol);
            let mut out = Outcome::new(
                converged && sol.ledger.certified,
                json!({ "solution": to_json(&manifest), "duality_defect": defect }),
            );
            out.tables.push(("node_energy.csv", sol.energy_csv()));
            out.fields = vec![
                ("f0.bin", prob.f0.clone()),
                ("h0.bin", sol.h0),
                ("terminal.bin", sol.terminal),
            ];
            Ok(out)
        }
        ExperimentDecl::Certify(p) => {
            let prob = hum_problem(loaded, p.datum.as_ref(), p.epsilons[0], 1.0, p.nodes)?;
            let op = GramianOperator::for_problem(&prob).map_err(core)?;
            let cfg = CertifyConfig {
                cg_tol: p.cg_tol,
                max_iter: p.max_iter,
                cap_exponent: p.cap_exponent,
            };
            let rows = certify_with(&op, &prob, &p.epsilons, &cfg).map_err(core)?;
            let mut csv = String::from(
                "epsilon,c_found,terminal_ratio,control_energy,lhs,rhs,iterations,cg_status,costs_tried,status\n",
            );
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.epsilon,
                    r.c_found.map_or(String::new(), |c| c.to_string()),
                    r.terminal_ratio,
                    r.control_energy,
                    r.lhs,
                    r.rhs,
                    r.iterations,
                    label(&r.cg_status),
                    r.costs_tried,
                    label(&r.status)
                ));
            }
            let all = rows.iter().all(|r| r.status == CertifyStatus::Certified);
            let mut out = Outcome::new(
                all,
                json!({ "rows": to_json(&rows), "truncation_warning": to_json(&op.truncation_warning()) }),
            );
            out.tables.push(("certify.csv", csv));
            Ok(out)
        }
        ExperimentDecl::Necessity(p) => {
            let fam = loaded.family(horizon)?;
            let sup = loaded.support(horizon)?;
            let grid = loaded.grid()?;
            let tg = TimeGrid::with_nodes(0.0, horizon, p.nodes).map_err(core)?;
            let rep = necessity_experiment(&fam, &sup, grid, p.l, p.r, &p.centers.build(), &tg).map_err(core)?;
            let mut out = Outcome::new(
                rep.window_decreasing,
                json!({
                    "l": rep.l,
                    "r": rep.r,
                    "delta_spread": rep.delta_spread,
                    "window_decreasing": rep.window_decreasing,
                    "window_ratio": rep.window_ratio,
                }),
            );
            out.tables.push(("necessity.csv", rep.to_csv()));
            Ok(out)
        }
        ExperimentDecl::Bernstein(p) => {
            let fam = loaded.family(horizon)?;
            let g = datum(loaded, p.datum.as_ref())?;
            let ts: Vec<f64> = log_grid(p.tau_min, p.tau_max, p.points)
                .iter()
                .map(|tau| horizon - tau)
                .collect();
            let a = bernstein_audit(&fam, &g, &ts, p.m_max, p.alpha_max, p.k).map_err(core)?;
            let mut out = Outcome::new(
                a.contraction_holds && a.slope_rel_err <= 0.05,
                json!({
                    "k": a.k,
                    "c0_data": a.c0_hat,
                    "c0_operator": a.c0_op,
                    "slope": a.slope,
                    "slope_rel_err": a.slope_rel_err,
                    "contraction_holds": a.contraction_holds,
                }),
            );
            out.tables.push(("bernstein.csv", a.to_csv()));
            Ok(out)
        }
        ExperimentDecl::Cylinders(p) => {
            let fam = loaded.family(horizon)?;
            let g = datum(loaded, p.datum.as_ref())?;
            let dim = sc.equation.dim();
            let betas = cylinder_lattice(dim, p.r, p.extent);
            let (gamma, measured) = match p.gamma {
                Some(v) => (v, false),
                None => {
                    let sup = loaded.support(horizon)?;
                    let prof = thickness_profile(&sup, p.r, &betas, p.samples, seed).map_err(core)?;
                    (prof.min.min(1.0), true)
                }
            };
            let ts: Vec<f64> = log_grid(0.05 * horizon, horizon, p.audit_points)
                .iter()
                .map(|tau| horizon - tau)
                .collect();
            let audit = bernstein_audit(&fam, &g, &ts, p.m_cap, p.alpha_cap, None).map_err(core)?;
            let constants = CylinderConstants::measure(&fam, &audit).map_err(core)?;
            let mut csv = String::from("epsilon,beta,class,bound_ratio,energy,witness_m,witness_alpha\n");
            let mut splits = Vec::new();
            let mut all_hold = true;
            for &eps in &p.epsilons {
                let split = classify_cylinders(
                    &fam,
                    gamma,
                    eps,
                    &g,
                    p.r,
                    &betas,
                    p.m_cap,
                    p.alpha_cap,
                    &constants,
                    p.nodes,
                )
                .map_err(core)?;
                for rep in &split.reports {
                    let (wm, wa) = rep
                        .witness
                        .as_ref()
                        .map_or((String::new(), String::new()), |(m, a)| (m.to_string(), join_usize(a)));
                    csv.push_str(&format!(
                        "{eps},{},{},{},{},{wm},{wa}\n",
                        join(&rep.beta),
                        label(&rep.classification),
                        rep.bound_ratio,
                        rep.energy
                    ));
                }
                all_hold &= split.bad_bound_holds;
                let bad = split
                    .reports
                    .iter()
                    .filter(|r| r.classification == CylinderClass::Bad)
                    .count();
                splits.push(json!({
                    "epsilon": eps,
                    "t_gamma": split.t_gamma,
                    "cylinders": split.reports.len(),
                    "bad": bad,
                    "good_energy": split.good_energy,
                    "bad_energy": split.bad_energy,
                    "g_norm_sq": split.g_norm_sq,
                    "bad_bound_holds": split.bad_bound_holds,
                }));
            }
            let mut out = Outcome::new(
                all_hold,
                json!({
                    "gamma": gamma,
                    "gamma_measured": measured,
                    "constants": to_json(&constants),
                    "splits": splits,
                }),
            );
            out.tables.push(("cylinders.csv", csv));
            Ok(out)
        }
        ExperimentDecl::Fdb(p) => {
            let mut csv = String::from("m,a,sum,closed_form,equal\n");
            let mut all = true;
            for a in 1..=p.a_max {
                let ar = BigRational::from_integer(a.into());
                for m in 1..=p.m_max {
                    let sum = faa_di_bruno_sum(m, &ar).map_err(core)?;
                    let closed = rising_factorial_ratio(m, &ar);
                    let eq = sum == closed;
                    all &= eq;
                    csv.push_str(&format!("{m},{a},{sum},{closed},{eq}\n"));
                }
            }
            let mut out = Outcome::new(
                all,
                json!({ "m_max": p.m_max, "a_max": p.a_max, "identity_holds": all }),
            );
            out.tables.push(("fdb.csv", csv));
            Ok(out)
        }
    }
}

fn hum_problem(
    loaded: &LoadedScenario,
    decl: Option<&DatumDecl>,
    epsilon: f64,
    cost: f64,
    nodes: usize,
) -> Result<HumProblem, CliError> {
    let horizon = loaded.scenario.equation.horizon();
    let fam = loaded.family(horizon)?;
    let sup = loaded.support(horizon)?;
    let f0 = datum(loaded, decl)?;
    HumProblem::new(fam, sup, f0, epsilon, cost, nodes).map_err(|e| loaded.config_error("experiment", e.to_string()))
}

fn datum(loaded: &LoadedScenario, decl: Option<&DatumDecl>) -> Result<SpectralField, CliError> {
    let grid = loaded.grid()?;
    loaded.datum(decl, grid)
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn join_usize(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

/// snake_case name of a unit enum variant.
fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => String::new(),
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}
