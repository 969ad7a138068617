//! `run`, `verify` and `sweep`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use plsgd_core::constants::ConstantsReport;
use plsgd_core::problems::{self, ProblemInstance, ValidationReport};
use plsgd_core::sgd::{self, SgdConfig, Trajectory};
use plsgd_core::{Error, Vector};

use crate::config::{sibling, Config, ProblemConfig, ProblemSpec};
use crate::error::{write_error, CliError};
use crate::plan::{self, StepPlan};

pub const CURVE_HEADER: &str = "step,mean_loss,std_err,bound_theorem,bound_quadratic";
pub const SWEEP_HEADER: &str = "m,eta_theorem1,eta_quadratic,factor_theorem1,factor_quadratic,empirical_ratio";

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn build_instance(p: &ProblemConfig) -> Result<ProblemInstance, CliError> {
    Ok(match p.spec {
        ProblemSpec::LeastSquares => problems::gen_interpolated_least_squares(p.n, p.d, p.seed, None)?,
        ProblemSpec::ComposedLinear { k, rank } => problems::gen_composed_linear(p.n, p.d, k, rank, p.seed)?,
        ProblemSpec::ComposedNonlinear { c } => {
            let base = problems::gen_interpolated_least_squares(p.n, p.d, p.seed, None)?;
            problems::gen_composed_nonlinear(&base, c)?
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub run: usize,
    pub step: usize,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub plan: StepPlan,
    pub constants: ConstantsReport,
    pub measured_lambda: Option<f64>,
    pub w0: Vector,
    /// Aggregate over the runs that did not diverge.
    pub trajectory: Trajectory,
    pub diverged: Vec<Divergence>,
    pub bound_theorem: Vec<f64>,
    pub bound_quadratic: Vec<f64>,
    /// First step where the mean loss exceeds `bound_theorem` beyond three
    /// standard errors.
    pub first_violation: Option<usize>,
    /// Mean projected distance `‖A†A(w_t − w*)‖²` when the instance has a linear map.
    pub mean_distance: Option<Vec<f64>>,
}

impl RunOutcome {
    pub fn bound_defined(&self) -> bool {
        self.bound_theorem.iter().all(|b| b.is_finite())
    }

    pub fn bound_pass(&self) -> bool {
        self.bound_defined() && self.first_violation.is_none()
    }

    /// `pass`, `fail`, or `undefined` when no bound applies at the step run.
    pub fn bound_verdict(&self) -> &'static str {
        match (self.bound_defined(), self.first_violation) {
            (false, _) => "undefined",
            (true, None) => "pass",
            (true, Some(_)) => "fail",
        }
    }
}

/// Runs SGD with the plan's step size, keeping the runs that survive.
pub fn simulate(
    instance: &ProblemInstance,
    plan: &StepPlan,
    steps: usize,
    runs: usize,
    seed: u64,
) -> Result<RunOutcome, CliError> {
    let w0 = sgd::default_initial_point(instance.dim(), seed);
    let cfg = SgdConfig::new(plan.m, plan.eta, steps, runs, seed).with_rule(plan.rule);
    let observer = instance
        .linmap
        .as_ref()
        .map(|p| move |w: &Vector| p.projected_distance(w));
    let results = sgd::run_sgd_runs(
        &instance.objective,
        &w0,
        &cfg,
        observer.as_ref().map(|f| f as sgd::Observer),
    )?;
    let mut records = Vec::new();
    let mut diverged = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(Error::Divergence { run, step, loss }) => diverged.push(Divergence { run, step, loss }),
            Err(e) => return Err(e.into()),
        }
    }
    if records.is_empty() {
        let d = &diverged[0];
        return Err(CliError::Divergence(format!(
            "all {runs} runs diverged (run {} at step {}, loss {:e})",
            d.run, d.step, d.loss
        )));
    }
    let trajectory = Trajectory::from_records(&records, None)?;
    let mean_distance = observer.map(|_| {
        let rows: Vec<Vec<f64>> = records.iter().map(|r| r.observed.clone()).collect();
        sgd::mean_and_std_err(&rows).0
    });
    let l0 = trajectory.mean_loss[0];
    let d0 = mean_distance.as_ref().map(|d| d[0]);
    let bound_theorem = plan.bound_theorem(l0, d0, steps);
    let bound_quadratic = plan.bound_quadratic(l0, steps);
    let first_violation = trajectory.first_bound_violation(&bound_theorem);
    Ok(RunOutcome {
        plan: plan.clone(),
        constants: instance.constants.clone(),
        measured_lambda: instance.measured_lambda,
        w0,
        trajectory,
        diverged,
        bound_theorem,
        bound_quadratic,
        first_violation,
        mean_distance,
    })
}

pub fn curve_csv(o: &RunOutcome) -> String {
    let t = &o.trajectory;
    let mut out = String::with_capacity(96 * (t.mean_loss.len() + 1));
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for step in 0..t.mean_loss.len() {
        let _ = writeln!(
            out,
            "{step},{},{},{},{}",
            fmt_f64(t.mean_loss[step]),
            fmt_f64(t.std_err[step]),
            fmt_f64(o.bound_theorem[step]),
            fmt_f64(o.bound_quadratic[step])
        );
    }
    out
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

fn constant_line(out: &mut String, key: &str, c: &plsgd_core::constants::Constant) {
    let source = match c.source {
        plsgd_core::constants::Provenance::Analytic => "analytic",
        plsgd_core::constants::Provenance::Estimated => "estimated",
    };
    kv(out, key, format!("{} ({source})", fmt_f64(c.value)));
}

pub fn summary_text(cfg: &Config, o: &RunOutcome) -> String {
    let mut s = String::new();
    let p = &o.plan;
    let t = &o.trajectory;
    kv(&mut s, "problem.kind", cfg.problem.kind());
    kv(&mut s, "problem.n", cfg.problem.n);
    kv(&mut s, "problem.d", cfg.problem.d);
    constant_line(&mut s, "alpha", &o.constants.alpha);
    constant_line(&mut s, "beta", &o.constants.beta);
    constant_line(&mut s, "lambda", &o.constants.lambda);
    if let Some(l) = o.measured_lambda {
        kv(&mut s, "lambda_measured", fmt_f64(l));
    }
    kv(&mut s, "sgd.m", p.m);
    kv(&mut s, "sgd.eta_rule", p.rule);
    kv(&mut s, "eta", fmt_f64(p.eta));
    kv(&mut s, "eta_theorem1", fmt_f64(p.eta_theorem1));
    kv(&mut s, "eta_quadratic", fmt_f64(p.eta_quadratic));
    kv(&mut s, "factor_theorem1", fmt_f64(p.factor_theorem1));
    kv(&mut s, "factor_quadratic", fmt_f64(p.factor_quadratic));
    kv(&mut s, "bound_factor", fmt_f64(p.bound_factor));
    if let Some(t2) = &p.theorem2 {
        kv(&mut s, "theorem2_rate", fmt_f64(t2.rate));
        kv(&mut s, "sigma_min", fmt_f64(t2.sigma_min));
        kv(&mut s, "sigma_max", fmt_f64(t2.sigma_max));
        kv(&mut s, "loss_coefficient", fmt_f64(t2.loss_coefficient));
    }
    if let Some(d) = &o.mean_distance {
        kv(&mut s, "projected_distance_initial", fmt_f64(d[0]));
        kv(&mut s, "projected_distance_final", fmt_f64(d[d.len() - 1]));
    }
    kv(&mut s, "steps", t.steps());
    kv(&mut s, "runs", t.losses.len() + o.diverged.len());
    kv(&mut s, "runs_completed", t.losses.len());
    kv(&mut s, "runs_diverged", o.diverged.len());
    for d in &o.diverged {
        kv(
            &mut s,
            "diverged",
            format!("run {} step {} loss {}", d.run, d.step, fmt_f64(d.loss)),
        );
    }
    kv(&mut s, "initial_loss", fmt_f64(t.mean_loss[0]));
    kv(&mut s, "final_mean_loss", fmt_f64(t.mean_loss[t.steps()]));
    kv(&mut s, "final_bound_theorem", fmt_f64(o.bound_theorem[t.steps()]));
    kv(&mut s, "bound_check", o.bound_verdict());
    if let Some(step) = o.first_violation.filter(|_| o.bound_defined()) {
        kv(&mut s, "first_violation", step);
    }
    s
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| write_error(dir, e))?;
    }
    fs::write(path, text).map_err(|e| write_error(path, e))
}

#[derive(Debug, Clone)]
pub struct RunFiles {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub outcome: RunOutcome,
}

pub fn cmd_run(cfg: &Config) -> Result<RunFiles, CliError> {
    let instance = build_instance(&cfg.problem)?;
    let plan = plan::resolve(&instance, cfg.sgd.eta_rule, cfg.sgd.m, cfg.sgd.eta)?;
    let outcome = simulate(&instance, &plan, cfg.sgd.steps, cfg.sgd.runs, cfg.sgd.seed)?;
    let summary = sibling(&cfg.output, "summary.txt");
    write(&cfg.output, &curve_csv(&outcome))?;
    write(&summary, &summary_text(cfg, &outcome))?;
    Ok(RunFiles {
        csv: cfg.output.clone(),
        summary,
        outcome,
    })
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub report_path: PathBuf,
    pub report: ValidationReport,
    pub alpha: f64,
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

pub fn verify_text(cfg: &Config, alpha: f64, probes: usize, r: &ValidationReport) -> String {
    let mut s = String::new();
    kv(&mut s, "problem.kind", cfg.problem.kind());
    kv(&mut s, "alpha", fmt_f64(alpha));
    kv(&mut s, "probes", probes);
    kv(
        &mut s,
        "interpolation",
        format!(
            "{} (max sample loss {})",
            verdict(r.interpolation.pass),
            fmt_f64(r.interpolation.max_residual)
        ),
    );
    kv(
        &mut s,
        "pl",
        format!(
            "{} (checked {}, worst margin {})",
            verdict(r.pl.pass),
            r.pl.checked,
            fmt_f64(r.pl.worst_margin)
        ),
    );
    kv(
        &mut s,
        "gradient_bound",
        format!(
            "{} (worst ratio {})",
            verdict(r.gradient_bound.pass),
            fmt_f64(r.gradient_bound.worst_ratio)
        ),
    );
    kv(
        &mut s,
        "finite_difference",
        format!(
            "{} (max relative error {})",
            verdict(r.fd_pass()),
            fmt_f64(r.fd_max_relative_error)
        ),
    );
    if let Some(sc) = &r.strong_convexity {
        kv(
            &mut s,
            "strong_convexity",
            format!("{} (worst margin {})", verdict(sc.pass), fmt_f64(sc.worst_margin)),
        );
    }
    if let Some(pt) = &r.pl_transfer {
        kv(
            &mut s,
            "pl_transfer",
            format!("{} (worst margin {})", verdict(pt.pass), fmt_f64(pt.worst_margin)),
        );
    }
    if let Some(sw) = &r.sandwich {
        kv(
            &mut s,
            "jacobian_sandwich",
            format!(
                "{} (eigenvalues in [{}, {}])",
                verdict(sw.pass),
                fmt_f64(sw.min_eigenvalue),
                fmt_f64(sw.max_eigenvalue)
            ),
        );
    }
    for f in r.failures() {
        kv(&mut s, "failure", f);
    }
    kv(&mut s, "result", verdict(r.pass()));
    s
}

/// Runs the invariant suite; `alpha_scale` multiplies the analytic PL constant.
pub fn cmd_verify(cfg: &Config, alpha_scale: f64) -> Result<VerifyOutcome, CliError> {
    if !(alpha_scale > 0.0 && alpha_scale.is_finite()) {
        return Err(CliError::Config(format!(
            "--alpha-scale must be positive, got {alpha_scale}"
        )));
    }
    let instance = build_instance(&cfg.problem)?;
    let probes = instance.standard_probes(cfg.probes.count, cfg.probes.seed);
    let alpha = alpha_scale * instance.constants.alpha.value;
    let report = instance.validate_with_alpha(alpha, &probes)?;
    let report_path = sibling(&cfg.output, "verify.txt");
    write(&report_path, &verify_text(cfg, alpha, probes.len(), &report))?;
    let outcome = VerifyOutcome {
        report_path,
        report,
        alpha,
    };
    if outcome.report.pass() {
        Ok(outcome)
    } else {
        Err(CliError::Verification(format!(
            "{} (report: {})",
            outcome.report.failures().join("; "),
            outcome.report_path.display()
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub plan: StepPlan,
    /// `(mean_loss[T] / mean_loss[0])^(1/T)`; NaN when `T = 0`.
    pub empirical_ratio: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let p = &r.plan;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.m,
            fmt_f64(p.eta_theorem1),
            fmt_f64(p.eta_quadratic),
            fmt_f64(p.factor_theorem1),
            fmt_f64(p.factor_quadratic),
            fmt_f64(r.empirical_ratio)
        );
    }
    out
}

/// Geometric-mean per-step loss ratio over the whole run.
pub fn empirical_ratio(mean_loss: &[f64]) -> f64 {
    let steps = mean_loss.len().saturating_sub(1);
    if steps == 0 || !(mean_loss[0] > 0.0) {
        return f64::NAN;
    }
    (mean_loss[steps] / mean_loss[0]).powf(1.0 / steps as f64)
}

pub fn cmd_sweep(cfg: &Config, batch_sizes: &[usize]) -> Result<Vec<SweepRow>, CliError> {
    if batch_sizes.is_empty() || batch_sizes.contains(&0) {
        return Err(CliError::Config(
            "--batch-sizes: every batch size must be at least 1".into(),
        ));
    }
    let instance = build_instance(&cfg.problem)?;
    let mut rows = Vec::with_capacity(batch_sizes.len());
    for &m in batch_sizes {
        let plan = plan::resolve(&instance, cfg.sgd.eta_rule, m, cfg.sgd.eta)?;
        let outcome = simulate(&instance, &plan, cfg.sgd.steps, cfg.sgd.runs, cfg.sgd.seed)?;
        rows.push(SweepRow {
            empirical_ratio: empirical_ratio(&outcome.trajectory.mean_loss),
            plan,
        });
    }
    write(&cfg.output, &sweep_csv(&rows))?;
    Ok(rows)
}
