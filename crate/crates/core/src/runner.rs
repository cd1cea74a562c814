//! Command dispatch for `simulate`, `sweep`, `design` and `verify`.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Built;
use crate::design::{log_space, max_cost_bound, parameter_sweep, peak_infection_bound, SublevelGrid};
use crate::error::{Error, Result};
use crate::exo::{newton_equilibrium, ExoSystem, GRAD_X_STEP};
use crate::output::{fmt_f64, fmt_vec, key_values, sweep_csv, trajectory_csv, write_file};
use crate::rules::{verify_rule_properties, PropertyCheck};
use crate::sim::{simulate, Trajectory};
use crate::simplex::sample_simplex;

/// Per-step tolerance on the composite Lyapunov function, relative to
/// `1 + L`.
pub const LYAPUNOV_STEP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Sweep,
    Design,
    Verify,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Design => "design",
            Command::Verify => "verify",
        }
    }
}

/// Machine-readable outcome of one command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
    /// Bound violations or failed certifications.
    pub findings: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Report {
    fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn exit_code(&self) -> i32 {
        if self.findings.is_empty() {
            0
        } else {
            4
        }
    }

    fn finish(mut self, out: &Path, name: &str) -> Result<Self> {
        self.put("findings", self.findings.len());
        for (i, f) in self.findings.clone().iter().enumerate() {
            self.put(format!("finding.{i}"), f);
        }
        let path = out.join(name);
        write_file(&path, &key_values(&self.entries))?;
        self.files.push(path);
        Ok(self)
    }
}

impl Error {
    /// Process exit status: 1 runtime or I/O, 2 validation, 3 divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::InvalidArgument(_)
            | Error::Precondition(_)
            | Error::UnsupportedRule(_)
            | Error::ModelInconsistency(_) => 2,
            Error::Divergence { .. } => 3,
            Error::Domain(_) | Error::Io { .. } => 1,
        }
    }
}

pub fn run(cmd: Command, built: &Built, out: &Path) -> Result<Report> {
    match cmd {
        Command::Simulate => run_simulate(built, out),
        Command::Sweep => run_sweep(built, out),
        Command::Design => run_design(built, out),
        Command::Verify => run_verify(built, out),
    }
}

fn header(built: &Built, cmd: Command) -> Report {
    let mut r = Report::default();
    r.put("command", cmd.as_str());
    r.put("id", &built.config.id);
    r.put("seed", built.config.seed);
    r.put("system", built.system.name());
    r.put("k1", fmt_f64(built.gains.k1));
    r.put("k2", fmt_f64(built.gains.k2));
    r.put("k3", fmt_f64(built.gains.k3));
    r.put("x_star", fmt_vec(built.gains.x_star.as_slice()));
    r
}

/// Whether the sublevel-set bounds apply: SIRS with `p* = 0` and `q0 = 0`.
fn bounds_apply(built: &Built) -> bool {
    built.sirs.is_some()
        && built.gains.p_star.as_slice().iter().all(|v| *v == 0.0)
        && built.q0.iter().all(|v| *v == 0.0)
}

fn file_stems(built: &Built) -> Vec<String> {
    let labels: Vec<String> = built.rules.iter().map(|r| r.label()).collect();
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if labels.iter().filter(|m| *m == l).count() > 1 {
                format!("{l}-{i}")
            } else {
                l.clone()
            }
        })
        .collect()
}

fn run_simulate(built: &Built, out: &Path) -> Result<Report> {
    let mut report = header(built, Command::Simulate);
    let results: Vec<Result<Trajectory>> = built
        .rules
        .par_iter()
        .map(|rule| simulate(&built.scenario(rule)))
        .collect();

    let (i_max, cost_bound) = if bounds_apply(built) {
        let problem = built.design_problem()?;
        let res = built.config.design.as_ref().map_or(crate::design::SUBLEVEL_RESOLUTION, |d| d.resolution);
        let grid = SublevelGrid::new(&problem, &built.gains.x_star, res)?;
        let peak = peak_infection_bound(&grid, &problem, built.gains.k1, built.gains.k2)?;
        let cost = max_cost_bound(&grid, &problem, &built.gains)?;
        report.put("I_max", fmt_f64(peak.i_max));
        report.put("cost_bound", fmt_f64(cost.value));
        (Some(peak.i_max), Some(cost.value))
    } else {
        (None, None)
    };
    let peak_cap = built.config.design.as_ref().map(|d| d.peak_cap);
    if let Some(cap) = peak_cap {
        report.put("peak_cap", fmt_f64(cap));
    }

    let mut divergence = None;
    for ((stem, rule), result) in file_stems(built).into_iter().zip(&built.rules).zip(results) {
        let traj = match result {
            Ok(t) => t,
            Err(Error::Divergence { t, reason, partial }) => {
                report.put(format!("{stem}.diverged_at"), fmt_f64(t));
                report.findings.push(format!("{stem}: diverged at t = {t}: {reason}"));
                let path = out.join(format!("trajectory_{stem}.csv"));
                write_file(&path, &trajectory_csv(&partial))?;
                report.files.push(path);
                divergence.get_or_insert(Error::Divergence { t, reason, partial });
                continue;
            }
            Err(e) => return Err(e),
        };
        let path = out.join(format!("trajectory_{stem}.csv"));
        write_file(&path, &trajectory_csv(&traj))?;
        report.files.push(path);

        let s = &traj.stats;
        let last = traj.last();
        report.put(format!("{stem}.rule"), rule.label());
        report.put(format!("{stem}.converged"), s.converged_at.is_some());
        report.put(
            format!("{stem}.converged_at"),
            s.converged_at.map_or("none".to_string(), fmt_f64),
        );
        for (label, (peak, fin)) in traj.state_labels.iter().zip(s.peak_state.iter().zip(&last.y)) {
            report.put(format!("{stem}.peak_{label}"), fmt_f64(*peak));
            report.put(format!("{stem}.final_{label}"), fmt_f64(*fin));
        }
        report.put(format!("{stem}.final_x"), fmt_vec(&last.x));
        report.put(format!("{stem}.final_q"), fmt_vec(&last.q));
        report.put(format!("{stem}.final_error"), fmt_f64(s.final_error));
        report.put(format!("{stem}.max_cost"), fmt_f64(s.max_cost));
        report.put(format!("{stem}.final_cost"), fmt_f64(last.cost));
        report.put(format!("{stem}.L0"), fmt_f64(s.l0));
        report.put(format!("{stem}.max_sublevel_excess"), fmt_f64(s.max_sublevel_excess));
        if let Some(rise) = s.max_lyapunov_rise {
            report.put(format!("{stem}.max_lyapunov_rise"), fmt_f64(rise));
            if rise > LYAPUNOV_STEP_TOL {
                report.findings.push(format!("{stem}: composite Lyapunov function rose by {rise:e}"));
            }
        }
        report.put(format!("{stem}.clamp_events"), s.clamp_events);
        report.put(format!("{stem}.reprojections"), s.reprojections);

        if bounds_apply(built) && s.max_sublevel_excess > LYAPUNOV_STEP_TOL * (1.0 + s.l0) {
            report.findings.push(format!(
                "{stem}: L(y, x, 0) exceeded L0 by {:e}",
                s.max_sublevel_excess
            ));
        }
        if let Some(cap) = peak_cap.filter(|_| built.sirs.is_some()) {
            if s.peak_state[0] > cap {
                report
                    .findings
                    .push(format!("{stem}: peak I = {} exceeds the cap {cap}", s.peak_state[0]));
            }
        }
        if let Some(bound) = i_max {
            if s.peak_state[0] > bound {
                report
                    .findings
                    .push(format!("{stem}: peak I = {} exceeds I_max = {bound}", s.peak_state[0]));
            }
        }
        if let Some(bound) = cost_bound {
            if s.max_cost > bound {
                report
                    .findings
                    .push(format!("{stem}: cost {} exceeds the bound {bound}", s.max_cost));
            }
        }
    }
    let report = report.finish(out, "summary.txt")?;
    match divergence {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

fn run_sweep(built: &Built, out: &Path) -> Result<Report> {
    let mut report = header(built, Command::Sweep);
    let sweep_cfg = built
        .config
        .design
        .as_ref()
        .and_then(|d| d.sweep.clone())
        .ok_or_else(|| Error::Validation(vec!["design.sweep: required by the sweep command".into()]))?;
    let problem = built.design_problem()?;
    let k1 = log_space(sweep_cfg.k1.min, sweep_cfg.k1.max, sweep_cfg.k1.count);
    let k2 = log_space(sweep_cfg.k2.min, sweep_cfg.k2.max, sweep_cfg.k2.count);
    let result = parameter_sweep(&problem, &built.gains.x_star, &k1, &k2)?;
    let path = out.join("sweep.csv");
    write_file(&path, &sweep_csv(&result))?;
    report.files.push(path);
    report.put("peak_cap", fmt_f64(result.peak_cap));
    report.put("cells", result.cells.len());
    report.put("feasible_cells", result.cells.iter().filter(|c| result.feasible(c)).count());
    let failed: Vec<_> = result.cells.iter().filter(|c| c.error.is_some()).collect();
    report.put("failed_cells", failed.len());
    for c in failed {
        report.put(
            format!("failed.{}_{}", fmt_f64(c.k1), fmt_f64(c.k2)),
            c.error.as_deref().unwrap_or_default(),
        );
    }
    report.finish(out, "summary.txt")
}

fn run_design(built: &Built, out: &Path) -> Result<Report> {
    let mut report = header(built, Command::Design);
    let problem = built.design_problem()?;
    let model = &problem.model;
    let xs = built.gains.x_star.as_slice();
    if let Some(t) = &built.target {
        report.put("transmission", fmt_f64(t.transmission));
        report.put("grid_transmission", fmt_f64(t.grid_transmission));
        report.put("spend", fmt_f64(t.spend));
    } else {
        report.put("transmission", fmt_f64(model.transmission_rate(xs)));
    }
    let y_star = model.equilibrium(xs)?;
    let newton = newton_equilibrium(model, model.transmission_rate(xs))?;
    report.put("I_star", fmt_f64(y_star[0]));
    report.put("R_star", fmt_f64(y_star[1]));
    let gap = (y_star[0] - newton.0).abs().max((y_star[1] - newton.1).abs());
    report.put("newton_gap", fmt_f64(gap));
    if gap > 1e-9 {
        report.findings.push(format!("closed-form equilibrium differs from Newton by {gap:e}"));
    }
    if bounds_apply(built) {
        let res = built.config.design.as_ref().map_or(crate::design::SUBLEVEL_RESOLUTION, |d| d.resolution);
        let grid = SublevelGrid::new(&problem, &built.gains.x_star, res)?;
        let peak = peak_infection_bound(&grid, &problem, built.gains.k1, built.gains.k2)?;
        report.put("L0", fmt_f64(peak.l0));
        report.put("I_max", fmt_f64(peak.i_max));
        report.put("I_max_grid", fmt_f64(peak.grid_value));
        report.put("I_max_gap", fmt_f64(peak.gap_estimate));
        report.put("I_max_x", fmt_vec(&peak.x));
        report.put("peak_cap", fmt_f64(problem.peak_cap));
        report.put("feasible", peak.i_max <= problem.peak_cap);
        if peak.i_max > problem.peak_cap {
            report.findings.push(format!(
                "I_max = {} exceeds the cap {} at the configured gains",
                peak.i_max, problem.peak_cap
            ));
        }
        let cost = max_cost_bound(&grid, &problem, &built.gains)?;
        report.put("cost_bound", fmt_f64(cost.value));
    }
    report.finish(out, "design.txt")
}

fn record_check(report: &mut Report, prefix: &str, c: &PropertyCheck) {
    report.put(format!("{prefix}.{}", c.name), if c.passed { "pass" } else { "fail" });
    report.put(format!("{prefix}.{}.checked", c.name), c.checked);
    report.put(format!("{prefix}.{}.worst_margin", c.name), fmt_f64(c.worst_margin));
    if c.inconclusive > 0 {
        report.put(format!("{prefix}.{}.inconclusive", c.name), c.inconclusive);
    }
    if !c.passed {
        report
            .findings
            .push(format!("{prefix}: {} failed at {} of {} samples", c.name, c.failures, c.checked));
    }
}

fn run_verify(built: &Built, out: &Path) -> Result<Report> {
    let mut report = header(built, Command::Verify);
    let v = &built.config.verify;
    let n = built.gains.n();
    for (stem, rule) in file_stems(built).iter().zip(&built.rules) {
        let r = verify_rule_properties(rule, n, v.samples, (v.payoff_box[0], v.payoff_box[1]), built.config.seed)?;
        for c in r.checks() {
            record_check(&mut report, stem, c);
        }
    }
    for c in system_invariants(built.system.as_ref(), 100, built.config.seed)? {
        record_check(&mut report, built.system.name(), &c);
    }
    if let Some(model) = &built.sirs {
        let mut rng = ChaCha8Rng::seed_from_u64(built.config.seed);
        let mut c = PropertyCheck::new("newton-agreement");
        for _ in 0..100 {
            let b = model.transmission_rate(&sample_simplex(&mut rng, n));
            let closed = model.endemic_equilibrium(b)?;
            let newton = newton_equilibrium(model, b)?;
            let gap = (closed.0 - newton.0).abs().max((closed.1 - newton.1).abs());
            c.record(1e-9 - gap, gap <= 1e-9);
        }
        record_check(&mut report, "sirs", &c);
    }
    report.finish(out, "verify.txt")
}

/// A random valid state near `y*(x)`.
fn sample_state(sys: &dyn ExoSystem, y_star: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    match sys.name() {
        "sirs" => {
            let i: f64 = (y_star[0] * rng.random_range(-3.0f64..3.0).exp()).min(0.95);
            vec![i, rng.random_range(0.0..(1.0 - i))]
        }
        _ => y_star.iter().map(|v| v * rng.random_range(-1.5f64..1.5).exp()).collect(),
    }
}

/// Equilibrium consistency, condition (iv) and Lyapunov decrease at fixed
/// `x`, each on `samples` random population states.
pub fn system_invariants(sys: &dyn ExoSystem, samples: usize, seed: u64) -> Result<Vec<PropertyCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.n_strategies();
    let mut eq = PropertyCheck::new("equilibrium-residual");
    let mut iv = PropertyCheck::new("stationary-in-x");
    let mut dec = PropertyCheck::new("lyapunov-decrease");
    for _ in 0..samples {
        let x = sample_simplex(&mut rng, n);
        let y_star = sys.equilibrium(&x)?;
        let f = sys.vector_field(&y_star, &x)?;
        let res = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
        eq.record(1e-10 - res, res <= 1e-10);
        let g = sys.grad_x_lyapunov(&y_star, &x, GRAD_X_STEP)?.grad;
        let gn = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        iv.record(1e-6 - gn, gn <= 1e-6);
        let y = sample_state(sys, &y_star, &mut rng);
        let grad = sys.grad_y_lyapunov(&y, &x)?;
        let f = sys.vector_field(&y, &x)?;
        let udot: f64 = grad.iter().zip(&f).map(|(a, b)| a * b).sum();
        dec.record(1e-8 - udot, udot <= 1e-8);
    }
    Ok(vec![eq, iv, dec])
}
