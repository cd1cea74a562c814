//! Python bindings: learning rules, the SIRS model, simplex utilities, the
//! reference design problem and the config-driven runner.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use popsteer::config::load_config;
use popsteer::design::{
    max_cost_bound, peak_infection_bound, solve_target_state, DesignProblem, SublevelGrid, SUBLEVEL_RESOLUTION,
};
use popsteer::exo::{newton_equilibrium, ExoSystem, SirsModel, SirsParams};
use popsteer::mechanism::MechanismGains;
use popsteer::presets::{
    example1_sirs, EXAMPLE1_BUDGET, EXAMPLE1_COSTS, EXAMPLE1_PEAK_CAP, EXAMPLE1_X0, EXAMPLE1_Y0,
};
use popsteer::rules::{verify_rule_properties, LearningRule};
use popsteer::runner::{run, Command};
use popsteer::sim::{simulate, Scenario, SimSettings};
use popsteer::simplex::{PayoffVector, PopulationState};

fn err(e: popsteer::Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "LearningRule", frozen)]
struct PyLearningRule(LearningRule);

#[pymethods]
impl PyLearningRule {
    #[staticmethod]
    #[pyo3(signature = (rate, tau_bar))]
    fn smith(rate: f64, tau_bar: f64) -> PyResult<Self> {
        LearningRule::smith(rate, tau_bar).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (rate, saturation, tau_bar))]
    fn smith_saturated(rate: f64, saturation: f64, tau_bar: f64) -> PyResult<Self> {
        LearningRule::smith_saturated(rate, saturation, tau_bar).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (rate, tau_bar))]
    fn bnn(rate: f64, tau_bar: f64) -> PyResult<Self> {
        LearningRule::bnn(rate, tau_bar).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (rate, exponent, tau_bar))]
    fn bnn_power(rate: f64, exponent: f64, tau_bar: f64) -> PyResult<Self> {
        LearningRule::bnn_power(rate, exponent, tau_bar).map(Self).map_err(err)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind().as_str()
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label()
    }

    fn edm_field(&self, x: Vec<f64>, p: Vec<f64>) -> Vec<f64> {
        self.0.edm_field(&x, &p)
    }

    fn revision_rates(&self, x: Vec<f64>, p: Vec<f64>) -> Vec<Vec<f64>> {
        self.0.revision_rates(&x, &p)
    }

    fn storage(&self, x: Vec<f64>, p: Vec<f64>) -> PyResult<f64> {
        self.0.storage(&x, &p).map_err(err)
    }

    /// Monte-Carlo certification; returns `{check: {passed, checked,
    /// failures, worst_margin, inconclusive}}`.
    #[pyo3(signature = (n = 3, samples = 10_000, low = -2.0, high = 2.0, seed = 0))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        n: usize,
        samples: usize,
        low: f64,
        high: f64,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let report = verify_rule_properties(&self.0, n, samples, (low, high), seed).map_err(err)?;
        let out = PyDict::new(py);
        for c in report.checks() {
            let d = PyDict::new(py);
            d.set_item("passed", c.passed)?;
            d.set_item("checked", c.checked)?;
            d.set_item("failures", c.failures)?;
            d.set_item("worst_margin", c.worst_margin)?;
            d.set_item("inconclusive", c.inconclusive)?;
            out.set_item(c.name, d)?;
        }
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("LearningRule({})", self.0.label())
    }
}

#[pyclass(name = "SirsModel", frozen)]
struct PySirsModel(SirsModel);

#[pymethods]
impl PySirsModel {
    #[new]
    fn new(delta: f64, zeta: f64, theta: f64, gamma: f64, omega_bar: f64, q: Vec<Vec<f64>>) -> PyResult<Self> {
        let params = SirsParams {
            delta,
            zeta,
            theta,
            gamma,
            omega_bar,
            q,
        };
        SirsModel::new(params).map(Self).map_err(err)
    }

    /// The three-strategy reference epidemic.
    #[staticmethod]
    fn example1() -> Self {
        Self(example1_sirs())
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma()
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.0.omega()
    }

    fn transmission_rate(&self, x: Vec<f64>) -> f64 {
        self.0.transmission_rate(&x)
    }

    /// Closed-form endemic `(I*, R*)` at transmission rate `b`.
    fn endemic_equilibrium(&self, b: f64) -> PyResult<(f64, f64)> {
        self.0.endemic_equilibrium(b).map_err(err)
    }

    fn newton_equilibrium(&self, b: f64) -> PyResult<(f64, f64)> {
        newton_equilibrium(&self.0, b).map_err(err)
    }

    fn equilibrium(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.equilibrium(&x).map_err(err)
    }

    fn vector_field(&self, y: Vec<f64>, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.vector_field(&y, &x).map_err(err)
    }

    fn lyapunov(&self, y: Vec<f64>, x: Vec<f64>) -> PyResult<f64> {
        self.0.lyapunov(&y, &x).map_err(err)
    }
}

#[pyfunction]
fn project_to_simplex(v: Vec<f64>) -> PyResult<Vec<f64>> {
    popsteer::simplex::project_to_simplex(&v).map(|p| p.into_vec()).map_err(err)
}

#[pyfunction]
fn lemma1_solve(q: Vec<f64>, xbar: Vec<f64>) -> PyResult<Vec<f64>> {
    let q = PayoffVector::new(q).map_err(err)?;
    let xbar = PopulationState::new(xbar).map_err(err)?;
    popsteer::simplex::lemma1_solve(&q, &xbar).map(|x| x.into_vec()).map_err(err)
}

fn example1_problem() -> PyResult<DesignProblem> {
    let x0 = PopulationState::new(EXAMPLE1_X0.to_vec()).map_err(err)?;
    DesignProblem::new(
        example1_sirs(),
        EXAMPLE1_COSTS.to_vec(),
        EXAMPLE1_BUDGET,
        EXAMPLE1_Y0.to_vec(),
        x0,
        EXAMPLE1_PEAK_CAP,
    )
    .map_err(err)
}

/// Target state, equilibrium, and the peak and cost bounds of the
/// reference epidemic at gains `(k1, k2, k3)`.
#[pyfunction]
#[pyo3(signature = (k1 = 2.0, k2 = 0.022, k3 = 1.0, resolution = SUBLEVEL_RESOLUTION))]
fn design_example1(py: Python<'_>, k1: f64, k2: f64, k3: f64, resolution: usize) -> PyResult<Bound<'_, PyDict>> {
    let problem = example1_problem()?;
    let target = solve_target_state(&problem).map_err(err)?;
    let y_star = problem.model.equilibrium(target.x.as_slice()).map_err(err)?;
    let grid = SublevelGrid::new(&problem, &target.x, resolution).map_err(err)?;
    let peak = peak_infection_bound(&grid, &problem, k1, k2).map_err(err)?;
    let gains = example1_gains((k1, k2, k3), &target.x)?;
    let cost = max_cost_bound(&grid, &problem, &gains).map_err(err)?;

    let d = PyDict::new(py);
    d.set_item("x_star", target.x.as_slice().to_vec())?;
    d.set_item("transmission", target.transmission)?;
    d.set_item("spend", target.spend)?;
    d.set_item("y_star", y_star)?;
    d.set_item("i_max", peak.i_max)?;
    d.set_item("i_max_gap", peak.gap_estimate)?;
    d.set_item("l0", peak.l0)?;
    d.set_item("cost_bound", cost.value)?;
    Ok(d)
}

fn example1_gains(k: (f64, f64, f64), x_star: &PopulationState) -> PyResult<MechanismGains> {
    let costs = PayoffVector::new(EXAMPLE1_COSTS.to_vec()).map_err(err)?;
    MechanismGains::new(k, x_star.clone(), PayoffVector::zeros(3), costs).map_err(err)
}

/// Closed-loop run of the reference epidemic from its standard initial
/// condition. Returns the recorded columns and the run statistics.
#[pyfunction]
#[pyo3(signature = (rule, k1 = 2.0, k2 = 0.022, k3 = 1.0, horizon = 5000.0, dt = 0.05, stop_on_convergence = true))]
#[allow(clippy::too_many_arguments)]
fn simulate_example1<'py>(
    py: Python<'py>,
    rule: &PyLearningRule,
    k1: f64,
    k2: f64,
    k3: f64,
    horizon: f64,
    dt: f64,
    stop_on_convergence: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let problem = example1_problem()?;
    let target = solve_target_state(&problem).map_err(err)?;
    let sc = Scenario {
        id: "example1".into(),
        seed: 0,
        system: Arc::new(example1_sirs()),
        rule: rule.0.clone(),
        gains: example1_gains((k1, k2, k3), &target.x)?,
        y0: EXAMPLE1_Y0.to_vec(),
        x0: problem.x0.clone(),
        q0: vec![0.0; 3],
        settings: SimSettings {
            horizon,
            dt,
            stop_on_convergence,
            ..Default::default()
        },
    };
    let traj = py.detach(|| simulate(&sc)).map_err(err)?;
    let d = PyDict::new(py);
    let col = |f: &dyn Fn(&popsteer::sim::Sample) -> f64| traj.samples.iter().map(f).collect::<Vec<f64>>();
    d.set_item("t", col(&|s| s.t))?;
    d.set_item("I", col(&|s| s.y[0]))?;
    d.set_item("R", col(&|s| s.y[1]))?;
    d.set_item("cost", col(&|s| s.cost))?;
    d.set_item("x", traj.samples.iter().map(|s| s.x.clone()).collect::<Vec<_>>())?;
    d.set_item("q", traj.samples.iter().map(|s| s.q.clone()).collect::<Vec<_>>())?;
    d.set_item("converged_at", traj.stats.converged_at)?;
    d.set_item("peak_infected", traj.stats.peak_state[0])?;
    d.set_item("max_cost", traj.stats.max_cost)?;
    d.set_item("final_error", traj.stats.final_error)?;
    d.set_item("max_lyapunov_rise", traj.stats.max_lyapunov_rise)?;
    Ok(d)
}

/// Runs a CLI command on a scenario file. Returns `(exit_code, summary)`;
/// configuration and runtime errors raise instead.
#[pyfunction]
#[pyo3(signature = (command, config, out, overrides = Vec::new(), seed = None))]
fn run_config(
    command: &str,
    config: PathBuf,
    out: PathBuf,
    overrides: Vec<String>,
    seed: Option<u64>,
) -> PyResult<(i32, Vec<(String, String)>)> {
    let cmd = match command {
        "simulate" => Command::Simulate,
        "sweep" => Command::Sweep,
        "design" => Command::Design,
        "verify" => Command::Verify,
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    };
    let cfg = load_config(&config, &overrides, seed).map_err(err)?;
    let built = cfg.build().map_err(err)?;
    let report = run(cmd, &built, &out).map_err(err)?;
    Ok((report.exit_code(), report.entries))
}

#[pymodule]
fn popsteer_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLearningRule>()?;
    m.add_class::<PySirsModel>()?;
    m.add_function(wrap_pyfunction!(project_to_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(lemma1_solve, m)?)?;
    m.add_function(wrap_pyfunction!(design_example1, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_example1, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
