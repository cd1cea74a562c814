//! Scenario configuration files.
//!
//! A scenario is a TOML document with the sections `[system]`,
//! `[[rules]]`, `[mechanism]`, `[initial]`, and the optional
//! `[simulation]`, `[design]` and `[verify]`. Unknown keys are rejected.
//! Overrides of the form `section.key=value` are applied to the parsed
//! document before it is checked, with `value` read as a TOML value
//! (falling back to a bare string).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::design::{solve_target_state, DesignProblem, TargetState, SUBLEVEL_RESOLUTION};
use crate::error::{Error, Result};
use crate::exo::{AffineMap, ExoSystem, LeslieGower, SirsModel, SirsParams};
use crate::mechanism::MechanismGains;
use crate::rules::LearningRule;
use crate::sim::{Scenario, SimSettings};
use crate::simplex::{PayoffVector, PopulationState};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub system: SystemConfig,
    pub rules: Vec<RuleConfig>,
    pub mechanism: MechanismConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    pub design: Option<DesignConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn default_id() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    Sirs {
        delta: f64,
        zeta: f64,
        theta: f64,
        gamma: f64,
        omega_bar: f64,
        q: Vec<Vec<f64>>,
    },
    LeslieGower {
        a1: f64,
        a2: f64,
        z1: AffineConfig,
        z2: AffineConfig,
        b1: AffineConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineConfig {
    pub constant: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RuleConfig {
    Smith { rate: f64, tau_bar: f64 },
    SmithSaturated { rate: f64, saturation: f64, tau_bar: f64 },
    Bnn { rate: f64, tau_bar: f64 },
    BnnPower { rate: f64, exponent: f64, tau_bar: f64 },
}

impl RuleConfig {
    pub fn build(&self) -> Result<LearningRule> {
        match *self {
            RuleConfig::Smith { rate, tau_bar } => LearningRule::smith(rate, tau_bar),
            RuleConfig::SmithSaturated {
                rate,
                saturation,
                tau_bar,
            } => LearningRule::smith_saturated(rate, saturation, tau_bar),
            RuleConfig::Bnn { rate, tau_bar } => LearningRule::bnn(rate, tau_bar),
            RuleConfig::BnnPower {
                rate,
                exponent,
                tau_bar,
            } => LearningRule::bnn_power(rate, exponent, tau_bar),
        }
    }
}

/// Either the keyword `"solve"` or an explicit population state.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum TargetConfig {
    Keyword(String),
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismConfig {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub x_star: TargetConfig,
    pub p_star: Option<Vec<f64>>,
    pub costs: Vec<f64>,
    /// Long-term budget, required when `x_star = "solve"`.
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub q: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub horizon: Option<f64>,
    /// Defaults to 0.05 for SIRS and 0.01 for Leslie-Gower.
    pub dt: Option<f64>,
    pub record_interval: Option<f64>,
    pub conv_tol: Option<f64>,
    pub dwell_time: Option<f64>,
    pub stop_on_convergence: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default = "default_peak_cap")]
    pub peak_cap: f64,
    pub sweep: Option<SweepConfig>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_peak_cap() -> f64 {
    0.10
}

fn default_resolution() -> usize {
    SUBLEVEL_RESOLUTION
}

/// Log-spaced gain axes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub k1: AxisConfig,
    pub k2: AxisConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_payoff_box")]
    pub payoff_box: [f64; 2],
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            payoff_box: default_payoff_box(),
        }
    }
}

fn default_samples() -> usize {
    10_000
}

fn default_payoff_box() -> [f64; 2] {
    [-2.0, 2.0]
}

/// Reads a scenario file, applies overrides and an optional seed, and
/// deserializes the result.
pub fn load_config(path: &Path, overrides: &[String], seed: Option<u64>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, overrides, seed)
}

pub fn parse_config(text: &str, overrides: &[String], seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Validation(vec![e.message().to_string()]))?;
    let mut bad = Vec::new();
    for o in overrides {
        if let Err(msg) = apply_override(&mut doc, o) {
            bad.push(msg);
        }
    }
    if let Some(s) = seed {
        doc.insert("seed".into(), toml::Value::Integer(s as i64));
    }
    if !bad.is_empty() {
        return Err(Error::Validation(bad));
    }
    ScenarioConfig::deserialize(doc).map_err(|e| Error::Validation(vec![e.message().to_string()]))
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets `a.b.c=value` in the document; numeric segments index arrays.
fn apply_override(doc: &mut toml::Table, spec: &str) -> std::result::Result<(), String> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| format!("override `{spec}` is not of the form KEY=VALUE"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("override key `{key}` is malformed"));
    }
    let value = parse_value(raw.trim());
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut cur: &mut toml::Value = doc
        .entry(path.first().copied().unwrap_or(last).to_string())
        .or_insert_with(|| toml::Value::Table(Default::default()));
    if path.is_empty() {
        *cur = value;
        return Ok(());
    }
    for seg in &path[1..] {
        cur = step_into(cur, seg, key)?;
    }
    match cur {
        toml::Value::Table(t) => {
            t.insert(last.to_string(), value);
        }
        toml::Value::Array(a) => {
            let idx: usize = last
                .parse()
                .map_err(|_| format!("override key `{key}`: `{last}` is not an array index"))?;
            let slot = a
                .get_mut(idx)
                .ok_or_else(|| format!("override key `{key}`: index {idx} out of range"))?;
            *slot = value;
        }
        _ => return Err(format!("override key `{key}` does not name a table entry")),
    }
    Ok(())
}

fn step_into<'a>(cur: &'a mut toml::Value, seg: &str, key: &str) -> std::result::Result<&'a mut toml::Value, String> {
    match cur {
        toml::Value::Table(t) => Ok(t
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()))),
        toml::Value::Array(a) => {
            let idx: usize = seg
                .parse()
                .map_err(|_| format!("override key `{key}`: `{seg}` is not an array index"))?;
            a.get_mut(idx)
                .ok_or_else(|| format!("override key `{key}`: index {idx} out of range"))
        }
        _ => Err(format!("override key `{key}` does not name a table entry")),
    }
}

/// A validated scenario ready to run.
#[derive(Clone)]
pub struct Built {
    pub config: ScenarioConfig,
    pub system: Arc<dyn ExoSystem>,
    pub sirs: Option<SirsModel>,
    pub rules: Vec<LearningRule>,
    pub gains: MechanismGains,
    pub y0: Vec<f64>,
    pub x0: PopulationState,
    pub q0: Vec<f64>,
    pub settings: SimSettings,
    /// Present when `x_star = "solve"`.
    pub target: Option<TargetState>,
}

impl std::fmt::Debug for Built {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Built")
            .field("config", &self.config)
            .field("gains", &self.gains)
            .field("target", &self.target)
            .finish_non_exhaustive()
    }
}

impl Built {
    pub fn scenario(&self, rule: &LearningRule) -> Scenario {
        Scenario {
            id: self.config.id.clone(),
            seed: self.config.seed,
            system: self.system.clone(),
            rule: rule.clone(),
            gains: self.gains.clone(),
            y0: self.y0.clone(),
            x0: self.x0.clone(),
            q0: self.q0.clone(),
            settings: self.settings.clone(),
        }
    }

    /// Design problem for SIRS scenarios.
    pub fn design_problem(&self) -> Result<DesignProblem> {
        let model = self
            .sirs
            .clone()
            .ok_or_else(|| Error::Precondition("design computations need a SIRS system".into()))?;
        let peak_cap = self.config.design.as_ref().map_or(default_peak_cap(), |d| d.peak_cap);
        DesignProblem::new(
            model,
            self.config.mechanism.costs.clone(),
            self.config.mechanism.budget.unwrap_or(f64::INFINITY).min(f64::MAX),
            self.y0.clone(),
            self.x0.clone(),
            peak_cap,
        )
    }
}

fn prefixed(prefix: &str, e: Error) -> String {
    match e {
        Error::Validation(v) => v.iter().map(|m| format!("{prefix}: {m}")).collect::<Vec<_>>().join("; "),
        other => format!("{prefix}: {other}"),
    }
}

impl ScenarioConfig {
    /// Checks every field and assembles the runnable objects. All problems
    /// found are reported together.
    pub fn build(&self) -> Result<Built> {
        let mut bad: Vec<String> = Vec::new();

        let (system, sirs): (Option<Arc<dyn ExoSystem>>, Option<SirsModel>) = match &self.system {
            SystemConfig::Sirs {
                delta,
                zeta,
                theta,
                gamma,
                omega_bar,
                q,
            } => match SirsModel::new(SirsParams {
                delta: *delta,
                zeta: *zeta,
                theta: *theta,
                gamma: *gamma,
                omega_bar: *omega_bar,
                q: q.clone(),
            }) {
                Ok(m) => (Some(Arc::new(m.clone())), Some(m)),
                Err(e) => {
                    bad.push(prefixed("system", e));
                    (None, None)
                }
            },
            SystemConfig::LeslieGower { a1, a2, z1, z2, b1 } => {
                let map = |c: &AffineConfig| AffineMap::new(c.constant, c.weights.clone());
                match LeslieGower::new(*a1, *a2, map(z1), map(z2), map(b1)) {
                    Ok(m) => (Some(Arc::new(m)), None),
                    Err(e) => {
                        bad.push(prefixed("system", e));
                        (None, None)
                    }
                }
            }
        };

        if self.rules.is_empty() {
            bad.push("rules: at least one rule is required".into());
        }
        let mut rules = Vec::new();
        for (i, r) in self.rules.iter().enumerate() {
            match r.build() {
                Ok(rule) => rules.push(rule),
                Err(e) => bad.push(prefixed(&format!("rules.{i}"), e)),
            }
        }

        let m = &self.mechanism;
        let n = m.costs.len();
        if let Some(sys) = &system {
            if sys.n_strategies() != n {
                bad.push(format!(
                    "mechanism.costs: {} entries but the system has {} strategies",
                    n,
                    sys.n_strategies()
                ));
            }
            if !sys.is_valid(&self.initial.y) {
                bad.push(format!("initial.y: {:?} is outside the state space", self.initial.y));
            }
        }
        let x0 = PopulationState::new(self.initial.x.clone())
            .map_err(|e| bad.push(prefixed("initial.x", e)))
            .ok();
        if self.initial.x.len() != n {
            bad.push(format!("initial.x: expected {n} entries"));
        }
        let q0 = self.initial.q.clone().unwrap_or_else(|| vec![0.0; n]);
        if q0.len() != n || q0.iter().any(|v| !v.is_finite()) {
            bad.push(format!("initial.q: expected {n} finite entries"));
        }
        let p_star = m.p_star.clone().unwrap_or_else(|| vec![0.0; n]);
        if p_star.len() != n {
            bad.push(format!("mechanism.p_star: expected {n} entries"));
        }
        if let Some(b) = m.budget {
            if !(b >= 0.0 && b.is_finite()) {
                bad.push(format!("mechanism.budget: must be nonnegative, got {b}"));
            }
        }
        for (name, k) in [("k1", m.k1), ("k2", m.k2), ("k3", m.k3)] {
            if !(k > 0.0 && k.is_finite()) {
                bad.push(format!("mechanism.{name}: must be positive, got {k}"));
            }
        }

        let mut target = None;
        let x_star = match &m.x_star {
            TargetConfig::Point(v) => PopulationState::new(v.clone())
                .map_err(|e| bad.push(prefixed("mechanism.x_star", e)))
                .ok(),
            TargetConfig::Keyword(k) if k == "solve" => match (&sirs, m.budget, &x0) {
                (Some(model), Some(budget), Some(x0)) if bad.is_empty() => {
                    let problem = DesignProblem::new(
                        model.clone(),
                        m.costs.clone(),
                        budget,
                        self.initial.y.clone(),
                        x0.clone(),
                        default_peak_cap(),
                    );
                    match problem.and_then(|p| solve_target_state(&p)) {
                        Ok(t) => {
                            let x = t.x.clone();
                            target = Some(t);
                            Some(x)
                        }
                        Err(e) => {
                            bad.push(prefixed("mechanism.x_star", e));
                            None
                        }
                    }
                }
                (None, _, _) if system.is_some() => {
                    bad.push("mechanism.x_star: \"solve\" is only available for SIRS systems".into());
                    None
                }
                (_, None, _) => {
                    bad.push("mechanism.budget: required when x_star = \"solve\"".into());
                    None
                }
                _ => None,
            },
            TargetConfig::Keyword(k) => {
                bad.push(format!("mechanism.x_star: expected \"solve\" or a vector, got \"{k}\""));
                None
            }
        };

        let s = &self.simulation;
        let default_dt = match self.system {
            SystemConfig::Sirs { .. } => 0.05,
            SystemConfig::LeslieGower { .. } => 0.01,
        };
        let d = SimSettings::default();
        let settings = SimSettings {
            horizon: s.horizon.unwrap_or(d.horizon),
            dt: s.dt.unwrap_or(default_dt),
            record_interval: s.record_interval.unwrap_or(d.record_interval),
            conv_tol: s.conv_tol.unwrap_or(d.conv_tol),
            dwell_time: s.dwell_time.unwrap_or(d.dwell_time),
            stop_on_convergence: s.stop_on_convergence.unwrap_or(d.stop_on_convergence),
        };
        for (name, v, strict) in [
            ("horizon", settings.horizon, false),
            ("dt", settings.dt, true),
            ("record_interval", settings.record_interval, true),
            ("conv_tol", settings.conv_tol, true),
            ("dwell_time", settings.dwell_time, false),
        ] {
            let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
            if !ok {
                bad.push(format!("simulation.{name}: invalid value {v}"));
            }
        }

        if let Some(dc) = &self.design {
            if !(dc.peak_cap > 0.0 && dc.peak_cap < 1.0) {
                bad.push(format!("design.peak_cap: must lie in (0, 1), got {}", dc.peak_cap));
            }
            if dc.resolution == 0 {
                bad.push("design.resolution: must be positive".into());
            }
            if let Some(sw) = &dc.sweep {
                for (name, ax) in [("k1", &sw.k1), ("k2", &sw.k2)] {
                    if !(ax.min > 0.0 && ax.max >= ax.min && ax.max.is_finite() && ax.count > 0) {
                        bad.push(format!("design.sweep.{name}: need 0 < min <= max and count > 0"));
                    }
                }
            }
        }
        let [lo, hi] = self.verify.payoff_box;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) || self.verify.samples == 0 {
            bad.push("verify: need samples > 0 and a bounded payoff_box".into());
        }

        if !bad.is_empty() {
            return Err(Error::Validation(bad));
        }
        let (system, x0, x_star) = (system.unwrap(), x0.unwrap(), x_star.unwrap());
        let gains = MechanismGains::new(
            (m.k1, m.k2, m.k3),
            x_star,
            PayoffVector::new(p_star).map_err(|e| Error::Validation(vec![prefixed("mechanism.p_star", e)]))?,
            PayoffVector::new(m.costs.clone())
                .map_err(|e| Error::Validation(vec![prefixed("mechanism.costs", e)]))?,
        )
        .map_err(|e| match e {
            Error::Validation(v) => Error::Validation(v.into_iter().map(|m| format!("mechanism: {m}")).collect()),
            other => other,
        })?;
        Ok(Built {
            config: self.clone(),
            system,
            sirs,
            rules,
            gains,
            y0: self.initial.y.clone(),
            x0,
            q0,
            settings,
            target,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EXAMPLE: &str = r#"
id = "example1"

[system]
kind = "sirs"
delta = 0.005
zeta = 0.0
theta = 0.0002
gamma = 0.1
omega_bar = 0.011
q = [[0.13, 0.18, 0.2], [0.16, 0.22, 0.23], [0.17, 0.28, 0.5]]

[[rules]]
kind = "smith"
rate = 1.0
tau_bar = 4.0

[[rules]]
kind = "bnn-power"
rate = 100.0
exponent = 1.1
tau_bar = 460.0

[mechanism]
k1 = 2.0
k2 = 0.022
k3 = 1.0
x_star = "solve"
costs = [0.2, 0.1, 0.0]
budget = 0.1

[initial]
y = [0.019, 0.172]
x = [1.0, 0.0, 0.0]
"#;

    #[test]
    fn parses_and_solves_target() {
        let cfg = parse_config(EXAMPLE, &[], None).unwrap();
        let built = cfg.build().unwrap();
        let x = built.gains.x_star.as_slice();
        assert!((x[1] - 10.0 / 12.0).abs() < 1e-3);
        assert_eq!(built.rules.len(), 2);
        assert_eq!(built.settings.dt, 0.05);
        assert_eq!(built.q0, vec![0.0; 3]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = EXAMPLE.replace("k3 = 1.0", "k3 = 1.0\nk4 = 2.0");
        let err = parse_config(&text, &[], None).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("k4"), "{err}");
        let text = EXAMPLE.replace("rate = 1.0", "rate = 1.0\nspeed = 3.0");
        assert!(parse_config(&text, &[], None).unwrap_err().to_string().contains("speed"));
    }

    #[test]
    fn nonpositive_gain_is_named() {
        let cfg = parse_config(EXAMPLE, &["mechanism.k1=-1".into()], None).unwrap();
        let err = cfg.build().unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("k1"), "{err}");
    }

    #[test]
    fn overrides_reach_nested_and_array_entries() {
        let cfg = parse_config(
            EXAMPLE,
            &[
                "simulation.dt=0.01".into(),
                "rules.1.exponent=2".into(),
                "mechanism.x_star=[0.25, 0.5, 0.25]".into(),
                "id=renamed".into(),
            ],
            Some(9),
        )
        .unwrap();
        assert_eq!(cfg.simulation.dt, Some(0.01));
        assert_eq!(cfg.id, "renamed");
        assert_eq!(cfg.seed, 9);
        match &cfg.rules[1] {
            RuleConfig::BnnPower { exponent, .. } => assert_eq!(*exponent, 2.0),
            r => panic!("{r:?}"),
        }
        assert_eq!(cfg.mechanism.x_star, TargetConfig::Point(vec![0.25, 0.5, 0.25]));
    }

    #[test]
    fn malformed_overrides_are_reported() {
        let err = parse_config(EXAMPLE, &["nonsense".into(), "rules.7.rate=1".into()], None).unwrap_err();
        match err {
            Error::Validation(v) => assert_eq!(v.len(), 2),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn all_problems_reported_together() {
        let cfg = parse_config(
            EXAMPLE,
            &["mechanism.k2=0".into(), "simulation.dt=-1".into(), "initial.x=[0.5, 0.6, 0.0]".into()],
            None,
        )
        .unwrap();
        match cfg.build().unwrap_err() {
            Error::Validation(v) => {
                let joined = v.join("\n");
                assert!(joined.contains("k2") && joined.contains("dt") && joined.contains("initial.x"), "{joined}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn solve_needs_budget_and_sirs() {
        let text = EXAMPLE.replace("budget = 0.1\n", "");
        let err = parse_config(&text, &[], None).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("budget"));
    }

    #[test]
    fn leslie_gower_config() {
        let text = r#"
[system]
kind = "leslie-gower"
a1 = 1.0
a2 = 1.0
z1 = { constant = 1.0, weights = [0.2, -0.1] }
z2 = { constant = 1.0, weights = [0.0, 0.3] }
b1 = { constant = 0.5, weights = [0.0, 0.0] }

[[rules]]
kind = "smith"
rate = 1.0
tau_bar = 4.0

[mechanism]
k1 = 1.0
k2 = 1.0
k3 = 1.0
x_star = [0.5, 0.5]
costs = [0.0, 0.0]

[initial]
y = [0.5, 0.5]
x = [1.0, 0.0]
"#;
        let built = parse_config(text, &[], None).unwrap().build().unwrap();
        assert_eq!(built.settings.dt, 0.01);
        assert_eq!(built.system.name(), "leslie-gower");
        let solve = text.replace("x_star = [0.5, 0.5]", "x_star = \"solve\"\nbudget = 1.0");
        let err = parse_config(&solve, &[], None).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("SIRS"), "{err}");
    }
}
