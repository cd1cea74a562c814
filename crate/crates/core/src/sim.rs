//! Closed-loop integration of exogenous system, population and payoff
//! mechanism.
//!
//! The stacked state `(y, x, q)` follows `ẏ = f(y; x)`, `ẋ = V(x, p)` and
//! `q̇ = G(y, x, q)` with `p = H(y, x, q) − c`. Integration is classical
//! fixed-step RK4; after each step the population state is re-projected
//! onto the simplex if it drifted and the exogenous state is clamped into
//! its domain.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exo::ExoSystem;
use crate::mechanism::{incentive_field, instantaneous_cost, reward_and_payoff, MechanismGains};
use crate::rules::LearningRule;
use crate::simplex::{project_raw, PopulationState, SIMPLEX_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub t: f64,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub q: Vec<f64>,
}

/// Terms of the composite Lyapunov function
/// `L = k1 U + k3 (max p* − xᵀp*) + (k2/2)‖x − x*‖² + S(x, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovBreakdown {
    pub exo: f64,
    pub target_payoff: f64,
    pub distance: f64,
    /// `None` when the rule has no closed-form storage function.
    pub storage: Option<f64>,
    /// Present only when every term is available.
    pub total: Option<f64>,
}

/// Composite Lyapunov function evaluated at `(y, x, q)`.
pub fn total_lyapunov(
    gains: &MechanismGains,
    system: &dyn ExoSystem,
    rule: &LearningRule,
    y: &[f64],
    x: &[f64],
    q: &[f64],
) -> Result<LyapunovBreakdown> {
    let exo = gains.k1 * system.lyapunov(y, x)?;
    let p_star = gains.p_star.as_slice();
    let max_p = p_star.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let target_payoff = gains.k3 * (max_p - x.iter().zip(p_star).map(|(a, b)| a * b).sum::<f64>());
    let distance = 0.5
        * gains.k2
        * x.iter()
            .zip(gains.x_star.as_slice())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>();
    let (_, p) = reward_and_payoff(gains, q);
    let storage = rule.storage(x, &p).ok();
    let total = storage.map(|s| exo + target_payoff + distance + s);
    Ok(LyapunovBreakdown {
        exo,
        target_payoff,
        distance,
        storage,
        total,
    })
}

/// `L(y, x, 0)`: the composite function with zero payoff, where the
/// storage term vanishes for every rule.
pub fn lyapunov_at_zero_payoff(
    gains: &MechanismGains,
    system: &dyn ExoSystem,
    y: &[f64],
    x: &[f64],
) -> Result<f64> {
    let p_star = gains.p_star.as_slice();
    let max_p = p_star.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let xp: f64 = x.iter().zip(p_star).map(|(a, b)| a * b).sum();
    let dist2: f64 = x
        .iter()
        .zip(gains.x_star.as_slice())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(gains.k1 * system.lyapunov(y, x)? + gains.k3 * (max_p - xp) + 0.5 * gains.k2 * dist2)
}

/// What a step had to repair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepFlags {
    pub reprojected: bool,
    pub clamped: bool,
}

fn stacked_field(
    system: &dyn ExoSystem,
    rule: &LearningRule,
    gains: &MechanismGains,
    y: &[f64],
    x: &[f64],
    q: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut y = y.to_vec();
    system.enforce_domain(&mut y);
    let dy = system.vector_field(&y, x)?;
    let (_, p) = reward_and_payoff(gains, q);
    let dx = rule.edm_field(x, &p);
    let dq = incentive_field(gains, system, &y, x, q)?;
    Ok((dy, dx, dq))
}

fn axpy(base: &[f64], h: f64, d: &[f64]) -> Vec<f64> {
    base.iter().zip(d).map(|(b, v)| b + h * v).collect()
}

/// One classical RK4 step of the closed loop.
pub fn step_rk4(
    system: &dyn ExoSystem,
    rule: &LearningRule,
    gains: &MechanismGains,
    state: &CoupledState,
    dt: f64,
) -> Result<(CoupledState, StepFlags)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("step size must be positive, got {dt}")));
    }
    let (y, x, q) = (&state.y, &state.x, &state.q);
    let k1 = stacked_field(system, rule, gains, y, x, q)?;
    let k2 = stacked_field(
        system,
        rule,
        gains,
        &axpy(y, 0.5 * dt, &k1.0),
        &axpy(x, 0.5 * dt, &k1.1),
        &axpy(q, 0.5 * dt, &k1.2),
    )?;
    let k3 = stacked_field(
        system,
        rule,
        gains,
        &axpy(y, 0.5 * dt, &k2.0),
        &axpy(x, 0.5 * dt, &k2.1),
        &axpy(q, 0.5 * dt, &k2.2),
    )?;
    let k4 = stacked_field(
        system,
        rule,
        gains,
        &axpy(y, dt, &k3.0),
        &axpy(x, dt, &k3.1),
        &axpy(q, dt, &k3.2),
    )?;
    let combine = |base: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..base.len())
            .map(|i| base[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
            .collect()
    };
    let mut next = CoupledState {
        t: state.t + dt,
        y: combine(y, &k1.0, &k2.0, &k3.0, &k4.0),
        x: combine(x, &k1.1, &k2.1, &k3.1, &k4.1),
        q: combine(q, &k1.2, &k2.2, &k3.2, &k4.2),
    };
    let mut flags = StepFlags::default();
    let sum: f64 = next.x.iter().sum();
    let drift = next
        .x
        .iter()
        .fold((sum - 1.0).abs(), |acc, &v| acc.max(-v));
    if drift > SIMPLEX_TOL && next.x.iter().all(|v| v.is_finite()) {
        next.x = project_raw(&next.x);
        flags.reprojected = true;
    }
    if next.y.iter().all(|v| v.is_finite()) {
        flags.clamped = system.enforce_domain(&mut next.y);
    }
    Ok((next, flags))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub horizon: f64,
    pub dt: f64,
    pub record_interval: f64,
    pub conv_tol: f64,
    pub dwell_time: f64,
    pub stop_on_convergence: bool,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            horizon: 5000.0,
            dt: 0.05,
            record_interval: 1.0,
            conv_tol: 1e-3,
            dwell_time: 50.0,
            stop_on_convergence: true,
        }
    }
}

#[derive(Clone)]
pub struct Scenario {
    pub id: String,
    pub seed: u64,
    pub system: Arc<dyn ExoSystem>,
    pub rule: LearningRule,
    pub gains: MechanismGains,
    pub y0: Vec<f64>,
    pub x0: PopulationState,
    pub q0: Vec<f64>,
    pub settings: SimSettings,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("id", &self.id)
            .field("system", &self.system.name())
            .field("rule", &self.rule)
            .field("gains", &self.gains)
            .field("y0", &self.y0)
            .field("x0", &self.x0)
            .field("q0", &self.q0)
            .field("settings", &self.settings)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub r: Vec<f64>,
    pub cost: f64,
    /// Composite Lyapunov value, when the rule has a storage function.
    pub lyapunov: Option<f64>,
    /// Exogenous Lyapunov value `U(y; x)`.
    pub exo_lyapunov: f64,
    pub v_norm: f64,
}

/// Diagnostics accumulated over every integration step, not just the
/// recorded samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    pub converged_at: Option<f64>,
    /// `‖(y, x, q) − (y*(x*), x*, p*)‖_∞` at the last step.
    pub final_error: f64,
    /// Componentwise maximum of the exogenous state.
    pub peak_state: Vec<f64>,
    pub max_cost: f64,
    /// `L(y0, x0, 0)`.
    pub l0: f64,
    /// `max_t L(y, x, 0) − L0`; nonpositive when the sublevel bound holds.
    pub max_sublevel_excess: f64,
    /// `max_k (L_{k+1} − L_k) / (1 + L_k)`, if the rule has a storage
    /// function.
    pub max_lyapunov_rise: Option<f64>,
    /// `max_t ‖p − q‖_∞`.
    pub max_payoff_identity_gap: f64,
    pub clamp_events: usize,
    pub reprojections: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scenario_id: String,
    pub rule: String,
    pub seed: u64,
    pub gains: (f64, f64, f64),
    pub dt: f64,
    pub state_labels: Vec<String>,
    pub target: CoupledState,
    pub samples: Vec<Sample>,
    pub stats: RunStats,
}

impl Trajectory {
    pub fn converged(&self) -> bool {
        self.stats.converged_at.is_some()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories hold at least the initial sample")
    }
}

fn sup_distance(a: &CoupledState, b: &CoupledState) -> f64 {
    a.y.iter()
        .zip(&b.y)
        .chain(a.x.iter().zip(&b.x))
        .chain(a.q.iter().zip(&b.q))
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

fn validate(sc: &Scenario) -> Result<()> {
    let s = &sc.settings;
    let mut bad = Vec::new();
    if !(s.dt > 0.0 && s.dt.is_finite()) {
        bad.push(format!("dt must be positive, got {}", s.dt));
    }
    if !(s.horizon >= 0.0 && s.horizon.is_finite()) {
        bad.push(format!("horizon must be nonnegative, got {}", s.horizon));
    }
    if !(s.record_interval > 0.0) {
        bad.push(format!("record_interval must be positive, got {}", s.record_interval));
    }
    if !(s.conv_tol > 0.0) {
        bad.push(format!("conv_tol must be positive, got {}", s.conv_tol));
    }
    if !(s.dwell_time >= 0.0) {
        bad.push(format!("dwell_time must be nonnegative, got {}", s.dwell_time));
    }
    let n = sc.gains.n();
    if sc.x0.len() != n || sc.q0.len() != n || sc.system.n_strategies() != n {
        bad.push(format!(
            "strategy counts disagree: x0 {}, q0 {}, gains {}, system {}",
            sc.x0.len(),
            sc.q0.len(),
            n,
            sc.system.n_strategies()
        ));
    }
    if sc.y0.len() != sc.system.dim() || !sc.system.is_valid(&sc.y0) {
        bad.push(format!("initial exogenous state {:?} is outside the state space", sc.y0));
    }
    if sc.q0.iter().any(|v| !v.is_finite()) {
        bad.push("q0 must be finite".into());
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(bad))
    }
}

struct Recorder<'a> {
    sc: &'a Scenario,
}

impl Recorder<'_> {
    fn sample(&self, st: &CoupledState) -> Result<Sample> {
        let sc = self.sc;
        let (r, p) = reward_and_payoff(&sc.gains, &st.q);
        let breakdown = total_lyapunov(&sc.gains, sc.system.as_ref(), &sc.rule, &st.y, &st.x, &st.q)?;
        let v = sc.rule.edm_field(&st.x, &p);
        Ok(Sample {
            t: st.t,
            y: st.y.clone(),
            x: st.x.clone(),
            q: st.q.clone(),
            cost: instantaneous_cost(&st.x, &r),
            p,
            r,
            lyapunov: breakdown.total,
            exo_lyapunov: breakdown.exo / sc.gains.k1,
            v_norm: v.iter().map(|a| a * a).sum::<f64>().sqrt(),
        })
    }
}

/// Integrates a scenario over `[0, horizon]`.
///
/// Samples are recorded every `record_interval`; with
/// `stop_on_convergence` the run ends once the stacked state has stayed
/// within `conv_tol` of the target for `dwell_time`.
pub fn simulate(sc: &Scenario) -> Result<Trajectory> {
    validate(sc)?;
    let s = &sc.settings;
    let sys = sc.system.as_ref();

    let y_star = sys.equilibrium(sc.gains.x_star.as_slice())?;
    let target = CoupledState {
        t: 0.0,
        y: y_star,
        x: sc.gains.x_star.as_slice().to_vec(),
        q: sc.gains.p_star.as_slice().to_vec(),
    };

    let n_steps = (s.horizon / s.dt).round() as usize;
    let record_every = ((s.record_interval / s.dt).round() as usize).max(1);
    let dwell_steps = (s.dwell_time / s.dt).round() as usize;

    let mut state = CoupledState {
        t: 0.0,
        y: sc.y0.clone(),
        x: sc.x0.as_slice().to_vec(),
        q: sc.q0.clone(),
    };
    let recorder = Recorder { sc };
    let first = recorder.sample(&state)?;
    let l0 = lyapunov_at_zero_payoff(&sc.gains, sys, &state.y, &state.x)?;
    let mut stats = RunStats {
        steps: 0,
        converged_at: None,
        final_error: sup_distance(&state, &target),
        peak_state: state.y.clone(),
        max_cost: first.cost,
        l0,
        max_sublevel_excess: 0.0,
        max_lyapunov_rise: first.lyapunov.map(|_| f64::NEG_INFINITY),
        max_payoff_identity_gap: 0.0,
        clamp_events: 0,
        reprojections: 0,
    };
    let mut prev_l = first.lyapunov;
    let mut traj = Trajectory {
        scenario_id: sc.id.clone(),
        rule: sc.rule.label(),
        seed: sc.seed,
        gains: (sc.gains.k1, sc.gains.k2, sc.gains.k3),
        dt: s.dt,
        state_labels: sys.state_labels().iter().map(|l| l.to_string()).collect(),
        target: target.clone(),
        samples: vec![first],
        stats: stats.clone(),
    };

    let mut streak_start: Option<(usize, f64)> =
        (stats.final_error < s.conv_tol).then_some((0, 0.0));

    // Inputs were validated above, so any model error from here on means
    // the trajectory left the region where the model is defined.
    macro_rules! or_diverge {
        ($e:expr, $t:expr) => {
            match $e {
                Ok(v) => v,
                Err(e) => {
                    traj.stats = stats;
                    return Err(Error::Divergence {
                        t: $t,
                        reason: e.to_string(),
                        partial: Box::new(traj),
                    });
                }
            }
        };
    }

    for k in 1..=n_steps {
        let (mut next, flags) = or_diverge!(step_rk4(sys, &sc.rule, &sc.gains, &state, s.dt), state.t);
        next.t = k as f64 * s.dt;
        let finite = next.y.iter().chain(&next.x).chain(&next.q).all(|v| v.is_finite());
        if !finite {
            traj.stats = stats;
            return Err(Error::Divergence {
                t: next.t,
                reason: "non-finite state".into(),
                partial: Box::new(traj),
            });
        }
        state = next;
        stats.steps = k;
        stats.clamp_events += flags.clamped as usize;
        stats.reprojections += flags.reprojected as usize;

        for (peak, v) in stats.peak_state.iter_mut().zip(&state.y) {
            *peak = peak.max(*v);
        }
        let (r, p) = reward_and_payoff(&sc.gains, &state.q);
        stats.max_cost = stats.max_cost.max(instantaneous_cost(&state.x, &r));
        let gap = p
            .iter()
            .zip(&state.q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        stats.max_payoff_identity_gap = stats.max_payoff_identity_gap.max(gap);

        let l_zero = or_diverge!(lyapunov_at_zero_payoff(&sc.gains, sys, &state.y, &state.x), state.t);
        stats.max_sublevel_excess = stats.max_sublevel_excess.max(l_zero - l0);
        if let Some(prev) = prev_l {
            let s_now = or_diverge!(sc.rule.storage(&state.x, &p), state.t);
            let l_now = l_zero + s_now;
            let rise = (l_now - prev) / (1.0 + prev);
            stats.max_lyapunov_rise = stats.max_lyapunov_rise.map(|m| m.max(rise));
            prev_l = Some(l_now);
        }

        let err = sup_distance(&state, &target);
        stats.final_error = err;
        if err < s.conv_tol {
            let (start_k, start_t) = *streak_start.get_or_insert((k, state.t));
            if k - start_k >= dwell_steps && stats.converged_at.is_none() {
                stats.converged_at = Some(start_t);
            }
        } else {
            streak_start = None;
            stats.converged_at = None;
        }

        let done = stats.converged_at.is_some() && s.stop_on_convergence;
        if k % record_every == 0 || k == n_steps || done {
            let sample = or_diverge!(recorder.sample(&state), state.t);
            traj.samples.push(sample);
        }
        if done {
            break;
        }
    }
    if n_steps == 0 && stats.final_error < s.conv_tol && dwell_steps == 0 {
        stats.converged_at = Some(0.0);
    }
    traj.stats = stats;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{example1_sirs, EXAMPLE1_COSTS, EXAMPLE1_X0, EXAMPLE1_Y0};
    use crate::simplex::PayoffVector;

    fn target() -> PopulationState {
        PopulationState::new(vec![1.0 / 12.0, 10.0 / 12.0, 1.0 / 12.0]).unwrap()
    }

    fn gains(k: (f64, f64, f64)) -> MechanismGains {
        MechanismGains::new(
            k,
            target(),
            PayoffVector::zeros(3),
            PayoffVector::new(EXAMPLE1_COSTS.to_vec()).unwrap(),
        )
        .unwrap()
    }

    fn scenario(settings: SimSettings) -> Scenario {
        Scenario {
            id: "test".into(),
            seed: 0,
            system: Arc::new(example1_sirs()),
            rule: LearningRule::smith(1.0, 4.0).unwrap(),
            gains: gains((2.0, 0.022, 1.0)),
            y0: EXAMPLE1_Y0.to_vec(),
            x0: PopulationState::new(EXAMPLE1_X0.to_vec()).unwrap(),
            q0: vec![0.0; 3],
            settings,
        }
    }

    #[test]
    fn breakdown_at_equilibrium() {
        let sys = example1_sirs();
        let g = gains((2.0, 0.022, 1.0));
        let rule = LearningRule::smith(1.0, 4.0).unwrap();
        let xs = target();
        let ys = sys.equilibrium(xs.as_slice()).unwrap();
        let b = total_lyapunov(&g, &sys, &rule, &ys, xs.as_slice(), &[0.0; 3]).unwrap();
        assert!(b.total.unwrap().abs() < 1e-15);
    }

    #[test]
    fn breakdown_with_zero_payoff() {
        let sys = example1_sirs();
        let g = gains((2.0, 0.022, 1.0));
        let rule = LearningRule::bnn(1.0, 4.0).unwrap();
        let (y, x) = (EXAMPLE1_Y0, EXAMPLE1_X0);
        let b = total_lyapunov(&g, &sys, &rule, &y, &x, &[0.0; 3]).unwrap();
        let u = sys.lyapunov(&y, &x).unwrap();
        let d2: f64 = x.iter().zip(target().as_slice()).map(|(a, b)| (a - b).powi(2)).sum();
        let expect = 2.0 * u + 0.011 * d2;
        assert!((b.total.unwrap() - expect).abs() < 1e-14);
        assert_eq!(b.storage, Some(0.0));
        assert_eq!(b.target_payoff, 0.0);
        assert!((lyapunov_at_zero_payoff(&g, &sys, &y, &x).unwrap() - expect).abs() < 1e-14);
        let sum = b.exo + b.target_payoff + b.distance + b.storage.unwrap();
        assert!((sum - b.total.unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn breakdown_without_storage_omits_total() {
        let sys = example1_sirs();
        let g = gains((2.0, 0.022, 1.0));
        let rule = LearningRule::bnn_power(1.0, 2.0, 16.0).unwrap();
        let b = total_lyapunov(&g, &sys, &rule, &EXAMPLE1_Y0, &EXAMPLE1_X0, &[0.1, 0.0, 0.0]).unwrap();
        assert!(b.storage.is_none() && b.total.is_none());
        assert!(b.exo > 0.0);
    }

    #[test]
    fn step_at_equilibrium_stays_put() {
        let sys = example1_sirs();
        let g = gains((2.0, 0.022, 1.0));
        let rule = LearningRule::smith(1.0, 4.0).unwrap();
        let xs = target();
        let st = CoupledState {
            t: 0.0,
            y: sys.equilibrium(xs.as_slice()).unwrap(),
            x: xs.as_slice().to_vec(),
            q: vec![0.0; 3],
        };
        let (next, _) = step_rk4(&sys, &rule, &g, &st, 0.05).unwrap();
        for (a, b) in next.y.iter().chain(&next.x).chain(&next.q).zip(st.y.iter().chain(&st.x).chain(&st.q)) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn step_conserves_mass_before_projection() {
        let sys = example1_sirs();
        let g = gains((2.0, 0.022, 1.0));
        let rule = LearningRule::bnn(1.0, 4.0).unwrap();
        let st = CoupledState {
            t: 0.0,
            y: vec![0.05, 0.3],
            x: vec![0.3, 0.3, 0.4],
            q: vec![0.2, -0.1, 0.05],
        };
        let (next, flags) = step_rk4(&sys, &rule, &g, &st, 0.05).unwrap();
        assert!(!flags.reprojected);
        assert!((next.x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_horizon_gives_one_sample() {
        let mut sc = scenario(SimSettings {
            horizon: 0.0,
            ..SimSettings::default()
        });
        let xs = target();
        sc.y0 = sc.system.equilibrium(xs.as_slice()).unwrap();
        sc.x0 = xs;
        let traj = simulate(&sc).unwrap();
        assert_eq!(traj.samples.len(), 1);
    }

    #[test]
    fn flat_trajectory_from_equilibrium() {
        let mut sc = scenario(SimSettings {
            horizon: 20.0,
            stop_on_convergence: false,
            ..SimSettings::default()
        });
        let xs = target();
        sc.y0 = sc.system.equilibrium(xs.as_slice()).unwrap();
        sc.x0 = xs;
        let traj = simulate(&sc).unwrap();
        assert_eq!(traj.samples.len(), 21);
        for s in &traj.samples {
            assert!(s.q.iter().all(|v| v.abs() < 1e-8));
            assert!((s.y[0] - traj.samples[0].y[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn sample_count_matches_record_interval() {
        let sc = scenario(SimSettings {
            horizon: 10.0,
            record_interval: 0.5,
            stop_on_convergence: false,
            ..SimSettings::default()
        });
        let traj = simulate(&sc).unwrap();
        assert_eq!(traj.samples.len(), 21);
        assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let sc = scenario(SimSettings {
            dt: 0.0,
            ..SimSettings::default()
        });
        assert!(matches!(simulate(&sc), Err(Error::Validation(_))));
    }

    #[test]
    fn divergence_carries_partial_trajectory() {
        // A huge step overshoots the SIRS dynamics into non-finite values.
        let sc = scenario(SimSettings {
            horizon: 1e6,
            dt: 5e3,
            record_interval: 5e3,
            ..SimSettings::default()
        });
        match simulate(&sc) {
            Err(Error::Divergence { partial, .. }) => assert!(!partial.samples.is_empty()),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
