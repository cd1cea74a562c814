//! Revision protocols and their mean dynamics.
//!
//! Two families are covered: pairwise comparison rules (`smith`,
//! `smith-saturated`), where an agent compares its own payoff with the
//! payoff of a candidate strategy, and excess-payoff target rules (`bnn`,
//! `bnn-power`), where the candidate payoff is compared with the population
//! average. Both families are δ-passive, positively correlated and Nash
//! stationary; `verify_rule_properties` checks this numerically.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{best_response_set, sample_simplex};

/// Mean-dynamics norm under which the field counts as stationary.
pub const STATIONARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    Smith,
    SmithSaturated,
    Bnn,
    BnnPower,
}

impl RuleKind {
    pub const ALL: [RuleKind; 4] = [
        RuleKind::Smith,
        RuleKind::SmithSaturated,
        RuleKind::Bnn,
        RuleKind::BnnPower,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::Smith => "smith",
            RuleKind::SmithSaturated => "smith-saturated",
            RuleKind::Bnn => "bnn",
            RuleKind::BnnPower => "bnn-power",
        }
    }

    fn is_pairwise(self) -> bool {
        matches!(self, RuleKind::Smith | RuleKind::SmithSaturated)
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An impartial revision protocol `τ(x, p)` built from a single switching
/// function `ρ` with `ρ(v) = 0` for `v <= 0` and `ρ(v) > 0` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningRule {
    kind: RuleKind,
    rate_scale: f64,
    saturation: Option<f64>,
    exponent: Option<f64>,
    tau_bar: f64,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl LearningRule {
    pub fn smith(rate_scale: f64, tau_bar: f64) -> Result<Self> {
        Ok(Self {
            kind: RuleKind::Smith,
            rate_scale: positive("rate_scale", rate_scale)?,
            saturation: None,
            exponent: None,
            tau_bar: positive("tau_bar", tau_bar)?,
        })
    }

    pub fn smith_saturated(rate_scale: f64, saturation: f64, tau_bar: f64) -> Result<Self> {
        Ok(Self {
            kind: RuleKind::SmithSaturated,
            rate_scale: positive("rate_scale", rate_scale)?,
            saturation: Some(positive("saturation", saturation)?),
            exponent: None,
            tau_bar: positive("tau_bar", tau_bar)?,
        })
    }

    pub fn bnn(rate_scale: f64, tau_bar: f64) -> Result<Self> {
        Ok(Self {
            kind: RuleKind::Bnn,
            rate_scale: positive("rate_scale", rate_scale)?,
            saturation: None,
            exponent: None,
            tau_bar: positive("tau_bar", tau_bar)?,
        })
    }

    pub fn bnn_power(rate_scale: f64, exponent: f64, tau_bar: f64) -> Result<Self> {
        if !(exponent.is_finite() && exponent >= 1.0) {
            return Err(Error::invalid(format!("exponent must be >= 1, got {exponent}")));
        }
        Ok(Self {
            kind: RuleKind::BnnPower,
            rate_scale: positive("rate_scale", rate_scale)?,
            saturation: None,
            exponent: Some(exponent),
            tau_bar: positive("tau_bar", tau_bar)?,
        })
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn rate_scale(&self) -> f64 {
        self.rate_scale
    }

    pub fn saturation(&self) -> Option<f64> {
        self.saturation
    }

    pub fn exponent(&self) -> Option<f64> {
        self.exponent
    }

    pub fn tau_bar(&self) -> f64 {
        self.tau_bar
    }

    /// Whether a closed-form storage function is available.
    pub fn has_storage(&self) -> bool {
        matches!(self.kind, RuleKind::Smith | RuleKind::Bnn)
    }

    /// Switching function applied to a payoff advantage.
    pub fn rho(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let lam = self.rate_scale;
        match self.kind {
            RuleKind::Smith | RuleKind::Bnn => lam * v,
            RuleKind::SmithSaturated => (lam * v).min(self.saturation.unwrap_or(f64::INFINITY)),
            RuleKind::BnnPower => lam * v.powf(self.exponent.unwrap_or(1.0)),
        }
    }

    /// Switching rates `τ_ij(x, p)` from strategy `i` to `j`.
    pub fn revision_rates(&self, x: &[f64], p: &[f64]) -> Vec<Vec<f64>> {
        let n = p.len();
        if self.kind.is_pairwise() {
            (0..n)
                .map(|i| (0..n).map(|j| self.rho(p[j] - p[i])).collect())
                .collect()
        } else {
            let avg: f64 = x.iter().zip(p).map(|(a, b)| a * b).sum();
            let row: Vec<f64> = p.iter().map(|&pj| self.rho(pj - avg)).collect();
            vec![row; n]
        }
    }

    /// Mean dynamics `V_i = Σ_j (x_j τ_ji − x_i τ_ij)`.
    pub fn edm_field(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        let n = p.len();
        let tau = self.revision_rates(x, p);
        (0..n)
            .map(|i| {
                let inflow: f64 = (0..n).map(|j| x[j] * tau[j][i]).sum();
                let outflow: f64 = x[i] * tau[i].iter().sum::<f64>();
                inflow - outflow
            })
            .collect()
    }

    /// Storage function of the δ-passive mean dynamics.
    ///
    /// With `Φ(s) = λ [s]₊² / 2`, pairwise comparison uses
    /// `Σ_i x_i Σ_j Φ(p_j − p_i)` and excess payoff uses `Σ_j Φ(p_j − xᵀp)`.
    pub fn storage(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        let phi = |s: f64| {
            let s = s.max(0.0);
            0.5 * self.rate_scale * s * s
        };
        match self.kind {
            RuleKind::Smith => Ok(x
                .iter()
                .zip(p)
                .map(|(&xi, &pi)| xi * p.iter().map(|&pj| phi(pj - pi)).sum::<f64>())
                .sum()),
            RuleKind::Bnn => {
                let avg: f64 = x.iter().zip(p).map(|(a, b)| a * b).sum();
                Ok(p.iter().map(|&pj| phi(pj - avg)).sum())
            }
            other => Err(Error::UnsupportedRule(other.to_string())),
        }
    }

    pub fn label(&self) -> String {
        self.kind.to_string()
    }
}

/// Outcome of one numerically certified property.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Samples at which the property was tested.
    pub checked: usize,
    pub failures: usize,
    /// Smallest observed slack; negative means a violation.
    pub worst_margin: f64,
    /// Samples too close to a tie for the check to be decisive.
    pub inconclusive: usize,
}

impl PropertyCheck {
    pub fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: true,
            checked: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
            inconclusive: 0,
        }
    }

    pub fn record(&mut self, margin: f64, ok: bool) {
        self.checked += 1;
        self.worst_margin = self.worst_margin.min(margin);
        if !ok {
            self.failures += 1;
            self.passed = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleReport {
    pub rule: String,
    pub samples: usize,
    pub positive_correlation: PropertyCheck,
    pub nash_stationarity: PropertyCheck,
    /// Absent for rules without a closed-form storage function.
    pub passivity: Option<PropertyCheck>,
    pub rate_bound: PropertyCheck,
    pub mass_conservation: PropertyCheck,
}

impl RuleReport {
    pub fn passed(&self) -> bool {
        self.positive_correlation.passed
            && self.nash_stationarity.passed
            && self.passivity.as_ref().is_none_or(|c| c.passed)
            && self.rate_bound.passed
            && self.mass_conservation.passed
    }

    pub fn checks(&self) -> impl Iterator<Item = &PropertyCheck> {
        [
            Some(&self.positive_correlation),
            Some(&self.nash_stationarity),
            self.passivity.as_ref(),
            Some(&self.rate_bound),
            Some(&self.mass_conservation),
        ]
        .into_iter()
        .flatten()
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Suboptimality `max p − xᵀp` of `x` against `p`.
fn best_response_gap(x: &[f64], p: &[f64]) -> f64 {
    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max - dot(x, p)).max(0.0)
}

/// Monte-Carlo certification of the properties the convergence result
/// needs from a learning rule.
///
/// Samples mix generic states on random faces of the simplex with states
/// constructed to be best responses to payoffs with exact ties.
/// Nash stationarity is checked in both directions: constructed best
/// responses must give `‖V‖ <= 1e-8`, and every other sample must give
/// `‖V‖ > 1e-8` unless its best-response gap is below `1e-6`, where the
/// rule's rates are legitimately tiny; those only need `V ≠ 0` and are
/// tallied as inconclusive. The storage inequality uses a central
/// difference with step `1e-7 / (1 + ‖V‖ + ‖u‖)` and slack
/// `1e-6·(1 + ‖u‖‖V‖)`; the step is small because Φ is only C¹ at zero,
/// which makes the truncation error first order near ties.
pub fn verify_rule_properties(
    rule: &LearningRule,
    n: usize,
    samples: usize,
    payoff_box: (f64, f64),
    seed: u64,
) -> Result<RuleReport> {
    if samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    if n < 2 {
        return Err(Error::invalid("at least two strategies are required"));
    }
    let (lo, hi) = payoff_box;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(format!("payoff box [{lo}, {hi}] must be bounded")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pc = PropertyCheck::new("positive-correlation");
    let mut ns = PropertyCheck::new("nash-stationarity");
    let mut passivity = rule.has_storage().then(|| PropertyCheck::new("delta-passivity"));
    let mut rate_bound = PropertyCheck::new("rate-bound");
    let mut mass = PropertyCheck::new("mass-conservation");

    const H: f64 = 1e-7;
    const NEAR_TIE_GAP: f64 = 1e-6;

    for k in 0..samples {
        let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        // Random face: a nonempty support set, full support half the time.
        let support: Vec<usize> = if rng.random_bool(0.5) {
            (0..n).collect()
        } else {
            loop {
                let s: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
                if !s.is_empty() {
                    break s;
                }
            }
        };
        // Every fourth sample is a best response to p with exact ties.
        let constructed_br = k % 4 == 0;
        if constructed_br {
            let max = support
                .iter()
                .map(|&i| p[i])
                .fold(f64::NEG_INFINITY, f64::max);
            for &i in &support {
                p[i] = max;
            }
            for i in (0..n).filter(|i| !support.contains(i)) {
                p[i] = p[i].min(max);
            }
        }
        let weights = sample_simplex(&mut rng, support.len());
        let mut x = vec![0.0; n];
        for (&i, w) in support.iter().zip(weights) {
            x[i] = w;
        }

        let v = rule.edm_field(&x, &p);
        let v_norm = norm2(&v);

        let total: f64 = v.iter().sum();
        mass.record(1e-12 - total.abs(), total.abs() <= 1e-12);

        let tau_max = rule
            .revision_rates(&x, &p)
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max);
        rate_bound.record(rule.tau_bar - tau_max, tau_max <= rule.tau_bar);

        if v_norm > STATIONARY_TOL {
            let corr = dot(&p, &v);
            pc.record(corr, corr > 0.0);
        }

        let in_br = best_response_set(&p, 0.0)?.supports(&x);
        if in_br {
            ns.record(STATIONARY_TOL - v_norm, v_norm <= STATIONARY_TOL);
        } else if best_response_gap(&x, &p) < NEAR_TIE_GAP {
            ns.inconclusive += 1;
            ns.record(v_norm, v_norm > 0.0);
        } else {
            ns.record(v_norm - STATIONARY_TOL, v_norm > STATIONARY_TOL);
        }

        if let Some(check) = passivity.as_mut() {
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
            let h = H / (1.0 + v_norm + norm2(&u));
            let shift = |sign: f64| -> (Vec<f64>, Vec<f64>) {
                (
                    x.iter().zip(&v).map(|(a, b)| a + sign * h * b).collect(),
                    p.iter().zip(&u).map(|(a, b)| a + sign * h * b).collect(),
                )
            };
            let (xf, pf) = shift(1.0);
            let (xb, pb) = shift(-1.0);
            let s_dot = (rule.storage(&xf, &pf)? - rule.storage(&xb, &pb)?) / (2.0 * h);
            let supply = dot(&u, &v);
            let slack = 1e-6 * (1.0 + norm2(&u) * v_norm);
            let margin = supply + slack - s_dot;
            check.record(margin, margin >= 0.0);
        }
    }

    Ok(RuleReport {
        rule: rule.label(),
        samples,
        positive_correlation: pc,
        nash_stationarity: ns,
        passivity,
        rate_bound,
        mass_conservation: mass,
    })
}
