//! Normalized SIRS epidemic with strategy-dependent transmission.
//!
//! State `y = (I, R)`; the susceptible share is `S = 1 − I − R`. The
//! average transmission rate is `B(x) = xᵀ Q x`.
//!
//! Rates: `g = θ − ζ`, `σ̄ = γ + ζ + δ`, `σ = g + σ̄` and `ω = g + ω̄`
//! (the waning rate `ω` enters the recovered equation; it is not a second
//! definition of `σ`).

use super::{ExoSystem, XGradient};
use crate::error::{Error, Result};
use crate::simplex::{minimize_quadratic_form, quadratic_form, quadratic_form_gradient};

/// Floor applied to `I` when integration grazes the disease-free boundary.
pub const INFECTED_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SirsParams {
    /// Disease death rate δ (1/day).
    pub delta: f64,
    /// Natural death rate ζ (1/day).
    pub zeta: f64,
    /// Birth rate θ (1/day).
    pub theta: f64,
    /// Recovery rate γ (1/day).
    pub gamma: f64,
    /// Immunity waning plus natural death, ω̄ = ψ + ζ (1/day).
    pub omega_bar: f64,
    /// Pairwise transmission rates β_ij (1/day).
    pub q: Vec<Vec<f64>>,
}

impl SirsParams {
    pub fn growth(&self) -> f64 {
        self.theta - self.zeta
    }

    pub fn sigma_bar(&self) -> f64 {
        self.gamma + self.zeta + self.delta
    }

    pub fn sigma(&self) -> f64 {
        self.growth() + self.sigma_bar()
    }

    pub fn omega(&self) -> f64 {
        self.growth() + self.omega_bar
    }
}

/// Infected and recovered shares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirsState {
    pub infected: f64,
    pub recovered: f64,
}

impl SirsState {
    pub fn new(infected: f64, recovered: f64) -> Result<Self> {
        let s = Self { infected, recovered };
        if !(infected > 0.0 && recovered >= 0.0 && infected + recovered <= 1.0) {
            return Err(Error::Domain(format!(
                "SIRS state (I={infected}, R={recovered}) needs I > 0, R >= 0, I + R <= 1"
            )));
        }
        Ok(s)
    }

    pub fn susceptible(&self) -> f64 {
        1.0 - self.infected - self.recovered
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.infected, self.recovered]
    }
}

/// Validated SIRS model.
#[derive(Debug, Clone)]
pub struct SirsModel {
    params: SirsParams,
    sigma: f64,
    omega: f64,
    min_transmission: f64,
}

impl SirsModel {
    pub fn new(params: SirsParams) -> Result<Self> {
        let n = params.q.len();
        if n == 0 || params.q.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("transmission matrix Q must be square and nonempty"));
        }
        if params.q.iter().flatten().any(|&b| !(b.is_finite() && b > 0.0)) {
            return Err(Error::invalid("transmission matrix Q must have positive entries"));
        }
        for (name, v) in [
            ("delta", params.delta),
            ("zeta", params.zeta),
            ("theta", params.theta),
            ("gamma", params.gamma),
            ("omega_bar", params.omega_bar),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        for (name, v) in [
            ("g = theta - zeta", params.growth()),
            ("sigma_bar", params.sigma_bar()),
            ("sigma", params.sigma()),
            ("omega", params.omega()),
        ] {
            if v <= 0.0 {
                return Err(Error::ModelInconsistency(format!("{name} must be positive, got {v}")));
            }
        }
        let (sigma, omega) = (params.sigma(), params.omega());
        if !(params.delta > 0.0 && params.delta < omega.min(params.gamma)) {
            return Err(Error::ModelInconsistency(format!(
                "need 0 < delta < min(omega, gamma); delta = {}, omega = {omega}, gamma = {}",
                params.delta, params.gamma
            )));
        }
        let min_b = minimize_quadratic_form(&params.q, None, 200)?.value;
        if min_b <= sigma {
            return Err(Error::ModelInconsistency(format!(
                "min over the simplex of xᵀQx is {min_b}, must exceed sigma = {sigma}"
            )));
        }
        Ok(Self {
            params,
            sigma,
            omega,
            min_transmission: min_b,
        })
    }

    pub fn params(&self) -> &SirsParams {
        &self.params
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Minimum of `B` over the simplex, computed at construction.
    pub fn min_transmission(&self) -> f64 {
        self.min_transmission
    }

    /// `B(x) = xᵀ Q x`.
    pub fn transmission_rate(&self, x: &[f64]) -> f64 {
        quadratic_form(&self.params.q, x)
    }

    /// `∇B(x) = (Q + Qᵀ) x`.
    pub fn transmission_gradient(&self, x: &[f64]) -> Vec<f64> {
        quadratic_form_gradient(&self.params.q, x)
    }

    /// SIRS right-hand side at a fixed transmission rate.
    pub fn field_at(&self, infected: f64, recovered: f64, b: f64) -> [f64; 2] {
        let p = &self.params;
        let s = 1.0 - infected - recovered;
        [
            (b * s + p.delta * infected - self.sigma) * infected,
            p.gamma * infected - self.omega * recovered + p.delta * recovered * infected,
        ]
    }

    /// Endemic equilibrium `(I*, R*)` for a fixed transmission rate `B > σ`.
    ///
    /// `I*` is the small root of `δ(B−δ) I² − b_B I + ω(B−σ) = 0` with
    /// `b_B = γB + ω(B−δ) + δ(B−σ)` and discriminant
    /// `Δ = b_B² − 4δω(B−δ)(B−σ)`; it is evaluated as
    /// `2ω(B−σ) / (b_B + √Δ)` to avoid cancellation when δ is small.
    pub fn endemic_equilibrium(&self, b: f64) -> Result<(f64, f64)> {
        let p = &self.params;
        let (delta, sigma, omega) = (p.delta, self.sigma, self.omega);
        if !(b > sigma) {
            return Err(Error::ModelInconsistency(format!(
                "transmission rate {b} does not exceed sigma = {sigma}"
            )));
        }
        let b_b = p.gamma * b + omega * (b - delta) + delta * (b - sigma);
        let disc = b_b * b_b - 4.0 * delta * omega * (b - delta) * (b - sigma);
        if disc < 0.0 {
            return Err(Error::ModelInconsistency(format!("negative discriminant {disc}")));
        }
        let infected = 2.0 * omega * (b - sigma) / (b_b + disc.sqrt());
        if !(infected > 0.0) {
            return Err(Error::ModelInconsistency(format!(
                "nonpositive endemic infected level {infected}"
            )));
        }
        let recovered = (1.0 - sigma / b) - (1.0 - delta / b) * infected;
        Ok((infected, recovered))
    }

    /// `Ũ(I, R; B) = (I − I*) + I* ln(I*/I) + (a_B/2)(R − R*)²` with
    /// `a_B = B / (γ + δ R*)`.
    pub fn lyapunov_at(&self, infected: f64, recovered: f64, b: f64) -> Result<f64> {
        if !(infected > 0.0) {
            return Err(Error::Domain(format!("SIRS Lyapunov needs I > 0, got {infected}")));
        }
        let (i_star, r_star) = self.endemic_equilibrium(b)?;
        let a_b = b / (self.params.gamma + self.params.delta * r_star);
        let dr = recovered - r_star;
        Ok((infected - i_star) + i_star * (i_star / infected).ln() + 0.5 * a_b * dr * dr)
    }

    /// Gradient of `Ũ` in `(I, R)`.
    pub fn lyapunov_grad_at(&self, infected: f64, recovered: f64, b: f64) -> Result<[f64; 2]> {
        if !(infected > 0.0) {
            return Err(Error::Domain(format!("SIRS Lyapunov needs I > 0, got {infected}")));
        }
        let (i_star, r_star) = self.endemic_equilibrium(b)?;
        let a_b = b / (self.params.gamma + self.params.delta * r_star);
        Ok([1.0 - i_star / infected, a_b * (recovered - r_star)])
    }

    /// Central-difference `∂Ũ/∂B`, step `1e-6·(1 + |B|)` shrunk if the
    /// probe would cross `B = σ`. Returns the derivative and whether the
    /// step was shrunk.
    pub fn lyapunov_db(&self, infected: f64, recovered: f64, b: f64) -> Result<(f64, bool)> {
        let mut h = 1e-6 * (1.0 + b.abs());
        let mut shrunk = false;
        while b - h <= self.sigma && h > 1e-15 {
            h *= 0.5;
            shrunk = true;
        }
        let up = self.lyapunov_at(infected, recovered, b + h)?;
        let down = self.lyapunov_at(infected, recovered, b - h)?;
        Ok(((up - down) / (2.0 * h), shrunk))
    }
}

impl ExoSystem for SirsModel {
    fn name(&self) -> &'static str {
        "sirs"
    }

    fn dim(&self) -> usize {
        2
    }

    fn n_strategies(&self) -> usize {
        self.params.q.len()
    }

    fn state_labels(&self) -> &'static [&'static str] {
        &["I", "R"]
    }

    fn is_valid(&self, y: &[f64]) -> bool {
        y.len() == 2 && y[0] > 0.0 && y[1] >= 0.0 && y[0] + y[1] <= 1.0 + 1e-12
    }

    fn enforce_domain(&self, y: &mut [f64]) -> bool {
        let mut moved = false;
        if !(y[0] >= INFECTED_FLOOR) {
            y[0] = INFECTED_FLOOR;
            moved = true;
        }
        if y[1] < 0.0 {
            y[1] = 0.0;
            moved = true;
        }
        if y[0] + y[1] > 1.0 {
            y[1] = (1.0 - y[0]).max(0.0);
            moved = true;
        }
        moved
    }

    fn vector_field(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.field_at(y[0], y[1], self.transmission_rate(x)).to_vec())
    }

    fn equilibrium(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (i, r) = self.endemic_equilibrium(self.transmission_rate(x))?;
        Ok(vec![i, r])
    }

    fn lyapunov(&self, y: &[f64], x: &[f64]) -> Result<f64> {
        self.lyapunov_at(y[0], y[1], self.transmission_rate(x))
    }

    fn grad_y_lyapunov(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.lyapunov_grad_at(y[0], y[1], self.transmission_rate(x))?.to_vec())
    }

    fn lyapunov_min(&self) -> f64 {
        0.0
    }

    fn x_valid(&self, x: &[f64]) -> bool {
        self.transmission_rate(x) > self.sigma
    }

    /// Chain rule `∂Ũ/∂B · ∇B(x)`; the step argument is unused because the
    /// `B`-derivative picks its own step.
    fn grad_x_lyapunov(&self, y: &[f64], x: &[f64], _h: f64) -> Result<XGradient> {
        let (d_b, step_shrunk) = self.lyapunov_db(y[0], y[1], self.transmission_rate(x))?;
        let grad = self
            .transmission_gradient(x)
            .into_iter()
            .map(|g| d_b * g)
            .collect();
        Ok(XGradient { grad, step_shrunk })
    }
}

/// Endemic equilibrium by root finding on the SIRS field, independent of
/// the closed form.
///
/// Eliminates `R = γI / (ω − δI)` and brackets the infected level on
/// `(0, 1)`, where the reduced equation is strictly decreasing, then
/// polishes with two-dimensional Newton steps on the full field.
pub fn newton_equilibrium(model: &SirsModel, b: f64) -> Result<(f64, f64)> {
    let p = model.params();
    let (delta, gamma, sigma, omega) = (p.delta, p.gamma, model.sigma(), model.omega());
    if !(b > sigma) {
        return Err(Error::ModelInconsistency(format!("B = {b} must exceed sigma = {sigma}")));
    }
    let recovered_of = |i: f64| gamma * i / (omega - delta * i);
    let reduced = |i: f64| b * (1.0 - i - recovered_of(i)) + delta * i - sigma;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if reduced(hi) >= 0.0 {
        return Err(Error::ModelInconsistency("no endemic root in (0, 1)".into()));
    }
    let mut i = 0.5 * (lo + hi);
    for _ in 0..200 {
        let h = reduced(i);
        if h.abs() < 1e-17 || hi - lo < 1e-16 {
            break;
        }
        if h > 0.0 {
            lo = i;
        } else {
            hi = i;
        }
        let dh = -b - b * gamma * omega / (omega - delta * i).powi(2) + delta;
        let newton = i - h / dh;
        i = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    let mut y = [i, recovered_of(i)];
    for _ in 0..5 {
        let [fi, fr] = model.field_at(y[0], y[1], b);
        let s = 1.0 - y[0] - y[1];
        // Jacobian of the field in (I, R).
        let j11 = b * s + delta * y[0] - sigma + (delta - b) * y[0];
        let j12 = -b * y[0];
        let j21 = gamma + delta * y[1];
        let j22 = -omega + delta * y[0];
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 {
            break;
        }
        y[0] -= (fi * j22 - fr * j12) / det;
        y[1] -= (j11 * fr - j21 * fi) / det;
    }
    Ok((y[0], y[1]))
}
