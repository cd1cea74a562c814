//! Leslie-Gower host–parasite model with strategy-dependent growth rates.
//!
//! `Ȯ = (z1(x) − a1 P − b1(x) O) O`, `Ṗ = (z2(x) − a2 P / O) P`.

use super::ExoSystem;
use crate::error::{Error, Result};

/// Lower bound kept on both populations during integration.
pub const POPULATION_FLOOR: f64 = 1e-12;

/// `v(x) = constant + weightsᵀ x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub constant: f64,
    pub weights: Vec<f64>,
}

impl AffineMap {
    pub fn new(constant: f64, weights: Vec<f64>) -> Self {
        Self { constant, weights }
    }

    pub fn constant(value: f64, n: usize) -> Self {
        Self {
            constant: value,
            weights: vec![0.0; n],
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.weights.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Values at the simplex vertices; by affinity these bound every value
    /// on the simplex.
    pub fn vertex_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().map(|w| self.constant + w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeslieGowerState {
    pub hosts: f64,
    pub parasites: f64,
}

impl LeslieGowerState {
    pub fn new(hosts: f64, parasites: f64) -> Result<Self> {
        if !(hosts > 0.0 && parasites > 0.0) {
            return Err(Error::Domain(format!(
                "Leslie-Gower populations must be positive, got O={hosts}, P={parasites}"
            )));
        }
        Ok(Self { hosts, parasites })
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.hosts, self.parasites]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeslieGower {
    a1: f64,
    a2: f64,
    z1: AffineMap,
    z2: AffineMap,
    b1: AffineMap,
}

impl LeslieGower {
    pub fn new(a1: f64, a2: f64, z1: AffineMap, z2: AffineMap, b1: AffineMap) -> Result<Self> {
        if !(a1 > 0.0 && a1.is_finite() && a2 > 0.0 && a2.is_finite()) {
            return Err(Error::invalid(format!(
                "interaction coefficients must be positive, got a1={a1}, a2={a2}"
            )));
        }
        let n = z1.weights.len();
        if n == 0 || z2.weights.len() != n || b1.weights.len() != n {
            return Err(Error::invalid("parameter maps must share a nonzero strategy count"));
        }
        if z1.vertex_values().any(|v| !(v > 0.0)) {
            return Err(Error::invalid("z1 must be positive at every simplex vertex"));
        }
        if z2.vertex_values().any(|v| !(v > 0.0)) {
            return Err(Error::invalid("z2 must be positive at every simplex vertex"));
        }
        if b1.vertex_values().any(|v| !(v >= 0.0)) {
            return Err(Error::invalid("b1 must be nonnegative at every simplex vertex"));
        }
        Ok(Self { a1, a2, z1, z2, b1 })
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn z1(&self) -> &AffineMap {
        &self.z1
    }

    pub fn z2(&self) -> &AffineMap {
        &self.z2
    }

    pub fn b1(&self) -> &AffineMap {
        &self.b1
    }

    /// `(O*, P*) = (a2 z1, z1 z2) / (a1 z2 + a2 b1)`, so `P*/O* = z2/a2`.
    pub fn coexistence_equilibrium(&self, x: &[f64]) -> (f64, f64) {
        let (z1, z2, b1) = (self.z1.eval(x), self.z2.eval(x), self.b1.eval(x));
        let den = self.a1 * z2 + self.a2 * b1;
        (self.a2 * z1 / den, z1 * z2 / den)
    }

    /// Closed-form `dU/dt = −(a1/P)(P−P*)² − (b1/O)(O−O*)²` at fixed `x`.
    pub fn lyapunov_rate(&self, y: &[f64], x: &[f64]) -> f64 {
        let (os, ps) = self.coexistence_equilibrium(x);
        -(self.a1 / y[1]) * (y[1] - ps).powi(2) - (self.b1.eval(x) / y[0]) * (y[0] - os).powi(2)
    }

    fn check_state(y: &[f64]) -> Result<()> {
        if !(y[0] > 0.0 && y[1] > 0.0) {
            return Err(Error::Domain(format!(
                "Leslie-Gower populations must be positive, got {y:?}"
            )));
        }
        Ok(())
    }
}

impl ExoSystem for LeslieGower {
    fn name(&self) -> &'static str {
        "leslie-gower"
    }

    fn dim(&self) -> usize {
        2
    }

    fn n_strategies(&self) -> usize {
        self.z1.weights.len()
    }

    fn state_labels(&self) -> &'static [&'static str] {
        &["O", "P"]
    }

    fn is_valid(&self, y: &[f64]) -> bool {
        y.len() == 2 && y[0] > 0.0 && y[1] > 0.0
    }

    fn enforce_domain(&self, y: &mut [f64]) -> bool {
        let mut moved = false;
        for v in y.iter_mut() {
            if !(*v >= POPULATION_FLOOR) {
                *v = POPULATION_FLOOR;
                moved = true;
            }
        }
        moved
    }

    fn vector_field(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        if !(y[0] > 0.0) {
            return Err(Error::Domain(format!("host population must be positive, got {}", y[0])));
        }
        let (o, p) = (y[0], y[1]);
        Ok(vec![
            (self.z1.eval(x) - self.a1 * p - self.b1.eval(x) * o) * o,
            (self.z2.eval(x) - self.a2 * p / o) * p,
        ])
    }

    fn equilibrium(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (o, p) = self.coexistence_equilibrium(x);
        Ok(vec![o, p])
    }

    /// `U(y; x) = ln(O/O*) + O*/O + (a1 O*/a2)(ln(P/P*) + P*/P) − (a1/a2) O*`.
    /// Its minimum, attained at `y*(x)`, is 1.
    fn lyapunov(&self, y: &[f64], x: &[f64]) -> Result<f64> {
        Self::check_state(y)?;
        let (os, ps) = self.coexistence_equilibrium(x);
        let ratio = self.a1 / self.a2;
        Ok((y[0] / os).ln() + os / y[0] + ratio * os * ((y[1] / ps).ln() + ps / y[1]) - ratio * os)
    }

    fn grad_y_lyapunov(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        Self::check_state(y)?;
        let (os, ps) = self.coexistence_equilibrium(x);
        let c = self.a1 * os / self.a2;
        Ok(vec![
            1.0 / y[0] - os / (y[0] * y[0]),
            c * (1.0 / y[1] - ps / (y[1] * y[1])),
        ])
    }

    fn lyapunov_min(&self) -> f64 {
        1.0
    }

    fn x_valid(&self, x: &[f64]) -> bool {
        self.z1.eval(x) > 0.0 && self.z2.eval(x) > 0.0 && self.b1.eval(x) >= 0.0
    }
}
