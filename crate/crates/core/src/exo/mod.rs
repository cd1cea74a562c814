//! Exogenous systems driven by the population state.
//!
//! Each system exposes its vector field `f(y; x)`, equilibrium map `y*(x)`,
//! and a Lyapunov function `U(y; x)` with its gradients. The payoff
//! mechanism only sees the [`ExoSystem`] trait.

mod leslie_gower;
mod sirs;

pub use leslie_gower::{AffineMap, LeslieGower, LeslieGowerState};
pub use sirs::{newton_equilibrium, SirsModel, SirsParams, SirsState};

use crate::error::Result;

/// Default step for finite-difference gradients in `x`.
pub const GRAD_X_STEP: f64 = 1e-6;

/// Finite-difference gradient in `x`, with a flag when the step had to be
/// shrunk to keep the perturbed parameters valid.
#[derive(Debug, Clone, PartialEq)]
pub struct XGradient {
    pub grad: Vec<f64>,
    pub step_shrunk: bool,
}

pub trait ExoSystem: Send + Sync {
    fn name(&self) -> &'static str;

    /// Dimension `m` of the exogenous state.
    fn dim(&self) -> usize;

    /// Number of strategies the system is parameterized by.
    fn n_strategies(&self) -> usize;

    /// Column labels for the state components.
    fn state_labels(&self) -> &'static [&'static str];

    fn is_valid(&self, y: &[f64]) -> bool;

    /// Pushes `y` back into the state space; returns true if anything moved.
    fn enforce_domain(&self, y: &mut [f64]) -> bool;

    fn vector_field(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>>;

    fn equilibrium(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn lyapunov(&self, y: &[f64], x: &[f64]) -> Result<f64>;

    fn grad_y_lyapunov(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>>;

    /// Value of `U` at `y = y*(x)`.
    fn lyapunov_min(&self) -> f64;

    /// Whether `x` (possibly off the simplex) keeps the parameters valid.
    fn x_valid(&self, x: &[f64]) -> bool;

    /// Central-difference gradient of `U(y; ·)` along the coordinate axes.
    fn grad_x_lyapunov(&self, y: &[f64], x: &[f64], h: f64) -> Result<XGradient> {
        coordinate_gradient(self, y, x, h)
    }
}

/// Coordinate-wise central differences, halving the step until both probe
/// points keep the parameters valid.
pub(crate) fn coordinate_gradient<S: ExoSystem + ?Sized>(
    sys: &S,
    y: &[f64],
    x: &[f64],
    h: f64,
) -> Result<XGradient> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(crate::error::Error::invalid(format!("gradient step must be positive, got {h}")));
    }
    let mut step_shrunk = false;
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let mut hi = h;
        loop {
            probe[i] = x[i] + hi;
            let ok_plus = sys.x_valid(&probe);
            probe[i] = x[i] - hi;
            let ok_minus = sys.x_valid(&probe);
            if (ok_plus && ok_minus) || hi < 1e-14 {
                break;
            }
            hi *= 0.5;
            step_shrunk = true;
        }
        probe[i] = x[i] + hi;
        let up = sys.lyapunov(y, &probe)?;
        probe[i] = x[i] - hi;
        let down = sys.lyapunov(y, &probe)?;
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * hi));
    }
    Ok(XGradient { grad, step_shrunk })
}
