//! Dynamic payoff mechanism.
//!
//! The policy maker keeps an internal state `q` with
//! `q̇ = G(y, x, q) = −k1 ∇ₓU(y; x) − k2 (x − x*) − k3 (q − p*)` and pays
//! rewards `r = H(y, x, q) = c + q`, so the payoff agents perceive is
//! `p = r − c = q`.

use crate::error::{Error, Result};
use crate::exo::{ExoSystem, GRAD_X_STEP};
use crate::simplex::{best_response_set, PayoffVector, PopulationState, SIMPLEX_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismGains {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub x_star: PopulationState,
    pub p_star: PayoffVector,
    /// Intrinsic strategy costs.
    pub c: PayoffVector,
}

impl MechanismGains {
    pub fn new(
        (k1, k2, k3): (f64, f64, f64),
        x_star: PopulationState,
        p_star: PayoffVector,
        c: PayoffVector,
    ) -> Result<Self> {
        let mut bad = Vec::new();
        for (name, k) in [("k1", k1), ("k2", k2), ("k3", k3)] {
            if !(k > 0.0 && k.is_finite()) {
                bad.push(format!("{name} must be positive, got {k}"));
            }
        }
        if !bad.is_empty() {
            return Err(Error::Validation(bad));
        }
        let n = x_star.len();
        if p_star.len() != n || c.len() != n {
            return Err(Error::invalid(format!(
                "x*, p* and c must have the same length ({}, {}, {})",
                n,
                p_star.len(),
                c.len()
            )));
        }
        if c.as_slice().iter().any(|&ci| ci < 0.0) {
            return Err(Error::invalid("intrinsic costs must be nonnegative"));
        }
        let br = best_response_set(p_star.as_slice(), SIMPLEX_TOL)?;
        if !br.supports(x_star.as_slice()) {
            return Err(Error::Precondition(format!(
                "target state is not a best response to p* (best responses {:?})",
                br.indices()
            )));
        }
        Ok(Self {
            k1,
            k2,
            k3,
            x_star,
            p_star,
            c,
        })
    }

    pub fn n(&self) -> usize {
        self.x_star.len()
    }
}

/// `G(y, x, q)`.
pub fn incentive_field(
    gains: &MechanismGains,
    system: &dyn ExoSystem,
    y: &[f64],
    x: &[f64],
    q: &[f64],
) -> Result<Vec<f64>> {
    let grad = system.grad_x_lyapunov(y, x, GRAD_X_STEP)?.grad;
    Ok(grad
        .iter()
        .zip(x)
        .zip(gains.x_star.as_slice())
        .zip(q.iter().zip(gains.p_star.as_slice()))
        .map(|(((g, xi), xs), (qi, ps))| -gains.k1 * g - gains.k2 * (xi - xs) - gains.k3 * (qi - ps))
        .collect())
}

/// Rewards `r = c + q` and perceived payoffs `p = r − c`.
pub fn reward_and_payoff(gains: &MechanismGains, q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let r: Vec<f64> = gains.c.as_slice().iter().zip(q).map(|(c, q)| c + q).collect();
    let p = r.iter().zip(gains.c.as_slice()).map(|(r, c)| r - c).collect();
    (r, p)
}

/// Spending rate `xᵀ r`.
pub fn instantaneous_cost(x: &[f64], r: &[f64]) -> f64 {
    x.iter().zip(r).map(|(a, b)| a * b).sum()
}

/// `g(y, x) = ‖c + G(y, x, 0)/k3‖_∞`, which bounds the spending rate over
/// a sublevel set of the composite Lyapunov function.
pub fn cost_bound_g(gains: &MechanismGains, system: &dyn ExoSystem, y: &[f64], x: &[f64]) -> Result<f64> {
    let zeros = vec![0.0; gains.n()];
    let g = incentive_field(gains, system, y, x, &zeros)?;
    Ok(gains
        .c
        .as_slice()
        .iter()
        .zip(&g)
        .map(|(c, gi)| (c + gi / gains.k3).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{example1_sirs, EXAMPLE1_COSTS};

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

    #[test]
    fn field_vanishes_at_mechanism_equilibrium() {
        let sys = example1_sirs();
        let g = gains((2.0, 0.022, 1.0));
        let xs = target();
        let ys = sys.equilibrium(xs.as_slice()).unwrap();
        let field = incentive_field(&g, &sys, &ys, xs.as_slice(), &[0.0; 3]).unwrap();
        assert!(field.iter().all(|v| v.abs() < 1e-6), "{field:?}");
    }

    #[test]
    fn tiny_k1_leaves_payoff_servo() {
        let sys = example1_sirs();
        let g = gains((1e-12, 0.5, 2.0));
        let xs = target();
        let q = [0.3, -0.1, 0.2];
        let field = incentive_field(&g, &sys, &[0.05, 0.4], xs.as_slice(), &q).unwrap();
        for (f, qi) in field.iter().zip(q) {
            assert!((f + 2.0 * qi).abs() < 1e-9);
        }
    }

    #[test]
    fn field_is_term_by_term_consistent() {
        let sys = example1_sirs();
        let g = gains((2.0, 0.022, 1.0));
        let (y, x, q) = ([0.019, 0.172], [1.0, 0.0, 0.0], [0.0; 3]);
        let field = incentive_field(&g, &sys, &y, &x, &q).unwrap();
        // Independent recomputation: central difference of U directly in B.
        let b = sys.transmission_rate(&x);
        let h = 1e-5;
        let du_db = (sys.lyapunov_at(y[0], y[1], b + h).unwrap() - sys.lyapunov_at(y[0], y[1], b - h).unwrap())
            / (2.0 * h);
        let db = sys.transmission_gradient(&x);
        let xs = target();
        for i in 0..3 {
            let expect = -2.0 * du_db * db[i] - 0.022 * (x[i] - xs.as_slice()[i]);
            assert!((field[i] - expect).abs() < 1e-7 * (1.0 + expect.abs()), "{i}: {} vs {expect}", field[i]);
        }
        assert!(field.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn field_is_affine_in_q() {
        let sys = example1_sirs();
        let g = gains((2.0, 0.022, 1.5));
        let (y, x) = ([0.05, 0.3], [0.2, 0.5, 0.3]);
        let q1 = [0.1, -0.2, 0.4];
        let q2 = [-0.3, 0.0, 0.1];
        let f1 = incentive_field(&g, &sys, &y, &x, &q1).unwrap();
        let f2 = incentive_field(&g, &sys, &y, &x, &q2).unwrap();
        for i in 0..3 {
            assert!((f1[i] - f2[i] + 1.5 * (q1[i] - q2[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn reward_examples() {
        let g = gains((1.0, 1.0, 1.0));
        let (r, p) = reward_and_payoff(&g, &[0.0; 3]);
        assert_eq!(r, EXAMPLE1_COSTS.to_vec());
        assert_eq!(p, vec![0.0; 3]);
        let neg: Vec<f64> = EXAMPLE1_COSTS.iter().map(|c| -c).collect();
        let (r, p) = reward_and_payoff(&g, &neg);
        assert_eq!(r, vec![0.0; 3]);
        assert_eq!(p, neg);
        let (r, p) = reward_and_payoff(&g, &[0.05, 0.0, 0.0]);
        assert!((r[0] - 0.25).abs() < 1e-15 && r[1] == 0.1 && r[2] == 0.0);
        assert!((p[0] - 0.05).abs() < 1e-15 && p[1] == 0.0 && p[2] == 0.0);
    }

    #[test]
    fn cost_examples() {
        assert_eq!(instantaneous_cost(&[0.0, 0.0, 1.0], &EXAMPLE1_COSTS), 0.0);
        assert!((instantaneous_cost(&[0.2, 0.3, 0.5], &[0.7; 3]) - 0.7).abs() < 1e-15);
        let xs = target();
        assert!((instantaneous_cost(xs.as_slice(), &EXAMPLE1_COSTS) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn cost_bound_at_equilibrium_is_max_cost() {
        let sys = example1_sirs();
        let g = gains((2.0, 0.022, 1.0));
        let xs = target();
        let ys = sys.equilibrium(xs.as_slice()).unwrap();
        let bound = cost_bound_g(&g, &sys, &ys, xs.as_slice()).unwrap();
        assert!((bound - 0.2).abs() < 1e-6);
    }

    #[test]
    fn cost_bound_tends_to_max_cost_for_large_k3() {
        let sys = example1_sirs();
        let (y, x) = ([0.05, 0.3], [0.4, 0.4, 0.2]);
        let small = cost_bound_g(&gains((2.0, 0.022, 1e3)), &sys, &y, &x).unwrap();
        let large = cost_bound_g(&gains((2.0, 0.022, 1e6)), &sys, &y, &x).unwrap();
        assert!((large - 0.2).abs() < (small - 0.2).abs() + 1e-12);
        assert!((large - 0.2).abs() < 1e-5);
    }

    #[test]
    fn gains_validation() {
        let c = PayoffVector::new(EXAMPLE1_COSTS.to_vec()).unwrap();
        let err = MechanismGains::new((0.0, 1.0, 1.0), target(), PayoffVector::zeros(3), c.clone()).unwrap_err();
        assert!(err.to_string().contains("k1"));
        let p_star = PayoffVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            MechanismGains::new((1.0, 1.0, 1.0), target(), p_star, c),
            Err(Error::Precondition(_))
        ));
    }
}
