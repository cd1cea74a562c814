//! Reference scenario: three-strategy SIRS epidemic with budgeted incentives.

use crate::exo::{SirsModel, SirsParams};
use crate::rules::LearningRule;

/// Transmission matrix β_ij of the reference epidemic.
pub fn example1_q() -> Vec<Vec<f64>> {
    vec![
        vec![0.13, 0.18, 0.2],
        vec![0.16, 0.22, 0.23],
        vec![0.17, 0.28, 0.5],
    ]
}

pub fn example1_params() -> SirsParams {
    SirsParams {
        delta: 0.005,
        zeta: 0.0,
        theta: 0.0002,
        gamma: 0.1,
        omega_bar: 0.011,
        q: example1_q(),
    }
}

pub fn example1_sirs() -> SirsModel {
    SirsModel::new(example1_params()).expect("reference parameters are valid")
}

/// Intrinsic strategy costs.
pub const EXAMPLE1_COSTS: [f64; 3] = [0.2, 0.1, 0.0];
/// Long-term budget.
pub const EXAMPLE1_BUDGET: f64 = 0.1;
/// Initial (I, R).
pub const EXAMPLE1_Y0: [f64; 2] = [0.019, 0.172];
/// Initial population state.
pub const EXAMPLE1_X0: [f64; 3] = [1.0, 0.0, 0.0];
/// Peak infection requirement.
pub const EXAMPLE1_PEAK_CAP: f64 = 0.10;
/// Tuned gains (k1, k2, k3).
pub const TUNED_GAINS: (f64, f64, f64) = (2.0, 0.022, 1.0);
/// Untuned gains (k1, k2, k3).
pub const NAIVE_GAINS: (f64, f64, f64) = (1.0, 1.0, 1.0);

/// The four library rules with the rate parameters used for the
/// reference scenario. Declared rate bounds cover payoffs in `[-2, 2]`.
pub fn library_rules() -> Vec<LearningRule> {
    vec![
        LearningRule::smith(1.0, 4.0).expect("valid"),
        LearningRule::smith_saturated(1.0, 0.005, 4.0).expect("valid"),
        LearningRule::bnn(5.0, 20.0).expect("valid"),
        LearningRule::bnn_power(100.0, 1.1, 460.0).expect("valid"),
    ]
}
