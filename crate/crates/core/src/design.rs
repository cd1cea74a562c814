//! Design-side computations for the SIRS scenario: the budgeted target
//! state, the peak-infection bound `I_max(k1, k2)` over the initial
//! Lyapunov sublevel set, gain sweeps, and the worst-case spending bound.
//!
//! With `p* = 0` and `q(0) = 0` the composite function at zero payoff is
//! `L(y, x, 0) = k1 U(y; x) + (k2/2)‖x − x*‖²`, so the sublevel set
//! `L(y, x, 0) ≤ L0` slices, for each `x`, into
//! `{(I, R) : U(I, R; x) ≤ (L0 − (k2/2)‖x − x*‖²) / k1}`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exo::{ExoSystem, SirsModel};
use crate::mechanism::{cost_bound_g, MechanismGains};
use crate::simplex::{minimize_quadratic_form, simplex_grid, HalfSpace, PopulationState};

/// Lattice resolution for the target-state search.
pub const TARGET_RESOLUTION: usize = 200;
/// Lattice resolution in `x` for the sublevel-set programs.
pub const SUBLEVEL_RESOLUTION: usize = 100;

#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub model: SirsModel,
    pub costs: Vec<f64>,
    /// Long-term budget `c*`.
    pub budget: f64,
    /// Initial `(I, R)`.
    pub y0: Vec<f64>,
    pub x0: PopulationState,
    pub peak_cap: f64,
}

impl DesignProblem {
    pub fn new(
        model: SirsModel,
        costs: Vec<f64>,
        budget: f64,
        y0: Vec<f64>,
        x0: PopulationState,
        peak_cap: f64,
    ) -> Result<Self> {
        let mut bad = Vec::new();
        let n = model.n_strategies();
        if costs.len() != n || x0.len() != n {
            bad.push(format!(
                "costs ({}) and x0 ({}) must have {n} entries",
                costs.len(),
                x0.len()
            ));
        }
        if costs.iter().any(|c| !(*c >= 0.0)) {
            bad.push("costs must be nonnegative".into());
        }
        if !(budget >= 0.0 && budget.is_finite()) {
            bad.push(format!("budget must be nonnegative, got {budget}"));
        }
        if !(peak_cap > 0.0 && peak_cap < 1.0) {
            bad.push(format!("peak_cap must lie in (0, 1), got {peak_cap}"));
        }
        if !model.is_valid(&y0) {
            bad.push(format!("initial state {y0:?} is outside the SIRS state space"));
        }
        if bad.is_empty() {
            Ok(Self {
                model,
                costs,
                budget,
                y0,
                x0,
                peak_cap,
            })
        } else {
            Err(Error::Validation(bad))
        }
    }

    fn min_cost(&self) -> f64 {
        self.costs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Long-run spend above the cheapest strategy, `cᵀz − min c`.
    pub fn spend(&self, z: &[f64]) -> f64 {
        self.costs.iter().zip(z).map(|(c, v)| c * v).sum::<f64>() - self.min_cost()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    pub x: PopulationState,
    /// `B(x*)`.
    pub transmission: f64,
    /// Best transmission rate seen on the seeding lattice.
    pub grid_transmission: f64,
    pub spend: f64,
}

/// `x* ∈ argmin B(z)` over the simplex subject to `cᵀz − min c ≤ c*`.
pub fn solve_target_state(problem: &DesignProblem) -> Result<TargetState> {
    let budget = HalfSpace {
        normal: problem.costs.clone(),
        bound: problem.budget + problem.min_cost(),
    };
    let q = &problem.model.params().q;
    let found = minimize_quadratic_form(q, Some(&budget), TARGET_RESOLUTION)?;
    Ok(TargetState {
        spend: problem.spend(found.point.as_slice()),
        transmission: found.value,
        grid_transmission: found.grid_value,
        x: found.point,
    })
}

/// Equilibrium data of the SIRS model at one population state.
#[derive(Debug, Clone)]
struct Slice {
    x: Vec<f64>,
    b: f64,
    i_star: f64,
    r_star: f64,
    a_b: f64,
    /// `‖x − x*‖²`.
    dist2: f64,
}

impl Slice {
    fn new(model: &SirsModel, x: &[f64], x_star: &[f64]) -> Result<Self> {
        let b = model.transmission_rate(x);
        let (i_star, r_star) = model.endemic_equilibrium(b)?;
        let p = model.params();
        Ok(Self {
            x: x.to_vec(),
            b,
            i_star,
            r_star,
            a_b: b / (p.gamma + p.delta * r_star),
            dist2: x.iter().zip(x_star).map(|(a, s)| (a - s).powi(2)).sum(),
        })
    }

    /// `I − I* − I* ln(I/I*)`.
    fn infected_term(&self, i: f64) -> f64 {
        i - self.i_star - self.i_star * (i / self.i_star).ln()
    }

    /// Smallest value of `U` at infected level `i` over admissible `R`.
    fn min_over_recovered(&self, i: f64) -> f64 {
        let r = self.r_star.clamp(0.0, 1.0 - i);
        self.infected_term(i) + 0.5 * self.a_b * (r - self.r_star).powi(2)
    }

    /// Feasible infected interval `{I : min_R U ≤ level}`, if nonempty.
    fn infected_range(&self, level: f64) -> Option<(f64, f64)> {
        if !(level >= 0.0) || self.min_over_recovered(self.i_star) > level {
            return None;
        }
        // Above I*, min_R U is nondecreasing in I.
        let hi = if self.min_over_recovered(1.0) <= level {
            1.0
        } else {
            bisect(self.i_star, 1.0, |i| self.min_over_recovered(i) <= level)
        };
        // Below I*, only the infected term varies and it blows up at 0.
        let lo = bisect_down(self.i_star, |i| self.infected_term(i) <= level);
        Some((lo, hi))
    }
}

/// Largest `t ∈ [a, b]` with `ok(t)`, given `ok(a)` and monotone `ok`.
fn bisect(mut a: f64, mut b: f64, ok: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if ok(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    a
}

/// Smallest `t ∈ (0, start]` with `ok(t)`, given `ok(start)` and monotone
/// `ok`.
fn bisect_down(start: f64, ok: impl Fn(f64) -> bool) -> f64 {
    let mut lo = start;
    while lo > 1e-300 && ok(lo * 0.5) {
        lo *= 0.5;
    }
    let (mut a, mut b) = (lo * 0.5, lo);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if ok(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
    b
}

/// Precomputed equilibrium data on a simplex lattice, shared by every gain
/// pair of a sweep.
#[derive(Debug, Clone)]
pub struct SublevelGrid {
    slices: Vec<Slice>,
    x_star: Vec<f64>,
    /// `U(y0; x0)`.
    u0: f64,
    /// `‖x0 − x*‖²`.
    d0_sq: f64,
    resolution: usize,
}

impl SublevelGrid {
    pub fn new(problem: &DesignProblem, x_star: &PopulationState, resolution: usize) -> Result<Self> {
        let n = problem.model.n_strategies();
        if x_star.len() != n {
            return Err(Error::invalid(format!("x* must have {n} entries")));
        }
        let xs = x_star.as_slice();
        let mut points = simplex_grid(n, resolution);
        points.push(xs.to_vec());
        points.push(problem.x0.as_slice().to_vec());
        let slices = points
            .iter()
            .map(|x| Slice::new(&problem.model, x, xs))
            .collect::<Result<Vec<_>>>()?;
        let u0 = problem.model.lyapunov(&problem.y0, problem.x0.as_slice())?;
        let d0_sq = problem
            .x0
            .as_slice()
            .iter()
            .zip(xs)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        Ok(Self {
            slices,
            x_star: xs.to_vec(),
            u0,
            d0_sq,
            resolution,
        })
    }

    /// `L0 = k1 U(y0; x0) + (k2/2)‖x0 − x*‖²`.
    pub fn initial_level(&self, k1: f64, k2: f64) -> f64 {
        k1 * self.u0 + 0.5 * k2 * self.d0_sq
    }

    fn level(&self, slice: &Slice, k1: f64, k2: f64) -> f64 {
        (self.initial_level(k1, k2) - 0.5 * k2 * slice.dist2) / k1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakBound {
    pub i_max: f64,
    /// Maximizer `(I, R, x)`.
    pub recovered: f64,
    pub x: Vec<f64>,
    /// Best value on the `x` lattice before local refinement.
    pub grid_value: f64,
    /// Improvement found by refinement; a proxy for what the lattice can
    /// miss.
    pub gap_estimate: f64,
    pub l0: f64,
}

fn check_gains(k1: f64, k2: f64) -> Result<()> {
    let mut bad = Vec::new();
    if !(k1 > 0.0 && k1.is_finite()) {
        bad.push(format!("k1 must be positive, got {k1}"));
    }
    if !(k2 > 0.0 && k2.is_finite()) {
        bad.push(format!("k2 must be positive, got {k2}"));
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(bad))
    }
}

/// `I_max(k1, k2) = max I` over `x ∈ X, I, R ≥ 0, I + R ≤ 1,
/// L(y, x, 0) ≤ L(y0, x0, 0)`.
///
/// For each `x` the program in `(I, R)` is solved exactly: `R` is set to
/// the admissible point nearest `R*` and the largest feasible `I` is found
/// by bisection. The outer maximization over `x` scans the lattice and then
/// runs a pattern search from the best lattice points, so the result is a
/// lower bound on the true maximum.
pub fn peak_infection_bound(grid: &SublevelGrid, problem: &DesignProblem, k1: f64, k2: f64) -> Result<PeakBound> {
    check_gains(k1, k2)?;
    let value = |slice: &Slice| -> f64 {
        slice
            .infected_range(grid.level(slice, k1, k2))
            .map_or(f64::NEG_INFINITY, |(_, hi)| hi)
    };
    let mut scored: Vec<(f64, usize)> = grid
        .slices
        .iter()
        .enumerate()
        .map(|(k, s)| (value(s), k))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let grid_value = scored[0].0;
    if !grid_value.is_finite() {
        return Err(Error::ModelInconsistency(
            "initial sublevel set contains no lattice point".into(),
        ));
    }

    let mut best = (grid_value, grid.slices[scored[0].1].clone());
    for &(_, k) in scored.iter().take(4) {
        let (v, s) = pattern_search(problem, grid, &grid.slices[k], value, grid.resolution)?;
        if v > best.0 {
            best = (v, s);
        }
    }
    let (i_max, slice) = best;
    Ok(PeakBound {
        i_max,
        recovered: slice.r_star.clamp(0.0, 1.0 - i_max),
        x: slice.x,
        grid_value,
        gap_estimate: i_max - grid_value,
        l0: grid.initial_level(k1, k2),
    })
}

/// Coordinate-pair pattern search on the simplex maximizing `value`.
fn pattern_search(
    problem: &DesignProblem,
    grid: &SublevelGrid,
    start: &Slice,
    value: impl Fn(&Slice) -> f64,
    resolution: usize,
) -> Result<(f64, Slice)> {
    let n = start.x.len();
    let mut cur = start.clone();
    let mut cur_v = value(&cur);
    let mut step = 1.0 / resolution as f64;
    while step > 1e-9 {
        let mut improved = false;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let move_by = step.min(cur.x[j]);
                if move_by <= 0.0 {
                    continue;
                }
                let mut x = cur.x.clone();
                x[i] += move_by;
                x[j] -= move_by;
                let cand = Slice::new(&problem.model, &x, &grid.x_star)?;
                let v = value(&cand);
                if v > cur_v {
                    cur = cand;
                    cur_v = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((cur_v, cur))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub k1: f64,
    pub k2: f64,
    pub i_max: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub peak_cap: f64,
    /// Cells ordered by `k1`, then `k2`.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn feasible(&self, cell: &SweepCell) -> bool {
        cell.i_max.is_some_and(|v| v <= self.peak_cap)
    }

    pub fn cell(&self, k1: f64, k2: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.k1 == k1 && c.k2 == k2)
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k == 0 {
                    lo
                } else if k == n - 1 {
                    hi
                } else {
                    (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp()
                }
            })
            .collect(),
    }
}

/// Evaluates `I_max` on the grid `k1_values × k2_values` in parallel.
/// Cell failures are recorded and do not stop the sweep.
pub fn parameter_sweep(
    problem: &DesignProblem,
    x_star: &PopulationState,
    k1_values: &[f64],
    k2_values: &[f64],
) -> Result<SweepResult> {
    let bad: Vec<String> = k1_values
        .iter()
        .chain(k2_values)
        .filter(|k| !(**k > 0.0 && k.is_finite()))
        .map(|k| format!("sweep gains must be positive, got {k}"))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Validation(bad));
    }
    let grid = SublevelGrid::new(problem, x_star, SUBLEVEL_RESOLUTION)?;
    let pairs: Vec<(f64, f64)> = k1_values
        .iter()
        .flat_map(|&k1| k2_values.iter().map(move |&k2| (k1, k2)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(k1, k2)| match peak_infection_bound(&grid, problem, k1, k2) {
            Ok(b) => SweepCell {
                k1,
                k2,
                i_max: Some(b.i_max),
                error: None,
            },
            Err(e) => SweepCell {
                k1,
                k2,
                i_max: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(SweepResult {
        peak_cap: problem.peak_cap,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostBound {
    pub value: f64,
    /// Maximizer `(y, x)`.
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub l0: f64,
}

/// `max g(y, x)` over `L(y, x, 0) ≤ L0`, with `g = ‖c + G(y, x, 0)/k3‖∞`.
///
/// For fixed `x`, `G(y, x, 0)` depends on `y` only through the scalar
/// `s = ∂U/∂B`, and `g` is convex in `s`, so only the extremes of `s` over
/// each `(I, R)` slice are needed. These are located on a dense `I` grid,
/// taking for each `I` the endpoints and vertex of the quadratic in `R`;
/// the reported value is `cost_bound_g` evaluated at the chosen points.
pub fn max_cost_bound(grid: &SublevelGrid, problem: &DesignProblem, gains: &MechanismGains) -> Result<CostBound> {
    if gains.p_star.as_slice().iter().any(|v| *v != 0.0) {
        return Err(Error::Precondition("the cost bound assumes p* = 0".into()));
    }
    if gains.x_star.as_slice() != grid.x_star.as_slice() {
        return Err(Error::invalid("gains and sublevel grid use different targets"));
    }
    let (k1, k2) = (gains.k1, gains.k2);
    let model = &problem.model;
    const I_POINTS: usize = 200;

    let candidates: Vec<Vec<[f64; 2]>> = grid
        .slices
        .par_iter()
        .map(|slice| -> Result<Vec<[f64; 2]>> {
            let level = grid.level(slice, k1, k2);
            let Some((lo, hi)) = slice.infected_range(level) else {
                return Ok(vec![]);
            };
            let h = 1e-6 * (1.0 + slice.b);
            let (ip, rp) = model.endemic_equilibrium(slice.b + h)?;
            let (im, rm) = model.endemic_equilibrium(slice.b - h)?;
            let p = model.params();
            let a = |b: f64, r: f64| b / (p.gamma + p.delta * r);
            let di = (ip - im) / (2.0 * h);
            let dr = (rp - rm) / (2.0 * h);
            let da = (a(slice.b + h, rp) - a(slice.b - h, rm)) / (2.0 * h);
            let s = |i: f64, r: f64| {
                let e = r - slice.r_star;
                di * (slice.i_star / i).ln() + 0.5 * da * e * e - slice.a_b * e * dr
            };
            let mut best_lo = (f64::INFINITY, [slice.i_star, slice.r_star]);
            let mut best_hi = (f64::NEG_INFINITY, [slice.i_star, slice.r_star]);
            for k in 0..=I_POINTS {
                let i = lo + (hi - lo) * k as f64 / I_POINTS as f64;
                let room = level - slice.infected_term(i);
                if !(room >= 0.0) {
                    continue;
                }
                let w = (2.0 * room / slice.a_b).sqrt();
                let r_lo = (slice.r_star - w).max(0.0);
                let r_hi = (slice.r_star + w).min(1.0 - i);
                if r_lo > r_hi {
                    continue;
                }
                let mut rs = vec![r_lo, r_hi];
                if da != 0.0 {
                    let vertex = slice.r_star + slice.a_b * dr / da;
                    if vertex > r_lo && vertex < r_hi {
                        rs.push(vertex);
                    }
                }
                for r in rs {
                    let v = s(i, r);
                    if v < best_lo.0 {
                        best_lo = (v, [i, r]);
                    }
                    if v > best_hi.0 {
                        best_hi = (v, [i, r]);
                    }
                }
            }
            Ok(vec![best_lo.1, best_hi.1])
        })
        .collect::<Result<_>>()?;

    let mut best: Option<CostBound> = None;
    let l0 = grid.initial_level(k1, k2);
    let mut consider = |y: Vec<f64>, x: &[f64]| -> Result<()> {
        let v = cost_bound_g(gains, model, &y, x)?;
        if best.as_ref().is_none_or(|b| v > b.value) {
            best = Some(CostBound {
                value: v,
                y,
                x: x.to_vec(),
                l0,
            });
        }
        Ok(())
    };
    consider(problem.y0.clone(), problem.x0.as_slice())?;
    let y_star = model.equilibrium(&grid.x_star)?;
    consider(y_star, &grid.x_star.clone())?;
    for (slice, pts) in grid.slices.iter().zip(candidates) {
        for [i, r] in pts {
            consider(vec![i, r], &slice.x)?;
        }
    }
    Ok(best.expect("at least the initial point is considered"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::*;
    use crate::simplex::{sample_simplex, PayoffVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn problem() -> DesignProblem {
        DesignProblem::new(
            example1_sirs(),
            EXAMPLE1_COSTS.to_vec(),
            EXAMPLE1_BUDGET,
            EXAMPLE1_Y0.to_vec(),
            PopulationState::new(EXAMPLE1_X0.to_vec()).unwrap(),
            EXAMPLE1_PEAK_CAP,
        )
        .unwrap()
    }

    fn twelfths() -> PopulationState {
        PopulationState::new(vec![1.0 / 12.0, 10.0 / 12.0, 1.0 / 12.0]).unwrap()
    }

    #[test]
    fn target_state_example() {
        let t = solve_target_state(&problem()).unwrap();
        let expect = [1.0 / 12.0, 10.0 / 12.0, 1.0 / 12.0];
        for (a, b) in t.x.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-3);
        }
        assert!((t.spend - 0.1).abs() < 1e-6);
        assert!(t.transmission <= t.grid_transmission + 1e-6);
    }

    #[test]
    fn target_beats_random_feasible_points() {
        let p = problem();
        let t = solve_target_state(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 20_000 {
            let z = sample_simplex(&mut rng, 3);
            if p.spend(&z) <= p.budget {
                assert!(p.model.transmission_rate(&z) >= t.transmission - 1e-12);
                checked += 1;
            }
        }
    }

    #[test]
    fn slack_budget_gives_unconstrained_minimum() {
        let mut p = problem();
        p.budget = 1.0;
        let t = solve_target_state(&p).unwrap();
        let free = minimize_quadratic_form(&p.model.params().q, None, TARGET_RESOLUTION).unwrap();
        assert!((t.transmission - free.value).abs() < 1e-10);
        assert!(t.spend < 1.0);
    }

    #[test]
    fn slice_range_brackets_equilibrium() {
        let p = problem();
        let x = twelfths();
        let s = Slice::new(&p.model, x.as_slice(), x.as_slice()).unwrap();
        let (lo, hi) = s.infected_range(0.01).unwrap();
        assert!(lo < s.i_star && s.i_star < hi);
        assert!((s.infected_term(hi) - 0.01).abs() < 1e-12);
        assert!((s.infected_term(lo) - 0.01).abs() < 1e-12);
        let (lo, hi) = s.infected_range(0.0).unwrap();
        assert!((lo - s.i_star).abs() < 1e-6 && (hi - s.i_star).abs() < 1e-6);
        assert!(s.infected_range(-1e-3).is_none());
    }

    #[test]
    fn slice_value_agrees_with_model_lyapunov() {
        let p = problem();
        let x = [0.3, 0.3, 0.4];
        let s = Slice::new(&p.model, &x, twelfths().as_slice()).unwrap();
        for i in [0.01, 0.05, 0.2] {
            let r = s.r_star.clamp(0.0, 1.0 - i);
            let u = p.model.lyapunov(&[i, r], &x).unwrap();
            assert!((s.min_over_recovered(i) - u).abs() < 1e-13);
        }
    }

    #[test]
    fn peak_bound_contains_initial_state() {
        let p = problem();
        let grid = SublevelGrid::new(&p, &twelfths(), 40).unwrap();
        let b = peak_infection_bound(&grid, &p, 2.0, 0.022).unwrap();
        assert!(b.i_max >= EXAMPLE1_Y0[0]);
        assert!(b.gap_estimate >= 0.0);
        let u = p.model.lyapunov(&[b.i_max, b.recovered], &b.x).unwrap();
        let d2: f64 = b.x.iter().zip(twelfths().as_slice()).map(|(a, s)| (a - s).powi(2)).sum();
        assert!(2.0 * u + 0.011 * d2 <= b.l0 + 1e-9);
    }

    #[test]
    fn peak_bound_at_reference_gains() {
        let p = problem();
        let grid = SublevelGrid::new(&p, &twelfths(), SUBLEVEL_RESOLUTION).unwrap();
        let tuned = peak_infection_bound(&grid, &p, 2.0, 0.022).unwrap();
        assert!(tuned.i_max <= EXAMPLE1_PEAK_CAP, "{tuned:?}");
        let naive = peak_infection_bound(&grid, &p, 1.0, 1.0).unwrap();
        assert!(naive.i_max > EXAMPLE1_PEAK_CAP, "{naive:?}");
    }

    #[test]
    fn peak_bound_depends_on_gain_ratio() {
        let p = problem();
        let grid = SublevelGrid::new(&p, &twelfths(), 30).unwrap();
        let a = peak_infection_bound(&grid, &p, 2.0, 0.022).unwrap();
        let b = peak_infection_bound(&grid, &p, 20.0, 0.22).unwrap();
        assert!((a.i_max - b.i_max).abs() < 1e-9);
    }

    /// The sublevel constraint reads `U(y; x) <= U0 + (k2/k1)(d0² − d²)/2`
    /// with `d0 = ‖x0 − x*‖` the largest distance in play, so the allowance
    /// grows with `k2/k1`: the bound rises with `k2` and falls with `k1`.
    #[test]
    fn peak_bound_monotone_in_gains() {
        let p = problem();
        let grid = SublevelGrid::new(&p, &twelfths(), 30).unwrap();
        let bound = |k1, k2| peak_infection_bound(&grid, &p, k1, k2).unwrap().i_max;
        let k2s = log_space(1e-3, 1.0, 7);
        for w in k2s.windows(2) {
            assert!(bound(2.0, w[1]) >= bound(2.0, w[0]) - 1e-9, "{w:?}");
        }
        let k1s = log_space(0.1, 10.0, 7);
        for w in k1s.windows(2) {
            assert!(bound(w[1], 0.022) <= bound(w[0], 0.022) + 1e-9, "{w:?}");
        }
    }

    #[test]
    fn peak_bound_rejects_bad_gains() {
        let p = problem();
        let grid = SublevelGrid::new(&p, &twelfths(), 10).unwrap();
        let err = peak_infection_bound(&grid, &p, -1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("k1"));
    }

    #[test]
    fn sweep_is_ordered_and_deterministic() {
        let p = problem();
        let k1 = [1.0, 2.0];
        let k2 = [0.022, 1.0];
        let a = parameter_sweep(&p, &twelfths(), &k1, &k2).unwrap();
        let b = parameter_sweep(&p, &twelfths(), &k1, &k2).unwrap();
        assert_eq!(a, b);
        let order: Vec<(f64, f64)> = a.cells.iter().map(|c| (c.k1, c.k2)).collect();
        assert_eq!(order, vec![(1.0, 0.022), (1.0, 1.0), (2.0, 0.022), (2.0, 1.0)]);
        assert!(a.feasible(a.cell(2.0, 0.022).unwrap()));
        assert!(!a.feasible(a.cell(1.0, 1.0).unwrap()));
        let grid = SublevelGrid::new(&p, &twelfths(), SUBLEVEL_RESOLUTION).unwrap();
        let single = peak_infection_bound(&grid, &p, 2.0, 0.022).unwrap();
        assert_eq!(a.cell(2.0, 0.022).unwrap().i_max, Some(single.i_max));
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space(0.01, 10.0, 4);
        assert_eq!(v.len(), 4);
        assert_eq!(v[0], 0.01);
        assert_eq!(v[3], 10.0);
        assert!((v[1] - 0.1).abs() < 1e-12);
    }

    fn gains(k: (f64, f64, f64)) -> MechanismGains {
        MechanismGains::new(
            k,
            twelfths(),
            PayoffVector::zeros(3),
            PayoffVector::new(EXAMPLE1_COSTS.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn cost_bound_collapses_at_equilibrium_start() {
        let mut p = problem();
        let xs = twelfths();
        p.y0 = p.model.equilibrium(xs.as_slice()).unwrap();
        p.x0 = xs.clone();
        let grid = SublevelGrid::new(&p, &xs, 20).unwrap();
        let b = max_cost_bound(&grid, &p, &gains(TUNED_GAINS)).unwrap();
        assert!((b.value - 0.2).abs() < 1e-6, "{b:?}");
    }

    #[test]
    fn cost_bound_dominates_budget() {
        let p = problem();
        let grid = SublevelGrid::new(&p, &twelfths(), 40).unwrap();
        let b = max_cost_bound(&grid, &p, &gains(TUNED_GAINS)).unwrap();
        assert!(b.value >= 0.2);
        assert!(b.value >= EXAMPLE1_BUDGET);
    }

    #[test]
    fn cost_bound_requires_zero_target_payoff() {
        let p = problem();
        let grid = SublevelGrid::new(&p, &twelfths(), 10).unwrap();
        let g = MechanismGains::new(
            TUNED_GAINS,
            twelfths(),
            PayoffVector::new(vec![0.5, 0.5, 0.5]).unwrap(),
            PayoffVector::new(EXAMPLE1_COSTS.to_vec()).unwrap(),
        )
        .unwrap();
        assert!(matches!(max_cost_bound(&grid, &p, &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn problem_validation() {
        let err = DesignProblem::new(
            example1_sirs(),
            EXAMPLE1_COSTS.to_vec(),
            -1.0,
            EXAMPLE1_Y0.to_vec(),
            PopulationState::new(EXAMPLE1_X0.to_vec()).unwrap(),
            1.5,
        )
        .unwrap_err();
        match err {
            Error::Validation(v) => assert_eq!(v.len(), 2),
            e => panic!("{e}"),
        }
    }
}
