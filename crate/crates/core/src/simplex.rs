//! Geometry of the strategy simplex.
//!
//! Population states live on the standard simplex `{x >= 0, sum x = 1}`.
//! This module owns the Euclidean projection onto that set, the
//! best-response map, the fixed-point characterization used by the
//! convergence argument (`lemma1_solve`), and a small nonconvex quadratic
//! minimizer over the simplex shared by the design tools.

use rand::Rng;

use crate::error::{Error, Result};

/// Membership tolerance for the simplex constraints.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A point on the standard simplex (strategy shares).
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState(Vec<f64>);

impl PopulationState {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::invalid("population state must have at least one strategy"));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite strategy share {v}")));
        }
        if let Some(v) = x.iter().find(|&&v| v < -SIMPLEX_TOL) {
            return Err(Error::invalid(format!("negative strategy share {v}")));
        }
        let sum: f64 = x.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!("strategy shares sum to {sum}, expected 1")));
        }
        Ok(Self(x))
    }

    /// Uniform mixture over `n` strategies.
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Pure state concentrated on strategy `i`.
    pub fn vertex(n: usize, i: usize) -> Self {
        let mut x = vec![0.0; n];
        x[i] = 1.0;
        Self(x)
    }

    pub(crate) fn from_vec_unchecked(x: Vec<f64>) -> Self {
        Self(x)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Indices carrying positive mass.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > SIMPLEX_TOL)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Payoff per strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffVector(Vec<f64>);

impl PayoffVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(v) = p.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite payoff {v}")));
        }
        Ok(Self(p))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Strategies whose payoff is within `tol` of the maximum. Never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseSet {
    indices: Vec<usize>,
    tol: f64,
}

impl BestResponseSet {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// True when every strategy in the support of `x` is a best response.
    pub fn supports(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &xi)| xi <= SIMPLEX_TOL || self.contains(i))
    }
}

/// Euclidean projection of `v` onto the standard simplex.
///
/// Sort-based exact algorithm, `O(n log n)`. Points already on the simplex
/// (to within a few ulps of the sum) are returned unchanged so that the
/// projection is exactly idempotent.
pub fn project_to_simplex(v: &[f64]) -> Result<PopulationState> {
    if v.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("non-finite entry {bad} in projection input")));
    }
    Ok(PopulationState(project_raw(v)))
}

pub(crate) fn project_raw(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let sum: f64 = v.iter().sum();
    if v.iter().all(|&x| x >= 0.0) && (sum - 1.0).abs() <= 4.0 * n as f64 * f64::EPSILON {
        return v.to_vec();
    }

    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Indices of all entries of `p` within `tol` of the maximum.
pub fn best_response_set(p: &[f64], tol: f64) -> Result<BestResponseSet> {
    if p.is_empty() {
        return Err(Error::invalid("best response of an empty payoff vector"));
    }
    if !(tol >= 0.0) {
        return Err(Error::invalid(format!("tolerance must be nonnegative, got {tol}")));
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite payoff in best-response query"));
    }
    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let indices = p
        .iter()
        .enumerate()
        .filter(|(_, &pi)| pi >= max - tol)
        .map(|(i, _)| i)
        .collect();
    Ok(BestResponseSet { indices, tol })
}

/// Unique `x` on the simplex with `x ∈ argmax (xbar - x + q)ᵀ z`.
///
/// When `xbar` is a best response to `q`, that point is `xbar` itself and
/// it coincides with the projection of `xbar + q` onto the simplex.
pub fn lemma1_solve(q: &PayoffVector, xbar: &PopulationState) -> Result<PopulationState> {
    if q.len() != xbar.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: q has {} entries, xbar has {}",
            q.len(),
            xbar.len()
        )));
    }
    let br = best_response_set(q.as_slice(), SIMPLEX_TOL)?;
    if !br.supports(xbar.as_slice()) {
        return Err(Error::Precondition(format!(
            "xbar is not a best response to q (best responses {:?}, support {:?})",
            br.indices(),
            xbar.support()
        )));
    }
    let shifted: Vec<f64> = xbar
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(a, b)| a + b)
        .collect();
    project_to_simplex(&shifted)
}

/// `xᵀ M x` for a square matrix given as rows.
pub fn quadratic_form(m: &[Vec<f64>], x: &[f64]) -> f64 {
    m.iter()
        .zip(x)
        .map(|(row, &xi)| xi * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

/// Gradient of `xᵀ M x`, i.e. `(M + Mᵀ) x`.
pub fn quadratic_form_gradient(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| (0..n).map(|j| (m[i][j] + m[j][i]) * x[j]).sum())
        .collect()
}

/// Every point of the simplex lattice with spacing `1/resolution`.
pub fn simplex_grid(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn fill(out: &mut Vec<Vec<f64>>, cur: &mut Vec<usize>, left: usize, n: usize, res: usize) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / res as f64).collect());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            fill(out, cur, left - k, n, res);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 || resolution == 0 {
        return out;
    }
    fill(&mut out, &mut Vec::with_capacity(n), resolution, n, resolution);
    out
}

/// Uniform sample from the simplex (flat Dirichlet).
pub fn sample_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter_mut().for_each(|v| *v /= s);
    e
}

/// Linear constraint `normalᵀ z <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub bound: f64,
}

impl HalfSpace {
    pub fn value(&self, z: &[f64]) -> f64 {
        self.normal.iter().zip(z).map(|(a, b)| a * b).sum()
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        self.value(z) <= self.bound + tol
    }
}

/// Projection onto `simplex ∩ {aᵀz <= b}`.
///
/// The multiplier of the linear constraint is found by bisection: the map
/// `mu -> aᵀ P(v - mu a)` is continuous and nonincreasing.
pub(crate) fn project_to_simplex_halfspace(v: &[f64], h: &HalfSpace) -> Vec<f64> {
    let z = project_raw(v);
    if h.value(&z) <= h.bound {
        return z;
    }
    let shifted = |mu: f64| -> Vec<f64> {
        let w: Vec<f64> = v.iter().zip(&h.normal).map(|(vi, ai)| vi - mu * ai).collect();
        project_raw(&w)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut z_hi = shifted(hi);
    let mut doublings = 0;
    while h.value(&z_hi) > h.bound && doublings < 200 {
        lo = hi;
        hi *= 2.0;
        z_hi = shifted(hi);
        doublings += 1;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let z_mid = shifted(mid);
        if h.value(&z_mid) > h.bound {
            lo = mid;
        } else {
            hi = mid;
            z_hi = z_mid;
        }
    }
    z_hi
}

/// Result of a global quadratic minimization over the simplex.
#[derive(Debug, Clone)]
pub struct QuadraticMinimum {
    pub point: PopulationState,
    pub value: f64,
    /// Best value seen on the seeding lattice.
    pub grid_value: f64,
}

/// Minimizes `zᵀ M z` over the simplex, optionally intersected with a
/// half-space.
///
/// The objective may be indefinite, so the lattice of spacing
/// `1/resolution` is scanned exhaustively and the best few lattice points
/// are polished by projected gradient descent.
pub fn minimize_quadratic_form(
    m: &[Vec<f64>],
    constraint: Option<&HalfSpace>,
    resolution: usize,
) -> Result<QuadraticMinimum> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("quadratic form must be a nonempty square matrix"));
    }
    if resolution == 0 {
        return Err(Error::invalid("grid resolution must be positive"));
    }
    if let Some(h) = constraint {
        if h.normal.len() != n {
            return Err(Error::invalid("half-space normal has wrong dimension"));
        }
        let min_a = h.normal.iter().copied().fold(f64::INFINITY, f64::min);
        if min_a > h.bound {
            return Err(Error::invalid("half-space does not intersect the simplex"));
        }
    }

    const SEEDS: usize = 8;
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::with_capacity(SEEDS + 1);
    for z in simplex_grid(n, resolution) {
        if let Some(h) = constraint {
            if !h.contains(&z, 1e-12) {
                continue;
            }
        }
        let val = quadratic_form(m, &z);
        if seeds.len() < SEEDS || val < seeds[seeds.len() - 1].0 {
            let pos = seeds.partition_point(|(v, _)| *v <= val);
            seeds.insert(pos, (val, z));
            seeds.truncate(SEEDS);
        }
    }
    // Lattice misses the feasible set only when the half-space cuts very
    // close to the cheapest vertex; fall back to that vertex.
    if seeds.is_empty() {
        let h = constraint.expect("unconstrained lattice is never empty");
        let (i, _) = h
            .normal
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let mut z = vec![0.0; n];
        z[i] = 1.0;
        seeds.push((quadratic_form(m, &z), z));
    }
    let grid_value = seeds[0].0;

    let project = |v: &[f64]| match constraint {
        Some(h) => project_to_simplex_halfspace(v, h),
        None => project_raw(v),
    };
    // Step 1/L with L bounded by the Frobenius norm of M + Mᵀ.
    let lip: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (m[i][j] + m[j][i]).powi(2))
        .sum::<f64>()
        .sqrt()
        .max(1e-12);
    let step = 1.0 / lip;

    let mut best = seeds[0].clone();
    for (_, seed) in &seeds {
        let mut z = seed.clone();
        let mut val = quadratic_form(m, &z);
        for _ in 0..20_000 {
            let g = quadratic_form_gradient(m, &z);
            let trial: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let next = project(&trial);
            let next_val = quadratic_form(m, &next);
            let moved = next.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if next_val > val {
                break;
            }
            z = next;
            val = next_val;
            if moved < 1e-15 {
                break;
            }
        }
        if val < best.0 {
            best = (val, z);
        }
    }

    Ok(QuadraticMinimum {
        point: PopulationState::from_vec_unchecked(best.1),
        value: best.0,
        grid_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    /// Brute-force minimizer of ||z - v||² over a fine lattice.
    fn brute_force_projection(v: &[f64], res: usize) -> Vec<f64> {
        simplex_grid(v.len(), res)
            .into_iter()
            .min_by(|a, b| {
                let da: f64 = a.iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum();
                let db: f64 = b.iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum();
                da.total_cmp(&db)
            })
            .unwrap()
    }

    #[test]
    fn projection_examples() {
        let p = project_to_simplex(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 0.0, 0.0]);

        let p = project_to_simplex(&[0.0, 0.0, 0.0]).unwrap();
        assert_close(p.as_slice(), &[1.0 / 3.0; 3], 1e-15);

        let oracle = brute_force_projection(&[0.9, 0.9, -1.0], 400);
        assert_close(&oracle, &[0.5, 0.5, 0.0], 1e-12);
        let p = project_to_simplex(&[0.9, 0.9, -1.0]).unwrap();
        assert_close(p.as_slice(), &oracle, 1e-12);
    }

    #[test]
    fn projection_rejects_non_finite() {
        assert!(matches!(
            project_to_simplex(&[f64::NAN, 0.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(project_to_simplex(&[f64::INFINITY, 0.0]).is_err());
        assert!(project_to_simplex(&[]).is_err());
    }

    #[test]
    fn best_response_examples() {
        assert_eq!(best_response_set(&[1.0, 0.0, 0.0], 0.0).unwrap().indices(), &[0]);
        assert_eq!(best_response_set(&[0.0, 0.0, 0.0], 0.0).unwrap().indices(), &[0, 1, 2]);
        assert_eq!(
            best_response_set(&[0.5, 0.5 - 1e-12, 0.0], 1e-9).unwrap().indices(),
            &[0, 1]
        );
        assert!(best_response_set(&[], 0.0).is_err());
        assert!(best_response_set(&[1.0], -1.0).is_err());
    }

    #[test]
    fn best_response_slack_bound() {
        // Any point supported on the set loses at most n * tol * ||p||_inf.
        let p = [0.3, 0.3 - 5e-10, -0.2, 0.3 - 2e-10];
        let tol = 1e-9;
        let br = best_response_set(&p, tol).unwrap();
        let mut x = [0.0; 4];
        for &i in br.indices() {
            x[i] = 1.0 / br.indices().len() as f64;
        }
        let val: f64 = x.iter().zip(&p).map(|(a, b)| a * b).sum();
        assert!(0.3 - val <= 4.0 * tol * 0.3);
    }

    #[test]
    fn lemma1_examples() {
        let xbar = PopulationState::new(vec![0.2, 0.5, 0.3]).unwrap();
        let got = lemma1_solve(&PayoffVector::zeros(3), &xbar).unwrap();
        assert_close(got.as_slice(), xbar.as_slice(), 1e-15);

        let e1 = PopulationState::vertex(3, 0);
        let q = PayoffVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(lemma1_solve(&q, &e1).unwrap(), e1);

        let e2 = PopulationState::vertex(3, 1);
        assert!(matches!(lemma1_solve(&q, &e2), Err(Error::Precondition(_))));
    }

    /// Brute-force check of the variational inequality
    /// `(y - x)ᵀ (xbar - x + q) <= 0` for all lattice points y, over a
    /// lattice of candidate x: only xbar may satisfy it.
    #[test]
    fn lemma1_unique_solution_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let res = 30;
        let grid = simplex_grid(3, res);
        for _ in 0..20 {
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let i = (0..3).max_by(|&a, &b| q[a].total_cmp(&q[b])).unwrap();
            let xbar = PopulationState::vertex(3, i);
            let solutions: Vec<&Vec<f64>> = grid
                .iter()
                .filter(|x| {
                    let w: Vec<f64> = (0..3).map(|k| xbar.as_slice()[k] - x[k] + q[k]).collect();
                    let xw: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
                    grid.iter()
                        .all(|y| y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() <= xw + 1e-12)
                })
                .collect();
            assert_eq!(solutions.len(), 1);
            assert_close(solutions[0], xbar.as_slice(), 1e-12);
            let got = lemma1_solve(&PayoffVector::new(q).unwrap(), &xbar).unwrap();
            assert_close(got.as_slice(), xbar.as_slice(), 1e-12);
        }
    }

    #[test]
    fn grid_has_expected_size() {
        // C(res + n - 1, n - 1)
        assert_eq!(simplex_grid(3, 10).len(), 66);
        assert_eq!(simplex_grid(1, 5), vec![vec![1.0]]);
        for z in simplex_grid(4, 7) {
            assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn halfspace_projection_is_feasible_and_optimal() {
        let h = HalfSpace {
            normal: vec![0.2, 0.1, 0.0],
            bound: 0.1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid: Vec<Vec<f64>> = simplex_grid(3, 120)
            .into_iter()
            .filter(|z| h.contains(z, 0.0))
            .collect();
        for _ in 0..50 {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..2.0)).collect();
            let z = project_to_simplex_halfspace(&v, &h);
            assert!(h.contains(&z, 1e-12));
            let dz: f64 = z.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
            for y in &grid {
                let dy: f64 = y.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
                assert!(dz <= dy + 1e-9);
            }
        }
    }

    #[test]
    fn quadratic_minimum_on_indefinite_form() {
        // Concave form: minimum sits at a vertex.
        let m = vec![vec![-1.0, 0.0], vec![0.0, -2.0]];
        let r = minimize_quadratic_form(&m, None, 50).unwrap();
        assert_close(r.point.as_slice(), &[0.0, 1.0], 1e-12);
        assert!((r.value + 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(v in prop::collection::vec(-5.0f64..5.0, 1..8)) {
            let once = project_to_simplex(&v).unwrap();
            let twice = project_to_simplex(once.as_slice()).unwrap();
            prop_assert_eq!(once.as_slice(), twice.as_slice());
            prop_assert!(PopulationState::new(once.into_vec()).is_ok());
        }

        #[test]
        fn projection_beats_random_simplex_points(
            v in prop::collection::vec(-3.0f64..3.0, 2..6),
            seed in any::<u64>(),
        ) {
            let p = project_to_simplex(&v).unwrap();
            let dp: f64 = p.as_slice().iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..200 {
                let z = sample_simplex(&mut rng, v.len());
                let dz: f64 = z.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
                prop_assert!(dp <= dz + 1e-12);
            }
        }
    }
}
