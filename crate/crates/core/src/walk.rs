//! Single-measurement dynamics: a random walk of the conditional channel
//! probabilities on the simplex.
//!
//! Each propagation position draws one sign column, weighted so that the
//! more strongly enhanced noise histories are proportionally more likely to
//! complete the process. The resulting update is an exact martingale whose
//! absorbing states are the simplex corners, and the probability of ending
//! in corner `j` is the initial weight `p_j` — the Born rule.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::apparatus::ApparatusParams;
use crate::rng::{stream_rng, StreamDomain};
use crate::state::AmplitudeVector;
use crate::{Error, Result};

/// Reporting threshold above which a final component counts as collapsed.
pub const COLLAPSE_THRESHOLD: f64 = 1.0 - 1e-9;

/// Largest channel count for exact 2^n column enumeration.
pub const ENUMERATION_MAX_CHANNELS: usize = 12;

/// Channel counts up to this use inverse-CDF column sampling over all 2^n
/// sign patterns; beyond it a per-channel conditional sampler with the same
/// distribution takes over.
const INVERSE_CDF_MAX_CHANNELS: usize = 16;

fn check_simplex(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::TooFewChannels(0));
    }
    if p.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidParameter(
            "probabilities must be nonnegative".into(),
        ));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized((total - 1.0).abs()));
    }
    Ok(())
}

/// Position of the walker: conditional probabilities plus step index.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    p: Vec<f64>,
    x: usize,
}

impl WalkState {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        check_simplex(&p)?;
        Ok(Self { p, x: 0 })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn step_index(&self) -> usize {
        self.x
    }
}

/// Probability of drawing a given sign column at the current position,
/// `q(e) = 2^-n (1 + 2 eta sum_l p_l e_l)`. Nonnegative for `eta < 1/2`;
/// sums to 1 over all 2^n columns.
pub fn step_weight(p: &[f64], column: &[i8], eta: f64) -> f64 {
    assert_eq!(p.len(), column.len());
    let s: f64 = p
        .iter()
        .zip(column)
        .map(|(&pj, &e)| pj * e as f64)
        .sum();
    2f64.powi(-(p.len() as i32)) * (1.0 + 2.0 * eta * s)
}

fn step_in_place(p: &mut [f64], column: &[i8], eta: f64) {
    let s: f64 = p
        .iter()
        .zip(column)
        .map(|(&pj, &e)| pj * e as f64)
        .sum();
    let denom = 1.0 + 2.0 * eta * s;
    for (pj, &e) in p.iter_mut().zip(column) {
        *pj += *pj * 2.0 * eta * (e as f64 - s) / denom;
    }
    // The update is normalized in exact arithmetic; renormalize to pin the
    // rounding drift so the martingale holds at machine precision.
    let total: f64 = p.iter().sum();
    for pj in p.iter_mut() {
        *pj /= total;
    }
}

/// One walk step: `dp_j = p_j 2 eta (e_j - sum_l p_l e_l) / (1 + 2 eta
/// sum_m p_m e_m)`, followed by renormalization.
pub fn apply_step(state: &WalkState, column: &[i8], eta: f64) -> WalkState {
    assert_eq!(state.p.len(), column.len());
    let mut p = state.p.clone();
    step_in_place(&mut p, column, eta);
    WalkState {
        p,
        x: state.x + 1,
    }
}

/// Mean and covariance of the step displacement, by exact enumeration of
/// all 2^n weighted sign columns.
#[derive(Debug, Clone)]
pub struct StepMoments {
    /// `<dp_j>`; zero at machine precision.
    pub mean: Vec<f64>,
    /// `<dp_j dp_k>`.
    pub covariance: Vec<Vec<f64>>,
}

/// Enumerates the displacement moments of one step at `p`.
pub fn step_moments_enumerated(p: &[f64], eta: f64) -> Result<StepMoments> {
    check_simplex(p)?;
    let n = p.len();
    if n > ENUMERATION_MAX_CHANNELS {
        return Err(Error::EnumerationTooLarge {
            n,
            limit: ENUMERATION_MAX_CHANNELS,
        });
    }
    let mut mean = vec![0.0; n];
    let mut covariance = vec![vec![0.0; n]; n];
    let mut column = vec![0i8; n];
    let mut delta = vec![0.0; n];
    for cell in 0..(1usize << n) {
        for (j, e) in column.iter_mut().enumerate() {
            *e = if cell >> j & 1 == 1 { 1 } else { -1 };
        }
        let q = step_weight(p, &column, eta);
        let mut stepped = p.to_vec();
        step_in_place(&mut stepped, &column, eta);
        for j in 0..n {
            delta[j] = stepped[j] - p[j];
        }
        for j in 0..n {
            mean[j] += q * delta[j];
            for k in 0..n {
                covariance[j][k] += q * delta[j] * delta[k];
            }
        }
    }
    Ok(StepMoments { mean, covariance })
}

/// Second-order analytic step covariance,
/// `4 eta^2 p_j p_k (delta_jk - p_j - p_k + sum_l p_l^2)`.
pub fn step_covariance_analytic(p: &[f64], eta: f64) -> Vec<Vec<f64>> {
    let n = p.len();
    let sum_sq: f64 = p.iter().map(|v| v * v).sum();
    let mut cov = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in 0..n {
            let delta = if j == k { 1.0 } else { 0.0 };
            cov[j][k] = 4.0 * eta * eta * p[j] * p[k] * (delta - p[j] - p[k] + sum_sq);
        }
    }
    cov
}

/// Shannon entropy `-sum p_j ln p_j`, with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

/// Second-order expected entropy change of one step,
/// `-2 eta^2 sum_j p_j ((1 - p_j)^2 + sum_{l != j} p_l^2)`.
/// Nonpositive everywhere; zero only at the corners.
pub fn entropy_drift_analytic(p: &[f64], eta: f64) -> f64 {
    let sum_sq: f64 = p.iter().map(|v| v * v).sum();
    let total: f64 = p
        .iter()
        .map(|&pj| {
            let rest_sq = sum_sq - pj * pj;
            pj * ((1.0 - pj) * (1.0 - pj) + rest_sq)
        })
        .sum();
    -2.0 * eta * eta * total
}

/// Draws a sign column with probabilities [`step_weight`].
///
/// For small `n` the full inverse CDF over the 2^n cells is walked in Gray
/// order (one flip per cell, one uniform draw per step). For larger `n` the
/// linear structure of the weight lets the signs be drawn channel by
/// channel: with prefix sum `s`, channel `m` is `+1` with probability
/// `(1 + 2 eta (s + p_m)) / (2 (1 + 2 eta s))`; the product of the
/// conditionals telescopes back to `step_weight`.
fn sample_column(p: &[f64], eta: f64, rng: &mut ChaCha8Rng, column: &mut [i8]) {
    if p.len() <= INVERSE_CDF_MAX_CHANNELS {
        sample_column_inverse_cdf(p, eta, rng.random::<f64>(), column);
    } else {
        sample_column_conditional(p, eta, rng, column);
    }
}

fn sample_column_inverse_cdf(p: &[f64], eta: f64, u: f64, column: &mut [i8]) {
    let n = p.len();
    column.fill(-1);
    let mut s: f64 = -p.iter().sum::<f64>();
    let norm = 2f64.powi(-(n as i32));
    let mut cdf = norm * (1.0 + 2.0 * eta * s);
    if u < cdf {
        return;
    }
    for cell in 1..(1u64 << n) {
        let j = cell.trailing_zeros() as usize;
        if column[j] == 1 {
            column[j] = -1;
            s -= 2.0 * p[j];
        } else {
            column[j] = 1;
            s += 2.0 * p[j];
        }
        cdf += norm * (1.0 + 2.0 * eta * s);
        if u < cdf {
            return;
        }
    }
    // Rounding left u above the accumulated total; the current column is
    // the last cell, which is the right choice for u -> 1.
}

fn sample_column_conditional(p: &[f64], eta: f64, rng: &mut ChaCha8Rng, column: &mut [i8]) {
    let mut s = 0.0;
    for (j, &pj) in p.iter().enumerate() {
        let p_plus = (1.0 + 2.0 * eta * (s + pj)) / (2.0 * (1.0 + 2.0 * eta * s));
        let e = if rng.random::<f64>() < p_plus { 1i8 } else { -1 };
        column[j] = e;
        s += pj * e as f64;
    }
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub x: usize,
    pub p: Vec<f64>,
    pub entropy: f64,
}

/// Outcome of one full walk.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkResult {
    /// Final simplex position.
    pub final_p: Vec<f64>,
    /// Zero-based argmax of `final_p`, lowest index on ties. Exported
    /// interfaces label channels starting from 1.
    pub outcome: usize,
    /// Whether `max final_p` reached [`COLLAPSE_THRESHOLD`].
    pub collapsed: bool,
    /// Net pointer counts `X_j` accumulated from the sampled sign columns.
    pub pointer: Vec<i64>,
    /// Number of steps taken (`2X`).
    pub steps: usize,
    /// `(x, p, S_x)` per step when recording was requested.
    pub trajectory: Option<Vec<TrajectoryPoint>>,
}

/// Runs one walk. Requires the uniform model; fully determined by
/// `(psi, params, walk_index)`.
pub fn run_walk(
    psi: &AmplitudeVector,
    params: &ApparatusParams,
    walk_index: u64,
    record: bool,
) -> Result<WalkResult> {
    let eta = params.uniform_eta().ok_or_else(|| {
        Error::InvalidParameter("walk dynamics require the uniform model".into())
    })?;
    if psi.n() != params.n() {
        return Err(Error::InvalidParameter(format!(
            "state has {} channels, apparatus {}",
            psi.n(),
            params.n()
        )));
    }
    let mut rng = stream_rng(params.seed(), StreamDomain::Walk, walk_index);
    let mut p = psi.probabilities();
    let n = p.len();
    let two_x = params.two_x();
    let mut sign_sums = vec![0i64; n];
    let mut column = vec![-1i8; n];
    let mut trajectory = record.then(|| {
        let mut t = Vec::with_capacity(two_x + 1);
        t.push(TrajectoryPoint {
            x: 0,
            p: p.clone(),
            entropy: entropy(&p),
        });
        t
    });

    for x in 1..=two_x {
        sample_column(&p, eta, &mut rng, &mut column);
        step_in_place(&mut p, &column, eta);
        for (sum, &e) in sign_sums.iter_mut().zip(&column) {
            *sum += e as i64;
        }
        if let Some(t) = trajectory.as_mut() {
            t.push(TrajectoryPoint {
                x,
                p: p.clone(),
                entropy: entropy(&p),
            });
        }
    }

    let mut outcome = 0;
    for j in 1..n {
        if p[j] > p[outcome] {
            outcome = j;
        }
    }
    let collapsed = p[outcome] >= COLLAPSE_THRESHOLD;
    let pointer = sign_sums.iter().map(|&s| s / 2).collect();
    Ok(WalkResult {
        final_p: p,
        outcome,
        collapsed,
        pointer,
        steps: two_x,
        trajectory,
    })
}

/// Runs `count` walks in parallel; the result vector is ordered by walk
/// index and independent of the thread count.
pub fn run_walks(
    psi: &AmplitudeVector,
    params: &ApparatusParams,
    count: u64,
    record: bool,
) -> Result<Vec<WalkResult>> {
    (0..count)
        .into_par_iter()
        .map(|i| run_walk(psi, params, i, record))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::sample_simplex;
    use approx::assert_relative_eq;

    fn columns(n: usize) -> Vec<Vec<i8>> {
        (0..(1usize << n))
            .map(|cell| {
                (0..n)
                    .map(|j| if cell >> j & 1 == 1 { 1i8 } else { -1 })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn step_weight_unbiased_limit() {
        let p = [0.3, 0.7];
        for col in columns(2) {
            assert_relative_eq!(step_weight(&p, &col, 1e-15), 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn step_weight_single_channel() {
        let eta = 0.2;
        assert_relative_eq!(
            step_weight(&[1.0], &[1], eta),
            (1.0 + 2.0 * eta) / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn step_weights_sum_to_one() {
        let mut rng = stream_rng(3, StreamDomain::Walk, 0);
        for n in 1..=6 {
            let p = sample_simplex(&mut rng, n, 0.0);
            let total: f64 = columns(n)
                .iter()
                .map(|col| step_weight(&p, col, 0.3))
                .sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn corners_are_fixed_points() {
        let state = WalkState::new(vec![1.0, 0.0, 0.0]).unwrap();
        for col in columns(3) {
            let next = apply_step(&state, &col, 0.3);
            assert_eq!(next.probabilities(), state.probabilities());
        }
    }

    #[test]
    fn step_hand_value() {
        let state = WalkState::new(vec![0.5, 0.5]).unwrap();
        let next = apply_step(&state, &[1, -1], 0.1);
        assert_relative_eq!(next.probabilities()[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(next.probabilities()[1], 0.4, epsilon = 1e-15);
        assert_eq!(next.step_index(), 1);
    }

    #[test]
    fn common_mode_column_is_inert() {
        let state = WalkState::new(vec![0.2, 0.3, 0.5]).unwrap();
        let next = apply_step(&state, &[1, 1, 1], 0.3);
        for (a, b) in next.probabilities().iter().zip(state.probabilities()) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn moments_at_corner_vanish() {
        let m = step_moments_enumerated(&[0.0, 1.0], 0.2).unwrap();
        assert_eq!(m.mean, vec![0.0, 0.0]);
        assert_eq!(m.covariance, vec![vec![0.0; 2]; 2]);
    }

    #[test]
    fn moments_symmetric_point() {
        // At p = (1/2, 1/2) the enumerated variance is exactly eta^2 / 2.
        let eta = 0.05;
        let m = step_moments_enumerated(&[0.5, 0.5], eta).unwrap();
        assert_relative_eq!(m.covariance[0][0], eta * eta / 2.0, max_relative = 1e-12);
        let analytic = step_covariance_analytic(&[0.5, 0.5], eta);
        assert_relative_eq!(analytic[0][0], eta * eta / 2.0, epsilon = 1e-17);
        for v in &m.mean {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn moments_reject_large_n() {
        let p = vec![1.0 / 13.0; 13];
        assert!(matches!(
            step_moments_enumerated(&p, 0.1),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
        assert_relative_eq!(entropy(&[0.5, 0.5]), 2f64.ln(), epsilon = 1e-15);
        let s = entropy(&[0.5, 0.3, 0.2]);
        assert_relative_eq!(s, 1.0297, epsilon = 5e-5);
    }

    #[test]
    fn entropy_drift_values() {
        assert_eq!(entropy_drift_analytic(&[1.0, 0.0], 0.1), 0.0);
        assert_relative_eq!(
            entropy_drift_analytic(&[0.5, 0.5], 0.1),
            -0.01,
            epsilon = 1e-15
        );
        let mut rng = stream_rng(17, StreamDomain::Walk, 0);
        for _ in 0..1000 {
            let p = sample_simplex(&mut rng, 3, 1e-6);
            assert!(entropy_drift_analytic(&p, 0.05) < 0.0);
        }
    }

    #[test]
    fn martingale_holds_at_machine_precision() {
        let mut rng = stream_rng(23, StreamDomain::Walk, 1);
        for n in [2usize, 3, 4] {
            for _ in 0..25 {
                let p = sample_simplex(&mut rng, n, 0.01);
                let m = step_moments_enumerated(&p, 0.2).unwrap();
                for v in &m.mean {
                    assert!(v.abs() < 1e-12, "mean displacement {v}");
                }
            }
        }
    }

    #[test]
    fn conditional_sampler_matches_step_weight() {
        // The telescoping product of the per-channel conditionals equals
        // the cell weight.
        let p = [0.2, 0.5, 0.3];
        let eta = 0.3;
        for col in columns(3) {
            let mut s = 0.0;
            let mut joint = 1.0;
            for (j, &e) in col.iter().enumerate() {
                let p_plus = (1.0 + 2.0 * eta * (s + p[j])) / (2.0 * (1.0 + 2.0 * eta * s));
                joint *= if e == 1 { p_plus } else { 1.0 - p_plus };
                s += p[j] * e as f64;
            }
            assert_relative_eq!(joint, step_weight(&p, &col, eta), epsilon = 1e-14);
        }
    }

    #[test]
    fn inverse_cdf_sampler_hits_every_cell_with_its_weight() {
        let p = [0.6, 0.4];
        let eta = 0.25;
        let cells = columns(2);
        // Walk u through each cell's CDF interval midpoint.
        let mut cdf = 0.0;
        let mut column = vec![0i8; 2];
        // Gray visiting order: 00, 01, 11, 10 in flip terms starting all -1.
        let mut gray_cells: Vec<Vec<i8>> = Vec::new();
        let mut current = vec![-1i8; 2];
        gray_cells.push(current.clone());
        for cell in 1u64..4 {
            let j = cell.trailing_zeros() as usize;
            current[j] = -current[j];
            gray_cells.push(current.clone());
        }
        for visited in &gray_cells {
            let q = step_weight(&p, visited, eta);
            sample_column_inverse_cdf(&p, eta, cdf + q / 2.0, &mut column);
            assert_eq!(&column, visited);
            cdf += q;
        }
        assert_relative_eq!(cdf, 1.0, epsilon = 1e-14);
        assert_eq!(cells.len(), gray_cells.len());
    }

    #[test]
    fn walk_from_corner_stays_there() {
        let psi = AmplitudeVector::from_probabilities(&[1.0, 0.0]).unwrap();
        let params = ApparatusParams::uniform(2, 100, 0.1, 5).unwrap();
        let result = run_walk(&psi, &params, 0, false).unwrap();
        assert_eq!(result.outcome, 0);
        assert_eq!(result.final_p, vec![1.0, 0.0]);
        assert!(result.collapsed);
    }

    #[test]
    fn walk_is_deterministic_per_index() {
        let psi = AmplitudeVector::from_probabilities(&[0.4, 0.6]).unwrap();
        let params = ApparatusParams::uniform(2, 200, 0.1, 5).unwrap();
        let a = run_walk(&psi, &params, 3, true).unwrap();
        let b = run_walk(&psi, &params, 3, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn born_rule_two_channels() {
        let psi = AmplitudeVector::from_probabilities(&[0.7, 0.3]).unwrap();
        let params = ApparatusParams::uniform(2, 2000, 0.1, 424242).unwrap();
        let runs = 2000u64;
        let results = run_walks(&psi, &params, runs, false).unwrap();
        let hits = results.iter().filter(|r| r.outcome == 0).count() as f64;
        let freq = hits / runs as f64;
        let sigma = (0.7 * 0.3 / runs as f64).sqrt();
        assert!(
            (freq - 0.7).abs() < 3.0 * sigma,
            "frequency {freq} outside 3 sigma of 0.7"
        );
    }

    #[test]
    fn sampled_entropy_decreases_on_average() {
        let params_eta = 0.1;
        let mut rng = stream_rng(99, StreamDomain::Walk, 7);
        let mut total = 0.0;
        let steps = 10_000;
        let mut column = vec![0i8; 3];
        for _ in 0..steps {
            let p = sample_simplex(&mut rng, 3, 0.01);
            let s0 = entropy(&p);
            sample_column(&p, params_eta, &mut rng, &mut column);
            let mut stepped = p.clone();
            step_in_place(&mut stepped, &column, params_eta);
            total += entropy(&stepped) - s0;
        }
        assert!(total / (steps as f64) < 0.0);
    }

    #[test]
    fn weighted_sampling_equals_uniform_reweighting() {
        // Expectations over full path enumeration: sampling columns with
        // their step weights is identical to sampling them uniformly and
        // reweighting by the accumulated rate factors.
        let eta = 0.2;
        let p0 = [0.3, 0.7];
        let two_x = 3;
        let n = 2;
        let paths = 1usize << (n * two_x);
        let mut weighted = vec![0.0; n];
        let mut reweighted = vec![0.0; n];
        let mut total_w = 0.0;
        for path in 0..paths {
            let mut p = p0.to_vec();
            let mut q_prod = 1.0;
            let mut rate_prod = 1.0;
            for step in 0..two_x {
                let bits = path >> (step * n);
                let col: Vec<i8> = (0..n)
                    .map(|j| if bits >> j & 1 == 1 { 1 } else { -1 })
                    .collect();
                q_prod *= step_weight(&p, &col, eta);
                let s: f64 = p.iter().zip(&col).map(|(&pj, &e)| pj * e as f64).sum();
                rate_prod *= 1.0 + 2.0 * eta * s;
                step_in_place(&mut p, &col, eta);
            }
            let uniform = 2f64.powi(-((n * two_x) as i32));
            for j in 0..n {
                weighted[j] += q_prod * p[j];
                reweighted[j] += uniform * rate_prod * p[j];
            }
            total_w += q_prod;
        }
        assert_relative_eq!(total_w, 1.0, epsilon = 1e-12);
        for j in 0..n {
            assert_relative_eq!(weighted[j], reweighted[j], epsilon = 1e-12);
            // and both respect the martingale
            assert_relative_eq!(weighted[j], p0[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn mean_final_probability_matches_initial_weights() {
        let psi = AmplitudeVector::from_probabilities(&[0.7, 0.3]).unwrap();
        let params = ApparatusParams::uniform(2, 500, 0.1, 31337).unwrap();
        let runs = 2000u64;
        let results = run_walks(&psi, &params, runs, false).unwrap();
        let finals: Vec<f64> = results.iter().map(|r| r.final_p[0]).collect();
        let (mean, se) = crate::stats::mean_and_standard_error(&finals);
        assert!(
            (mean - 0.7).abs() < 3.0 * se,
            "mean {mean} se {se}"
        );
    }
}
