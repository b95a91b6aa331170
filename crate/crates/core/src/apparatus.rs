//! Stochastic apparatus model.
//!
//! The apparatus is described by sign variables `e_jx = ±1`, one per channel
//! `j` and propagation position `x = 1..=2X`. A positive sign strengthens
//! channel `j` at position `x` and weakens all others through the recursive
//! enhancement factors `B_jx`; both signs occur with equal a-priori
//! frequency, so no channel is favored on average. All cumulative products
//! are carried in the log domain because `(1 ± eta)^(2X)` spans hundreds of
//! orders of magnitude at realistic `X`.

use rand::Rng;

use crate::rng::{stream_rng, StreamDomain};
use crate::{Error, Result};

/// Largest admissible deviation of the gauge factors `c_jx` from unity.
pub const C_MAX_DEVIATION: f64 = 0.1;

/// Coupling strengths of the apparatus.
///
/// The uniform model (all `c = 1`, one shared `eta`) is the default used by
/// the walk and ensemble machinery; the general model carries per-site
/// values.
#[derive(Debug, Clone, PartialEq)]
enum Coupling {
    Uniform { eta: f64 },
    PerSite { eta: Vec<f64>, c: Vec<f64> },
}

/// Channel count, step count, couplings, and RNG seed of one apparatus.
#[derive(Debug, Clone, PartialEq)]
pub struct ApparatusParams {
    n: usize,
    two_x: usize,
    coupling: Coupling,
    seed: u64,
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "eta = {eta} must lie strictly between 0 and 1/2"
        )));
    }
    Ok(())
}

fn check_dims(n: usize, two_x: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidParameter("need at least one channel".into()));
    }
    if two_x < 2 || two_x % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "step count 2X = {two_x} must be even and at least 2"
        )));
    }
    Ok(())
}

impl ApparatusParams {
    /// Uniform model: every `c_jx = 1` and every `eta_jx = eta`.
    pub fn uniform(n: usize, two_x: usize, eta: f64, seed: u64) -> Result<Self> {
        check_dims(n, two_x)?;
        check_eta(eta)?;
        Ok(Self {
            n,
            two_x,
            coupling: Coupling::Uniform { eta },
            seed,
        })
    }

    /// General model with per-site couplings, row-major `[j][x]` matrices of
    /// shape `n x 2X`.
    pub fn general(
        n: usize,
        two_x: usize,
        eta: Vec<f64>,
        c: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        check_dims(n, two_x)?;
        if eta.len() != n * two_x || c.len() != n * two_x {
            return Err(Error::InvalidParameter(format!(
                "coupling matrices must hold {} entries",
                n * two_x
            )));
        }
        for &e in &eta {
            check_eta(e)?;
        }
        for &v in &c {
            if !(v > 0.0 && (v - 1.0).abs() <= C_MAX_DEVIATION) {
                return Err(Error::InvalidParameter(format!(
                    "c = {v} must be positive and within {C_MAX_DEVIATION} of 1"
                )));
            }
        }
        Ok(Self {
            n,
            two_x,
            coupling: Coupling::PerSite { eta, c },
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total step count `2X`.
    pub fn two_x(&self) -> usize {
        self.two_x
    }

    /// Half step count `X`.
    pub fn x_half(&self) -> usize {
        self.two_x / 2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.coupling, Coupling::Uniform { .. })
    }

    /// Shared coupling strength, if the model is uniform.
    pub fn uniform_eta(&self) -> Option<f64> {
        match &self.coupling {
            Coupling::Uniform { eta } => Some(*eta),
            Coupling::PerSite { .. } => None,
        }
    }

    /// Coupling strength at channel `j`, position `x` (1-based `x`).
    pub fn eta(&self, j: usize, x: usize) -> f64 {
        debug_assert!(j < self.n && (1..=self.two_x).contains(&x));
        match &self.coupling {
            Coupling::Uniform { eta } => *eta,
            Coupling::PerSite { eta, .. } => eta[j * self.two_x + (x - 1)],
        }
    }

    /// Gauge factor at channel `j`, position `x` (1-based `x`).
    pub fn c(&self, j: usize, x: usize) -> f64 {
        debug_assert!(j < self.n && (1..=self.two_x).contains(&x));
        match &self.coupling {
            Coupling::Uniform { .. } => 1.0,
            Coupling::PerSite { c, .. } => c[j * self.two_x + (x - 1)],
        }
    }
}

/// One draw of the sign matrix `e`, stored column-major so the per-position
/// sign columns are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    n: usize,
    two_x: usize,
    e: Vec<i8>,
}

impl NoiseRealization {
    /// Generates realization `index` for the given parameters. Every entry
    /// is independently ±1 with probability 1/2, and the result depends
    /// only on `(params.seed, index)`.
    pub fn sample(params: &ApparatusParams, index: u64) -> Self {
        let mut rng = stream_rng(params.seed, StreamDomain::Noise, index);
        let len = params.n * params.two_x;
        let mut e = Vec::with_capacity(len);
        let mut word = 0u64;
        let mut bits_left = 0u32;
        for _ in 0..len {
            if bits_left == 0 {
                word = rng.random::<u64>();
                bits_left = 64;
            }
            e.push(if word & 1 == 1 { 1 } else { -1 });
            word >>= 1;
            bits_left -= 1;
        }
        Self {
            n: params.n,
            two_x: params.two_x,
            e,
        }
    }

    /// Builds a realization from explicit signs, column-major `[x][j]`.
    pub fn from_signs(n: usize, two_x: usize, e: Vec<i8>) -> Result<Self> {
        if e.len() != n * two_x {
            return Err(Error::InvalidParameter(format!(
                "expected {} signs, got {}",
                n * two_x,
                e.len()
            )));
        }
        if e.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidParameter("signs must be ±1".into()));
        }
        Ok(Self { n, two_x, e })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn two_x(&self) -> usize {
        self.two_x
    }

    /// Sign `e_jx` (1-based `x`).
    pub fn sign(&self, j: usize, x: usize) -> i8 {
        self.e[(x - 1) * self.n + j]
    }

    /// The sign column at position `x` (1-based).
    pub fn column(&self, x: usize) -> &[i8] {
        let start = (x - 1) * self.n;
        &self.e[start..start + self.n]
    }

    /// Net pointer counts `X_j = (1/2) sum_x e_jx`.
    pub fn pointer_counts(&self) -> Vec<i64> {
        let mut sums = vec![0i64; self.n];
        for x in 1..=self.two_x {
            for (j, &s) in self.column(x).iter().enumerate() {
                sums[j] += s as i64;
            }
        }
        sums.iter_mut().for_each(|v| *v /= 2);
        sums
    }
}

/// Streams `count` independent realizations, index order `0..count`.
pub fn sample_noise<'a>(
    params: &'a ApparatusParams,
    count: u64,
) -> impl Iterator<Item = NoiseRealization> + 'a {
    (0..count).map(move |i| NoiseRealization::sample(params, i))
}

/// Log-magnitudes of the normalized channel factors `b_jx = B_jx / B_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFactors {
    log_b: Vec<f64>,
}

impl ChannelFactors {
    pub fn log_b(&self) -> &[f64] {
        &self.log_b
    }

    /// Linear-domain factor for channel `j`; may overflow to `inf` for
    /// extreme noise at very large `X`.
    pub fn b(&self, j: usize) -> f64 {
        self.log_b[j].exp()
    }
}

/// Single-position enhancement factor
/// `C_jx = c_jx (1 + eta_jx e_jx / 2 - eta_jx^2 / 8)
///         prod_{k != j} c_kx (1 - eta_kx e_kx / 2 - eta_kx^2 / 8)`.
pub fn channel_factor_step(
    params: &ApparatusParams,
    x: usize,
    column: &[i8],
    j: usize,
) -> f64 {
    assert_eq!(column.len(), params.n());
    let mut value = 1.0;
    for (k, &e) in column.iter().enumerate() {
        let eta = params.eta(k, x);
        let own = k == j;
        let sign = if own { 1.0 } else { -1.0 };
        value *= params.c(k, x) * (1.0 + sign * 0.5 * eta * e as f64 - 0.125 * eta * eta);
    }
    value
}

/// Cumulative normalized factors after `x` positions: `log b_jx` with
/// `b_jx = B_jx / B_x` and `B_x = prod_{y<=x} prod_l c_ly`. The gauge
/// factors cancel exactly in the ratio. At `x = 0` all entries are zero.
pub fn propagation_factors(
    params: &ApparatusParams,
    noise: &NoiseRealization,
    x: usize,
) -> Result<ChannelFactors> {
    if noise.n() != params.n() || noise.two_x() != params.two_x() {
        return Err(Error::InvalidParameter(
            "noise shape does not match apparatus".into(),
        ));
    }
    if x > params.two_x() {
        return Err(Error::InvalidParameter(format!(
            "position {x} exceeds 2X = {}",
            params.two_x()
        )));
    }
    let n = params.n();
    let mut log_b = vec![0.0f64; n];
    for y in 1..=x {
        let column = noise.column(y);
        // ln b gains  sum_k ln(1 - eta e_k/2 - eta^2/8)  plus, for the own
        // channel, the difference between the strengthening and weakening
        // branch.
        let mut weakened_sum = 0.0;
        for (k, &e) in column.iter().enumerate() {
            let eta = params.eta(k, y);
            weakened_sum += (1.0 - 0.5 * eta * e as f64 - 0.125 * eta * eta).ln();
        }
        for (j, &e) in column.iter().enumerate() {
            let eta = params.eta(j, y);
            let strengthened = (1.0 + 0.5 * eta * e as f64 - 0.125 * eta * eta).ln();
            let weakened = (1.0 - 0.5 * eta * e as f64 - 0.125 * eta * eta).ln();
            log_b[j] += weakened_sum - weakened + strengthened;
        }
    }
    Ok(ChannelFactors { log_b })
}

/// Exact simplified-model product
/// `|b_j|^2 = prod_x (1 + eta e_jx) prod_{k != j} (1 - eta e_kx)`,
/// in the log domain.
pub fn simplified_log_b_squared(eta: f64, noise: &NoiseRealization, j: usize) -> f64 {
    let ln_plus = (1.0 + eta).ln();
    let ln_minus = (1.0 - eta).ln();
    let mut log = 0.0;
    for x in 1..=noise.two_x() {
        for (k, &e) in noise.column(x).iter().enumerate() {
            let up = (k == j) == (e == 1);
            log += if up { ln_plus } else { ln_minus };
        }
    }
    log
}

/// Linear-domain counterpart of [`simplified_log_b_squared`].
pub fn simplified_b_squared(eta: f64, noise: &NoiseRealization, j: usize) -> f64 {
    simplified_log_b_squared(eta, noise, j).exp()
}

/// All channels of [`simplified_log_b_squared`] in one pass.
pub fn simplified_log_b_squared_all(eta: f64, noise: &NoiseRealization) -> Vec<f64> {
    (0..noise.n())
        .map(|j| simplified_log_b_squared(eta, noise, j))
        .collect()
}

/// Analytic correlation `<b_j b_k> = exp(-(1 - delta_jk)/2 *
/// sum_x (eta_jx^2 + eta_kx^2))`; for the uniform model this is
/// `exp(-2X eta^2 (1 - delta_jk))`.
pub fn cross_correlation_analytic(params: &ApparatusParams, j: usize, k: usize) -> f64 {
    if j == k {
        return 1.0;
    }
    let sum: f64 = (1..=params.two_x())
        .map(|x| {
            let ej = params.eta(j, x);
            let ek = params.eta(k, x);
            ej * ej + ek * ek
        })
        .sum();
    (-0.5 * sum).exp()
}

/// Squared overlap of a lattice of `n_spins` aligned spins with the same
/// lattice after every spin is rotated by `delta_theta`:
/// exact `cos(delta_theta / 2)^(2N)` and the small-angle estimate
/// `exp(-N delta_theta^2 / 4)`.
pub fn spin_overlap(n_spins: u64, delta_theta: f64) -> Result<(f64, f64)> {
    if n_spins < 1 {
        return Err(Error::InvalidParameter("need at least one spin".into()));
    }
    if !(0.0..std::f64::consts::PI).contains(&delta_theta) {
        return Err(Error::InvalidParameter(format!(
            "delta_theta = {delta_theta} must lie in [0, pi)"
        )));
    }
    let n = n_spins as f64;
    let exact = (2.0 * n * (0.5 * delta_theta).cos().ln()).exp();
    let approx = (-0.25 * n * delta_theta * delta_theta).exp();
    Ok((exact, approx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::chi_square_uniform;
    use approx::assert_relative_eq;

    fn uniform(n: usize, two_x: usize, eta: f64) -> ApparatusParams {
        ApparatusParams::uniform(n, two_x, eta, 90210).unwrap()
    }

    #[test]
    fn eta_bounds_enforced() {
        assert!(ApparatusParams::uniform(2, 4, 0.0, 0).is_err());
        assert!(ApparatusParams::uniform(2, 4, 0.5, 0).is_err());
        assert!(ApparatusParams::uniform(2, 3, 0.1, 0).is_err());
        assert!(ApparatusParams::general(1, 2, vec![0.1, 0.1], vec![1.0, 1.2], 0).is_err());
    }

    #[test]
    fn noise_is_reproducible_per_index() {
        let params = uniform(1, 2, 0.1);
        let a = NoiseRealization::sample(&params, 5);
        let b = NoiseRealization::sample(&params, 5);
        assert_eq!(a, b);
        let c = NoiseRealization::sample(&params, 6);
        assert!(a != c || a.e == c.e); // indices may collide in value, never by construction
        assert!(a.e.iter().all(|&v| v == 1 || v == -1));
    }

    #[test]
    fn noise_mean_is_unbiased() {
        let params = uniform(1, 2, 0.1);
        let samples = 100_000u64;
        let mut sum = 0i64;
        for noise in sample_noise(&params, samples) {
            sum += noise.e.iter().map(|&v| v as i64).sum::<i64>();
        }
        let mean = sum as f64 / (2 * samples) as f64;
        // 3 binomial standard errors
        assert!(mean.abs() < 3.0 / (samples as f64).sqrt());
    }

    #[test]
    fn noise_cells_are_uniform() {
        // n = 2, 2X = 2 -> 16 equally likely sign patterns.
        let params = uniform(2, 2, 0.1);
        let mut counts = vec![0u64; 16];
        for noise in sample_noise(&params, 100_000) {
            let mut cell = 0usize;
            for (i, &s) in noise.e.iter().enumerate() {
                if s == 1 {
                    cell |= 1 << i;
                }
            }
            counts[cell] += 1;
        }
        let outcome = chi_square_uniform(&counts, 0.99);
        assert!(
            outcome.passed,
            "chi2 = {:.2} over {} dof, threshold {:.2}",
            outcome.statistic, outcome.dof, outcome.threshold
        );
    }

    #[test]
    fn factor_step_without_coupling_is_identity() {
        // eta -> 0 limit approximated by the smallest admissible eta.
        let params = uniform(3, 4, 1e-12);
        let c = channel_factor_step(&params, 1, &[1, -1, 1], 0);
        assert_relative_eq!(c, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn factor_step_single_channel() {
        let eta = 0.3;
        let params = uniform(1, 2, eta);
        let c = channel_factor_step(&params, 1, &[1], 0);
        assert_relative_eq!(c, 1.0 + eta / 2.0 - eta * eta / 8.0, epsilon = 1e-15);
    }

    #[test]
    fn factor_step_two_channels_opposite_signs() {
        let eta = 0.2;
        let params = uniform(2, 2, eta);
        let c = channel_factor_step(&params, 1, &[1, -1], 0);
        let own = 1.0 + eta / 2.0 - eta * eta / 8.0;
        assert_relative_eq!(c, own * own, epsilon = 1e-15);
    }

    #[test]
    fn factor_step_swap_symmetry() {
        // Swapping e_jx <-> e_kx swaps C_jx <-> C_kx under uniform couplings.
        let params = uniform(3, 2, 0.17);
        let column = [1i8, -1, -1];
        let mut swapped = column;
        swapped.swap(0, 1);
        let c0 = channel_factor_step(&params, 1, &column, 0);
        let c1 = channel_factor_step(&params, 1, &swapped, 1);
        assert_eq!(c0, c1);
    }

    #[test]
    fn propagation_factors_start_at_zero() {
        let params = uniform(2, 4, 0.1);
        let noise = NoiseRealization::sample(&params, 0);
        let f = propagation_factors(&params, &noise, 0).unwrap();
        assert_eq!(f.log_b(), &[0.0, 0.0]);
    }

    #[test]
    fn propagation_factor_mean_square_is_one() {
        // <b_jx^2> = 1 holds exactly for the simplified model and to
        // O(eta^4) per position for the recursion; Monte Carlo at modest
        // size sees both within sampling error.
        let params = uniform(2, 40, 0.1);
        let samples = 20_000u64;
        let mut values = Vec::with_capacity(samples as usize);
        for noise in sample_noise(&params, samples) {
            let f = propagation_factors(&params, &noise, params.two_x()).unwrap();
            values.push((2.0 * f.log_b()[0]).exp());
        }
        let (mean, se) = crate::stats::mean_and_standard_error(&values);
        assert!(
            (mean - 1.0).abs() < 3.0 * se,
            "mean = {mean}, se = {se}"
        );
    }

    #[test]
    fn simplified_b_squared_examples() {
        // All signs favoring channel j: (1 + eta)^(n * 2X).
        let eta = 0.2;
        let n = 3;
        let two_x = 4;
        let mut e = Vec::new();
        for _x in 0..two_x {
            e.extend_from_slice(&[1i8, -1, -1]); // e_0 = +1, others -1
        }
        let noise = NoiseRealization::from_signs(n, two_x, e).unwrap();
        let b2 = simplified_b_squared(eta, &noise, 0);
        let expected = (1.0 + eta).powi((n * two_x) as i32);
        assert_relative_eq!(b2, expected, max_relative = 1e-12);
    }

    #[test]
    fn simplified_b_squared_enumeration_mean_is_one() {
        // Exact enumeration over all 2^(n 2X) sign matrices, n = 2, 2X = 4.
        let eta = 0.3;
        let n = 2;
        let two_x = 4;
        let cells = 1usize << (n * two_x);
        for j in 0..n {
            let mut total = 0.0;
            for cell in 0..cells {
                let e: Vec<i8> = (0..n * two_x)
                    .map(|i| if cell >> i & 1 == 1 { 1 } else { -1 })
                    .collect();
                let noise = NoiseRealization::from_signs(n, two_x, e).unwrap();
                total += simplified_b_squared(eta, &noise, j);
            }
            assert_relative_eq!(total / cells as f64, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn recursion_tracks_simplified_product() {
        // Under uniform couplings the two routes agree to O(eta^3) per
        // factor; the log ratio is bounded by 2X * n * eta^3.
        let eta = 0.05;
        let params = uniform(3, 60, eta);
        let noise = NoiseRealization::sample(&params, 11);
        let f = propagation_factors(&params, &noise, params.two_x()).unwrap();
        for j in 0..3 {
            let general = 2.0 * f.log_b()[j];
            let simplified = simplified_log_b_squared(eta, &noise, j);
            let bound = (params.two_x() * params.n()) as f64 * eta.powi(3);
            assert!(
                (general - simplified).abs() < bound,
                "log gap {} exceeds {}",
                (general - simplified).abs(),
                bound
            );
        }
    }

    #[test]
    fn cross_correlation_values() {
        let params = uniform(2, 400, 0.05);
        assert_eq!(cross_correlation_analytic(&params, 0, 0), 1.0);
        // 2X eta^2 = 400 * 0.0025 = 1.
        assert_relative_eq!(
            cross_correlation_analytic(&params, 0, 1),
            (-1.0f64).exp(),
            max_relative = 1e-12
        );
        let weak = uniform(2, 400, 1e-9);
        assert_relative_eq!(cross_correlation_analytic(&weak, 0, 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spin_overlap_values() {
        let (exact, approx) = spin_overlap(10, 0.0).unwrap();
        assert_eq!((exact, approx), (1.0, 1.0));

        let (_, approx) = spin_overlap(1_000_000, 0.01).unwrap();
        assert_relative_eq!(approx, (-25.0f64).exp(), max_relative = 1e-12);

        let (exact, approx) = spin_overlap(100, 0.1).unwrap();
        let ratio = exact / approx;
        assert!(ratio > 0.99 && ratio < 1.01);
    }
}
