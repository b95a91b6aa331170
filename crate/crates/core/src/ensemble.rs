//! Closed-form ensemble statistics of the pointer variables.
//!
//! Over the ensemble of measurements only the net sign counts
//! `X_j = (1/2) sum_x e_jx` matter. Given outcome channel `j`, each count is
//! binomially distributed with mean `+X eta` on the own axis and `-X eta` on
//! every other axis; mixing the channel distributions with the Born weights
//! gives the outcome distribution `Q`, which turns from unimodal to n-modal
//! as the separation parameter `Z = eta sqrt(X)` grows through ~1. In the
//! rescaled coordinates `z = X^(-3/4) eta^(-1/2) X_counts` the distribution
//! is a mixture of isotropic Gaussians of width `1/sqrt(2Z)` centered at
//! `z^(j)_k = sqrt(Z) (2 delta_jk - 1)`.

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Binomial;
use statrs::function::factorial::ln_binomial;

use crate::apparatus::ApparatusParams;
use crate::rng::{stream_rng, StreamDomain};
use crate::stats::{compensated_sum, log_sum_exp};
use crate::{Error, Result};

/// Integer pointer counts `X_j in [-X, X]` with half step count `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerVector {
    counts: Vec<i64>,
    x_half: u64,
}

impl PointerVector {
    pub fn new(counts: Vec<i64>, x_half: u64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::TooFewChannels(0));
        }
        if x_half < 1 {
            return Err(Error::InvalidParameter("X must be at least 1".into()));
        }
        if counts.iter().any(|&c| c.unsigned_abs() > x_half) {
            return Err(Error::InvalidParameter(format!(
                "pointer counts must lie in [-{x_half}, {x_half}]"
            )));
        }
        Ok(Self { counts, x_half })
    }

    /// Pointer read off a finished walk.
    pub fn from_walk(result: &crate::walk::WalkResult) -> Result<Self> {
        Self::new(result.pointer.clone(), (result.steps / 2) as u64)
    }

    pub fn counts(&self) -> &[i64] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn x_half(&self) -> u64 {
        self.x_half
    }
}

/// Which channels carry detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detectors {
    /// One detector set per channel.
    Full,
    /// Detectors on the first `n - 1` channels only; the last pointer
    /// component is identically zero.
    Reduced,
}

/// Single-axis count distribution
/// `P(Y) = C(2X, X+Y) ((1+eta)/2)^(X+Y) ((1-eta)/2)^(X-Y)`,
/// zero outside `|Y| <= X`. Mean `X eta`, variance `X (1 - eta^2) / 2`.
pub fn binomial_pointer(x_half: u64, eta: f64, y: i64) -> f64 {
    log_binomial_pointer(x_half, eta, y).exp()
}

/// `ln P(Y)`, computed through the log-gamma function; `-inf` out of
/// support.
pub fn log_binomial_pointer(x_half: u64, eta: f64, y: i64) -> f64 {
    assert!(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
    let x = x_half as i64;
    if y.abs() > x {
        return f64::NEG_INFINITY;
    }
    let up = (x + y) as u64;
    let down = (x - y) as u64;
    ln_binomial(2 * x_half, up)
        + up as f64 * (0.5 * (1.0 + eta)).ln()
        + down as f64 * (0.5 * (1.0 - eta)).ln()
}

/// Normalization, mean, and variance of [`binomial_pointer`] by compensated
/// lattice summation.
#[derive(Debug, Clone, Copy)]
pub struct PointerMoments {
    pub total: f64,
    pub mean: f64,
    pub variance: f64,
}

pub fn binomial_pointer_moments(x_half: u64, eta: f64) -> PointerMoments {
    let x = x_half as i64;
    let probs: Vec<(i64, f64)> = (-x..=x)
        .map(|y| (y, binomial_pointer(x_half, eta, y)))
        .collect();
    let total = compensated_sum(probs.iter().map(|&(_, p)| p));
    let mean = compensated_sum(probs.iter().map(|&(y, p)| p * y as f64)) / total;
    let variance = compensated_sum(probs.iter().map(|&(y, p)| {
        let d = y as f64 - mean;
        p * d * d
    })) / total;
    PointerMoments {
        total,
        mean,
        variance,
    }
}

fn check_detector_shape(pointer: &PointerVector, detectors: Detectors) -> Result<()> {
    if detectors == Detectors::Reduced {
        if pointer.n() < 2 {
            return Err(Error::TooFewChannels(pointer.n()));
        }
        if *pointer.counts().last().unwrap() != 0 {
            return Err(Error::InvalidParameter(
                "reduced detector model fixes the last pointer component to 0".into(),
            ));
        }
    }
    Ok(())
}

/// `ln P_j(X)`: product of the own-axis distribution at `+X_j` and the
/// mirrored distribution at `-X_k` on every other detector axis.
pub fn log_channel_distribution(
    pointer: &PointerVector,
    eta: f64,
    j: usize,
    detectors: Detectors,
) -> Result<f64> {
    let n = pointer.n();
    if j >= n {
        return Err(Error::InvalidParameter(format!(
            "channel {j} out of range for n = {n}"
        )));
    }
    check_detector_shape(pointer, detectors)?;
    let detector_axes = match detectors {
        Detectors::Full => n,
        Detectors::Reduced => n - 1,
    };
    let x_half = pointer.x_half();
    let mut log = 0.0;
    for (k, &count) in pointer.counts()[..detector_axes].iter().enumerate() {
        let y = if k == j { count } else { -count };
        log += log_binomial_pointer(x_half, eta, y);
    }
    Ok(log)
}

/// Linear-domain `P_j(X)`.
pub fn channel_distribution(
    pointer: &PointerVector,
    eta: f64,
    j: usize,
    detectors: Detectors,
) -> Result<f64> {
    Ok(log_channel_distribution(pointer, eta, j, detectors)?.exp())
}

fn check_weights(psi_sq: &[f64], n: usize) -> Result<()> {
    if psi_sq.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} channel weights for {} pointer components",
            psi_sq.len(),
            n
        )));
    }
    if psi_sq.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::InvalidParameter(
            "channel weights must be nonnegative".into(),
        ));
    }
    let total: f64 = psi_sq.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized((total - 1.0).abs()));
    }
    Ok(())
}

/// Outcome distribution `Q(X) = sum_j P_j(X) |psi_j|^2`.
pub fn outcome_distribution(
    pointer: &PointerVector,
    psi_sq: &[f64],
    eta: f64,
    detectors: Detectors,
) -> Result<f64> {
    check_weights(psi_sq, pointer.n())?;
    let mut q = 0.0;
    for (j, &w) in psi_sq.iter().enumerate() {
        if w > 0.0 {
            q += w * channel_distribution(pointer, eta, j, detectors)?;
        }
    }
    Ok(q)
}

/// Channel probability conditioned on the pointer record,
/// `p_j(X) = P_j |psi_j|^2 / sum_l P_l |psi_l|^2`, evaluated in the log
/// domain so well-separated pointers do not underflow.
pub fn conditional_channel_probability(
    pointer: &PointerVector,
    psi_sq: &[f64],
    eta: f64,
    detectors: Detectors,
    j: usize,
) -> Result<f64> {
    check_weights(psi_sq, pointer.n())?;
    let logs: Vec<f64> = (0..pointer.n())
        .map(|l| {
            if psi_sq[l] > 0.0 {
                Ok(psi_sq[l].ln() + log_channel_distribution(pointer, eta, l, detectors)?)
            } else {
                Ok(f64::NEG_INFINITY)
            }
        })
        .collect::<Result<_>>()?;
    let denom = log_sum_exp(&logs);
    if denom == f64::NEG_INFINITY {
        return Err(Error::UnreachablePointer);
    }
    Ok((logs[j] - denom).exp())
}

/// Rescaled continuous pointer coordinates with separation parameter
/// `Z = eta sqrt(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZVector {
    z: Vec<f64>,
    big_z: f64,
}

impl ZVector {
    pub fn new(z: Vec<f64>, big_z: f64) -> Result<Self> {
        if !(big_z > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "separation parameter Z = {big_z} must be positive"
            )));
        }
        Ok(Self { z, big_z })
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.z
    }

    pub fn big_z(&self) -> f64 {
        self.big_z
    }
}

/// `z = X^(-3/4) eta^(-1/2) X_counts` and `Z = eta sqrt(X)`.
pub fn z_transform(pointer: &PointerVector, eta: f64) -> Result<ZVector> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter("eta must lie in (0, 1)".into()));
    }
    let x = pointer.x_half() as f64;
    let scale = x.powf(-0.75) / eta.sqrt();
    ZVector::new(
        pointer.counts().iter().map(|&c| scale * c as f64).collect(),
        eta * x.sqrt(),
    )
}

/// Gaussian mixture center for channel `j`: `sqrt(Z) (2 delta_jk - 1)` over
/// the detector axes.
pub fn mode_center(j: usize, n: usize, detectors: Detectors, big_z: f64) -> Vec<f64> {
    let axes = match detectors {
        Detectors::Full => n,
        Detectors::Reduced => n - 1,
    };
    let r = big_z.sqrt();
    (0..axes)
        .map(|k| if k == j { r } else { -r })
        .collect()
}

/// Continuous pointer density
/// `qhat(z) = sum_j |psi_j|^2 (Z/pi)^(d/2) exp(-Z |z - z^(j)|^2)`.
///
/// The coordinate dimension must match the detector layout: `n` axes for
/// the full model, `n - 1` for the reduced one.
pub fn gaussian_pointer_density(
    zvec: &ZVector,
    psi_sq: &[f64],
    detectors: Detectors,
) -> Result<f64> {
    let n = psi_sq.len();
    let axes = match detectors {
        Detectors::Full => n,
        Detectors::Reduced => n - 1,
    };
    if zvec.coordinates().len() != axes {
        return Err(Error::InvalidParameter(format!(
            "{} coordinates for {} detector axes",
            zvec.coordinates().len(),
            axes
        )));
    }
    let big_z = zvec.big_z();
    let norm = (big_z / std::f64::consts::PI).powf(axes as f64 / 2.0);
    let mut density = 0.0;
    for (j, &w) in psi_sq.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let center = mode_center(j, n, detectors, big_z);
        let dist_sq: f64 = zvec
            .coordinates()
            .iter()
            .zip(&center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        density += w * norm * (-big_z * dist_sq).exp();
    }
    Ok(density)
}

/// Local maxima of the pointer density along the line through two mixture
/// centers.
#[derive(Debug, Clone)]
pub struct ModeScan {
    /// Number of strict local maxima found on the scanned segment.
    pub count: usize,
    /// Full coordinates of each maximum.
    pub locations: Vec<Vec<f64>>,
    /// Density at each maximum.
    pub values: Vec<f64>,
}

/// Scans the density along the `(j, k)` center line with a three-point
/// local-max test at arc resolution `0.01 / sqrt(Z)`, extending 75% of the
/// center separation beyond each center.
pub fn scan_modes(
    psi_sq: &[f64],
    big_z: f64,
    detectors: Detectors,
    j: usize,
    k: usize,
) -> Result<ModeScan> {
    let n = psi_sq.len();
    if j == k || j >= n || k >= n {
        return Err(Error::InvalidParameter(format!(
            "need two distinct channels below {n}, got ({j}, {k})"
        )));
    }
    let cj = mode_center(j, n, detectors, big_z);
    let ck = mode_center(k, n, detectors, big_z);
    let separation: f64 = cj
        .iter()
        .zip(&ck)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let step = 0.01 / big_z.sqrt();
    let start = -0.75 * separation;
    let stop = 1.75 * separation;
    let samples = ((stop - start) / step).ceil() as usize + 1;

    let mut values = Vec::with_capacity(samples);
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = start + i as f64 * step;
        let z: Vec<f64> = cj
            .iter()
            .zip(&ck)
            .map(|(a, b)| a + (b - a) * t / separation)
            .collect();
        let zv = ZVector::new(z.clone(), big_z)?;
        values.push(gaussian_pointer_density(&zv, psi_sq, detectors)?);
        points.push(z);
    }

    let mut scan = ModeScan {
        count: 0,
        locations: Vec::new(),
        values: Vec::new(),
    };
    for i in 1..samples - 1 {
        if values[i] > values[i - 1] && values[i] > values[i + 1] {
            scan.count += 1;
            scan.locations.push(points[i].clone());
            scan.values.push(values[i]);
        }
    }
    Ok(scan)
}

/// Draws ensemble sample `index`: the outcome channel with its Born weight,
/// then one binomial pointer count per axis (shifted `+X eta` on the own
/// axis, `-X eta` elsewhere). The pointer distribution equals the mixture
/// `Q` by construction.
pub fn sample_ensemble(
    psi_sq: &[f64],
    params: &ApparatusParams,
    index: u64,
) -> Result<(usize, PointerVector)> {
    let eta = params.uniform_eta().ok_or_else(|| {
        Error::InvalidParameter("ensemble sampling requires the uniform model".into())
    })?;
    check_weights(psi_sq, params.n())?;
    let mut rng = stream_rng(params.seed(), StreamDomain::Ensemble, index);

    let u: f64 = rng.random();
    let mut channel = psi_sq.len() - 1;
    let mut cdf = 0.0;
    for (j, &w) in psi_sq.iter().enumerate() {
        cdf += w;
        if u < cdf {
            channel = j;
            break;
        }
    }

    let two_x = params.two_x() as u64;
    let x = (two_x / 2) as i64;
    let dist = Binomial::new(two_x, 0.5 * (1.0 + eta))
        .expect("probability is in (0,1) by the eta bound");
    let counts = (0..params.n())
        .map(|axis| {
            let b = dist.sample(&mut rng) as i64;
            if axis == channel {
                b - x
            } else {
                x - b
            }
        })
        .collect();
    Ok((channel, PointerVector::new(counts, x as u64)?))
}

/// Streams `count` ensemble samples, index order `0..count`.
pub fn ensemble_sampler<'a>(
    psi_sq: &'a [f64],
    params: &'a ApparatusParams,
    count: u64,
) -> impl Iterator<Item = Result<(usize, PointerVector)>> + 'a {
    (0..count).map(move |i| sample_ensemble(psi_sq, params, i))
}

/// Ensemble entropy of the final states: the second-order closed form and
/// an exact binomial-grouped summation as a verification pair.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleEntropy {
    /// `-sum_k |psi_k|^2 ln |psi_k|^2 + 2 X n ln 2 - X eta^2`.
    pub closed_form: f64,
    /// Per-channel average of `-ln(state probability)`, summed over the
    /// binomial lattice and mixed with the channel weights.
    pub enumerated: f64,
}

pub fn ensemble_entropy(psi_sq: &[f64], x_half: u64, eta: f64) -> Result<EnsembleEntropy> {
    if psi_sq.is_empty() {
        return Err(Error::TooFewChannels(0));
    }
    check_weights(psi_sq, psi_sq.len())?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter("eta must lie in (0, 1)".into()));
    }
    let n = psi_sq.len() as f64;
    let x = x_half as f64;
    let mixing: f64 = -psi_sq
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w * w.ln())
        .sum::<f64>();
    let closed_form = mixing + 2.0 * x * n * 2f64.ln() - x * eta * eta;

    // Exact route: a final state with outcome j and own-axis count Y occurs
    // with probability |psi_j|^2 2^(-2nX) (1-eta^2)^X ((1+eta)/(1-eta))^Y
    // per microstate; -ln of that is linear in Y, so the average over the
    // lattice reduces to one biased binomial sum per channel.
    let log_ratio = ((1.0 + eta) / (1.0 - eta)).ln();
    let base = 2.0 * n * x * 2f64.ln() - x * (1.0 - eta * eta).ln();
    let xi = x_half as i64;
    let neg_log_mean = |w: f64| {
        compensated_sum((-xi..=xi).map(|y| {
            let p = binomial_pointer(x_half, eta, y);
            p * (-w.ln() + base - y as f64 * log_ratio)
        }))
    };
    let enumerated = compensated_sum(
        psi_sq
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| w * neg_log_mean(w)),
    );
    Ok(EnsembleEntropy {
        closed_form,
        enumerated,
    })
}

/// Mean and covariance of two sign variables that both strengthen the same
/// outcome of probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCorrelationResult {
    /// `<eps> = <eps'> = (2p - 1) eta`.
    pub mean_eps: f64,
    /// `<eps eps'> - <eps><eps'> = 4 p (1 - p) eta^2`.
    pub covariance: f64,
}

/// Closed-form pair statistics, cross-checked against the exact four-cell
/// enumeration of the final-state sign distribution.
pub fn pair_correlation(p: f64, eta: f64) -> Result<PairCorrelationResult> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "outcome probability p = {p} must lie in [0, 1]"
        )));
    }
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!(
            "eta = {eta} must lie in [0, 1)"
        )));
    }
    let mean_eps = (2.0 * p - 1.0) * eta;
    let covariance = 4.0 * p * (1.0 - p) * eta * eta;

    let mut mean_a = 0.0;
    let mut mean_b = 0.0;
    let mut mean_ab = 0.0;
    for &ea in &[1.0f64, -1.0] {
        for &eb in &[1.0f64, -1.0] {
            let prob = 0.25 * (1.0 + ea * eta) * (1.0 + eb * eta) * p
                + 0.25 * (1.0 - ea * eta) * (1.0 - eb * eta) * (1.0 - p);
            mean_a += prob * ea;
            mean_b += prob * eb;
            mean_ab += prob * ea * eb;
        }
    }
    let enum_cov = mean_ab - mean_a * mean_b;
    assert!(
        (mean_a - mean_eps).abs() < 1e-14
            && (mean_b - mean_eps).abs() < 1e-14
            && (enum_cov - covariance).abs() < 1e-14,
        "enumeration disagrees with closed form: ({mean_a}, {mean_b}, {enum_cov})"
    );
    Ok(PairCorrelationResult {
        mean_eps,
        covariance,
    })
}
