//! Small statistical utilities shared by the simulation modules, the
//! verification battery, and the test suites.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Compensated (Neumaier) summation. Used where long sums feed tight
/// tolerances, e.g. binomial lattice moments.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// log(Σ exp(l_i)) without overflow; returns −∞ for an empty or all-−∞ input.
pub fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

/// Draws a point uniformly from the interior of the probability simplex,
/// with every component at least `floor` (requires `n * floor < 1`).
pub fn sample_simplex<R: Rng>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    assert!(n >= 1 && floor >= 0.0 && (n as f64) * floor < 1.0);
    // Exponential spacings give a uniform Dirichlet(1,..,1) draw.
    let mut p: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = p.iter().sum();
    let free = 1.0 - (n as f64) * floor;
    for v in &mut p {
        *v = floor + free * (*v / total);
    }
    p
}

/// Sample mean and its estimated standard error.
pub fn mean_and_standard_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 2, "need at least two samples");
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Result of a chi-square goodness-of-fit or homogeneity test.
#[derive(Debug, Clone)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    /// Critical value at the requested confidence level.
    pub threshold: f64,
    pub passed: bool,
}

fn chi_square_threshold(dof: usize, level: f64) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("dof >= 1")
        .inverse_cdf(level)
}

/// One-sample chi-square test of `counts` against equal cell probabilities.
pub fn chi_square_uniform(counts: &[u64], level: f64) -> ChiSquareOutcome {
    assert!(counts.len() >= 2);
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dof = counts.len() - 1;
    let threshold = chi_square_threshold(dof, level);
    ChiSquareOutcome {
        statistic,
        dof,
        threshold,
        passed: statistic < threshold,
    }
}

/// Two-sample chi-square homogeneity test on binned counts.
///
/// Bins are first merged left-to-right until each merged bin holds at least
/// `MIN_BIN_TOTAL` counts across both samples, which keeps the chi-square
/// approximation honest in the tails.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], level: f64) -> ChiSquareOutcome {
    assert_eq!(a.len(), b.len());
    const MIN_BIN_TOTAL: u64 = 10;

    let mut merged: Vec<(u64, u64)> = Vec::new();
    let mut acc = (0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        acc.0 += x;
        acc.1 += y;
        if acc.0 + acc.1 >= MIN_BIN_TOTAL {
            merged.push(acc);
            acc = (0, 0);
        }
    }
    if acc.0 + acc.1 > 0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => merged.push(acc),
        }
    }
    assert!(merged.len() >= 2, "too few populated bins");

    let n_a: u64 = merged.iter().map(|m| m.0).sum();
    let n_b: u64 = merged.iter().map(|m| m.1).sum();
    assert!(n_a > 0 && n_b > 0);
    let r_a = ((n_b as f64) / (n_a as f64)).sqrt();
    let r_b = 1.0 / r_a;
    let statistic = merged
        .iter()
        .map(|&(x, y)| {
            let d = r_a * x as f64 - r_b * y as f64;
            d * d / ((x + y) as f64)
        })
        .sum();
    let dof = merged.len() - 1;
    let threshold = chi_square_threshold(dof, level);
    ChiSquareOutcome {
        statistic,
        dof,
        threshold,
        passed: statistic < threshold,
    }
}
