//! z-space histograms of pointer samples, with the exact lattice mixture
//! and its Gaussian approximation evaluated over the same cells.

use anyhow::Result;
use collapse_core::ensemble::{binomial_pointer, scan_modes, Detectors};
use collapse_core::Error;
use statrs::function::erf::erf;

pub struct HistogramRow {
    /// Cell center in z coordinates.
    pub center: Vec<f64>,
    /// Observed samples in the cell.
    pub count: u64,
    /// Exact mixture probability mass of the cell.
    pub q_exact: f64,
    /// Gaussian-approximation mass of the cell.
    pub q_gaussian: f64,
}

pub struct ZHistogram {
    pub bins: usize,
    pub lo: f64,
    pub width: f64,
    pub big_z: f64,
    pub rows: Vec<HistogramRow>,
}

/// Bins pointer count vectors on a shared per-axis z grid. Edge cells are
/// open-ended: samples falling outside the grid are absorbed by the nearest
/// edge cell, and the reference masses integrate to the matching infinite
/// tails, so observed and expected columns stay comparable.
pub fn z_histogram(
    pointers: &[Vec<i64>],
    x_half: u64,
    eta: f64,
    psi_sq: &[f64],
    bins: usize,
) -> Result<ZHistogram> {
    if pointers.is_empty() {
        return Err(Error::NoData.into());
    }
    let n = psi_sq.len();
    assert!((1..=3).contains(&n), "grid supports up to 3 axes");
    assert!(bins >= 3);

    let x = x_half as f64;
    let scale = x.powf(-0.75) / eta.sqrt(); // z per unit count
    let big_z = eta * x.sqrt();

    // Span: cover the mixture centers generously and every sample.
    let mut half_span = 2.5 * big_z.sqrt() + 3.0 / (2.0 * big_z).sqrt();
    for p in pointers {
        for &c in p {
            half_span = half_span.max((c as f64 * scale).abs() * 1.0001);
        }
    }
    let lo = -half_span;
    let width = 2.0 * half_span / bins as f64;

    let cells = bins.pow(n as u32);
    let mut counts = vec![0u64; cells];
    for p in pointers {
        let mut cell = 0usize;
        for &c in p {
            let z = c as f64 * scale;
            let idx = (((z - lo) / width).floor() as i64).clamp(0, bins as i64 - 1) as usize;
            cell = cell * bins + idx;
        }
        counts[cell] += 1;
    }

    // Per-axis interval masses. Own axis: P(Y); other axes: P(-Y).
    let lattice = 2 * x_half as usize + 1;
    let mut own_prefix = vec![0.0f64; lattice];
    let mut acc = 0.0;
    for (i, slot) in own_prefix.iter_mut().enumerate() {
        let y = i as i64 - x_half as i64;
        acc += binomial_pointer(x_half, eta, y);
        *slot = acc;
    }
    let own_mass = |c_lo: i64, c_hi: i64| -> f64 {
        let xi = x_half as i64;
        let (c_lo, c_hi) = (c_lo.max(-xi), c_hi.min(xi));
        if c_hi < c_lo {
            return 0.0;
        }
        let hi = own_prefix[(c_hi + xi) as usize];
        let lo_idx = c_lo + xi;
        let lo = if lo_idx == 0 {
            0.0
        } else {
            own_prefix[(lo_idx - 1) as usize]
        };
        hi - lo
    };
    // P(-Y) over [a, b] equals P(Y) over [-b, -a].
    let other_mass = |c_lo: i64, c_hi: i64| -> f64 { own_mass(-c_hi, -c_lo) };

    // Count interval of axis cell i; edge cells reach the lattice ends.
    let cell_counts = |i: usize| -> (i64, i64) {
        let xi = x_half as i64;
        let z0 = lo + i as f64 * width;
        let z1 = z0 + width;
        let c_lo = if i == 0 { -xi } else { (z0 / scale).ceil() as i64 };
        let c_hi = if i == bins - 1 {
            xi
        } else {
            ((z1 / scale).ceil() as i64) - 1
        };
        (c_lo, c_hi)
    };
    // Gaussian mass of axis cell i around center mu; edge cells reach ±inf.
    let gauss_mass = |i: usize, mu: f64| -> f64 {
        let z0 = lo + i as f64 * width;
        let z1 = z0 + width;
        let r = big_z.sqrt();
        let lo_erf = if i == 0 { -1.0 } else { erf(r * (z0 - mu)) };
        let hi_erf = if i == bins - 1 { 1.0 } else { erf(r * (z1 - mu)) };
        0.5 * (hi_erf - lo_erf)
    };

    let sqrt_z = big_z.sqrt();
    let mut rows = Vec::with_capacity(cells);
    for (cell, &count) in counts.iter().enumerate() {
        // Decode per-axis indices (most significant axis first).
        let mut idx = vec![0usize; n];
        let mut rem = cell;
        for k in (0..n).rev() {
            idx[k] = rem % bins;
            rem /= bins;
        }
        let center: Vec<f64> = idx
            .iter()
            .map(|&i| lo + (i as f64 + 0.5) * width)
            .collect();

        let mut q_exact = 0.0;
        let mut q_gaussian = 0.0;
        for (j, &w) in psi_sq.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let mut exact = w;
            let mut gauss = w;
            for (k, &i) in idx.iter().enumerate() {
                let (c_lo, c_hi) = cell_counts(i);
                let mu = if k == j { sqrt_z } else { -sqrt_z };
                exact *= if k == j {
                    own_mass(c_lo, c_hi)
                } else {
                    other_mass(c_lo, c_hi)
                };
                gauss *= gauss_mass(i, mu);
            }
            q_exact += exact;
            q_gaussian += gauss;
        }
        rows.push(HistogramRow {
            center,
            count,
            q_exact,
            q_gaussian,
        });
    }

    Ok(ZHistogram {
        bins,
        lo,
        width,
        big_z,
        rows,
    })
}

/// Mode report over every channel pair: counts, locations, and the center
/// separation `sqrt(8 Z)`.
pub fn mode_summary(psi_sq: &[f64], big_z: f64) -> Result<serde_json::Value> {
    let n = psi_sq.len();
    let mut pairs = Vec::new();
    let mut total_modes = 0usize;
    if n == 1 {
        pairs.push(serde_json::json!({
            "channels": [1],
            "mode_count": 1,
            "locations": [[big_z.sqrt()]],
        }));
        total_modes = 1;
    } else {
        for j in 0..n {
            for k in (j + 1)..n {
                let scan = scan_modes(psi_sq, big_z, Detectors::Full, j, k)
                    .map_err(anyhow::Error::from)?;
                total_modes = total_modes.max(scan.count);
                pairs.push(serde_json::json!({
                    "channels": [j + 1, k + 1],
                    "mode_count": scan.count,
                    "locations": scan.locations,
                    "density_values": scan.values,
                }));
            }
        }
    }
    Ok(serde_json::json!({
        "separation_parameter": big_z,
        "center_separation": (8.0 * big_z).sqrt(),
        "per_pair": pairs,
        "modes_detected": total_modes,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_gaussian_masses_sum_to_one() {
        // Samples only set the grid span; masses must normalize over it.
        let pointers = vec![vec![10i64, -10], vec![-5, 5]];
        let h = z_histogram(&pointers, 100, 0.1, &[0.6, 0.4], 9).unwrap();
        let q: f64 = h.rows.iter().map(|r| r.q_exact).sum();
        let g: f64 = h.rows.iter().map(|r| r.q_gaussian).sum();
        assert!((q - 1.0).abs() < 1e-10, "exact mass {q}");
        assert!((g - 1.0).abs() < 1e-10, "gaussian mass {g}");
        let total: u64 = h.rows.iter().map(|r| r.count).sum();
        assert_eq!(total, 2);
    }

    #[test]
    fn empty_input_is_no_data() {
        match z_histogram(&[], 10, 0.1, &[1.0], 5) {
            Err(err) => assert_eq!(err.to_string(), "no data"),
            Ok(_) => panic!("expected an error for empty input"),
        }
    }
}
