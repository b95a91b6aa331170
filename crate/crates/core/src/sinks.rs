//! Source/sink description of the scattering process.
//!
//! Emission by a source of strength `J0`, scattering through the amplitudes
//! `M_j`, and absorption by sinks of efficiency `F_j` sum to a geometric
//! series whose closed form is a final-state density matrix that is
//! nonlinear in the amplitudes. The `1` in its denominator is the weight of
//! nothing happening at all; a strong source makes it negligible, and equal
//! sinks then reduce the state to the plain normalized projector.

use crate::state::{DensityMatrix, RawAmplitudes};
use crate::{Complex64, Error, Result};

/// Source strength and per-channel sink efficiencies.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSinkParams {
    j0: Complex64,
    f: Vec<Complex64>,
}

impl SourceSinkParams {
    pub fn new(j0: Complex64, f: Vec<Complex64>) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::TooFewChannels(0));
        }
        Ok(Self { j0, f })
    }

    pub fn source(&self) -> Complex64 {
        self.j0
    }

    pub fn sinks(&self) -> &[Complex64] {
        &self.f
    }
}

/// The geometric-series final state before trace normalization. Its trace
/// `s / (1 + s)` falls short of one by the weight of no process occurring.
#[derive(Debug, Clone)]
pub struct SourceSinkDensity {
    n: usize,
    data: Vec<Complex64>,
    trace: f64,
    nothing_probability: f64,
}

impl SourceSinkDensity {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.data[j * self.n + k]
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Weight `1 / (1 + s)` of the no-process term.
    pub fn nothing_probability(&self) -> f64 {
        self.nothing_probability
    }

    /// Trace-normalized state; fails when the source is switched off.
    pub fn renormalized(&self) -> Result<DensityMatrix> {
        if self.trace <= 0.0 {
            return Err(Error::InvalidDensityMatrix(
                "zero trace: no process to normalize".into(),
            ));
        }
        let data = self.data.iter().map(|&v| v / self.trace).collect();
        DensityMatrix::new(self.n, data)
    }
}

fn check_lengths(raw: &RawAmplitudes, f: &[Complex64]) -> Result<()> {
    if raw.len() != f.len() {
        return Err(Error::InvalidParameter(format!(
            "{} amplitudes but {} sinks",
            raw.len(),
            f.len()
        )));
    }
    Ok(())
}

/// Closed form of the geometric series:
/// `rho_jk = |J0|^2 F_j conj(F_k) M_j conj(M_k) / (1 + s)` with
/// `s = |J0|^2 sum_l |F_l M_l|^2`.
pub fn density_with_sources(
    raw: &RawAmplitudes,
    params: &SourceSinkParams,
) -> Result<SourceSinkDensity> {
    check_lengths(raw, params.sinks())?;
    let n = raw.len();
    let j0_sq = params.source().norm_sqr();
    let weighted: Vec<Complex64> = raw
        .elements()
        .iter()
        .zip(params.sinks())
        .map(|(&m, &f)| f * m)
        .collect();
    let s: f64 = j0_sq * weighted.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let denom = 1.0 + s;
    let mut data = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            data.push(weighted[j] * weighted[k].conj() * (j0_sq / denom));
        }
    }
    Ok(SourceSinkDensity {
        n,
        data,
        trace: s / denom,
        nothing_probability: 1.0 / denom,
    })
}

/// Strong-source limit: `rho_jk = F_j conj(F_k) M_j conj(M_k) /
/// sum_l |F_l M_l|^2`, with exactly unit trace.
pub fn strong_source_density(raw: &RawAmplitudes, f: &[Complex64]) -> Result<DensityMatrix> {
    check_lengths(raw, f)?;
    let n = raw.len();
    let weighted: Vec<Complex64> = raw
        .elements()
        .iter()
        .zip(f)
        .map(|(&m, &fv)| fv * m)
        .collect();
    let norm: f64 = weighted.iter().map(|v| v.norm_sqr()).sum();
    if norm <= 0.0 {
        return Err(Error::DegenerateAmplitudes);
    }
    let mut data = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            data.push(weighted[j] * weighted[k].conj() / norm);
        }
    }
    DensityMatrix::new(n, data)
}

/// Max-norm distance between the trace-normalized finite-source state and
/// its strong-source limit. The source strength cancels algebraically after
/// normalization, so the distance is pure rounding, far below the `1/s`
/// bound of the neglected term.
pub fn source_limit_error(raw: &RawAmplitudes, params: &SourceSinkParams) -> Result<f64> {
    let finite = density_with_sources(raw, params)?;
    if finite.trace() <= 0.0 {
        return Err(Error::InvalidParameter(
            "source limit needs s > 0".into(),
        ));
    }
    let limit = strong_source_density(raw, params.sinks())?;
    Ok(finite.renormalized()?.max_norm_distance(&limit))
}
