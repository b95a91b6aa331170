//! Microsystem state: raw scattering amplitudes, the normalized final-state
//! amplitude vector, density matrices over the measured-observable
//! eigenbasis, and center-of-mass kinematics for two-body processes.

use nalgebra::DMatrix;

use crate::{Complex64, Error, Result};

/// Tolerance for unit-norm and trace-one checks.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance for hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Eigenvalues above this (slightly negative) bound count as nonnegative.
pub const PSD_MIN_EIGENVALUE: f64 = -1e-10;

/// Unnormalized channel matrix elements of the scattering operator.
///
/// These carry arbitrary scale; only ratios survive normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAmplitudes {
    m: Vec<Complex64>,
}

impl RawAmplitudes {
    /// At least one element must be nonzero.
    pub fn new(m: Vec<Complex64>) -> Result<Self> {
        if m.is_empty() || m.iter().all(|v| v.norm_sqr() == 0.0) {
            return Err(Error::DegenerateAmplitudes);
        }
        Ok(Self { m })
    }

    pub fn from_reals(m: &[f64]) -> Result<Self> {
        Self::new(m.iter().map(|&re| Complex64::new(re, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn elements(&self) -> &[Complex64] {
        &self.m
    }
}

/// Unit-norm channel amplitudes of the outgoing microsystem state.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    psi: Vec<Complex64>,
}

impl AmplitudeVector {
    /// Requires at least two channels and unit norm within [`NORM_TOL`].
    pub fn new(psi: Vec<Complex64>) -> Result<Self> {
        if psi.len() < 2 {
            return Err(Error::TooFewChannels(psi.len()));
        }
        let norm_sq: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized((norm_sq - 1.0).abs()));
        }
        Ok(Self { psi })
    }

    /// Builds the state with real nonnegative amplitudes `sqrt(p_j)`.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        Self::from_probabilities_with_phases(p, &vec![0.0; p.len()])
    }

    /// Builds `sqrt(p_j) e^{i phase_j}`, renormalizing away rounding in `p`.
    pub fn from_probabilities_with_phases(p: &[f64], phases: &[f64]) -> Result<Self> {
        if p.len() != phases.len() {
            return Err(Error::InvalidParameter(format!(
                "{} probabilities but {} phases",
                p.len(),
                phases.len()
            )));
        }
        if p.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "probabilities must be nonnegative".into(),
            ));
        }
        let total: f64 = p.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateAmplitudes);
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized((total - 1.0).abs()));
        }
        let psi = p
            .iter()
            .zip(phases)
            .map(|(&v, &phi)| Complex64::from_polar((v / total).sqrt(), phi))
            .collect();
        Self::new(psi)
    }

    pub fn n(&self) -> usize {
        self.psi.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.psi
    }

    /// Squared moduli `|psi_j|^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.psi.iter().map(|v| v.norm_sqr()).collect()
    }
}

/// Normalizes raw matrix elements to a unit amplitude vector,
/// `psi_j = M_j / sqrt(sum_l |M_l|^2)`.
pub fn normalize(raw: &RawAmplitudes) -> Result<AmplitudeVector> {
    let w = weight(raw);
    if w <= 0.0 {
        return Err(Error::DegenerateAmplitudes);
    }
    let scale = w.sqrt();
    let psi: Vec<Complex64> = raw.elements().iter().map(|&m| m / scale).collect();
    // Rounding in the division can leave the norm a few ulps off; the
    // constructor tolerance absorbs that.
    AmplitudeVector::new(psi)
}

/// Total process weight `w0 = sum_l |M_l|^2`.
pub fn weight(raw: &RawAmplitudes) -> f64 {
    raw.elements().iter().map(|m| m.norm_sqr()).sum()
}

/// Hermitian, trace-one, positive-semidefinite matrix over the channel basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    /// Row-major entries.
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace, and positive semidefiniteness.
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::InvalidDensityMatrix(format!(
                "expected {n}x{n} entries, got {}",
                data.len()
            )));
        }
        let rho = Self { n, data };
        for j in 0..n {
            for k in j..n {
                let d = rho.entry(j, k) - rho.entry(k, j).conj();
                if d.norm() > HERMITICITY_TOL {
                    return Err(Error::InvalidDensityMatrix(format!(
                        "not hermitian at ({j},{k}): asymmetry {:.3e}",
                        d.norm()
                    )));
                }
            }
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {trace} is not 1"
            )));
        }
        let min = rho.min_eigenvalue();
        if min < PSD_MIN_EIGENVALUE {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(rho)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.data[j * self.n + k]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|j| self.entry(j, j)).sum()
    }

    /// Real diagonal, the channel probabilities.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.entry(j, j).re).collect()
    }

    /// Eigenvalues in ascending order (real, since the matrix is hermitian).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_fn(self.n, self.n, |r, c| self.entry(r, c));
        let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Largest entrywise absolute difference to `other`.
    pub fn max_norm_distance(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Rank-one projector `rho_jk = psi_j conj(psi_k)` of a pure state.
pub fn pure_state(psi: &AmplitudeVector) -> DensityMatrix {
    let n = psi.n();
    let a = psi.amplitudes();
    let mut data = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            data.push(a[j] * a[k].conj());
        }
    }
    DensityMatrix::new(n, data).expect("projector of a unit vector is a density matrix")
}

/// Drops all off-diagonal entries, the reduced state left after tracing out
/// an apparatus that is diagonal in its noise variables. Trace is preserved
/// exactly.
pub fn diagonal_part(rho: &DensityMatrix) -> DensityMatrix {
    let n = rho.n();
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        data[j * n + j] = Complex64::new(rho.entry(j, j).re, 0.0);
    }
    DensityMatrix::new(n, data).expect("diagonal restriction stays a density matrix")
}

/// Masses for a two-body decay or collision, `m0 -> m1 + m2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBodyMasses {
    m0: f64,
    m1: f64,
    m2: f64,
}

impl TwoBodyMasses {
    pub fn new(m0: f64, m1: f64, m2: f64) -> Result<Self> {
        if !(m1 >= 0.0 && m2 >= 0.0) {
            return Err(Error::InvalidParameter(
                "final-state masses must be nonnegative".into(),
            ));
        }
        if !(m0 > m1 + m2) {
            return Err(Error::BelowThreshold { m0, m_sum: m1 + m2 });
        }
        Ok(Self { m0, m1, m2 })
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }
    pub fn m1(&self) -> f64 {
        self.m1
    }
    pub fn m2(&self) -> f64 {
        self.m2
    }
}

/// Center-of-mass momentum and single-particle energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmKinematics {
    pub q: f64,
    pub eps1: f64,
    pub eps2: f64,
}

/// Two-body center-of-mass momentum,
/// `q = sqrt((m0^2 - (m1+m2)^2)(m0^2 - (m1-m2)^2)) / (2 m0)`,
/// with `eps_j = sqrt(m_j^2 + q^2)`. This is the unique positive `q` with
/// `eps1 + eps2 = m0`.
pub fn cm_momentum(masses: &TwoBodyMasses) -> CmKinematics {
    let (m0, m1, m2) = (masses.m0, masses.m1, masses.m2);
    let plus = m0 * m0 - (m1 + m2) * (m1 + m2);
    let minus = m0 * m0 - (m1 - m2) * (m1 - m2);
    let q = (plus * minus).sqrt() / (2.0 * m0);
    CmKinematics {
        q,
        eps1: (m1 * m1 + q * q).sqrt(),
        eps2: (m2 * m2 + q * q).sqrt(),
    }
}
