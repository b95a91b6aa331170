//! Soft-photon emission by a classical point charge.
//!
//! In the soft limit each emitted photon contributes one scalar factor
//! `s(k)·tau = -e i (p·tau) / (p·k)` to the amplitude, the Fourier
//! transform of the current of a point charge leaving the scattering
//! center with momentum `p`. The factorization of many emissions rests on
//! a permutation partial-fraction identity over the photon energies, which
//! is implemented here as an exact numeric check.

use itertools::Itertools;

use crate::{Complex64, Error, Result};

/// Minkowski four-vector with signature `(+, -, -, -)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourVector {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FourVector {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    /// Invariant product `a·b = a_t b_t - a_x b_x - a_y b_y - a_z b_z`.
    pub fn dot(&self, other: &FourVector) -> f64 {
        self.t * other.t - self.x * other.x - self.y * other.y - self.z * other.z
    }

    pub fn scaled(&self, factor: f64) -> FourVector {
        FourVector::new(
            factor * self.t,
            factor * self.x,
            factor * self.y,
            factor * self.z,
        )
    }

    pub fn plus(&self, other: &FourVector) -> FourVector {
        FourVector::new(
            self.t + other.t,
            self.x + other.x,
            self.y + other.y,
            self.z + other.z,
        )
    }
}

/// Scalar emission factor `s(k)·tau = -charge * i (p·tau) / (p·k)` for a
/// charge with momentum `p`, photon momentum `k`, and polarization `tau`.
pub fn eikonal_factor(
    p: &FourVector,
    k: &FourVector,
    tau: &FourVector,
    charge: f64,
) -> Result<Complex64> {
    let pk = p.dot(k);
    if pk == 0.0 {
        return Err(Error::CollinearSingularity);
    }
    Ok(Complex64::new(0.0, -charge * p.dot(tau) / pk))
}

/// Permutation limit for the identity check (`m!` terms).
pub const PARTIAL_FRACTION_MAX_TERMS: usize = 8;

/// Evaluates both sides of the partial-fraction identity
/// `sum over permutations 1 / (a_i1 (a_i1 + a_i2) ... (a_i1 + ... + a_im))
///  = 1 / (a_1 a_2 ... a_m)`.
pub fn partial_fraction_identity_check(a: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || a.len() > PARTIAL_FRACTION_MAX_TERMS {
        return Err(Error::InvalidParameter(format!(
            "need between 1 and {PARTIAL_FRACTION_MAX_TERMS} terms, got {}",
            a.len()
        )));
    }
    if a.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter(
            "all terms must be positive".into(),
        ));
    }
    let lhs: f64 = (0..a.len())
        .permutations(a.len())
        .map(|perm| {
            let mut partial = 0.0;
            let mut product = 1.0;
            for idx in perm {
                partial += a[idx];
                product *= partial;
            }
            1.0 / product
        })
        .sum();
    let rhs = 1.0 / a.iter().product::<f64>();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, StreamDomain};
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn transverse_polarization_in_rest_frame_vanishes() {
        let m = 2.0;
        let p = FourVector::new(m, 0.0, 0.0, 0.0);
        let k = FourVector::new(0.5, 0.0, 0.0, 0.5);
        let tau = FourVector::new(0.0, 1.0, 0.0, 0.0);
        let s = eikonal_factor(&p, &k, &tau, 0.3).unwrap();
        assert_eq!(s, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn boosted_emitter_magnitude() {
        let (energy, pz) = (5.0, 3.0);
        let omega = 0.01;
        let p = FourVector::new(energy, 0.0, 0.0, pz);
        let k = FourVector::new(omega, 0.0, 0.0, omega);
        let tau = FourVector::new(0.0, 0.0, 0.0, 1.0);
        let charge = 0.3;
        let s = eikonal_factor(&p, &k, &tau, charge).unwrap();
        // p.tau = -pz, p.k = omega (E - pz)
        assert_relative_eq!(
            s.norm(),
            charge * pz / ((energy - pz) * omega),
            max_relative = 1e-12
        );
    }

    #[test]
    fn collinear_photon_is_rejected() {
        let p = FourVector::new(1.0, 0.0, 0.0, 1.0); // lightlike emitter
        let k = FourVector::new(0.5, 0.0, 0.0, 0.5);
        let tau = FourVector::new(0.0, 1.0, 0.0, 0.0);
        assert!(matches!(
            eikonal_factor(&p, &k, &tau, 1.0),
            Err(Error::CollinearSingularity)
        ));
    }

    #[test]
    fn homogeneous_of_degree_minus_one_in_k() {
        let p = FourVector::new(5.0, 1.0, -2.0, 3.0);
        let k = FourVector::new(1.0, 0.6, 0.0, 0.8);
        let tau = FourVector::new(0.0, 0.8, 0.0, -0.6);
        let s = eikonal_factor(&p, &k, &tau, 0.5).unwrap();
        // Powers of two scale exactly in binary floating point.
        let s_scaled = eikonal_factor(&p, &k.scaled(4.0), &tau, 0.5).unwrap();
        assert_eq!(s_scaled, s / 4.0);
    }

    #[test]
    fn gauge_shift_changes_factor_by_constant() {
        // tau -> tau + c k shifts the factor by -charge * i * c, for any p.
        let charge = 0.7;
        let shift = 1.3;
        let k = FourVector::new(1.0, 0.0, 0.6, 0.8);
        let tau = FourVector::new(0.2, 0.5, -0.1, 0.4);
        for p in [
            FourVector::new(3.0, 0.1, 0.2, 0.3),
            FourVector::new(7.0, -2.0, 1.0, 4.0),
        ] {
            let base = eikonal_factor(&p, &k, &tau, charge).unwrap();
            let shifted =
                eikonal_factor(&p, &k, &tau.plus(&k.scaled(shift)), charge).unwrap();
            let diff = shifted - base;
            assert_relative_eq!(diff.im, -charge * shift, max_relative = 1e-12);
            assert_eq!(diff.re, 0.0);
        }
    }

    #[test]
    fn identity_single_term() {
        let (lhs, rhs) = partial_fraction_identity_check(&[2.5]).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn identity_two_terms_by_hand() {
        // 1/(1*3) + 1/(2*3) = 1/2 = 1/(1*2)
        let (lhs, rhs) = partial_fraction_identity_check(&[1.0, 2.0]).unwrap();
        assert_relative_eq!(lhs, 0.5, epsilon = 1e-15);
        assert_relative_eq!(rhs, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn identity_random_vectors() {
        let mut rng = stream_rng(5, StreamDomain::Noise, 42);
        for m in 1..=6 {
            for _ in 0..100 {
                let a: Vec<f64> = (0..m)
                    .map(|_| 0.1 + 9.9 * rng.random::<f64>())
                    .collect();
                let (lhs, rhs) = partial_fraction_identity_check(&a).unwrap();
                assert!(
                    ((lhs - rhs) / rhs).abs() <= 1e-12,
                    "m = {m}: lhs {lhs} vs rhs {rhs}"
                );
            }
        }
    }

    #[test]
    fn identity_rejects_bad_input() {
        assert!(partial_fraction_identity_check(&[]).is_err());
        assert!(partial_fraction_identity_check(&[1.0, -2.0]).is_err());
        assert!(partial_fraction_identity_check(&vec![1.0; 9]).is_err());
    }
}
