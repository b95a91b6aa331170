//! A controllable one-step measurement analogue.
//!
//! A spin-1 wave packet is split into its three components; a magnetic
//! field of sign `epsilon` shifts their energies, and the photon phase
//! space available for deexcitation enhances the raised component and
//! suppresses the lowered one. One pass through the device applies exactly
//! one biased reweighting step to the detection probabilities, with the
//! bias sign under the experimenter's control — unlike the hidden
//! apparatus noise it mimics. Because the deexcitation rate itself carries
//! the same denominator, averaging over an unbiased `epsilon` restores the
//! field-free probabilities identically.

use crate::{Complex64, Error, Result};

/// Spin-1 amplitudes, the field-strength knob `alpha |B| < 1`, and the
/// field sign.
#[derive(Debug, Clone, PartialEq)]
pub struct GedankenSetup {
    psi: [Complex64; 3],
    alpha_b: f64,
    epsilon: i8,
}

impl GedankenSetup {
    /// Amplitudes ordered `(psi_minus, psi_zero, psi_plus)`; must be unit
    /// norm within 1e-12. `alpha_b` is the dimensionless product
    /// `alpha |B|` in `[0, 1)`, `epsilon` is ±1.
    pub fn new(
        psi_minus: Complex64,
        psi_zero: Complex64,
        psi_plus: Complex64,
        alpha_b: f64,
        epsilon: i8,
    ) -> Result<Self> {
        let norm_sq = psi_minus.norm_sqr() + psi_zero.norm_sqr() + psi_plus.norm_sqr();
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized((norm_sq - 1.0).abs()));
        }
        if !(0.0..1.0).contains(&alpha_b) {
            return Err(Error::InvalidParameter(format!(
                "alpha|B| = {alpha_b} must lie in [0, 1)"
            )));
        }
        if epsilon != 1 && epsilon != -1 {
            return Err(Error::InvalidParameter("epsilon must be ±1".into()));
        }
        Ok(Self {
            psi: [psi_minus, psi_zero, psi_plus],
            alpha_b,
            epsilon,
        })
    }

    /// Real nonnegative amplitudes from a probability triple.
    pub fn from_probabilities(p: [f64; 3], alpha_b: f64, epsilon: i8) -> Result<Self> {
        if p.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "probabilities must be nonnegative".into(),
            ));
        }
        Self::new(
            Complex64::new(p[0].sqrt(), 0.0),
            Complex64::new(p[1].sqrt(), 0.0),
            Complex64::new(p[2].sqrt(), 0.0),
            alpha_b,
            epsilon,
        )
    }

    /// `(|psi_-|^2, |psi_0|^2, |psi_+|^2)`.
    pub fn probabilities(&self) -> [f64; 3] {
        [
            self.psi[0].norm_sqr(),
            self.psi[1].norm_sqr(),
            self.psi[2].norm_sqr(),
        ]
    }

    pub fn alpha_b(&self) -> f64 {
        self.alpha_b
    }

    pub fn epsilon(&self) -> i8 {
        self.epsilon
    }

    /// Signed field strength `epsilon * alpha |B|`.
    fn bias(&self) -> f64 {
        self.epsilon as f64 * self.alpha_b
    }
}

/// Deexcitation rate factor `D = 1 + eps alpha|B| (|psi_+|^2 - |psi_-|^2)`,
/// strictly positive for `alpha|B| < 1`.
pub fn deexcitation_rate(setup: &GedankenSetup) -> f64 {
    let [p_minus, _, p_plus] = setup.probabilities();
    let rate = 1.0 + setup.bias() * (p_plus - p_minus);
    assert!(rate > 0.0, "rate must stay positive under alpha|B| < 1");
    rate
}

/// Detection probabilities with the field on:
/// `(|psi_-|^2 (1 - eps alpha|B|), |psi_0|^2, |psi_+|^2 (1 + eps alpha|B|)) / D`.
pub fn detection_probabilities(setup: &GedankenSetup) -> [f64; 3] {
    let [p_minus, p_zero, p_plus] = setup.probabilities();
    let bias = setup.bias();
    let rate = deexcitation_rate(setup);
    [
        p_minus * (1.0 - bias) / rate,
        p_zero / rate,
        p_plus * (1.0 + bias) / rate,
    ]
}

/// Rate-weighted average of the detection probabilities over an unbiased
/// field sign. The rate factors cancel the denominators identically, so
/// the result is exactly the field-free triple.
pub fn unbiased_average(setup: &GedankenSetup) -> [f64; 3] {
    let plus = GedankenSetup {
        epsilon: 1,
        ..setup.clone()
    };
    let minus = GedankenSetup {
        epsilon: -1,
        ..setup.clone()
    };
    let rate_plus = deexcitation_rate(&plus);
    let rate_minus = deexcitation_rate(&minus);
    let detect_plus = detection_probabilities(&plus);
    let detect_minus = detection_probabilities(&minus);
    let total = rate_plus + rate_minus;
    let mut avg = [0.0; 3];
    for i in 0..3 {
        avg[i] = (rate_plus * detect_plus[i] + rate_minus * detect_minus[i]) / total;
    }
    avg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, StreamDomain};
    use crate::stats::sample_simplex;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn no_field_is_identity() {
        let setup = GedankenSetup::from_probabilities([0.5, 0.2, 0.3], 0.0, 1).unwrap();
        assert_eq!(detection_probabilities(&setup), setup.probabilities());
        assert_eq!(deexcitation_rate(&setup), 1.0);
    }

    #[test]
    fn uniform_triple_with_bias() {
        let third = 1.0 / 3.0;
        let setup = GedankenSetup::from_probabilities([third; 3], 0.3, 1).unwrap();
        let probs = detection_probabilities(&setup);
        // D = 1, components (0.7, 1.0, 1.3) / 3.
        assert_relative_eq!(probs[0], 0.7 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(probs[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(probs[2], 1.3 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn corner_is_fixed_for_either_sign() {
        for eps in [-1i8, 1] {
            let setup = GedankenSetup::from_probabilities([0.0, 0.0, 1.0], 0.4, eps).unwrap();
            let probs = detection_probabilities(&setup);
            assert_eq!(probs, [0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn rate_examples() {
        let symmetric = GedankenSetup::from_probabilities([0.3, 0.4, 0.3], 0.25, 1).unwrap();
        assert_eq!(deexcitation_rate(&symmetric), 1.0);

        let setup = GedankenSetup::from_probabilities([0.5, 0.2, 0.3], 0.2, 1).unwrap();
        assert_relative_eq!(deexcitation_rate(&setup), 0.96, epsilon = 1e-15);

        let flipped = GedankenSetup::from_probabilities([0.5, 0.2, 0.3], 0.2, -1).unwrap();
        assert_relative_eq!(
            deexcitation_rate(&flipped) - 1.0,
            -(deexcitation_rate(&setup) - 1.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn probabilities_form_a_simplex_point() {
        let mut rng = stream_rng(8, StreamDomain::Noise, 1);
        for _ in 0..200 {
            let p = sample_simplex(&mut rng, 3, 0.0);
            let alpha_b = 0.99 * rng.random::<f64>();
            let eps = if rng.random::<bool>() { 1 } else { -1 };
            let setup =
                GedankenSetup::from_probabilities([p[0], p[1], p[2]], alpha_b, eps).unwrap();
            let probs = detection_probabilities(&setup);
            assert!(probs.iter().all(|&v| v >= 0.0));
            assert_relative_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn unbiased_average_restores_input() {
        let p = [0.5, 0.2, 0.3];
        let setup = GedankenSetup::from_probabilities(p, 0.3, 1).unwrap();
        let avg = unbiased_average(&setup);
        for i in 0..3 {
            assert!((avg[i] - p[i]).abs() < 1e-14);
        }

        let corner = GedankenSetup::from_probabilities([0.0, 1.0, 0.0], 0.7, -1).unwrap();
        assert_eq!(unbiased_average(&corner), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn plus_probability_grows_with_signed_field() {
        let p = [0.4, 0.25, 0.35];
        let mut previous = 0.0;
        for step in 0..20 {
            let bias = -0.9 + step as f64 * 0.09;
            let (alpha_b, eps) = if bias >= 0.0 {
                (bias, 1i8)
            } else {
                (-bias, -1i8)
            };
            let setup = GedankenSetup::from_probabilities(p, alpha_b, eps).unwrap();
            let plus = detection_probabilities(&setup)[2];
            if step > 0 {
                assert!(plus > previous, "not monotone at bias {bias}");
            }
            previous = plus;
        }
    }

    #[test]
    fn matches_shared_sign_walk_step_average() {
        // The device is one walk step driven by a single shared sign with
        // channel couplings (-1, 0, +1): detection weights
        // p_j (1 + g_j eps alpha|B|) / D with D the rate. The rate-weighted
        // mean over eps = ±1 must equal p, the same martingale property the
        // simplex walk has under its weighted column measure.
        let p = [0.45, 0.1, 0.45];
        let couplings = [-1.0, 0.0, 1.0];
        let strength = 0.35;
        let mut mean = [0.0; 3];
        let mut total_weight = 0.0;
        for eps in [-1.0, 1.0] {
            let rate: f64 = 1.0
                + eps * strength * couplings.iter().zip(&p).map(|(g, w)| g * w).sum::<f64>();
            let weight = 0.5 * rate;
            total_weight += weight;
            for j in 0..3 {
                mean[j] += weight * p[j] * (1.0 + couplings[j] * eps * strength) / rate;
            }
        }
        let setup = GedankenSetup::from_probabilities(p, strength, 1).unwrap();
        let avg = unbiased_average(&setup);
        for j in 0..3 {
            assert_relative_eq!(mean[j] / total_weight, p[j], epsilon = 1e-15);
            assert_relative_eq!(avg[j], p[j], epsilon = 1e-14);
        }
    }
}
