//! Property-based invariants of the simulation primitives.

use collapse_core::ensemble::{
    binomial_pointer_moments, conditional_channel_probability, Detectors, PointerVector,
};
use collapse_core::gedanken::{unbiased_average, GedankenSetup};
use collapse_core::state::{
    cm_momentum, diagonal_part, normalize, pure_state, AmplitudeVector, RawAmplitudes,
    TwoBodyMasses,
};
use collapse_core::walk::{apply_step, WalkState};
use collapse_core::{eikonal, Complex64};
use proptest::prelude::*;

fn complex_vec(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
        .prop_filter("need nonzero total weight", |v: &Vec<Complex64>| {
            v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-2
        })
}

fn simplex(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, len).prop_map(|v| {
        let total: f64 = v.iter().sum();
        v.into_iter().map(|x| x / total).collect()
    })
}

proptest! {
    /// Rescaling every raw amplitude by the same complex factor leaves the
    /// normalized probability vector unchanged.
    #[test]
    fn normalize_is_scale_invariant(
        m in complex_vec(2..=5),
        scale_re in -4.0f64..4.0,
        scale_im in -4.0f64..4.0,
    ) {
        let scale = Complex64::new(scale_re, scale_im);
        prop_assume!(scale.norm() > 0.05);
        let raw = RawAmplitudes::new(m.clone()).unwrap();
        let scaled = RawAmplitudes::new(m.iter().map(|&z| z * scale).collect()).unwrap();
        let p = normalize(&raw).unwrap().probabilities();
        let q = normalize(&scaled).unwrap().probabilities();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    /// Projectors of unit vectors have unit trace, are hermitian by
    /// construction, and are idempotent.
    #[test]
    fn pure_state_is_a_projector(m in complex_vec(2..=4)) {
        let psi = normalize(&RawAmplitudes::new(m).unwrap()).unwrap();
        let rho = pure_state(&psi);
        let n = rho.n();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        for j in 0..n {
            for k in 0..n {
                let sq: Complex64 = (0..n).map(|l| rho.entry(j, l) * rho.entry(l, k)).sum();
                prop_assert!((sq - rho.entry(j, k)).norm() < 1e-10);
            }
        }
    }

    /// Dephasing preserves the trace exactly and is idempotent.
    #[test]
    fn diagonal_part_is_idempotent_and_trace_preserving(m in complex_vec(2..=4)) {
        let rho = pure_state(&normalize(&RawAmplitudes::new(m).unwrap()).unwrap());
        let once = diagonal_part(&rho);
        let twice = diagonal_part(&once);
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.trace(), rho.trace());
    }

    /// One walk step keeps the state on the simplex: components in [0, 1]
    /// (never negative under eta < 1/2) and unit sum within 1e-12.
    #[test]
    fn walk_step_preserves_the_simplex(
        p in simplex(2..=6),
        eta in 0.001f64..0.499,
        bits in any::<u8>(),
    ) {
        let n = p.len();
        let column: Vec<i8> = (0..n)
            .map(|j| if bits >> j & 1 == 1 { 1 } else { -1 })
            .collect();
        let state = WalkState::new(p).unwrap();
        let next = apply_step(&state, &column, eta);
        let total: f64 = next.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for &v in next.probabilities() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    /// The emission factor is homogeneous of degree -1 in the photon
    /// momentum.
    #[test]
    fn eikonal_factor_scales_inversely(
        pz in -3.0f64..3.0,
        lambda in 0.1f64..50.0,
        omega in 0.01f64..2.0,
    ) {
        let energy = (9.0 + pz * pz).sqrt(); // massive emitter, m = 3
        let p = eikonal::FourVector::new(energy, 0.0, 0.0, pz);
        let k = eikonal::FourVector::new(omega, 0.0, 0.0, omega);
        let tau = eikonal::FourVector::new(0.0, 0.0, 0.0, 1.0);
        let base = eikonal::eikonal_factor(&p, &k, &tau, 0.3).unwrap();
        let scaled = eikonal::eikonal_factor(&p, &k.scaled(lambda), &tau, 0.3).unwrap();
        prop_assert!((scaled * lambda - base).norm() <= 1e-12 * base.norm());
    }

    /// Binomial pointer lattice: normalized within 1e-10, mean X eta.
    #[test]
    fn binomial_lattice_moments(x_half in 1u64..=40, eta in 0.01f64..0.9) {
        let m = binomial_pointer_moments(x_half, eta);
        prop_assert!((m.total - 1.0).abs() < 1e-10);
        let expected = x_half as f64 * eta;
        prop_assert!((m.mean - expected).abs() <= 1e-8 * expected.max(1e-3));
    }

    /// Conditioned on any reachable pointer, the channel probabilities are
    /// a partition of unity.
    #[test]
    fn conditional_channel_probabilities_partition_unity(
        w in simplex(2..=4),
        x_half in 2u64..=12,
        seed in any::<u64>(),
    ) {
        let n = w.len();
        let x = x_half as i64;
        // Derive counts deterministically from the seed.
        let counts: Vec<i64> = (0..n)
            .map(|j| {
                let h = seed.wrapping_mul(0x9e3779b97f4a7c15).rotate_left(j as u32 * 13);
                (h % (2 * x_half + 1)) as i64 - x
            })
            .collect();
        let pointer = PointerVector::new(counts, x_half).unwrap();
        let total: f64 = (0..n)
            .map(|j| {
                conditional_channel_probability(&pointer, &w, 0.2, Detectors::Full, j).unwrap()
            })
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    /// The rate-weighted average over the field sign restores the
    /// field-free probabilities at machine precision.
    #[test]
    fn gedanken_average_is_exact(
        w in simplex(3..=3),
        alpha_b in 0.0f64..0.95,
    ) {
        let setup =
            GedankenSetup::from_probabilities([w[0], w[1], w[2]], alpha_b, 1).unwrap();
        let avg = unbiased_average(&setup);
        for (a, b) in avg.iter().zip(&w) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Energy closure of the two-body kinematics: eps1 + eps2 = m0 within
    /// 1e-10 relative, for random mass triples above threshold.
    #[test]
    fn cm_momentum_energy_closure(
        m1 in 0.0f64..5.0,
        m2 in 0.0f64..5.0,
        gap in 1e-6f64..10.0,
    ) {
        let m0 = m1 + m2 + gap;
        let k = cm_momentum(&TwoBodyMasses::new(m0, m1, m2).unwrap());
        prop_assert!(((k.eps1 + k.eps2) - m0).abs() <= 1e-10 * m0);
    }
}

#[test]
fn amplitude_vector_rejects_single_channel() {
    assert!(AmplitudeVector::new(vec![Complex64::new(1.0, 0.0)]).is_err());
}
