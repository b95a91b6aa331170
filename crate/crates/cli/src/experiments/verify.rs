//! `verify`: a fast deterministic battery of the library's analytic
//! invariants. Prints one line per check; any failure flips the summary to
//! `passed: false`, which the CLI maps to exit code 1.

use anyhow::Result;
use collapse_core::apparatus::{
    propagation_factors, sample_noise, ApparatusParams, NoiseRealization,
};
use collapse_core::eikonal::{self, FourVector};
use collapse_core::ensemble::{
    binomial_pointer_moments, conditional_channel_probability, ensemble_entropy,
    outcome_distribution, pair_correlation, Detectors, PointerVector,
};
use collapse_core::gedanken::{unbiased_average, GedankenSetup};
use collapse_core::rng::{stream_rng, StreamDomain};
use collapse_core::sinks::{source_limit_error, strong_source_density, SourceSinkParams};
use collapse_core::state::{cm_momentum, normalize, pure_state, RawAmplitudes, TwoBodyMasses};
use collapse_core::stats::{mean_and_standard_error, sample_simplex};
use collapse_core::walk::{
    apply_step, entropy, entropy_drift_analytic, step_covariance_analytic,
    step_moments_enumerated, step_weight, WalkState,
};
use collapse_core::Complex64;
use rand::Rng;

use crate::registry::{Experiment, RunContext};

pub struct VerifyExperiment;

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn columns(n: usize) -> Vec<Vec<i8>> {
    (0..(1usize << n))
        .map(|cell| {
            (0..n)
                .map(|j| if cell >> j & 1 == 1 { 1i8 } else { -1 })
                .collect()
        })
        .collect()
}

fn martingale(seed: u64) -> Check {
    let mut rng = stream_rng(seed, StreamDomain::Walk, 1);
    let mut worst = 0.0f64;
    for &n in &[2usize, 3, 4] {
        for &eta in &[0.05, 0.2] {
            for _ in 0..50 {
                let p = sample_simplex(&mut rng, n, 0.001);
                let m = step_moments_enumerated(&p, eta).unwrap();
                for v in &m.mean {
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    check(
        "walk martingale",
        worst <= 1e-12,
        format!("worst |<dp>| = {worst:.2e} (limit 1e-12)"),
    )
}

fn step_weights_normalize(seed: u64) -> Check {
    let mut rng = stream_rng(seed, StreamDomain::Walk, 2);
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let p = sample_simplex(&mut rng, n, 0.0);
        let total: f64 = columns(n).iter().map(|c| step_weight(&p, c, 0.3)).sum();
        worst = worst.max((total - 1.0).abs());
    }
    check(
        "step weights normalize",
        worst <= 1e-13,
        format!("worst |sum q - 1| = {worst:.2e}"),
    )
}

fn covariance(seed: u64) -> Check {
    let eta = 0.05;
    let mut rng = stream_rng(seed, StreamDomain::Walk, 3);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = 2 + i % 3;
        let p = sample_simplex(&mut rng, n, 0.02);
        let enumerated = step_moments_enumerated(&p, eta).unwrap().covariance;
        let analytic = step_covariance_analytic(&p, eta);
        let scale = analytic
            .iter()
            .flatten()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        for j in 0..n {
            for k in 0..n {
                worst = worst.max((enumerated[j][k] - analytic[j][k]).abs() / scale);
            }
        }
    }
    check(
        "step covariance",
        worst <= 5.0 * eta,
        format!("worst relative gap {worst:.4} (limit {})", 5.0 * eta),
    )
}

fn drift(seed: u64) -> Check {
    let eta = 0.05;
    let mut rng = stream_rng(seed, StreamDomain::Walk, 4);
    let mut worst = 0.0f64;
    let mut all_negative = true;
    for i in 0..50 {
        let n = 2 + i % 3;
        let p = sample_simplex(&mut rng, n, 0.01);
        let state = WalkState::new(p.clone()).unwrap();
        let s0 = entropy(&p);
        let mut expected = 0.0;
        for col in columns(n) {
            let q = step_weight(&p, &col, eta);
            expected += q * (entropy(apply_step(&state, &col, eta).probabilities()) - s0);
        }
        all_negative &= expected < 0.0;
        let analytic = entropy_drift_analytic(&p, eta);
        worst = worst.max((expected - analytic).abs() / analytic.abs());
    }
    check(
        "entropy drift",
        all_negative && worst <= 10.0 * eta,
        format!("all negative: {all_negative}; worst relative gap {worst:.4}"),
    )
}

fn corners_absorbing() -> Check {
    let state = WalkState::new(vec![0.0, 1.0, 0.0]).unwrap();
    let fixed = columns(3)
        .iter()
        .all(|c| apply_step(&state, c, 0.3).probabilities() == state.probabilities());
    check("corners absorbing", fixed, "exact fixed points".into())
}

fn partial_fractions(seed: u64) -> Check {
    let mut rng = stream_rng(seed, StreamDomain::Noise, 5);
    let mut worst = 0.0f64;
    for m in 1..=6 {
        for _ in 0..20 {
            let a: Vec<f64> = (0..m).map(|_| 0.1 + 9.9 * rng.random::<f64>()).collect();
            let (lhs, rhs) = eikonal::partial_fraction_identity_check(&a).unwrap();
            worst = worst.max(((lhs - rhs) / rhs).abs());
        }
    }
    check(
        "permutation partial fractions",
        worst <= 1e-12,
        format!("worst relative error {worst:.2e}"),
    )
}

fn eikonal_gauge() -> Check {
    let charge = 0.5;
    let shift = 2.25;
    let p = FourVector::new(4.0, 1.0, 0.5, -2.0);
    let k = FourVector::new(1.0, 0.0, 0.6, 0.8);
    let tau = FourVector::new(0.1, 0.4, -0.2, 0.3);
    let base = eikonal::eikonal_factor(&p, &k, &tau, charge).unwrap();
    let shifted = eikonal::eikonal_factor(&p, &k, &tau.plus(&k.scaled(shift)), charge).unwrap();
    let gap = (shifted - base - Complex64::new(0.0, -charge * shift)).norm();
    check(
        "eikonal gauge shift",
        gap <= 1e-12,
        format!("|change - (-i e c)| = {gap:.2e}"),
    )
}

fn pair_correlations() -> Check {
    // pair_correlation cross-checks closed form vs enumeration internally.
    let mut worst = 0.0f64;
    for &p in &[0.0, 0.25, 0.5, 0.75, 1.0] {
        for &eta in &[0.1, 0.3] {
            let r = pair_correlation(p, eta).unwrap();
            worst = worst.max((r.mean_eps - (2.0 * p - 1.0) * eta).abs());
            worst = worst.max((r.covariance - 4.0 * p * (1.0 - p) * eta * eta).abs());
        }
    }
    check(
        "pair correlation",
        worst <= 1e-14,
        format!("worst deviation {worst:.2e}"),
    )
}

fn binomial_moments() -> Check {
    let eta = 0.1;
    let mut ok = true;
    let mut detail = String::new();
    for &x in &[10u64, 100] {
        let m = binomial_pointer_moments(x, eta);
        let mean_t = x as f64 * eta;
        let var_t = x as f64 * (1.0 - eta * eta) / 2.0;
        ok &= (m.total - 1.0).abs() <= 1e-10
            && ((m.mean - mean_t) / mean_t).abs() <= 1e-8
            && ((m.variance - var_t) / var_t).abs() <= 1e-8;
        detail.push_str(&format!("X={x} ok; "));
    }
    check("pointer lattice moments", ok, detail)
}

fn mixture_normalization() -> Check {
    let eta = 0.15;
    let x = 6i64;
    let w = [0.6, 0.4];
    let mut total = 0.0;
    for a in -x..=x {
        for b in -x..=x {
            let pointer = PointerVector::new(vec![a, b], x as u64).unwrap();
            total += outcome_distribution(&pointer, &w, eta, Detectors::Full).unwrap();
        }
    }
    check(
        "outcome distribution normalization",
        (total - 1.0).abs() <= 1e-10,
        format!("lattice sum {total:.12}"),
    )
}

fn conditional_partition(seed: u64) -> Check {
    let mut rng = stream_rng(seed, StreamDomain::Ensemble, 6);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = 2 + (rng.random::<u64>() % 3) as usize;
        let w = sample_simplex(&mut rng, n, 0.01);
        let x = 10u64;
        let counts: Vec<i64> = (0..n)
            .map(|_| (rng.random::<u64>() % 21) as i64 - 10)
            .collect();
        let pointer = PointerVector::new(counts, x).unwrap();
        let total: f64 = (0..n)
            .map(|j| {
                conditional_channel_probability(&pointer, &w, 0.2, Detectors::Full, j).unwrap()
            })
            .sum();
        worst = worst.max((total - 1.0).abs());
    }
    check(
        "conditional probabilities partition unity",
        worst <= 1e-12,
        format!("worst |sum - 1| = {worst:.2e}"),
    )
}

fn entropy_pair() -> Check {
    let x = 20u64;
    let eta = 0.05;
    let e = ensemble_entropy(&[1.0], x, eta).unwrap();
    let gap = (e.enumerated - e.closed_form).abs();
    let budget = 10.0 * x as f64 * eta.powi(4);
    check(
        "ensemble entropy pair",
        gap <= budget,
        format!("gap {gap:.2e} (budget {budget:.2e})"),
    )
}

fn gedanken_identity(seed: u64) -> Check {
    let mut rng = stream_rng(seed, StreamDomain::Noise, 7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let w = sample_simplex(&mut rng, 3, 0.0);
        let alpha_b = 0.99 * rng.random::<f64>();
        let setup = GedankenSetup::from_probabilities([w[0], w[1], w[2]], alpha_b, 1).unwrap();
        for (a, b) in unbiased_average(&setup).iter().zip(&w) {
            worst = worst.max((a - b).abs());
        }
    }
    check(
        "field-sign average identity",
        worst <= 1e-14,
        format!("worst component gap {worst:.2e}"),
    )
}

fn sink_reductions(seed: u64) -> Check {
    let mut rng = stream_rng(seed, StreamDomain::Noise, 8);
    let rand_complex = |r: &mut rand_chacha::ChaCha8Rng| {
        Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)
    };
    let mut ok = true;
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = 2 + i % 3;
        let m: Vec<Complex64> = (0..n)
            .map(|_| rand_complex(&mut rng) + Complex64::new(0.8, 0.0))
            .collect();
        let f: Vec<Complex64> = (0..n)
            .map(|_| rand_complex(&mut rng) + Complex64::new(1.0, 0.0))
            .collect();
        let raw = RawAmplitudes::new(m).unwrap();
        let coupling: f64 = raw
            .elements()
            .iter()
            .zip(&f)
            .map(|(&mv, &fv)| (fv * mv).norm_sqr())
            .sum();
        let j0 = Complex64::new((2000.0 / coupling).sqrt(), 0.0);
        let params = SourceSinkParams::new(j0, f.clone()).unwrap();
        worst = worst.max(source_limit_error(&raw, &params).unwrap());

        let equal = vec![Complex64::new(0.7, 0.3); n];
        let reduced = strong_source_density(&raw, &equal).unwrap();
        worst = worst.max(reduced.max_norm_distance(&pure_state(&normalize(&raw).unwrap())));

        let mut doubled = raw.elements().to_vec();
        doubled[0] *= 2f64.sqrt();
        let doubled = RawAmplitudes::new(doubled).unwrap();
        let before = strong_source_density(&raw, &f).unwrap().entry(1, 1).re;
        let after = strong_source_density(&doubled, &f).unwrap().entry(1, 1).re;
        ok &= after < before;
    }
    check(
        "source/sink reductions",
        ok && worst <= 1e-12,
        format!("worst distance {worst:.2e}; nonlinearity strict: {ok}"),
    )
}

fn kinematics(seed: u64) -> Check {
    let mut rng = stream_rng(seed, StreamDomain::Noise, 9);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let m1 = 5.0 * rng.random::<f64>();
        let m2 = 5.0 * rng.random::<f64>();
        let m0 = m1 + m2 + 1e-6 + 10.0 * rng.random::<f64>();
        let k = cm_momentum(&TwoBodyMasses::new(m0, m1, m2).unwrap());
        worst = worst.max(((k.eps1 + k.eps2) - m0).abs() / m0);
    }
    check(
        "two-body energy closure",
        worst <= 1e-10,
        format!("worst relative defect {worst:.2e}"),
    )
}

fn noise_determinism(params: &ApparatusParams) -> Check {
    let a = NoiseRealization::sample(params, 3);
    let b = NoiseRealization::sample(params, 3);
    check(
        "noise determinism",
        a == b,
        "realizations depend only on (seed, index)".into(),
    )
}

fn general_model_normalization() -> Check {
    // Per-site couplings and gauge factors off unity: <b_jx^2> stays 1 up
    // to O(eta^4) per site, well inside Monte-Carlo error here.
    let n = 2;
    let two_x = 40;
    let eta: Vec<f64> = (0..n * two_x)
        .map(|i| 0.08 + 0.04 * ((i % 7) as f64 / 6.0))
        .collect();
    let c: Vec<f64> = (0..n * two_x)
        .map(|i| 0.97 + 0.06 * ((i % 5) as f64 / 4.0))
        .collect();
    let params = ApparatusParams::general(n, two_x, eta, c, 1234).unwrap();
    let mut values = Vec::new();
    for noise in sample_noise(&params, 4000) {
        let f = propagation_factors(&params, &noise, two_x).unwrap();
        values.push((2.0 * f.log_b()[0]).exp());
    }
    let (mean, se) = mean_and_standard_error(&values);
    check(
        "general-model factor normalization",
        (mean - 1.0).abs() <= 3.0 * se,
        format!("<b^2> = {mean:.4} ± {se:.4}"),
    )
}

impl Experiment for VerifyExperiment {
    fn name(&self) -> &'static str {
        "verify"
    }

    fn run(&self, ctx: &mut RunContext) -> Result<serde_json::Value> {
        let seed = ctx.config.seed;
        let noise_params = ApparatusParams::uniform(2, 8, 0.1, seed).unwrap();
        let checks = vec![
            martingale(seed),
            step_weights_normalize(seed),
            covariance(seed),
            drift(seed),
            corners_absorbing(),
            partial_fractions(seed),
            eikonal_gauge(),
            pair_correlations(),
            binomial_moments(),
            mixture_normalization(),
            conditional_partition(seed),
            entropy_pair(),
            gedanken_identity(seed),
            sink_reductions(seed),
            kinematics(seed),
            noise_determinism(&noise_params),
            general_model_normalization(),
        ];

        let mut all_passed = true;
        for c in &checks {
            all_passed &= c.passed;
            println!(
                "[{}] {}: {}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.detail
            );
        }

        let summary = serde_json::json!({
            "passed": all_passed,
            "checks": checks
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "name": c.name,
                        "passed": c.passed,
                        "detail": c.detail,
                    })
                })
                .collect::<Vec<_>>(),
        });
        ctx.json("verify.json", &summary)?;
        Ok(summary)
    }
}
