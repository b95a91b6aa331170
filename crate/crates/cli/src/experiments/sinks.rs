//! `sinks`: evaluates the source/sink density matrix for the configured
//! amplitudes, its strong-source limit, and the reduction checks.

use anyhow::Result;
use collapse_core::sinks::{density_with_sources, source_limit_error, strong_source_density, SourceSinkParams};
use collapse_core::state::{normalize, pure_state, DensityMatrix, RawAmplitudes};
use collapse_core::Complex64;

use crate::registry::{Experiment, RunContext};

pub struct SinksExperiment;

fn matrix_json(entry: impl Fn(usize, usize) -> Complex64, n: usize) -> serde_json::Value {
    let re: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|k| entry(j, k).re).collect())
        .collect();
    let im: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|k| entry(j, k).im).collect())
        .collect();
    serde_json::json!({"re": re, "im": im})
}

impl Experiment for SinksExperiment {
    fn name(&self) -> &'static str {
        "sinks"
    }

    fn run(&self, ctx: &mut RunContext) -> Result<serde_json::Value> {
        let psi = ctx.config.amplitude_vector()?;
        let n = psi.n();
        let raw = RawAmplitudes::new(psi.amplitudes().to_vec())
            .map_err(anyhow::Error::from)?;

        let f: Vec<Complex64> = match (&ctx.config.sinks.sinks_re, &ctx.config.sinks.sinks_im) {
            (None, None) => vec![Complex64::new(1.0, 0.0); n],
            (re, im) => {
                let re = re.clone().unwrap_or_else(|| vec![1.0; n]);
                let im = im.clone().unwrap_or_else(|| vec![0.0; n]);
                re.into_iter()
                    .zip(im)
                    .map(|(a, b)| Complex64::new(a, b))
                    .collect()
            }
        };
        let params = SourceSinkParams::new(
            Complex64::new(ctx.config.sinks.source, 0.0),
            f.clone(),
        )?;

        let finite = density_with_sources(&raw, &params)?;
        let strong = strong_source_density(&raw, &f)?;
        let limit_error = if finite.trace() > 0.0 {
            Some(source_limit_error(&raw, &params)?)
        } else {
            None
        };

        // Equal sinks collapse the state back to the plain projector.
        let equal = strong_source_density(&raw, &vec![Complex64::new(1.0, 0.0); n])?;
        let projector: DensityMatrix = pure_state(&normalize(&raw)?);
        let equal_sink_distance = equal.max_norm_distance(&projector);

        println!(
            "trace {:.6}, nothing happening {:.3e}, strong-source limit error {}",
            finite.trace(),
            finite.nothing_probability(),
            limit_error
                .map(|e| format!("{e:.3e}"))
                .unwrap_or_else(|| "n/a (no source)".into()),
        );

        let summary = serde_json::json!({
            "source_strength": ctx.config.sinks.source,
            "finite_source": {
                "matrix": matrix_json(|j, k| finite.entry(j, k), n),
                "trace": finite.trace(),
                "nothing_probability": finite.nothing_probability(),
            },
            "strong_source": {
                "matrix": matrix_json(|j, k| strong.entry(j, k), n),
                "diagonal": strong.diagonal(),
                "min_eigenvalue": strong.min_eigenvalue(),
            },
            "source_limit_error": limit_error,
            "equal_sink_distance_to_projector": equal_sink_distance,
        });
        ctx.json("sinks.json", &summary)?;
        Ok(summary)
    }
}
