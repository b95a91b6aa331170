//! `ensemble`: draws pointer records directly from the closed-form mixture
//! and exports the same histogram/overlay table as the walk-based pointer
//! experiment.

use anyhow::Result;
use collapse_core::ensemble::ensemble_sampler;

use crate::export::format_float;
use crate::histogram::{mode_summary, z_histogram};
use crate::registry::{Experiment, RunContext};

pub struct EnsembleExperiment;

impl Experiment for EnsembleExperiment {
    fn name(&self) -> &'static str {
        "ensemble"
    }

    fn run(&self, ctx: &mut RunContext) -> Result<serde_json::Value> {
        let params = ctx.config.apparatus()?;
        let eta = ctx.config.eta.expect("validated");
        let weights = ctx.config.psi_squared.clone();
        let n = weights.len();

        let x_cols: Vec<String> = (1..=n).map(|k| format!("x_{k}")).collect();
        let header = format!("sample_id,channel,{}", x_cols.join(","));
        let mut samples_csv = ctx.csv("samples.csv", &header)?;

        let mut channel_counts = vec![0u64; n];
        let mut pointers = Vec::with_capacity(ctx.config.runs as usize);
        for (id, sample) in ensemble_sampler(&weights, &params, ctx.config.runs).enumerate() {
            let (channel, pointer) = sample?;
            channel_counts[channel] += 1;
            let mut row = vec![id.to_string(), (channel + 1).to_string()];
            row.extend(pointer.counts().iter().map(|c| c.to_string()));
            samples_csv.write_row(&row)?;
            pointers.push(pointer.counts().to_vec());
        }
        samples_csv.finish()?;

        let hist = z_histogram(&pointers, params.x_half() as u64, eta, &weights, ctx.config.pointer.bins)?;
        let z_cols: Vec<String> = (1..=n).map(|k| format!("z_{k}")).collect();
        let header = format!("{},count,q_exact,q_gaussian", z_cols.join(","));
        let mut csv = ctx.csv("histogram.csv", &header)?;
        for row in &hist.rows {
            let mut fields: Vec<String> = row.center.iter().map(|&v| format_float(v)).collect();
            fields.push(row.count.to_string());
            fields.push(format_float(row.q_exact));
            fields.push(format_float(row.q_gaussian));
            csv.write_row(&fields)?;
        }
        csv.finish()?;

        let modes = mode_summary(&weights, hist.big_z)?;
        let frequencies: Vec<f64> = channel_counts
            .iter()
            .map(|&c| c as f64 / ctx.config.runs as f64)
            .collect();
        for (j, &f) in frequencies.iter().enumerate() {
            println!(
                "channel {}: frequency {:.4} (weight {:.4})",
                j + 1,
                f,
                weights[j]
            );
        }

        Ok(serde_json::json!({
            "runs": ctx.config.runs,
            "channel_counts": channel_counts,
            "channel_frequencies": frequencies,
            "separation_parameter": hist.big_z,
            "modes": modes,
        }))
    }
}
