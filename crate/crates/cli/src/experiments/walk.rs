//! `walk`: batches of single-measurement walks with outcome statistics,
//! optional trajectory recording, and optional noise audit export.

use std::io::Write;

use anyhow::Result;
use collapse_core::apparatus::sample_noise;
use collapse_core::walk::run_walks;

use crate::export::format_float;
use crate::registry::{Experiment, RunContext};

pub struct WalkExperiment;

impl Experiment for WalkExperiment {
    fn name(&self) -> &'static str {
        "walk"
    }

    fn run(&self, ctx: &mut RunContext) -> Result<serde_json::Value> {
        let psi = ctx.config.amplitude_vector()?;
        let params = ctx.config.apparatus()?;
        let runs = ctx.config.runs;
        let record = ctx.config.walk.record_trajectories;
        let n = psi.n();

        let results = run_walks(&psi, &params, runs, record)?;

        let mut table = ctx.csv("results.csv", "walk_id,outcome,final_max_p,steps")?;
        let mut counts = vec![0u64; n];
        let mut collapsed = 0u64;
        for (id, r) in results.iter().enumerate() {
            counts[r.outcome] += 1;
            if r.collapsed {
                collapsed += 1;
            }
            table.write_row(&[
                id.to_string(),
                (r.outcome + 1).to_string(),
                format_float(r.final_p[r.outcome]),
                r.steps.to_string(),
            ])?;
        }
        table.finish()?;

        let mut freq = ctx.csv("frequencies.csv", "channel,count,frequency")?;
        let frequencies: Vec<f64> = counts
            .iter()
            .map(|&c| c as f64 / runs as f64)
            .collect();
        for (j, (&count, &frequency)) in counts.iter().zip(&frequencies).enumerate() {
            freq.write_row(&[
                (j + 1).to_string(),
                count.to_string(),
                format_float(frequency),
            ])?;
        }
        freq.finish()?;

        if record {
            let p_cols: Vec<String> = (1..=n).map(|j| format!("p_{j}")).collect();
            let header = format!("walk_id,x,{},entropy", p_cols.join(","));
            let mut traj = ctx.csv("trajectories.csv", &header)?;
            for (id, r) in results.iter().enumerate() {
                for point in r.trajectory.as_deref().unwrap_or(&[]) {
                    let mut row = vec![id.to_string(), point.x.to_string()];
                    row.extend(point.p.iter().map(|&v| format_float(v)));
                    row.push(format_float(point.entropy));
                    traj.write_row(&row)?;
                }
            }
            traj.finish()?;
        }

        if ctx.config.walk.export_noise > 0 {
            export_noise_files(ctx, &params, ctx.config.walk.export_noise)?;
        }

        for (j, &frequency) in frequencies.iter().enumerate() {
            println!(
                "channel {}: frequency {:.4} (weight {:.4})",
                j + 1,
                frequency,
                ctx.config.psi_squared[j]
            );
        }

        Ok(serde_json::json!({
            "runs": runs,
            "outcome_counts": counts,
            "outcome_frequencies": frequencies,
            "collapsed_fraction": collapsed as f64 / runs as f64,
            "born_weights": ctx.config.psi_squared,
        }))
    }
}

/// Audit export of uniform-measure noise realizations.
///
/// CSV: one row per (realization, channel) holding the ±1 signs for
/// x = 1..2X. Binary: `SGNS` magic, u16 version, u32 n, u32 two_x,
/// u64 count, then per realization ceil(n*2X/8) bytes; bit index
/// (x-1)*n + j, LSB first, set bit = +1.
fn export_noise_files(
    ctx: &mut RunContext,
    params: &collapse_core::apparatus::ApparatusParams,
    count: u64,
) -> Result<()> {
    let n = params.n();
    let two_x = params.two_x();

    let x_cols: Vec<String> = (1..=two_x).map(|x| format!("x_{x}")).collect();
    let header = format!("realization,channel,{}", x_cols.join(","));
    let mut csv = ctx.csv("noise.csv", &header)?;

    let bin_path = ctx.out_dir.join("noise.bin");
    let mut bin = std::io::BufWriter::new(std::fs::File::create(&bin_path)?);
    ctx.record_file("noise.bin");
    bin.write_all(b"SGNS")?;
    bin.write_all(&1u16.to_le_bytes())?;
    bin.write_all(&(n as u32).to_le_bytes())?;
    bin.write_all(&(two_x as u32).to_le_bytes())?;
    bin.write_all(&count.to_le_bytes())?;

    for (index, noise) in sample_noise(params, count).enumerate() {
        for j in 0..n {
            let mut row = vec![index.to_string(), (j + 1).to_string()];
            row.extend((1..=two_x).map(|x| noise.sign(j, x).to_string()));
            csv.write_row(&row)?;
        }
        let mut packed = vec![0u8; (n * two_x).div_ceil(8)];
        for x in 1..=two_x {
            for j in 0..n {
                if noise.sign(j, x) == 1 {
                    let bit = (x - 1) * n + j;
                    packed[bit / 8] |= 1 << (bit % 8);
                }
            }
        }
        bin.write_all(&packed)?;
    }
    bin.flush()?;
    csv.finish()?;
    Ok(())
}
