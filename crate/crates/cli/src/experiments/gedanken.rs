//! `gedanken`: one controllable reweighting step — detection probabilities
//! and deexcitation rate for a fixed field sign, or the rate-weighted
//! average over an unbiased sign.

use anyhow::Result;
use collapse_core::gedanken::{
    deexcitation_rate, detection_probabilities, unbiased_average, GedankenSetup,
};

use crate::registry::{Experiment, RunContext};

pub struct GedankenExperiment;

impl Experiment for GedankenExperiment {
    fn name(&self) -> &'static str {
        "gedanken"
    }

    fn run(&self, ctx: &mut RunContext) -> Result<serde_json::Value> {
        let w = &ctx.config.psi_squared;
        let alpha_b = ctx.config.gedanken.alpha_b;
        let setup = GedankenSetup::from_probabilities(
            [w[0], w[1], w[2]],
            alpha_b,
            ctx.config.gedanken.epsilon.unwrap_or(1),
        )?;

        let summary = match ctx.config.gedanken.epsilon {
            Some(eps) => {
                let probs = detection_probabilities(&setup);
                let rate = deexcitation_rate(&setup);
                println!(
                    "epsilon = {eps:+}: detection probabilities (minus, zero, plus) = ({:.6}, {:.6}, {:.6}), rate = {:.6}",
                    probs[0], probs[1], probs[2], rate
                );
                serde_json::json!({
                    "alpha_b": alpha_b,
                    "epsilon": eps,
                    "detection_probabilities": probs,
                    "deexcitation_rate": rate,
                })
            }
            None => {
                let average = unbiased_average(&setup);
                println!(
                    "unbiased field sign: average detection probabilities = ({:.6}, {:.6}, {:.6})",
                    average[0], average[1], average[2]
                );
                serde_json::json!({
                    "alpha_b": alpha_b,
                    "epsilon": "marginalized",
                    "average_detection_probabilities": average,
                    "input_probabilities": w,
                })
            }
        };
        ctx.json("gedanken.json", &summary)?;
        Ok(summary)
    }
}
