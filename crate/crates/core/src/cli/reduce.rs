use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::json;

use super::config;
use super::output::Cell;
use super::{CliError, Context};
use crate::zfactor::{build_reduction, joint_from_x_probs, x_probs_from_joint, JointDistribution, MAX_EXPRESSION_FACTORS};

/// Either a joint law over sign patterns such as `"101"` (1 marks `z_j`), or
/// the independent X-factor probabilities directly.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ReduceConfig {
    Joint { joint: BTreeMap<String, f64> },
    XProbs { n: usize, x_probs: Vec<f64> },
}

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    let cfg: ReduceConfig = config::read(ctx.config_path()?)?;
    let (joint, x_probs) = match &cfg {
        ReduceConfig::Joint { joint } => {
            let joint = JointDistribution::from_patterns(joint)?;
            let x = x_probs_from_joint(&joint)?;
            (joint, x)
        }
        ReduceConfig::XProbs { n, x_probs } => {
            let tree = build_reduction(*n)?;
            (joint_from_x_probs(&tree, x_probs)?, x_probs.clone())
        }
    };
    let tree = build_reduction(joint.n)?;
    let rebuilt = joint_from_x_probs(&tree, &x_probs)?;
    let round_trip = joint.probs.iter().zip(&rebuilt.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ctx.checks.record("reduction_round_trip", round_trip, 1e-13);

    if joint.n <= MAX_EXPRESSION_FACTORS {
        let mut text = String::new();
        for j in 1..=joint.n {
            text.push_str(&tree.unicode(j)?);
            text.push('\n');
        }
        text.push('\n');
        for j in 1..=joint.n {
            text.push_str(&tree.latex(j)?);
            text.push('\n');
        }
        ctx.output.text("reduction.txt", &text)?;
    }
    let rows: Vec<Vec<Cell>> =
        x_probs.iter().enumerate().map(|(i, p)| vec![Cell::from(i + 1), Cell::from(format!("X{}", i + 1)), Cell::from(*p)]).collect();
    ctx.output.table("x_probs", &["node", "factor", "probability"], &rows)?;
    let rows: Vec<Vec<Cell>> = (0..joint.probs.len())
        .map(|i| vec![Cell::from(joint.pattern(i)), Cell::from(joint.probs[i]), Cell::from(rebuilt.probs[i])])
        .collect();
    ctx.output.table("joint", &["pattern", "probability", "reconstructed"], &rows)?;
    ctx.output.json(
        "reduce_report",
        &json!({ "n": joint.n, "x_factors": tree.x_count(), "round_trip_error": round_trip, "checks": ctx.checks.items }),
    )?;
    Ok(())
}
