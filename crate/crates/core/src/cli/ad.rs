use serde::Deserialize;
use serde_json::json;

use super::config::{self, CurveConfig, FactorConfig, Volatility, Years};
use super::output::Cell;
use super::{CliError, Context};
use crate::arrow_debreu::{ad_density, price_info_derivative, tabulate, PayoffFunction};
use crate::process::InformationProcessSpec;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdConfig {
    pub factor: FactorConfig,
    pub sigma: Volatility,
    pub maturity: Years,
    pub t: Years,
    #[serde(default)]
    pub curve: CurveConfig,
    /// Number of evenly spaced points over the effective support.
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    401
}

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    let cfg: AdConfig = config::read(ctx.config_path()?)?;
    if cfg.points < 2 {
        return Err(CliError::Config("points must be at least 2".into()));
    }
    let curve = cfg.curve.build()?;
    let spec = InformationProcessSpec::new(cfg.sigma.0, cfg.maturity.0, cfg.factor.build()?)?;
    let ad = ad_density(&spec, &curve, cfg.t.0)?;
    let (lo, hi) = ad.truncation();
    let xs: Vec<f64> = (0..cfg.points).map(|i| lo + (hi - lo) * i as f64 / (cfg.points - 1) as f64).collect();
    let rows: Vec<Vec<Cell>> = tabulate(&ad, &xs)?.into_iter().map(|(x, d)| vec![Cell::from(x), Cell::from(d)]).collect();
    ctx.output.table("ad_density", &["xi", "density"], &rows)?;

    let mass = price_info_derivative(&ad, &PayoffFunction::new(|_| 1.0))?;
    let discount = curve.discount(cfg.t.0);
    ctx.checks.record("ad_density_mass", (mass - discount).abs(), 1e-10);
    ctx.output.json(
        "ad_report",
        &json!({ "t": cfg.t.0, "support": [lo, hi], "mass": mass, "discount": discount, "checks": ctx.checks.items }),
    )?;
    Ok(())
}
