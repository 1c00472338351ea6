use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::config::{self, CurveConfig, Rate, Volatility, Years};
use super::output::Cell;
use super::{CliError, Context};
use crate::credit::{simulate_bond_paths_conditioned, BondPaths};
use crate::process::{DiscretePayoff, InformationProcessSpec, TimeGrid};
use crate::rng::stream;

/// Parameters of a simulation run; every field has a default.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub maturity: Years,
    pub curve: CurveConfig,
    pub default_probability: f64,
    pub principal: f64,
    pub recovery: f64,
    pub sigmas: Vec<Volatility>,
    pub paths: usize,
    /// Paths conditioned on default in the mixed set.
    pub mixed_default_paths: usize,
    pub steps_per_year: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            maturity: Years(5.0),
            curve: CurveConfig::Flat { rate: Rate(0.05) },
            default_probability: 0.2,
            principal: 1.0,
            recovery: 0.0,
            sigmas: [0.04, 0.2, 1.0, 5.0].into_iter().map(Volatility).collect(),
            paths: 10,
            mixed_default_paths: 2,
            steps_per_year: 250,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    Mixed,
    NoDefault,
    Default,
}

impl Conditioning {
    pub const ALL: [Conditioning; 3] = [Conditioning::Mixed, Conditioning::NoDefault, Conditioning::Default];

    pub fn label(self) -> &'static str {
        match self {
            Conditioning::Mixed => "all",
            Conditioning::NoDefault => "no_default",
            Conditioning::Default => "default",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct PathsJson<'a> {
    sigma: f64,
    conditioning: &'a str,
    t: &'a [f64],
    prices: &'a [Vec<f64>],
    terminal: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub sigma: f64,
    pub conditioning: Conditioning,
    pub paths: BondPaths,
}

impl Regime {
    /// Mean price over all paths and grid points in the final year.
    pub fn final_year_mean(&self, maturity: f64) -> f64 {
        let pts = self.paths.grid.points();
        let (mut sum, mut count) = (0.0, 0usize);
        for path in &self.paths.prices {
            for (t, p) in pts.iter().zip(path) {
                if *t >= maturity - 1.0 {
                    sum += p;
                    count += 1;
                }
            }
        }
        sum / count as f64
    }
}

fn sub_seed(seed: u64, k: u64) -> u64 {
    stream(seed, k).next_u64()
}

/// All regimes of the configured grid, in `(sigma, conditioning)` order.
pub fn simulate_regimes(cfg: &SimulateConfig, seed: u64) -> crate::Result<Vec<Regime>> {
    let maturity = cfg.maturity.0;
    let curve = cfg.curve.build()?;
    let payoff =
        DiscretePayoff::new(vec![cfg.recovery, cfg.principal], vec![cfg.default_probability, 1.0 - cfg.default_probability])?;
    if cfg.mixed_default_paths > cfg.paths {
        return crate::error::invalid("mixed_default_paths exceeds paths");
    }
    let steps = (cfg.steps_per_year as f64 * maturity).round() as usize;
    if steps < 2 {
        return crate::error::invalid("need at least two time steps before maturity");
    }
    // stop one step short of maturity, where the payoff is revealed
    let grid = TimeGrid::uniform(maturity, maturity * (steps - 1) as f64 / steps as f64, steps - 1)?;
    let mut out = Vec::new();
    for (s, sigma) in cfg.sigmas.iter().enumerate() {
        let spec = InformationProcessSpec::discrete(sigma.0, maturity, payoff.clone())?;
        for (c, cond) in Conditioning::ALL.into_iter().enumerate() {
            let run_seed = sub_seed(seed, (3 * s + c) as u64);
            let run = |n: usize, h: f64, stream_seed: u64| {
                simulate_bond_paths_conditioned(&payoff, &spec, &curve, &grid, n, stream_seed, Some(h))
            };
            let paths = match cond {
                Conditioning::NoDefault => run(cfg.paths, cfg.principal, run_seed)?,
                Conditioning::Default => run(cfg.paths, cfg.recovery, run_seed)?,
                Conditioning::Mixed => {
                    let mut d = run(cfg.mixed_default_paths, cfg.recovery, run_seed)?;
                    let n = run(cfg.paths - cfg.mixed_default_paths, cfg.principal, sub_seed(run_seed, 1))?;
                    d.prices.extend(n.prices);
                    d.terminal.extend(n.terminal);
                    d
                }
            };
            out.push(Regime { sigma: sigma.0, conditioning: cond, paths });
        }
    }
    Ok(out)
}

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    let cfg: SimulateConfig = match &ctx.cli.config {
        Some(path) => config::read(path)?,
        None => SimulateConfig::default(),
    };
    let maturity = cfg.maturity.0;
    let regimes = simulate_regimes(&cfg, ctx.cli.seed)?;
    let curve = cfg.curve.build()?;
    let mut summary = Vec::new();
    for r in &regimes {
        let name = format!("bond_paths_sigma_{}_{}", r.sigma, r.conditioning.label());
        let json = PathsJson {
            sigma: r.sigma,
            conditioning: r.conditioning.label(),
            t: r.paths.grid.points(),
            prices: &r.paths.prices,
            terminal: &r.paths.terminal,
        };
        ctx.output.csv_or_json(&name, &r.paths.to_csv(), &json)?;
        let mean = r.final_year_mean(maturity);
        summary.push(vec![
            Cell::from(r.sigma),
            Cell::from(r.conditioning.label()),
            Cell::from(r.paths.prices.len()),
            Cell::from(mean),
        ]);

        // near maturity the price has nearly converged to P_tT H_T
        let last = r.paths.grid.len() - 1;
        let t_last = r.paths.grid.points()[last];
        if r.sigma >= 5.0 && t_last >= 0.999 * maturity {
            let p = curve.forward_discount(t_last, maturity);
            let close = r
                .paths
                .prices
                .iter()
                .zip(&r.paths.terminal)
                .filter(|(path, h)| (path[last] - p * **h).abs() <= 0.01 * p)
                .count();
            let frac = close as f64 / r.paths.prices.len().max(1) as f64;
            ctx.checks.record(&format!("near_maturity_convergence_sigma_{}_{}", r.sigma, r.conditioning.label()), 1.0 - frac, 0.01);
        }
        if r.sigma >= 5.0 && r.conditioning == Conditioning::Default {
            ctx.checks.record(&format!("final_year_mean_sigma_{}_default", r.sigma), mean, 0.05);
        }
    }
    ctx.output.table("summary", &["sigma", "conditioning", "paths", "final_year_mean_price"], &summary)?;
    Ok(())
}
