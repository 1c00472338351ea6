use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{self, years, Rate, Years};
use super::output::Cell;
use super::{Checks, CliError, Context};
use crate::error::{invalid, Result};
use crate::rates::inflation::{InflationModel, Preferences};
use crate::rates::kernel::{doob_decomposition, fh_representation, money_market, short_rates, KernelModel, RationalModelSpec};
use crate::rates::lattice::{ScenarioTree, Values};

/// Largest lattice whose node values are written out.
const NODE_DUMP_DEPTH: usize = 16;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum RatesConfig {
    Rational {
        alpha: Vec<f64>,
        beta: Vec<f64>,
        n0: f64,
        up: f64,
        down: f64,
        #[serde(default)]
        dates: Option<Vec<Years>>,
        #[serde(default)]
        path: Option<String>,
    },
    /// Kernel values per date, identical in every state.
    Deterministic {
        dates: Vec<Years>,
        kernel: Vec<f64>,
        #[serde(default)]
        path: Option<String>,
    },
    Inflation {
        dates: Vec<Years>,
        up_prob: f64,
        consumption: ProcessConfig,
        money: ProcessConfig,
        liquidity: ProcessConfig,
        preferences: PreferencesConfig,
        #[serde(default)]
        wealth: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferencesConfig {
    pub a: f64,
    pub b: f64,
    pub gamma: Rate,
    pub mu: f64,
}

/// A lattice process, either listed node by node from the root or as
/// `base * growth^level * up^ups * down^downs`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ProcessConfig {
    Nodes { nodes: Vec<f64> },
    Multiplicative {
        base: f64,
        #[serde(default = "one")]
        growth: f64,
        #[serde(default = "one")]
        up: f64,
        #[serde(default = "one")]
        down: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ProcessConfig {
    fn build(&self, tree: &ScenarioTree) -> Result<Values> {
        match self {
            ProcessConfig::Nodes { nodes } => {
                if nodes.len() + 1 != tree.len() {
                    return invalid(format!("need {} node values, got {}", tree.len() - 1, nodes.len()));
                }
                let mut v = vec![0.0];
                v.extend_from_slice(nodes);
                Ok(v)
            }
            ProcessConfig::Multiplicative { base, growth, up, down } => Ok(tree.process(|level, k| {
                let ups = ScenarioTree::up_moves(k) as i32;
                base * growth.powi(level as i32) * up.powi(ups) * down.powi(level as i32 - ups)
            })),
        }
    }
}

fn path_node(path: Option<&str>, depth: usize) -> Result<Vec<usize>> {
    let moves: Vec<bool> = match path {
        None => vec![true; depth],
        Some(p) => p
            .chars()
            .map(|c| match c {
                'u' => Ok(true),
                'd' => Ok(false),
                _ => invalid(format!("path may only contain u and d, found {c:?}")),
            })
            .collect::<Result<_>>()?,
    };
    if moves.len() != depth {
        return invalid(format!("path needs {depth} moves"));
    }
    Ok((0..=depth).map(|i| ScenarioTree::node_of(&moves[..i])).collect())
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct TermStructureReport {
    pub depth: usize,
    pub money_market_identity: f64,
    pub rho_martingale: f64,
    pub doob_identity: f64,
    pub doob_forms: f64,
    pub fh_reconstruction: f64,
    pub axiom_a_longest_bond: f64,
    pub min_bond_price: f64,
    pub max_bond_price: f64,
    pub closed_form_bond: Option<f64>,
    pub closed_form_money_market: Option<f64>,
    pub closed_form_rho: Option<f64>,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).skip(1).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Residuals of every kernel identity on the lattice.
pub fn term_structure_report(model: &KernelModel, rational: Option<&RationalModelSpec>) -> Result<TermStructureReport> {
    let tree = &model.tree;
    let n = model.horizon();
    let b = money_market(model);
    let mut r = TermStructureReport { depth: n, min_bond_price: f64::INFINITY, ..Default::default() };
    let pi = &model.kernel;
    // P_{i-1,i} = B_{i-1} / B_i, read at the parent node
    r.money_market_identity = (2..tree.len())
        .map(|k| {
            let p = tree.step(pi, k / 2) / pi[k / 2];
            (p - b[k / 2] / b[k]).abs()
        })
        .fold(0.0, f64::max);
    let rho: Values = pi.iter().zip(&b).map(|(p, x)| p * x).collect();
    r.rho_martingale = tree.martingale_residual(&rho);
    let doob = doob_decomposition(model);
    r.doob_identity = (1..tree.len()).map(|k| (pi[k] - (doob.martingale[k] - doob.compensator[k])).abs()).fold(0.0, f64::max);
    r.doob_forms = max_abs_diff(&doob.compensator, &doob.compensator_short_rate);
    r.fh_reconstruction = fh_representation(model).reconstruction_error(model)?;

    let n_rational = rational.map(|s| s.martingale(tree));
    let mut closed_bond: f64 = 0.0;
    for j in 1..=n {
        let p = model.bond_prices(j)?;
        for k in 1..(1 << j) {
            r.min_bond_price = r.min_bond_price.min(p[k]);
            r.max_bond_price = r.max_bond_price.max(p[k]);
        }
        if let (Some(spec), Some(nv)) = (rational, &n_rational) {
            for k in 1..(1 << (j + 1)) {
                closed_bond = closed_bond.max((p[k] - spec.bond_price(ScenarioTree::level(k), j, nv[k])).abs());
            }
        }
    }
    if n > 0 {
        // the longest bond as a dividend-paying asset: price ex-dividend, pays 1 at maturity
        let mut price = model.bond_prices(n)?;
        for k in ScenarioTree::nodes(n) {
            price[k] = 0.0;
        }
        let dividends = tree.process(|level, _| if level == n { 1.0 } else { 0.0 });
        r.axiom_a_longest_bond = model.axiom_a_residual(&price, &dividends)?;
    }
    if let Some(spec) = rational {
        r.closed_form_bond = Some(closed_bond);
        r.closed_form_money_market = Some(max_abs_diff(&b, &spec.money_market(tree)));
        r.closed_form_rho = Some(max_abs_diff(&rho, &spec.rho(tree)));
    }
    Ok(r)
}

pub fn record_checks(r: &TermStructureReport, checks: &mut Checks) {
    checks.record("money_market_identity", r.money_market_identity, 1e-14);
    checks.record("rho_martingale", r.rho_martingale, 1e-14);
    checks.record("doob_identity", r.doob_identity, 1e-14);
    checks.record("doob_short_rate_form", r.doob_forms, 1e-14);
    checks.record("fh_reconstruction", r.fh_reconstruction, 1e-12);
    checks.record("axiom_a_longest_bond", r.axiom_a_longest_bond, 1e-14);
    checks.flag("bond_prices_in_unit_interval", r.min_bond_price > 0.0 && r.max_bond_price < 1.0);
    if let Some(e) = r.closed_form_bond {
        checks.record("rational_closed_form_bond", e, 1e-14);
    }
    if let Some(e) = r.closed_form_money_market {
        checks.record("rational_closed_form_money_market", e, 1e-14);
    }
    if let Some(e) = r.closed_form_rho {
        checks.record("rational_closed_form_rho", e, 1e-14);
    }
}

fn write_term_structure(ctx: &mut Context, model: &KernelModel, path: &[usize]) -> std::result::Result<(), CliError> {
    let n = model.horizon();
    let mut matrix = Vec::new();
    let mut yields = Vec::new();
    for j in 0..=n {
        let p = model.bond_prices(j)?;
        for (i, &node) in path.iter().enumerate().take(j + 1) {
            matrix.push(vec![Cell::from(i), Cell::from(j), Cell::from(node), Cell::from(p[node])]);
        }
        let t = model.dates[j];
        let y = if j == 0 { f64::NAN } else { -p[1].ln() / t };
        yields.push(vec![Cell::from(j), Cell::from(t), Cell::from(p[1]), Cell::from(y)]);
    }
    ctx.output.table("bond_prices", &["i", "j", "node", "price"], &matrix)?;
    ctx.output.table("yields", &["j", "t", "discount", "yield"], &yields)?;
    if n <= NODE_DUMP_DEPTH {
        let b = money_market(model);
        let r = short_rates(model);
        let rows: Vec<Vec<Cell>> = (1..model.tree.len())
            .map(|k| {
                let level = ScenarioTree::level(k);
                vec![
                    Cell::from(k),
                    Cell::from(level),
                    Cell::from(model.dates[level]),
                    Cell::from(model.kernel[k]),
                    Cell::from(b[k]),
                    Cell::from(r[k]),
                ]
            })
            .collect();
        ctx.output.table("nodes", &["node", "level", "t", "kernel", "money_market", "short_rate"], &rows)?;
    }
    Ok(())
}

fn kernel_run(ctx: &mut Context, model: KernelModel, rational: Option<&RationalModelSpec>, path: Option<&str>) -> std::result::Result<(), CliError> {
    let path = path_node(path, model.horizon())?;
    let report = term_structure_report(&model, rational)?;
    record_checks(&report, &mut ctx.checks);
    write_term_structure(ctx, &model, &path)?;
    ctx.output.json("rates_report", &json!({ "residuals": report, "checks": ctx.checks.items }))?;
    Ok(())
}

pub fn build_inflation(
    dates: &[Years],
    up_prob: f64,
    consumption: &ProcessConfig,
    money: &ProcessConfig,
    liquidity: &ProcessConfig,
    prefs: PreferencesConfig,
) -> Result<InflationModel> {
    if dates.is_empty() {
        return invalid("need at least one date");
    }
    let tree = ScenarioTree::binomial(dates.len() - 1, up_prob)?;
    let prefs = Preferences { a: prefs.a, b: prefs.b, gamma: prefs.gamma.0, mu: prefs.mu };
    InflationModel::new(
        tree.clone(),
        years(dates),
        consumption.build(&tree)?,
        money.build(&tree)?,
        liquidity.build(&tree)?,
        prefs,
    )
}

pub fn run(ctx: &mut Context) -> std::result::Result<(), CliError> {
    let cfg: RatesConfig = config::read(ctx.config_path()?)?;
    match cfg {
        RatesConfig::Rational { alpha, beta, n0, up, down, dates, path } => {
            let spec = RationalModelSpec { alpha, beta, n0, up, down, dates: dates.as_deref().map(years) };
            let model = spec.model()?;
            kernel_run(ctx, model, Some(&spec), path.as_deref())
        }
        RatesConfig::Deterministic { dates, kernel, path } => {
            if kernel.is_empty() {
                return Err(CliError::Config("kernel needs at least one value".into()));
            }
            let tree = ScenarioTree::binomial(kernel.len() - 1, 0.5)?;
            let values = tree.process(|level, _| kernel[level]);
            let model = KernelModel::new(tree, years(&dates), values)?;
            kernel_run(ctx, model, None, path.as_deref())
        }
        RatesConfig::Inflation { dates, up_prob, consumption, money, liquidity, preferences, wealth } => {
            let model = build_inflation(&dates, up_prob, &consumption, &money, &liquidity, preferences)?;
            let n = model.tree.depth();
            ctx.checks.record("velocity_identity", model.velocity_residual(), 1e-14);
            ctx.checks.record("first_order_conditions", model.first_order_residual(), 1e-14);
            let mut linked = Vec::new();
            let mut worst: f64 = 0.0;
            for j in 0..=n {
                let nominal = model.index_linked_bond(j)?;
                let real = model.real_bond(j)?;
                for k in 1..nominal.len() {
                    worst = worst.max((nominal[k] - model.price_level[k] * real[k]).abs() / nominal[k].abs());
                }
                let unit = model.claim_value(j, &vec![1.0; model.tree.len()])?;
                linked.push(vec![Cell::from(j), Cell::from(model.dates[j]), Cell::from(nominal[1]), Cell::from(real[1]), Cell::from(unit[1])]);
            }
            ctx.checks.record("index_linked_identity", worst, 1e-13);
            ctx.output.table("index_linked", &["j", "t", "index_linked_nominal", "real_bond", "nominal_bond"], &linked)?;
            if n <= NODE_DUMP_DEPTH {
                let rows: Vec<Vec<Cell>> = (1..model.tree.len())
                    .map(|k| {
                        let level = ScenarioTree::level(k);
                        vec![
                            Cell::from(k),
                            Cell::from(level),
                            Cell::from(model.dates[level]),
                            Cell::from(model.price_level[k]),
                            Cell::from(model.nominal_kernel[k]),
                            Cell::from(model.real_kernel[k]),
                        ]
                    })
                    .collect();
                ctx.output.table("nodes", &["node", "level", "t", "price_level", "nominal_kernel", "real_kernel"], &rows)?;
            }
            let budget = model.budget();
            let kernel_ok = model.kernel_model().is_ok();
            ctx.output.json(
                "rates_report",
                &json!({
                    "budget": budget,
                    "budget_residual": wealth.map(|w| model.budget_residual(w)),
                    "nominal_kernel_is_supermartingale": kernel_ok,
                    "checks": ctx.checks.items,
                }),
            )?;
            Ok(())
        }
    }
}
