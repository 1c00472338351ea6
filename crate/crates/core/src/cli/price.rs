use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{self, CurveConfig, FactorConfig, PayoffConfig, Volatility, Years};
use super::output::Cell;
use super::{CliError, Context};
use crate::arrow_debreu::{ad_density, bond_call_payoff, price_continuous_call_via_ad, price_info_derivative, PayoffFunction};
use crate::credit::price_bond;
use crate::curve::DiscountCurve;
use crate::equity::{
    gamma_closed_form_applies, price_call_bridge_measure, price_exponential_closed, price_gamma_closed,
    price_single_dividend,
    price_single_dividend_quadrature, SingleDividendAsset,
};
use crate::options::{greeks, price_binary_call, price_multirecovery_call, OptionSpec, StrikeRegion};
use crate::process::{ContinuousDensity, InformationProcessSpec};
use crate::xfactor::{price_asset, price_asset_mc, CashFlow, CashFlowGraph, Expr, MarketScenario, XFactor};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceConfig {
    #[serde(default)]
    pub curve: CurveConfig,
    pub instrument: Instrument,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Instrument {
    Bond {
        payoff: PayoffConfig,
        sigma: Volatility,
        maturity: Years,
        t: Years,
        #[serde(default)]
        xi: f64,
    },
    BondCall {
        payoff: PayoffConfig,
        sigma: Volatility,
        maturity: Years,
        strike: f64,
        expiry: Years,
        #[serde(default)]
        greeks: bool,
    },
    DividendAsset {
        prior: ContinuousDensity,
        sigma: Volatility,
        maturity: Years,
        t: Years,
        #[serde(default)]
        xi: f64,
        #[serde(default)]
        call: Option<CallTerms>,
    },
    CashFlows {
        factors: Vec<FactorEntry>,
        flows: Vec<FlowEntry>,
        #[serde(default)]
        scenario: Option<ScenarioEntry>,
        #[serde(default)]
        mc_paths: usize,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CallTerms {
    pub strike: f64,
    pub expiry: Years,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorEntry {
    pub id: String,
    pub date: Years,
    pub sigma: Volatility,
    pub distribution: FactorConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowEntry {
    pub date: Years,
    pub payout: Expr,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub t: Years,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PriceReport {
    pub instrument: &'static str,
    pub value: f64,
    pub method: String,
    pub tolerance: f64,
    pub diagnostics: Value,
}

/// Relative error, absolute below a unit of `1e-12`.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

pub fn price(cfg: &PriceConfig, ctx_checks: &mut super::Checks, seed: u64) -> crate::Result<PriceReport> {
    let curve = cfg.curve.build()?;
    match &cfg.instrument {
        Instrument::Bond { payoff, sigma, maturity, t, xi } => price_bond_report(payoff, sigma.0, maturity.0, t.0, *xi, &curve, ctx_checks),
        Instrument::BondCall { payoff, sigma, maturity, strike, expiry, greeks: want_greeks } => {
            let spec = InformationProcessSpec::discrete(sigma.0, maturity.0, payoff.build()?)?;
            let opt = OptionSpec::new(*strike, expiry.0, payoff.build()?, spec, curve)?;
            let binary = opt.payoff.is_binary();
            let value = if binary { price_binary_call(&opt)? } else { price_multirecovery_call(&opt)? };
            let region = opt.strike_region();
            let method = match region {
                StrikeRegion::AlwaysInTheMoney => "analytic: strike below every attainable bond price",
                StrikeRegion::NeverInTheMoney => "analytic: strike above every attainable bond price",
                StrikeRegion::Interior if binary => "closed form: binary bond",
                StrikeRegion::Interior => "closed form: multi-recovery bond",
            };
            let tol = 1e-8;
            let ad = ad_density(&opt.spec, &opt.curve, opt.expiry)?;
            let via_ad = price_info_derivative(&ad, &bond_call_payoff(&opt)?)?;
            ctx_checks.record("bond_call_vs_arrow_debreu", rel_err(via_ad, value), tol);
            let mut diag = json!({ "strike_region": region, "arrow_debreu_value": via_ad });
            if *want_greeks {
                let g = greeks(&opt)?;
                diag["vega"] = json!(g.vega);
                diag["delta"] = json!(g.delta);
            }
            Ok(PriceReport { instrument: "bond_call", value, method: method.into(), tolerance: tol, diagnostics: diag })
        }
        Instrument::DividendAsset { prior, sigma, maturity, t, xi, call } => {
            let asset = SingleDividendAsset::new(prior.clone().validated()?, sigma.0, maturity.0, curve)?;
            let value = price_single_dividend(&asset, t.0, *xi)?;
            let tol = 1e-8;
            let quad = price_single_dividend_quadrature(&asset, t.0, *xi)?;
            ctx_checks.record("dividend_asset_vs_quadrature", rel_err(quad, value), tol);
            let closed = match prior {
                ContinuousDensity::Exponential { .. } => Some(price_exponential_closed(&asset, t.0, *xi)?),
                ContinuousDensity::Gamma { .. } => Some(price_gamma_closed(&asset, t.0, *xi)?),
                _ => None,
            };
            if let Some(c) = closed {
                ctx_checks.record("dividend_asset_vs_closed_form", rel_err(c, value), tol);
            }
            let mut diag = json!({ "quadrature_value": quad, "closed_form_value": closed });
            if matches!(prior, ContinuousDensity::Gamma { .. }) {
                diag["gamma_closed_form_used"] = json!(gamma_closed_form_applies(&asset, t.0, *xi)?);
            }
            if let Some(CallTerms { strike, expiry }) = call {
                let bridge = price_call_bridge_measure(&asset, *strike, expiry.0)?;
                let via_ad = price_continuous_call_via_ad(&asset, *strike, expiry.0)?;
                ctx_checks.record("dividend_call_vs_arrow_debreu", rel_err(via_ad, bridge), tol);
                diag["call_value"] = json!(bridge);
                diag["call_value_arrow_debreu"] = json!(via_ad);
            }
            Ok(PriceReport { instrument: "dividend_asset", value, method: "posterior expectation".into(), tolerance: tol, diagnostics: diag })
        }
        Instrument::CashFlows { factors, flows, scenario, mc_paths } => {
            let factors = factors
                .iter()
                .map(|f| XFactor::new(&f.id, f.date.0, f.sigma.0, f.distribution.build()?))
                .collect::<crate::Result<Vec<_>>>()?;
            let flows = flows.iter().map(|f| CashFlow { date: f.date.0, payout: f.payout.clone() }).collect();
            let graph = CashFlowGraph::new(factors, flows)?;
            let scen = match scenario {
                Some(s) => MarketScenario { t: s.t.0, values: s.values.clone() },
                None => MarketScenario::new(0.0),
            };
            let value = price_asset(&graph, &scen, &curve)?;
            let mut diag = json!({ "flow_dates": graph.flows.iter().map(|f| f.date).collect::<Vec<_>>() });
            if *mc_paths > 0 {
                let mc = price_asset_mc(&graph, &scen, &curve, *mc_paths, seed)?;
                ctx_checks.record("cash_flows_vs_monte_carlo", (mc.value - value).abs(), 3.0 * mc.std_error);
                diag["monte_carlo"] = json!(mc);
            }
            Ok(PriceReport { instrument: "cash_flows", value, method: "conditional expectation".into(), tolerance: 0.0, diagnostics: diag })
        }
    }
}

fn price_bond_report(
    payoff: &PayoffConfig,
    sigma: f64,
    maturity: f64,
    t: f64,
    xi: f64,
    curve: &DiscountCurve,
    checks: &mut super::Checks,
) -> crate::Result<PriceReport> {
    let payoff = payoff.build()?;
    let spec = InformationProcessSpec::discrete(sigma, maturity, payoff.clone())?;
    let state = price_bond(&payoff, &spec, curve, t, xi)?;
    let tol = 1e-8;
    let mut diag = json!({
        "conditional_probs": state.cond_probs,
        "conditional_mean": state.cond_mean,
        "conditional_variance": state.cond_var,
    });
    if t == 0.0 {
        // today's price is the Arrow-Debreu value of the mid-life bond price
        let u = 0.5 * maturity;
        let ad = ad_density(&spec, curve, u)?;
        let (p, s, c) = (payoff.clone(), spec.clone(), curve.clone());
        let later = PayoffFunction::new(move |x| price_bond(&p, &s, &c, u, x).map(|b| b.price).unwrap_or(f64::NAN));
        let via_ad = price_info_derivative(&ad, &later)?;
        checks.record("bond_vs_arrow_debreu", rel_err(via_ad, state.price), tol);
        diag["arrow_debreu_value"] = json!(via_ad);
    }
    Ok(PriceReport { instrument: "bond", value: state.price, method: "posterior expectation".into(), tolerance: tol, diagnostics: diag })
}

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    let cfg: PriceConfig = config::read(ctx.config_path()?)?;
    let report = price(&cfg, &mut ctx.checks, ctx.cli.seed)?;
    let rows = vec![vec![Cell::from(report.instrument), Cell::from(report.value), Cell::from(report.method.clone())]];
    ctx.output.table("price", &["instrument", "value", "method"], &rows)?;
    let full = json!({
        "value": report.value,
        "method": report.method,
        "tolerance": report.tolerance,
        "instrument": report.instrument,
        "diagnostics": report.diagnostics,
        "checks": ctx.checks.items,
    });
    ctx.output.json("price_report", &full)?;
    Ok(())
}
