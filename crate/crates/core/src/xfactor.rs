//! Assets whose cash flows are functions of several independent market factors.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::DiscountCurve;
use crate::error::{invalid, Error, Result};
use crate::process::{
    check_before_maturity, conditional_density, conditional_probs, ContinuousDensity, DiscretePayoff, Factor,
    InformationProcessSpec, Posterior,
};
use crate::rng::stream;

/// Joint discrete outcomes enumerated before exact pricing gives up.
pub const ENUMERATION_LIMIT: f64 = 65536.0;
/// Continuous factors that may be integrated out jointly.
pub const MAX_CONTINUOUS_DIMS: usize = 3;

/// Payout expression over factor ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    Const { value: f64 },
    Factor { id: String },
    /// `1 - X`.
    Complement { id: String },
    /// `1{X >= level}`.
    Indicator { id: String, level: f64 },
    Sum { terms: Vec<Expr> },
    Product { terms: Vec<Expr> },
    Scale { by: f64, expr: Box<Expr> },
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const { value }
    }

    pub fn factor(id: &str) -> Expr {
        Expr::Factor { id: id.to_string() }
    }

    pub fn complement(id: &str) -> Expr {
        Expr::Complement { id: id.to_string() }
    }

    pub fn indicator(id: &str, level: f64) -> Expr {
        Expr::Indicator { id: id.to_string(), level }
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        Expr::Sum { terms }
    }

    pub fn product(terms: Vec<Expr>) -> Expr {
        Expr::Product { terms }
    }

    pub fn scale(by: f64, expr: Expr) -> Expr {
        Expr::Scale { by, expr: Box::new(expr) }
    }

    /// Product of the listed factors, or 1 when empty.
    pub fn product_of(ids: &[String]) -> Expr {
        Expr::product(ids.iter().map(|id| Expr::factor(id)).collect())
    }

    pub fn factors(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const { .. } => {}
            Expr::Factor { id } | Expr::Complement { id } | Expr::Indicator { id, .. } => {
                out.insert(id.clone());
            }
            Expr::Sum { terms } | Expr::Product { terms } => terms.iter().for_each(|t| t.collect(out)),
            Expr::Scale { expr, .. } => expr.collect(out),
        }
    }

    /// Evaluate with every referenced factor supplied by `value`.
    pub fn eval(&self, value: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        let get = |id: &str| value(id).ok_or_else(|| Error::InvalidInput(format!("no value for factor {id}")));
        Ok(match self {
            Expr::Const { value } => *value,
            Expr::Factor { id } => get(id)?,
            Expr::Complement { id } => 1.0 - get(id)?,
            Expr::Indicator { id, level } => indicator(get(id)?, *level),
            Expr::Sum { terms } => terms.iter().map(|t| t.eval(value)).sum::<Result<f64>>()?,
            Expr::Product { terms } => terms.iter().map(|t| t.eval(value)).product::<Result<f64>>()?,
            Expr::Scale { by, expr } => by * expr.eval(value)?,
        })
    }

    /// Replace a factor by a fixed value.
    pub fn substitute(&self, target: &str, x: f64) -> Expr {
        match self {
            Expr::Factor { id } if id == target => Expr::constant(x),
            Expr::Complement { id } if id == target => Expr::constant(1.0 - x),
            Expr::Indicator { id, level } if id == target => Expr::constant(indicator(x, *level)),
            Expr::Sum { terms } => Expr::sum(terms.iter().map(|t| t.substitute(target, x)).collect()),
            Expr::Product { terms } => Expr::product(terms.iter().map(|t| t.substitute(target, x)).collect()),
            Expr::Scale { by, expr } => Expr::scale(*by, expr.substitute(target, x)),
            other => other.clone(),
        }
    }
}

fn indicator(x: f64, level: f64) -> f64 {
    if x >= level {
        1.0
    } else {
        0.0
    }
}

/// Market factor revealed at `date`, with an information process over `[0, date]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XFactor {
    pub id: String,
    pub date: f64,
    pub sigma: f64,
    pub distribution: Factor,
}

impl XFactor {
    pub fn new(id: &str, date: f64, sigma: f64, distribution: Factor) -> Result<Self> {
        let distribution = match distribution {
            Factor::Discrete(d) => Factor::Discrete(DiscretePayoff::new(d.levels().to_vec(), d.probs().to_vec())?),
            Factor::Continuous(c) => Factor::Continuous(c.validated()?),
        };
        InformationProcessSpec::new(sigma, date, distribution.clone())?;
        Ok(XFactor { id: id.to_string(), date, sigma, distribution })
    }

    /// Two-point factor on `{0, 1}` with `Q(X = 1) = p_one`.
    pub fn binary(id: &str, date: f64, sigma: f64, p_one: f64) -> Result<Self> {
        Self::new(id, date, sigma, Factor::Discrete(DiscretePayoff::binary(0.0, 1.0, p_one)?))
    }

    pub fn continuous(id: &str, date: f64, sigma: f64, density: ContinuousDensity) -> Result<Self> {
        Self::new(id, date, sigma, Factor::Continuous(density))
    }

    pub fn spec(&self) -> InformationProcessSpec {
        InformationProcessSpec { sigma: self.sigma, horizon: self.date, factor: self.distribution.clone() }
    }

    fn is_binary_01(&self) -> bool {
        matches!(&self.distribution, Factor::Discrete(d) if d.levels() == [0.0, 1.0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CashFlow {
    pub date: f64,
    pub payout: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CashFlowGraph {
    pub factors: Vec<XFactor>,
    pub flows: Vec<CashFlow>,
}

impl CashFlowGraph {
    pub fn new(factors: Vec<XFactor>, flows: Vec<CashFlow>) -> Result<Self> {
        let factors = factors
            .into_iter()
            .map(|f| XFactor::new(&f.id, f.date, f.sigma, f.distribution))
            .collect::<Result<Vec<_>>>()?;
        let mut dates = BTreeMap::new();
        for f in &factors {
            if dates.insert(f.id.clone(), f.date).is_some() {
                return invalid(format!("factor {} registered twice", f.id));
            }
        }
        if flows.windows(2).any(|w| !(w[1].date > w[0].date)) {
            return invalid("cash-flow dates must increase strictly");
        }
        for flow in &flows {
            if !(flow.date > 0.0 && flow.date.is_finite()) {
                return invalid("cash-flow dates must be positive");
            }
            for id in flow.payout.factors() {
                match dates.get(&id) {
                    None => return invalid(format!("cash flow at {} uses unknown factor {id}", flow.date)),
                    Some(d) if *d > flow.date => {
                        return invalid(format!("factor {id} is revealed after the cash flow at {}", flow.date))
                    }
                    _ => {}
                }
            }
        }
        Ok(CashFlowGraph { factors, flows })
    }

    pub fn validated(self) -> Result<Self> {
        Self::new(self.factors, self.flows)
    }

    pub fn factor(&self, id: &str) -> Option<&XFactor> {
        self.factors.iter().find(|f| f.id == id)
    }
}

/// Information values at time `t`; factors already revealed carry their realized value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketScenario {
    pub t: f64,
    pub values: BTreeMap<String, f64>,
}

impl MarketScenario {
    pub fn new(t: f64) -> Self {
        MarketScenario { t, values: BTreeMap::new() }
    }

    pub fn with(mut self, id: &str, value: f64) -> Self {
        self.values.insert(id.to_string(), value);
        self
    }

    fn value(&self, id: &str) -> Result<f64> {
        match self.values.get(id) {
            Some(v) if v.is_finite() => Ok(*v),
            Some(_) => invalid(format!("scenario value for {id} is not finite")),
            None if self.t == 0.0 => Ok(0.0),
            None => invalid(format!("scenario has no value for factor {id}")),
        }
    }
}

#[derive(Debug, Clone)]
enum FactorState {
    Known(f64),
    Discrete { levels: Vec<f64>, probs: Vec<f64> },
    Continuous(Posterior),
}

impl FactorState {
    fn of(factor: &XFactor, scenario: &MarketScenario) -> Result<Self> {
        let t = scenario.t;
        if t >= factor.date {
            return Ok(FactorState::Known(scenario.value(&factor.id)?));
        }
        check_before_maturity(t, factor.date)?;
        let xi = scenario.value(&factor.id)?;
        let spec = factor.spec();
        Ok(match &factor.distribution {
            Factor::Discrete(d) => FactorState::Discrete {
                levels: d.levels().to_vec(),
                probs: conditional_probs(d, &spec, t, xi)?,
            },
            Factor::Continuous(c) => FactorState::Continuous(conditional_density(c, &spec, t, xi)?),
        })
    }

    fn mean(&self) -> Result<f64> {
        match self {
            FactorState::Known(x) => Ok(*x),
            FactorState::Discrete { levels, probs } => Ok(levels.iter().zip(probs).map(|(h, p)| h * p).sum()),
            FactorState::Continuous(post) => post.mean(),
        }
    }

    fn expect<F: Fn(f64) -> f64>(&self, g: F) -> Result<f64> {
        match self {
            FactorState::Known(x) => Ok(g(*x)),
            FactorState::Discrete { levels, probs } => {
                Ok(levels.iter().zip(probs).filter(|(_, p)| **p > 0.0).map(|(h, p)| p * g(*h)).sum())
            }
            FactorState::Continuous(post) => post.expect(g),
        }
    }
}

/// Conditional expectations of payout expressions given the market information.
struct Conditioner {
    states: BTreeMap<String, FactorState>,
}

impl Conditioner {
    fn new(factors: &[XFactor], scenario: &MarketScenario) -> Result<Self> {
        let states = factors
            .iter()
            .map(|f| Ok((f.id.clone(), FactorState::of(f, scenario)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(Conditioner { states })
    }

    fn state(&self, id: &str) -> Result<&FactorState> {
        self.states.get(id).ok_or_else(|| Error::InvalidInput(format!("unknown factor {id}")))
    }

    fn expectation(&self, e: &Expr) -> Result<f64> {
        let mut known = e.clone();
        for id in e.factors() {
            if let FactorState::Known(x) = self.state(&id)? {
                known = known.substitute(&id, *x);
            }
        }
        self.expect(&known, 1.0, 0)
    }

    /// `outcomes` counts enumerated discrete branches, `dims` the continuous
    /// factors integrated out on the way here.
    fn expect(&self, e: &Expr, outcomes: f64, dims: usize) -> Result<f64> {
        match e {
            Expr::Const { value } => Ok(*value),
            Expr::Factor { id } => self.state(id)?.mean(),
            Expr::Complement { id } => Ok(1.0 - self.state(id)?.mean()?),
            Expr::Indicator { id, level } => self.state(id)?.expect(|x| indicator(x, *level)),
            Expr::Scale { by, expr } => Ok(by * self.expect(expr, outcomes, dims)?),
            Expr::Sum { terms } => terms.iter().map(|t| self.expect(t, outcomes, dims)).sum(),
            Expr::Product { terms } => match shared_factor(terms) {
                None => terms.iter().map(|t| self.expect(t, outcomes, dims)).product(),
                Some(id) => self.condition_on(&id, e, outcomes, dims),
            },
        }
    }

    fn condition_on(&self, id: &str, e: &Expr, outcomes: f64, dims: usize) -> Result<f64> {
        match self.state(id)? {
            FactorState::Known(x) => self.expect(&e.substitute(id, *x), outcomes, dims),
            FactorState::Discrete { levels, probs } => {
                let outcomes = outcomes * levels.len() as f64;
                if outcomes > ENUMERATION_LIMIT {
                    return Err(Error::UnsupportedSize(format!(
                        "joint enumeration exceeds {ENUMERATION_LIMIT} outcomes; use Monte Carlo pricing"
                    )));
                }
                let mut total = 0.0;
                for (h, p) in levels.iter().zip(probs) {
                    if *p > 0.0 {
                        total += p * self.expect(&e.substitute(id, *h), outcomes, dims)?;
                    }
                }
                Ok(total)
            }
            FactorState::Continuous(post) => {
                if dims >= MAX_CONTINUOUS_DIMS {
                    return Err(Error::UnsupportedPayout(format!(
                        "payout couples more than {MAX_CONTINUOUS_DIMS} continuous factors"
                    )));
                }
                let failure = RefCell::new(None);
                let value = post.expect(|x| match self.expect(&e.substitute(id, x), outcomes, dims + 1) {
                    Ok(v) => v,
                    Err(err) => {
                        failure.borrow_mut().get_or_insert(err);
                        0.0
                    }
                });
                match failure.into_inner() {
                    Some(err) => Err(err),
                    None => value,
                }
            }
        }
    }
}

/// A factor appearing in more than one term of a product, if any.
fn shared_factor(terms: &[Expr]) -> Option<String> {
    let mut seen = BTreeSet::new();
    for t in terms {
        for id in t.factors() {
            if !seen.insert(id.clone()) {
                return Some(id);
            }
        }
    }
    None
}

/// `E[D_Tk | F_t]` for every flow strictly after `t`.
pub fn conditional_cash_flows(graph: &CashFlowGraph, scenario: &MarketScenario) -> Result<Vec<(f64, f64)>> {
    let cond = Conditioner::new(&graph.factors, scenario)?;
    graph
        .flows
        .iter()
        .filter(|f| f.date > scenario.t)
        .map(|f| Ok((f.date, cond.expectation(&f.payout)?)))
        .collect()
}

/// `S_t = sum over T_k > t of P_tTk E[D_Tk | F_t]`; flows at or before `t` are already paid.
pub fn price_asset(graph: &CashFlowGraph, scenario: &MarketScenario, curve: &DiscountCurve) -> Result<f64> {
    Ok(conditional_cash_flows(graph, scenario)?
        .into_iter()
        .map(|(date, m)| curve.forward_discount(scenario.t, date) * m)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Monte Carlo price for payouts too entangled for exact conditioning.
/// Discrete factors are drawn from their posteriors; continuous ones from the
/// prior with likelihood weights.
pub fn price_asset_mc(
    graph: &CashFlowGraph,
    scenario: &MarketScenario,
    curve: &DiscountCurve,
    paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    if paths < 2 {
        return invalid("Monte Carlo needs at least two paths");
    }
    enum Draw {
        Known(f64),
        Discrete(Vec<f64>, Vec<f64>),
        Weighted(ContinuousDensity, f64, f64),
    }
    let t = scenario.t;
    let draws = graph
        .factors
        .iter()
        .map(|f| {
            Ok(match FactorState::of(f, scenario)? {
                FactorState::Known(x) => Draw::Known(x),
                FactorState::Discrete { levels, probs } => Draw::Discrete(levels, probs),
                FactorState::Continuous(post) => {
                    let (a, b) = post.coefficients();
                    let Factor::Continuous(prior) = &f.distribution else { unreachable!() };
                    Draw::Weighted(prior.clone(), a, b)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let live: Vec<(f64, &Expr)> = graph
        .flows
        .iter()
        .filter(|f| f.date > t)
        .map(|f| (curve.forward_discount(t, f.date), &f.payout))
        .collect();
    let samples = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let mut values = BTreeMap::new();
            let mut log_w = 0.0;
            for (f, d) in graph.factors.iter().zip(&draws) {
                let x = match d {
                    Draw::Known(x) => *x,
                    Draw::Discrete(levels, probs) => {
                        let u: f64 = rng.random();
                        let mut acc = 0.0;
                        let mut pick = levels[levels.len() - 1];
                        for (h, p) in levels.iter().zip(probs) {
                            acc += p;
                            if u < acc {
                                pick = *h;
                                break;
                            }
                        }
                        pick
                    }
                    Draw::Weighted(prior, a, b) => {
                        let x = prior.sample(&mut rng);
                        log_w += a * x - b * x * x;
                        x
                    }
                };
                values.insert(f.id.as_str(), x);
            }
            let lookup = |id: &str| values.get(id).copied();
            let v = live.iter().map(|(p, e)| Ok(p * e.eval(&lookup)?)).sum::<Result<f64>>()?;
            Ok((log_w, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let max = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = samples.iter().map(|s| (s.0 - max).exp()).collect();
    let w_sum: f64 = weights.iter().sum();
    let value = weights.iter().zip(&samples).map(|(w, s)| w * s.1).sum::<f64>() / w_sum;
    let var = weights.iter().zip(&samples).map(|(w, s)| (w * (s.1 - value)).powi(2)).sum::<f64>();
    Ok(McEstimate { value, std_error: var.sqrt() / w_sum })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolatilityVector {
    pub per_factor: BTreeMap<String, f64>,
    pub total: f64,
}

/// Absolute price volatility carried by each live factor's innovation.
pub fn volatility_vector(
    graph: &CashFlowGraph,
    scenario: &MarketScenario,
    curve: &DiscountCurve,
) -> Result<VolatilityVector> {
    let t = scenario.t;
    let cond = Conditioner::new(&graph.factors, scenario)?;
    let mut per_factor = BTreeMap::new();
    for f in graph.factors.iter().filter(|f| f.date > t) {
        let mean = cond.state(&f.id)?.mean()?;
        let mut gamma = 0.0;
        for flow in graph.flows.iter().filter(|fl| fl.date > t && fl.payout.factors().contains(&f.id)) {
            let joint = Expr::product(vec![flow.payout.clone(), Expr::factor(&f.id)]);
            let cov = cond.expectation(&joint)? - cond.expectation(&flow.payout)? * mean;
            gamma += curve.forward_discount(t, flow.date) * cov;
        }
        per_factor.insert(f.id.clone(), f.sigma * f.date / (f.date - t) * gamma);
    }
    let total = per_factor.values().map(|g| g * g).sum::<f64>().sqrt();
    Ok(VolatilityVector { per_factor, total })
}

/// Binary defaultable coupon bond with a recovery rate per payment date.
/// `default_probs[k]` is `Q(X_k = 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouponBond {
    pub coupon: f64,
    pub principal: f64,
    pub dates: Vec<f64>,
    pub recovery: Vec<f64>,
    pub default_probs: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl CouponBond {
    pub fn factor_id(k: usize) -> String {
        format!("X{}", k + 1)
    }

    pub fn graph(&self) -> Result<CashFlowGraph> {
        let n = self.dates.len();
        if n == 0 || self.recovery.len() != n || self.default_probs.len() != n || self.sigmas.len() != n {
            return invalid("coupon bond needs matching dates, recoveries, default probabilities and sigmas");
        }
        if self.recovery.iter().any(|r| !(0.0..1.0).contains(r)) {
            return invalid("recovery rates must lie in [0, 1)");
        }
        if self.default_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return invalid("default probabilities must lie in [0, 1]");
        }
        let factors = (0..n)
            .map(|k| XFactor::binary(&Self::factor_id(k), self.dates[k], self.sigmas[k], 1.0 - self.default_probs[k]))
            .collect::<Result<Vec<_>>>()?;
        let owed = self.coupon + self.principal;
        let flows = (0..n)
            .map(|k| {
                let ids: Vec<String> = (0..=k).map(Self::factor_id).collect();
                let paid = if k + 1 == n { owed } else { self.coupon };
                let survive = Expr::scale(paid, Expr::product_of(&ids));
                let mut default_terms: Vec<Expr> = ids[..k].iter().map(|id| Expr::factor(id)).collect();
                default_terms.push(Expr::complement(&ids[k]));
                let recover = Expr::scale(self.recovery[k] * owed, Expr::product(default_terms));
                CashFlow { date: self.dates[k], payout: Expr::sum(vec![survive, recover]) }
            })
            .collect();
        CashFlowGraph::new(factors, flows)
    }
}

pub fn price_coupon_bond(bond: &CouponBond, scenario: &MarketScenario, curve: &DiscountCurve) -> Result<f64> {
    price_asset(&bond.graph()?, scenario, curve)
}

/// Default swap on a two-coupon reference bond, valued from the protection seller's side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreditDefaultSwap {
    pub premium: f64,
    pub protection: f64,
    pub reference: [XFactor; 2],
}

pub fn price_cds(cds: &CreditDefaultSwap, scenario: &MarketScenario, curve: &DiscountCurve) -> Result<f64> {
    let [x1, x2] = &cds.reference;
    if !(x1.is_binary_01() && x2.is_binary_01()) {
        return invalid("default swap reference factors must be binary on {0, 1}");
    }
    if !(x2.date > x1.date) {
        return invalid("reference coupon dates must increase");
    }
    let t = scenario.t;
    if t >= x2.date {
        return Ok(0.0);
    }
    let m1 = FactorState::of(x1, scenario)?.mean()?;
    let m2 = FactorState::of(x2, scenario)?.mean()?;
    let (g, n) = (cds.premium, cds.protection);
    let p2 = curve.forward_discount(t, x2.date);
    if t >= x1.date {
        return Ok(m1 * ((g + n) * p2 * m2 - n * p2));
    }
    let p1 = curve.forward_discount(t, x1.date);
    Ok(-n * p1 + ((g + n) * p1 - n * p2) * m1 + (g + n) * p2 * m1 * m2)
}

/// Basket of digital bonds in maturity order, represented by independent
/// binary factors on a binary tree. Node `k` has children `2k` (taken when
/// `X_k = 1`) and `2k + 1` (when `X_k = 0`); nodes at depth `d` are revealed
/// at the maturity of bond `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basket {
    pub maturities: Vec<f64>,
    /// `Q(X_k = 1)` in node order `k = 1, 2, ...`.
    pub probs: Vec<f64>,
    pub sigmas: Vec<f64>,
}

pub const MAX_BASKET_BONDS: usize = 12;

impl Basket {
    pub fn node_id(k: usize) -> String {
        format!("B{k}")
    }

    fn validate(&self) -> Result<usize> {
        let n = self.maturities.len();
        if n == 0 {
            return invalid("basket needs at least one bond");
        }
        if n > MAX_BASKET_BONDS {
            return Err(Error::UnsupportedSize(format!("basket of {n} bonds exceeds {MAX_BASKET_BONDS}")));
        }
        let nodes = (1usize << n) - 1;
        if self.probs.len() != nodes || self.sigmas.len() != nodes {
            return invalid(format!("basket of {n} bonds needs {nodes} node probabilities and sigmas"));
        }
        if self.maturities.windows(2).any(|w| w[1] < w[0]) {
            return invalid("basket maturities must be in chronological order");
        }
        Ok(n)
    }

    pub fn factors(&self) -> Result<Vec<XFactor>> {
        self.validate()?;
        (1..=self.probs.len())
            .map(|k| {
                let depth = k.ilog2() as usize;
                XFactor::binary(&Self::node_id(k), self.maturities[depth], self.sigmas[k - 1], self.probs[k - 1])
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasketValue {
    pub bonds: Vec<f64>,
    pub total: f64,
}

pub fn price_basket(basket: &Basket, scenario: &MarketScenario, curve: &DiscountCurve) -> Result<BasketValue> {
    let n = basket.validate()?;
    let factors = basket.factors()?;
    let means = factors
        .iter()
        .map(|f| FactorState::of(f, scenario)?.mean())
        .collect::<Result<Vec<_>>>()?;
    // reach[k]: conditional probability that the payoff tree reaches node k
    let mut reach = vec![0.0; means.len() + 1];
    reach[1] = 1.0;
    let mut pays = vec![0.0; n];
    for k in 1..=means.len() {
        let m = means[k - 1];
        pays[k.ilog2() as usize] += reach[k] * m;
        if 2 * k < reach.len() {
            reach[2 * k] = reach[k] * m;
            reach[2 * k + 1] = reach[k] * (1.0 - m);
        }
    }
    let bonds: Vec<f64> = pays
        .iter()
        .zip(&basket.maturities)
        .map(|(e, &mat)| if mat > scenario.t { curve.forward_discount(scenario.t, mat) * e } else { 0.0 })
        .collect();
    Ok(BasketValue { total: bonds.iter().sum(), bonds })
}

/// `n` bonds maturing together, with payoff `n - Z_1 - Z_1 Z_2 - ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousBasket {
    pub maturity: f64,
    /// `Q(Z_j = 1)`.
    pub probs: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl HomogeneousBasket {
    pub fn factor_id(j: usize) -> String {
        format!("Z{}", j + 1)
    }

    pub fn factors(&self) -> Result<Vec<XFactor>> {
        if self.probs.is_empty() || self.probs.len() != self.sigmas.len() {
            return invalid("homogeneous basket needs matching chain probabilities and sigmas");
        }
        (0..self.probs.len())
            .map(|j| XFactor::binary(&Self::factor_id(j), self.maturity, self.sigmas[j], self.probs[j]))
            .collect()
    }

    /// Running products `E_t[Z_1] ... E_t[Z_k]`, `k = 1..n`.
    fn chain(&self, scenario: &MarketScenario) -> Result<Vec<f64>> {
        let mut acc = 1.0;
        self.factors()?
            .iter()
            .map(|f| {
                acc *= FactorState::of(f, scenario)?.mean()?;
                Ok(acc)
            })
            .collect()
    }
}

pub fn homogeneous_basket_value(
    basket: &HomogeneousBasket,
    scenario: &MarketScenario,
    curve: &DiscountCurve,
) -> Result<f64> {
    if scenario.t >= basket.maturity {
        return Ok(0.0);
    }
    let chain = basket.chain(scenario)?;
    let expected_defaults: f64 = chain.iter().sum();
    Ok(curve.forward_discount(scenario.t, basket.maturity) * (chain.len() as f64 - expected_defaults))
}

/// Digital paying 1 when at least `k` defaults occur.
pub fn tranche_digital(
    basket: &HomogeneousBasket,
    k: usize,
    scenario: &MarketScenario,
    curve: &DiscountCurve,
) -> Result<f64> {
    if k == 0 || k > basket.probs.len() {
        return invalid("tranche level must lie in 1..=n");
    }
    if scenario.t >= basket.maturity {
        return Ok(0.0);
    }
    Ok(curve.forward_discount(scenario.t, basket.maturity) * basket.chain(scenario)?[k - 1])
}

/// A factory bond due at `t1` and a restaurant bond due at `t2` whose
/// recovery depends on whether the factory paid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoryRestaurant {
    pub notional1: f64,
    pub notional2: f64,
    pub recovery1: f64,
    /// Factory defaulted, restaurant would otherwise have paid.
    pub recovery2_a: f64,
    /// Factory paid, restaurant defaulted.
    pub recovery2_b: f64,
    /// Both defaulted.
    pub recovery2_c: f64,
    pub t1: f64,
    pub t2: f64,
    /// `Q(X_1 = 1)` and `Q(X_2 = 1)`.
    pub p1: f64,
    pub p2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

pub const FACTORY: &str = "X1";
pub const RESTAURANT: &str = "X2";

impl FactoryRestaurant {
    fn factors(&self) -> Result<Vec<XFactor>> {
        Ok(vec![
            XFactor::binary(FACTORY, self.t1, self.sigma1, self.p1)?,
            XFactor::binary(RESTAURANT, self.t2, self.sigma2, self.p2)?,
        ])
    }

    pub fn graphs(&self) -> Result<(CashFlowGraph, CashFlowGraph)> {
        let (x1, x2) = (Expr::factor(FACTORY), Expr::factor(RESTAURANT));
        let (c1, c2) = (Expr::complement(FACTORY), Expr::complement(RESTAURANT));
        let bond1 = Expr::sum(vec![
            Expr::scale(self.notional1, x1.clone()),
            Expr::scale(self.recovery1 * self.notional1, c1.clone()),
        ]);
        let n2 = self.notional2;
        let bond2 = Expr::sum(vec![
            Expr::scale(n2, Expr::product(vec![x1.clone(), x2.clone()])),
            Expr::scale(self.recovery2_a * n2, Expr::product(vec![c1.clone(), x2])),
            Expr::scale(self.recovery2_b * n2, Expr::product(vec![x1, c2.clone()])),
            Expr::scale(self.recovery2_c * n2, Expr::product(vec![c1, c2])),
        ]);
        let g1 = CashFlowGraph::new(self.factors()?, vec![CashFlow { date: self.t1, payout: bond1 }])?;
        let g2 = CashFlowGraph::new(self.factors()?, vec![CashFlow { date: self.t2, payout: bond2 }])?;
        Ok((g1, g2))
    }

    /// Whether the recoveries break the ordering `R2b > R2a > R2c`.
    pub fn unusual_recovery_order(&self) -> bool {
        !(self.recovery2_b > self.recovery2_a && self.recovery2_a > self.recovery2_c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelatedPair {
    pub bond1: f64,
    pub bond2: f64,
    pub correlation: f64,
    pub unusual_recovery_order: bool,
}

/// Cosine of the angle between two volatility vectors; zero if either vanishes.
pub fn vector_correlation(a: &VolatilityVector, b: &VolatilityVector) -> f64 {
    if a.total == 0.0 || b.total == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.per_factor.iter().map(|(id, g)| g * b.per_factor.get(id).copied().unwrap_or(0.0)).sum();
    dot / (a.total * b.total)
}

pub fn correlated_pair_demo(
    pair: &FactoryRestaurant,
    scenario: &MarketScenario,
    curve: &DiscountCurve,
) -> Result<CorrelatedPair> {
    let (g1, g2) = pair.graphs()?;
    let v1 = volatility_vector(&g1, scenario, curve)?;
    let v2 = volatility_vector(&g2, scenario, curve)?;
    Ok(CorrelatedPair {
        bond1: price_asset(&g1, scenario, curve)?,
        bond2: price_asset(&g2, scenario, curve)?,
        correlation: vector_correlation(&v1, &v2),
        unusual_recovery_order: pair.unusual_recovery_order(),
    })
}
