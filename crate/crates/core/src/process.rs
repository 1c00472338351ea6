//! Information processes, Brownian bridges and Bayesian filtering of a
//! single market factor.

use crate::error::{invalid, Error, Result};
use crate::numerics::quad::{self, Tolerance};
use crate::numerics::{normal, softmax};
use crate::rng::{path_streams, stream, StreamRng};
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Relative distance from the horizon below which conditional formulas refuse to run.
pub const MATURITY_CUTOFF: f64 = 1e-9;

/// Rejects negative times and times within `MATURITY_CUTOFF * horizon` of the horizon.
pub fn check_before_maturity(t: f64, horizon: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return invalid(format!("time {t} must be finite and non-negative"));
    }
    if t >= horizon - MATURITY_CUTOFF * horizon {
        return Err(Error::MaturitySingularity { t, horizon });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return invalid("horizon must be positive");
        }
        if points.is_empty() {
            return invalid("time grid is empty");
        }
        if points[0] != 0.0 {
            return invalid("time grid must start at 0");
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("time grid must be strictly increasing");
        }
        if *points.last().unwrap() > horizon {
            return invalid("time grid extends past the horizon");
        }
        Ok(TimeGrid { points, horizon })
    }

    /// `steps` equal intervals from 0 to `end`.
    pub fn uniform(horizon: f64, end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return invalid("need at least one step");
        }
        let mut points: Vec<f64> = (0..=steps).map(|k| end * k as f64 / steps as f64).collect();
        points[steps] = end;
        Self::new(points, horizon)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Finite payoff spectrum `h_0 < ... < h_n` with a-priori probabilities.
///
/// Zero probabilities are accepted so that degenerate claims and posteriors can
/// be represented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePayoff {
    levels: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscretePayoff {
    pub fn new(levels: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || levels.len() != probs.len() {
            return invalid("levels and probabilities must be non-empty and equally long");
        }
        if levels.iter().any(|h| !h.is_finite()) {
            return invalid("payoff levels must be finite");
        }
        if levels.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("payoff levels must be strictly increasing");
        }
        if probs.iter().any(|p| !(*p >= 0.0 && *p <= 1.0)) {
            return invalid("probabilities must lie in [0, 1]");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        Ok(DiscretePayoff { levels, probs })
    }

    /// Two-point spectrum `{h0, h1}` with `P(H = h1) = p1`.
    pub fn binary(h0: f64, h1: f64, p1: f64) -> Result<Self> {
        Self::new(vec![h0, h1], vec![1.0 - p1, p1])
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_binary(&self) -> bool {
        self.levels.len() == 2
    }

    pub fn mean(&self) -> f64 {
        self.levels.iter().zip(&self.probs).map(|(h, p)| h * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.levels.iter().zip(&self.probs).map(|(h, p)| p * (h - m).powi(2)).sum()
    }

    /// Same levels, new weights (used for posteriors).
    pub fn with_probs(&self, probs: Vec<f64>) -> Result<Self> {
        Self::new(self.levels.clone(), probs)
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (h, p) in self.levels.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *h;
            }
        }
        // rounding left a sliver above the cumulative sum
        let last = self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        self.levels[last]
    }
}

/// Parametric or tabulated a-priori density of a continuous factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContinuousDensity {
    /// `p(x) = exp(-x / mean) / mean` on `x >= 0`.
    Exponential { mean: f64 },
    /// `p(x) = rate^n x^(n-1) exp(-rate x) / (n-1)!` on `x >= 0`.
    Gamma { rate: f64, shape: u32 },
    Gaussian { mean: f64, var: f64 },
    /// Piecewise-linear density through `(grid[k], weights[k])`, normalised.
    Tabulated { grid: Vec<f64>, weights: Vec<f64> },
}

impl ContinuousDensity {
    pub fn exponential(mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return invalid("exponential mean must be positive");
        }
        Ok(ContinuousDensity::Exponential { mean })
    }

    pub fn gamma(rate: f64, shape: u32) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) || shape == 0 {
            return invalid("gamma needs rate > 0 and shape >= 1");
        }
        Ok(ContinuousDensity::Gamma { rate, shape })
    }

    pub fn gaussian(mean: f64, var: f64) -> Result<Self> {
        if !mean.is_finite() || !(var > 0.0 && var.is_finite()) {
            return invalid("gaussian needs finite mean and positive variance");
        }
        Ok(ContinuousDensity::Gaussian { mean, var })
    }

    pub fn tabulated(grid: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != weights.len() {
            return invalid("tabulated density needs matching grid and weights of length >= 2");
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
            return invalid("tabulated grid must be finite and strictly increasing");
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return invalid("tabulated weights must be non-negative");
        }
        let mass: f64 = grid
            .windows(2)
            .zip(weights.windows(2))
            .map(|(g, w)| 0.5 * (g[1] - g[0]) * (w[0] + w[1]))
            .sum();
        if !(mass > 0.0) {
            return invalid("tabulated density has zero mass");
        }
        let weights = weights.into_iter().map(|w| w / mass).collect();
        Ok(ContinuousDensity::Tabulated { grid, weights })
    }

    /// Validate a value that may have come from deserialisation.
    pub fn validated(self) -> Result<Self> {
        match self {
            ContinuousDensity::Exponential { mean } => Self::exponential(mean),
            ContinuousDensity::Gamma { rate, shape } => Self::gamma(rate, shape),
            ContinuousDensity::Gaussian { mean, var } => Self::gaussian(mean, var),
            ContinuousDensity::Tabulated { grid, weights } => Self::tabulated(grid, weights),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            ContinuousDensity::Exponential { mean } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -x / mean - mean.ln()
                }
            }
            ContinuousDensity::Gamma { rate, shape } => {
                if x < 0.0 || (x == 0.0 && *shape > 1) {
                    f64::NEG_INFINITY
                } else {
                    let n = *shape as f64;
                    n * rate.ln() + (n - 1.0) * if *shape > 1 { x.ln() } else { 0.0 }
                        - rate * x
                        - ln_factorial(*shape - 1)
                }
            }
            ContinuousDensity::Gaussian { mean, var } => {
                -0.5 * (x - mean).powi(2) / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
            }
            ContinuousDensity::Tabulated { .. } => self.pdf(x).ln(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            ContinuousDensity::Tabulated { grid, weights } => {
                if x < grid[0] || x > grid[grid.len() - 1] {
                    return 0.0;
                }
                let k = grid.partition_point(|g| *g <= x).clamp(1, grid.len() - 1);
                let (x0, x1) = (grid[k - 1], grid[k]);
                let s = (x - x0) / (x1 - x0);
                weights[k - 1] * (1.0 - s) + weights[k] * s
            }
            _ => self.ln_pdf(x).exp(),
        }
    }

    /// `(lo, hi)`, possibly infinite.
    pub fn support(&self) -> (f64, f64) {
        match self {
            ContinuousDensity::Exponential { .. } | ContinuousDensity::Gamma { .. } => {
                (0.0, f64::INFINITY)
            }
            ContinuousDensity::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            ContinuousDensity::Tabulated { grid, .. } => (grid[0], grid[grid.len() - 1]),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ContinuousDensity::Exponential { mean } => *mean,
            ContinuousDensity::Gamma { rate, shape } => *shape as f64 / rate,
            ContinuousDensity::Gaussian { mean, .. } => *mean,
            ContinuousDensity::Tabulated { grid, weights } => tabulated_moment(grid, weights, 1),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ContinuousDensity::Exponential { mean } => mean * mean,
            ContinuousDensity::Gamma { rate, shape } => *shape as f64 / (rate * rate),
            ContinuousDensity::Gaussian { var, .. } => *var,
            ContinuousDensity::Tabulated { grid, weights } => {
                let m = tabulated_moment(grid, weights, 1);
                tabulated_moment(grid, weights, 2) - m * m
            }
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match self {
            ContinuousDensity::Exponential { mean } => Exp::new(1.0 / mean).unwrap().sample(rng),
            ContinuousDensity::Gamma { rate, shape } => {
                Gamma::new(*shape as f64, 1.0 / rate).unwrap().sample(rng)
            }
            ContinuousDensity::Gaussian { mean, var } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + var.sqrt() * z
            }
            ContinuousDensity::Tabulated { grid, weights } => {
                sample_tabulated(grid, weights, rng.random())
            }
        }
    }

    pub(crate) fn kinks(&self) -> Vec<f64> {
        match self {
            ContinuousDensity::Tabulated { grid, .. } => grid.clone(),
            ContinuousDensity::Exponential { .. } | ContinuousDensity::Gamma { .. } => vec![0.0],
            ContinuousDensity::Gaussian { .. } => Vec::new(),
        }
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn tabulated_moment(grid: &[f64], weights: &[f64], power: i32) -> f64 {
    // exact for a piecewise-linear density: integrate x^power * linear piece
    let mut total = 0.0;
    for k in 1..grid.len() {
        let (a, b) = (grid[k - 1], grid[k]);
        let (wa, wb) = (weights[k - 1], weights[k]);
        let slope = (wb - wa) / (b - a);
        let c0 = wa - slope * a;
        let p = power as f64;
        let prim = |x: f64| c0 * x.powf(p + 1.0) / (p + 1.0) + slope * x.powf(p + 2.0) / (p + 2.0);
        total += prim(b) - prim(a);
    }
    total
}

fn sample_tabulated(grid: &[f64], weights: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    for k in 1..grid.len() {
        let (a, b) = (grid[k - 1], grid[k]);
        let (wa, wb) = (weights[k - 1], weights[k]);
        let mass = 0.5 * (b - a) * (wa + wb);
        if u < acc + mass || k == grid.len() - 1 {
            let need = (u - acc).max(0.0);
            let h = b - a;
            let slope = (wb - wa) / h;
            // solve wa*s + slope*s^2/2 = need for s in [0, h]
            let s = if slope.abs() < 1e-300 {
                if wa > 0.0 { need / wa } else { 0.0 }
            } else {
                let disc = (wa * wa + 2.0 * slope * need).max(0.0);
                2.0 * need / (wa + disc.sqrt()).max(f64::MIN_POSITIVE)
            };
            return a + s.clamp(0.0, h);
        }
        acc += mass;
    }
    grid[grid.len() - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Discrete(DiscretePayoff),
    Continuous(ContinuousDensity),
}

impl Factor {
    pub fn mean(&self) -> f64 {
        match self {
            Factor::Discrete(d) => d.mean(),
            Factor::Continuous(c) => c.mean(),
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match self {
            Factor::Discrete(d) => d.sample(rng),
            Factor::Continuous(c) => c.sample(rng),
        }
    }
}

/// `xi_t = sigma * H_T * t + beta_tT` on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformationProcessSpec {
    pub sigma: f64,
    pub horizon: f64,
    pub factor: Factor,
}

impl InformationProcessSpec {
    pub fn new(sigma: f64, horizon: f64, factor: Factor) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return invalid("information flow rate must be finite and non-negative");
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return invalid("horizon must be positive");
        }
        Ok(InformationProcessSpec { sigma, horizon, factor })
    }

    pub fn discrete(sigma: f64, horizon: f64, payoff: DiscretePayoff) -> Result<Self> {
        Self::new(sigma, horizon, Factor::Discrete(payoff))
    }

    pub fn continuous(sigma: f64, horizon: f64, density: ContinuousDensity) -> Result<Self> {
        Self::new(sigma, horizon, Factor::Continuous(density))
    }

    /// Coefficients `(a, b)` of the log-likelihood `a x - b x^2` at `(t, xi)`.
    pub fn likelihood_coefficients(&self, t: f64, xi: f64) -> Result<(f64, f64)> {
        check_before_maturity(t, self.horizon)?;
        let scale = self.horizon / (self.horizon - t);
        Ok((scale * self.sigma * xi, 0.5 * scale * self.sigma * self.sigma * t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    /// Drawn factor value, when the path carries one.
    pub terminal: Option<f64>,
}

fn bridge_with(grid: &TimeGrid, rng: &mut StreamRng) -> Vec<f64> {
    let horizon = grid.horizon();
    let pts = grid.points();
    let mut walk = Vec::with_capacity(pts.len());
    let mut b = 0.0;
    let mut prev = 0.0;
    for &t in pts {
        let z: f64 = StandardNormal.sample(rng);
        b += (t - prev).sqrt() * z;
        prev = t;
        walk.push(b);
    }
    let b_end = if prev < horizon {
        let z: f64 = StandardNormal.sample(rng);
        b + (horizon - prev).sqrt() * z
    } else {
        b
    };
    pts.iter()
        .zip(walk)
        .map(|(&t, w)| if t == 0.0 || t == horizon { 0.0 } else { w - t / horizon * b_end })
        .collect()
}

/// Brownian bridge on `grid` pinned at 0 and at the grid horizon.
pub fn sample_brownian_bridge(grid: &TimeGrid, rng_seed: u64) -> Result<PathSample> {
    bridge_path_at(grid, rng_seed, 0)
}

/// Bridge path number `index` of the family generated by `rng_seed`.
pub fn bridge_path_at(grid: &TimeGrid, rng_seed: u64, index: u64) -> Result<PathSample> {
    if grid.is_empty() {
        return invalid("empty grid");
    }
    let (mut noise, _) = path_streams(rng_seed, index);
    Ok(PathSample { grid: grid.clone(), values: bridge_with(grid, &mut noise), terminal: None })
}

/// Draws `H_T` from the factor law and an independent bridge.
pub fn sample_information_path(
    spec: &InformationProcessSpec,
    grid: &TimeGrid,
    rng_seed: u64,
) -> Result<PathSample> {
    information_path_at(spec, grid, rng_seed, 0)
}

pub fn information_path_at(
    spec: &InformationProcessSpec,
    grid: &TimeGrid,
    rng_seed: u64,
    index: u64,
) -> Result<PathSample> {
    let (_, mut factor_rng) = path_streams(rng_seed, index);
    let h = spec.factor.sample(&mut factor_rng);
    information_path_given(spec.sigma, grid, rng_seed, index, h)
}

/// Information path with the factor value fixed at `h`, driven by the same
/// bridge noise as `information_path_at(.., index)`.
pub fn information_path_given(
    sigma: f64,
    grid: &TimeGrid,
    rng_seed: u64,
    index: u64,
    h: f64,
) -> Result<PathSample> {
    let mut path = bridge_path_at(grid, rng_seed, index)?;
    for (v, &t) in path.values.iter_mut().zip(grid.points()) {
        *v += sigma * h * t;
    }
    if let Some(last) = path.values.last_mut() {
        if grid.points()[grid.len() - 1] == grid.horizon() {
            *last = sigma * h * grid.horizon();
        }
    }
    path.terminal = Some(h);
    Ok(path)
}

/// Standard normal draw from a dedicated stream; handy for bridge-measure Monte Carlo.
pub fn normal_stream(seed: u64, index: u64) -> impl FnMut() -> f64 {
    let mut rng = stream(seed, index);
    move || StandardNormal.sample(&mut rng)
}

/// Log of the unnormalised posterior weights.
pub(crate) fn posterior_log_weights(
    levels: &[f64],
    probs: &[f64],
    sigma: f64,
    horizon: f64,
    t: f64,
    xi: f64,
) -> Vec<f64> {
    let scale = horizon / (horizon - t);
    levels
        .iter()
        .zip(probs)
        .map(|(h, p)| {
            if *p == 0.0 {
                f64::NEG_INFINITY
            } else {
                p.ln() + scale * (sigma * h * xi - 0.5 * sigma * sigma * h * h * t)
            }
        })
        .collect()
}

/// Posterior weights on a raw spectrum, with an explicit information horizon.
pub fn posterior_weights(
    levels: &[f64],
    probs: &[f64],
    sigma: f64,
    horizon: f64,
    t: f64,
    xi: f64,
) -> Result<Vec<f64>> {
    check_before_maturity(t, horizon)?;
    if !xi.is_finite() {
        return invalid("information value must be finite");
    }
    if t == 0.0 || sigma == 0.0 {
        return Ok(probs.to_vec());
    }
    Ok(softmax(&posterior_log_weights(levels, probs, sigma, horizon, t, xi)))
}

/// Conditional probabilities `P(H_T = h_i | xi_t = xi)`.
pub fn conditional_probs(
    payoff: &DiscretePayoff,
    spec: &InformationProcessSpec,
    t: f64,
    xi: f64,
) -> Result<Vec<f64>> {
    posterior_weights(payoff.levels(), payoff.probs(), spec.sigma, spec.horizon, t, xi)
}

/// Conditional mean of the payoff given `xi_t = xi`.
pub fn conditional_mean(
    payoff: &DiscretePayoff,
    spec: &InformationProcessSpec,
    t: f64,
    xi: f64,
) -> Result<f64> {
    let w = conditional_probs(payoff, spec, t, xi)?;
    Ok(payoff.levels().iter().zip(&w).map(|(h, p)| h * p).sum())
}

/// Posterior of a continuous factor, `pi(x) ∝ p(x) exp(a x - b x^2)`.
#[derive(Debug, Clone)]
pub struct Posterior {
    prior: ContinuousDensity,
    a: f64,
    b: f64,
    tol: Tolerance,
    log_norm: OnceLock<std::result::Result<(f64, f64), Error>>,
}

/// Posterior density of a continuous factor at `(t, xi)`.
pub fn conditional_density(
    density: &ContinuousDensity,
    spec: &InformationProcessSpec,
    t: f64,
    xi: f64,
) -> Result<Posterior> {
    let (a, b) = spec.likelihood_coefficients(t, xi)?;
    if !xi.is_finite() {
        return invalid("information value must be finite");
    }
    Ok(Posterior::new(density.clone(), a, b))
}

impl Posterior {
    pub fn new(prior: ContinuousDensity, a: f64, b: f64) -> Self {
        Posterior { prior, a, b, tol: Tolerance::rel(1e-12), log_norm: OnceLock::new() }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn prior(&self) -> &ContinuousDensity {
        &self.prior
    }

    /// `(a, b)` in the exponent `a x - b x^2`.
    pub fn coefficients(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn log_weight(&self, x: f64) -> f64 {
        self.prior.ln_pdf(x) + self.a * x - self.b * x * x
    }

    fn is_prior(&self) -> bool {
        self.a == 0.0 && self.b == 0.0
    }

    /// Location of the posterior peak.
    pub fn mode(&self) -> f64 {
        let (a, b) = (self.a, self.b);
        match &self.prior {
            ContinuousDensity::Gaussian { mean, var } => (mean / var + a) / (1.0 / var + 2.0 * b),
            ContinuousDensity::Exponential { mean } => {
                let slope = a - 1.0 / mean;
                if b > 0.0 { (slope / (2.0 * b)).max(0.0) } else { 0.0 }
            }
            ContinuousDensity::Gamma { rate, shape } => {
                let n1 = (*shape - 1) as f64;
                let slope = a - rate;
                if b > 0.0 {
                    (slope + (slope * slope + 8.0 * b * n1).sqrt()) / (4.0 * b)
                } else if slope < 0.0 {
                    n1 / -slope
                } else {
                    0.0
                }
            }
            ContinuousDensity::Tabulated { grid, .. } => {
                let mut best = grid[0];
                let mut best_w = f64::NEG_INFINITY;
                for k in 0..grid.len() {
                    let cands = if k + 1 < grid.len() {
                        vec![grid[k], 0.5 * (grid[k] + grid[k + 1])]
                    } else {
                        vec![grid[k]]
                    };
                    for x in cands {
                        let w = self.log_weight(x);
                        if w > best_w {
                            best_w = w;
                            best = x;
                        }
                    }
                }
                best
            }
        }
    }

    /// Break points covering all but a negligible part of the posterior mass.
    pub fn integration_breaks(&self) -> Vec<f64> {
        let (lo, hi) = self.prior.support();
        let mode = self.mode();
        let peak = self.log_weight(mode);
        let mut scale = self.prior.variance().sqrt();
        if self.b > 0.0 {
            scale = scale.min(1.0 / (2.0 * self.b).sqrt());
        }
        if !(scale > 0.0) {
            scale = 1.0;
        }
        // walk out until the log weight has dropped by 60 (e^-60 relative)
        let walk = |dir: f64, edge: f64| -> f64 {
            let mut step = scale;
            let mut x = mode;
            for _ in 0..400 {
                let next = x + dir * step;
                if (dir > 0.0 && next >= edge) || (dir < 0.0 && next <= edge) {
                    return edge;
                }
                x = next;
                if self.log_weight(x) < peak - 60.0 {
                    return x;
                }
                if self.log_weight(x) < peak - 20.0 {
                    continue;
                }
                step *= 1.5;
            }
            x
        };
        let left = walk(-1.0, lo);
        let right = walk(1.0, hi);
        let mut breaks = vec![left, right, mode];
        for k in [-1.0, 1.0] {
            let x = mode + k * scale;
            if x > left && x < right {
                breaks.push(x);
            }
        }
        for x in self.prior.kinks() {
            if x > left && x < right {
                breaks.push(x);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks
    }

    /// `(log of the normalising integral relative to the peak, peak log weight)`.
    fn normaliser(&self) -> Result<(f64, f64)> {
        self.log_norm
            .get_or_init(|| {
                let mode = self.mode();
                let peak = self.log_weight(mode);
                let breaks = self.integration_breaks();
                let z = quad::integrate_pieces(&|x| (self.log_weight(x) - peak).exp(), &breaks, self.tol)?;
                if !(z.value > 0.0) {
                    return Err(Error::Divergence("posterior normaliser vanished".into()));
                }
                Ok((z.value.ln(), peak))
            })
            .clone()
    }

    /// Normalised posterior density.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if let ContinuousDensity::Gaussian { .. } = self.prior {
            let (m, v) = self.moments()?;
            return Ok((-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt());
        }
        let (ln_z, peak) = self.normaliser()?;
        Ok((self.log_weight(x) - peak - ln_z).exp())
    }

    /// Posterior expectation of `f` by adaptive quadrature.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let (ln_z, peak) = self.normaliser()?;
        let breaks = self.integration_breaks();
        let v = quad::integrate_pieces(
            &|x| f(x) * (self.log_weight(x) - peak - ln_z).exp(),
            &breaks,
            Tolerance { abs: 1e-300, ..self.tol },
        )?;
        Ok(v.value)
    }

    /// Posterior `(mean, variance)`: closed form where available, else quadrature.
    pub fn moments(&self) -> Result<(f64, f64)> {
        if self.is_prior() {
            return Ok((self.prior.mean(), self.prior.variance()));
        }
        let (a, b) = (self.a, self.b);
        match &self.prior {
            ContinuousDensity::Gaussian { mean, var } => {
                let precision = 1.0 / var + 2.0 * b;
                Ok(((mean / var + a) / precision, 1.0 / precision))
            }
            ContinuousDensity::Exponential { mean } => {
                if b == 0.0 {
                    return self.quadrature_moments();
                }
                let big_a = 2.0 * b;
                let big_b = a - 1.0 / mean;
                let y = big_b / big_a.sqrt();
                let lambda = normal::inv_mills(y);
                let m = big_b / big_a + lambda / big_a.sqrt();
                let v = (1.0 - y * lambda - lambda * lambda) / big_a;
                Ok((m, v))
            }
            ContinuousDensity::Gamma { rate, shape } => {
                if b == 0.0 {
                    return self.quadrature_moments();
                }
                match crate::equity::gamma_posterior_moments(2.0 * b, a - rate, *shape) {
                    Some(mv) => Ok(mv),
                    None => self.quadrature_moments(),
                }
            }
            ContinuousDensity::Tabulated { .. } => self.quadrature_moments(),
        }
    }

    /// Posterior `(mean, variance)` by quadrature regardless of the prior family.
    pub fn quadrature_moments(&self) -> Result<(f64, f64)> {
        let mode = self.mode();
        let m1 = self.expect(|x| x - mode)?;
        let m2 = self.expect(|x| (x - mode).powi(2))?;
        Ok((mode + m1, (m2 - m1 * m1).max(0.0)))
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(self.moments()?.0)
    }
}

/// `W_t = xi_t + int xi_s/(T-s) ds - sigma T int H_sT/(T-s) ds`, trapezoid rule on the grid.
pub fn innovations_path(
    spec: &InformationProcessSpec,
    xi_path: &PathSample,
    payoff: &DiscretePayoff,
) -> Result<PathSample> {
    let horizon = spec.horizon;
    let pts = xi_path.grid.points();
    if pts.len() != xi_path.values.len() {
        return invalid("path values do not match grid");
    }
    let last = pts[pts.len() - 1];
    check_before_maturity(last, horizon)?;
    let mut out = Vec::with_capacity(pts.len());
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (&s, &xi) in pts.iter().zip(&xi_path.values) {
        let h = conditional_mean(payoff, spec, s, xi)?;
        let g = (xi - spec.sigma * horizon * h) / (horizon - s);
        if let Some((s0, g0)) = prev {
            integral += 0.5 * (s - s0) * (g + g0);
        }
        prev = Some((s, g));
        out.push(xi + integral);
    }
    Ok(PathSample { grid: xi_path.grid.clone(), values: out, terminal: xi_path.terminal })
}
