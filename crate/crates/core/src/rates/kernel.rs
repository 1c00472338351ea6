//! Discrete-time pricing kernels on a scenario tree.

use serde::{Deserialize, Serialize};

use super::lattice::{ScenarioTree, Values};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    pub tree: ScenarioTree,
    /// `t_0 = 0 < t_1 < ...`, one per level, in years.
    pub dates: Vec<f64>,
    /// `pi_i` at every node.
    pub kernel: Values,
}

impl KernelModel {
    /// The kernel must be positive and strictly decrease in conditional expectation.
    pub fn new(tree: ScenarioTree, dates: Vec<f64>, kernel: Values) -> Result<Self> {
        tree.check_process(&kernel, "kernel")?;
        check_dates(&dates, tree.depth())?;
        if kernel[1..].iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return invalid("pricing kernel must be positive and finite");
        }
        if let Some(k) = (1..(1 << tree.depth())).find(|&k| !(tree.step(&kernel, k) < kernel[k])) {
            return invalid(format!("pricing kernel is not a strict supermartingale at node {k}"));
        }
        Ok(KernelModel { tree, dates, kernel })
    }

    pub fn horizon(&self) -> usize {
        self.tree.depth()
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        if i > j || j > self.horizon() {
            return invalid(format!("bond ({i}, {j}) outside the lattice horizon {}", self.horizon()));
        }
        Ok(())
    }

    /// `P_ij = E_i[pi_j] / pi_i` at every level-`i` node, for all `i <= j`.
    pub fn bond_prices(&self, j: usize) -> Result<Values> {
        self.check_pair(0, j)?;
        let mut v = self.tree.conditional(&self.kernel, j);
        for (k, x) in v.iter_mut().enumerate().skip(1) {
            *x /= self.kernel[k];
        }
        Ok(v)
    }

    /// `P_ij` at one node of level `i`. Quoted as 1 at maturity.
    pub fn bond_price(&self, i: usize, j: usize, node: usize) -> Result<f64> {
        self.check_pair(i, j)?;
        if ScenarioTree::level(node) != i {
            return invalid(format!("node {node} is not on level {i}"));
        }
        if i == j {
            return Ok(1.0);
        }
        // expectation over the subtree below `node`
        let mut layer = vec![self.kernel[node]];
        let mut first = node;
        for _ in i..j {
            first *= 2;
            layer = (first..first + 2 * layer.len()).map(|k| self.kernel[k]).collect();
        }
        let mut level_first = first;
        while level_first > node {
            let parent_first = level_first / 2;
            layer = (0..layer.len() / 2)
                .map(|m| {
                    let q = self.tree.up_prob(parent_first + m);
                    q * layer[2 * m] + (1.0 - q) * layer[2 * m + 1]
                })
                .collect();
            level_first = parent_first;
        }
        Ok(layer[0] / self.kernel[node])
    }

    /// Value of the bond under the dividend convention: zero once it has paid.
    pub fn bond_price_ex_dividend(&self, i: usize, j: usize, node: usize) -> Result<f64> {
        if i == j {
            self.check_pair(i, j)?;
            return Ok(0.0);
        }
        self.bond_price(i, j, node)
    }

    /// `E_i[sum over n > i of pi_n D_n] / pi_i` for a dividend process.
    pub fn price_dividends(&self, dividends: &[f64]) -> Result<Values> {
        self.tree.check_process(dividends, "dividend process")?;
        let n = self.horizon();
        let mut acc = vec![0.0; self.tree.len()];
        for level in (0..n).rev() {
            for k in ScenarioTree::nodes(level) {
                let q = self.tree.up_prob(k);
                let flow = |c: usize| self.kernel[c] * dividends[c] + acc[c];
                acc[k] = q * flow(2 * k) + (1.0 - q) * flow(2 * k + 1);
            }
        }
        Ok((0..acc.len()).map(|k| if k == 0 { 0.0 } else { acc[k] / self.kernel[k] }).collect())
    }

    /// Largest martingale defect of `pi_i S_i + sum_{n <= i} pi_n D_n`.
    pub fn axiom_a_residual(&self, price: &[f64], dividends: &[f64]) -> Result<f64> {
        self.tree.check_process(price, "price process")?;
        self.tree.check_process(dividends, "dividend process")?;
        let mut paid = vec![0.0; self.tree.len()];
        for k in 2..paid.len() {
            paid[k] = paid[k / 2] + self.kernel[k] * dividends[k];
        }
        let m: Values = (0..paid.len()).map(|k| if k == 0 { 0.0 } else { self.kernel[k] * price[k] + paid[k] }).collect();
        Ok(self.tree.martingale_residual(&m))
    }
}

pub(crate) fn check_dates(dates: &[f64], depth: usize) -> Result<()> {
    if dates.len() != depth + 1 {
        return invalid(format!("need {} dates for a depth-{depth} lattice", depth + 1));
    }
    if dates[0] != 0.0 || dates.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("dates must start at 0 and increase strictly");
    }
    Ok(())
}

/// `pi_i = alpha_i + beta_i N_i` with `N` a binomial martingale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalModelSpec {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub n0: f64,
    pub up: f64,
    pub down: f64,
    /// Years per level; defaults to one.
    #[serde(default)]
    pub dates: Option<Vec<f64>>,
}

impl RationalModelSpec {
    pub fn depth(&self) -> usize {
        self.alpha.len().saturating_sub(1)
    }

    /// Up probability making `N` a martingale.
    pub fn up_prob(&self) -> f64 {
        (1.0 - self.down) / (self.up - self.down)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.len() < 2 || self.alpha.len() != self.beta.len() {
            return invalid("alpha and beta need the same length, at least two");
        }
        for (name, seq) in [("alpha", &self.alpha), ("beta", &self.beta)] {
            if seq.iter().any(|x| !(*x > 0.0 && x.is_finite())) || seq.windows(2).any(|w| !(w[1] < w[0])) {
                return invalid(format!("{name} must be positive and strictly decreasing"));
            }
        }
        if !(self.n0 > 0.0 && self.down > 0.0 && self.down < 1.0 && self.up > 1.0 && self.up.is_finite()) {
            return invalid("need N_0 > 0 and 0 < down < 1 < up");
        }
        Ok(())
    }

    pub fn tree(&self) -> Result<ScenarioTree> {
        self.validate()?;
        ScenarioTree::binomial(self.depth(), self.up_prob())
    }

    pub fn martingale(&self, tree: &ScenarioTree) -> Values {
        let (n0, u, d) = (self.n0, self.up, self.down);
        tree.process(|level, k| {
            let ups = ScenarioTree::up_moves(k) as i32;
            n0 * u.powi(ups) * d.powi(level as i32 - ups)
        })
    }

    pub fn model(&self) -> Result<KernelModel> {
        let tree = self.tree()?;
        let n = self.martingale(&tree);
        let kernel = tree.process(|level, k| self.alpha[level] + self.beta[level] * n[k]);
        let dates = self.dates.clone().unwrap_or_else(|| (0..=self.depth()).map(|i| i as f64).collect());
        KernelModel::new(tree, dates, kernel)
    }

    /// Closed-form `P_ij` given `N_i`.
    pub fn bond_price(&self, i: usize, j: usize, n_i: f64) -> f64 {
        (self.alpha[j] + self.beta[j] * n_i) / (self.alpha[i] + self.beta[i] * n_i)
    }

    /// Closed-form previsible money-market account.
    pub fn money_market(&self, tree: &ScenarioTree) -> Values {
        let n = self.martingale(tree);
        let mut b = vec![0.0; tree.len()];
        b[1] = 1.0;
        for k in 2..b.len() {
            let level = ScenarioTree::level(k);
            let prev = n[k / 2];
            b[k] = b[k / 2] * (self.alpha[level - 1] + self.beta[level - 1] * prev)
                / (self.alpha[level] + self.beta[level] * prev);
        }
        b
    }

    /// Closed-form `rho_i = pi_i B_i`.
    pub fn rho(&self, tree: &ScenarioTree) -> Values {
        let n = self.martingale(tree);
        let mut rho = vec![0.0; tree.len()];
        rho[1] = self.alpha[0] + self.beta[0] * n[1];
        for k in 2..rho.len() {
            let level = ScenarioTree::level(k);
            let (a, b) = (self.alpha[level], self.beta[level]);
            rho[k] = rho[k / 2] * (a + b * n[k]) / (a + b * n[k / 2]);
        }
        rho
    }
}

/// Natural money-market account `B_i = prod (pi_{n-1} / E_{n-1}[pi_n])`.
pub fn money_market(model: &KernelModel) -> Values {
    let (tree, pi) = (&model.tree, &model.kernel);
    let mut b = vec![0.0; tree.len()];
    b[1] = 1.0;
    for k in 2..b.len() {
        let p = k / 2;
        b[k] = b[p] * pi[p] / tree.step(pi, p);
    }
    b
}

/// Short rate `r_i` set at `i - 1`, stored on level-`i` nodes.
pub fn short_rates(model: &KernelModel) -> Values {
    let (tree, pi) = (&model.tree, &model.kernel);
    let mut r = vec![0.0; tree.len()];
    for k in 2..r.len() {
        let p = k / 2;
        r[k] = pi[p] / tree.step(pi, p) - 1.0;
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoobDecomposition {
    pub martingale: Values,
    pub compensator: Values,
    /// The compensator accumulated as `pi_n r_{n+1} P_{n,n+1}`.
    pub compensator_short_rate: Values,
}

/// `pi_i = Y_i - A_i` with `Y` a martingale and `A` previsible increasing.
pub fn doob_decomposition(model: &KernelModel) -> DoobDecomposition {
    let (tree, pi) = (&model.tree, &model.kernel);
    let len = tree.len();
    let (mut a, mut a_r) = (vec![0.0; len], vec![0.0; len]);
    for k in 2..len {
        let p = k / 2;
        let next = tree.step(pi, p);
        a[k] = a[p] + (pi[p] - next);
        let bond = next / pi[p];
        let r = 1.0 / bond - 1.0;
        a_r[k] = a_r[p] + pi[p] * r * bond;
    }
    let y = (0..len).map(|k| if k == 0 { 0.0 } else { pi[k] + a[k] }).collect();
    DoobDecomposition { martingale: y, compensator: a, compensator_short_rate: a_r }
}

/// Martingales `m_in = E_i[g_n]` with `g_n = pi_{n-1} - E_{n-1}[pi_n]`, plus
/// the tail `E_i[pi_N]` standing in for everything beyond the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct FlesakerHughston {
    /// `g_{level+1}` on each non-terminal node.
    pub increments: Values,
    pub tail: Values,
    horizon: usize,
}

pub fn fh_representation(model: &KernelModel) -> FlesakerHughston {
    let (tree, pi) = (&model.tree, &model.kernel);
    let n = model.horizon();
    let mut g = vec![0.0; tree.len()];
    for k in 1..(1 << n) {
        g[k] = pi[k] - tree.step(pi, k);
    }
    FlesakerHughston { increments: g, tail: tree.conditional(pi, n), horizon: n }
}

impl FlesakerHughston {
    /// `m_in` on levels `0..n`.
    pub fn martingale(&self, tree: &ScenarioTree, n: usize) -> Result<Values> {
        if n < 1 || n > self.horizon {
            return invalid(format!("martingale index {n} outside 1..={}", self.horizon));
        }
        Ok(tree.conditional(&self.increments, n - 1))
    }

    /// Tail sums `T_j = sum_{n > j} m_in + E_i[pi_N]` for `j` from the horizon
    /// down to 0, handed to `visit(j, T_j)` while valid on levels `0..=j`.
    fn tail_sums(&self, tree: &ScenarioTree, mut visit: impl FnMut(usize, &[f64])) {
        let mut acc = self.tail.clone();
        visit(self.horizon, &acc);
        for j in (0..self.horizon).rev() {
            let m = tree.conditional(&self.increments, j);
            for (a, x) in acc.iter_mut().zip(&m) {
                *a += x;
            }
            visit(j, &acc[..m.len()]);
        }
    }

    /// Denominators `T_i` evaluated on level-`i` nodes.
    fn denominators(&self, tree: &ScenarioTree) -> Values {
        let mut d = vec![0.0; tree.len()];
        self.tail_sums(tree, |j, acc| {
            let r = ScenarioTree::nodes(j);
            d[r.clone()].copy_from_slice(&acc[r]);
        });
        d
    }

    /// Reconstructed `P_ij` at every level-`i` node for all `i <= j`, handed to
    /// `visit(j, prices)`.
    pub fn bond_prices(&self, tree: &ScenarioTree, mut visit: impl FnMut(usize, &[f64])) {
        let d = self.denominators(tree);
        self.tail_sums(tree, |j, acc| {
            let p: Values = acc.iter().enumerate().map(|(k, x)| if k == 0 { 0.0 } else { x / d[k] }).collect();
            visit(j, &p);
        });
    }

    /// Largest `|P_ij(FH) - P_ij(kernel)|` over all nodes and `i <= j`.
    pub fn reconstruction_error(&self, model: &KernelModel) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mut failure = None;
        self.bond_prices(&model.tree, |j, p| match model.bond_prices(j) {
            Ok(direct) => {
                for k in 1..p.len() {
                    worst = worst.max((p[k] - direct[k]).abs());
                }
            }
            Err(e) => failure = Some(e),
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(worst),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssetCheck {
    /// Worst defect of `pi_i = E_i[pi_j] + E_i[sum_{i<n<=j} pi_n rbar_n]`.
    pub identity_residual: f64,
    /// Worst defect of `pi_i = E_i[G_N] - G_i + E_i[pi_N]`.
    pub potential_residual: f64,
    /// Worst martingale defect of `pi_i Bbar_i`.
    pub martingale_residual: f64,
    pub holds: bool,
}

pub const IDENTITY_TOLERANCE: f64 = 1e-13;

/// Check the kernel identities for a strictly increasing positive-return asset.
pub fn constant_value_asset_check(model: &KernelModel, asset: &[f64]) -> Result<AssetCheck> {
    let tree = &model.tree;
    tree.check_process(asset, "positive-return asset")?;
    if !(asset[1] > 0.0) {
        return invalid("positive-return asset must start positive");
    }
    if let Some(k) = (2..asset.len()).find(|&k| !(asset[k] > asset[k / 2])) {
        return invalid(format!("positive-return asset does not increase into node {k}"));
    }
    let pi = &model.kernel;
    let n = model.horizon();
    // G_i = sum_{m <= i} pi_m rbar_m along the path
    let mut g = vec![0.0; tree.len()];
    for k in 2..g.len() {
        let rbar = (asset[k] - asset[k / 2]) / asset[k / 2];
        g[k] = g[k / 2] + pi[k] * rbar;
    }
    let mut identity: f64 = 0.0;
    let mut potential: f64 = 0.0;
    for j in 1..=n {
        let h: Values = (0..tree.len()).map(|k| if k == 0 { 0.0 } else { pi[k] + g[k] }).collect();
        let e = tree.conditional(&h, j);
        for k in 1..(1 << j) {
            let defect = (pi[k] - (e[k] - g[k])).abs();
            identity = identity.max(defect);
            if j == n {
                potential = potential.max(defect);
            }
        }
    }
    let rho: Values = pi.iter().zip(asset).map(|(p, b)| p * b).collect();
    let martingale = tree.martingale_residual(&rho);
    let scale = pi[1];
    let tol = IDENTITY_TOLERANCE * scale;
    Ok(AssetCheck {
        identity_residual: identity,
        potential_residual: potential,
        martingale_residual: martingale,
        holds: identity <= tol && potential <= tol && martingale <= tol * asset[1].max(1.0),
    })
}

/// One-period binomial positive-return asset. Given the risky asset
/// `(s0 -> u | d)`, the money account `b0 -> b1`, an initial value `s_bar0`
/// and the down value `d_bar`, returns `(p_star, u_bar)`.
pub fn one_period_positive_return(
    s0: f64,
    b0: f64,
    b1: f64,
    up: f64,
    down: f64,
    s_bar0: f64,
    d_bar: f64,
) -> Result<(f64, f64)> {
    let growth = b1 / b0;
    if !(b1 > b0 && b0 > 0.0) || !(up > s0 * growth && s0 * growth > down) {
        return invalid("need B1 > B0 > 0 and U > S0 B1/B0 > D");
    }
    if !(s_bar0 > 0.0) {
        return invalid("initial value must be positive");
    }
    let p_star = (s0 * growth - down) / (up - down);
    let ratio = d_bar / s_bar0;
    if !((growth - p_star) / (1.0 - p_star) > ratio && ratio > 1.0) {
        return invalid("down value outside the positive-return range");
    }
    let u_bar = (s_bar0 * growth - (1.0 - p_star) * d_bar) / p_star;
    Ok((p_star, u_bar))
}

/// Positive-return asset built node by node from the one-period
/// construction; `theta` in (0, 1) places the down value inside its range.
pub fn positive_return_asset(model: &KernelModel, theta: f64) -> Result<Values> {
    if !(theta > 0.0 && theta < 1.0) {
        return invalid("theta must lie strictly between 0 and 1");
    }
    let (tree, pi) = (&model.tree, &model.kernel);
    let mut b = vec![0.0; tree.len()];
    b[1] = 1.0;
    for k in 1..(1 << model.horizon()) {
        let q = tree.up_prob(k);
        let next = tree.step(pi, k);
        let growth = pi[k] / next;
        // risk-neutral probability of the up move
        let p_star = q * pi[2 * k] / next;
        let d_ratio = 1.0 + theta * (growth - 1.0) / (1.0 - p_star);
        let u_ratio = (growth - (1.0 - p_star) * d_ratio) / p_star;
        b[2 * k] = b[k] * u_ratio;
        b[2 * k + 1] = b[k] * d_ratio;
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelFromIncreasing {
    pub model: KernelModel,
    pub rates: Values,
    pub asset: Values,
}

/// Kernel `pi_i = E_i[G_N] + tail - G_i` from a strictly increasing process
/// `G` with `G_0 = 0`, together with `rbar_i = (G_i - G_{i-1}) / pi_i` and
/// `Bbar_i = prod (1 + rbar_n)`.
pub fn build_kernel_from_g(tree: ScenarioTree, dates: Vec<f64>, g: &[f64], tail: f64) -> Result<KernelFromIncreasing> {
    tree.check_process(g, "increasing process")?;
    if g[1] != 0.0 {
        return invalid("increasing process must start at zero");
    }
    if let Some(k) = (2..g.len()).find(|&k| !(g[k] > g[k / 2])) {
        return invalid(format!("process does not increase strictly into node {k}"));
    }
    if !(tail > 0.0 && tail.is_finite()) {
        return invalid("tail value beyond the horizon must be positive");
    }
    let n = tree.depth();
    // E_i[G_N], which is G_N itself on the last level
    let terminal = tree.conditional(g, n);
    let kernel: Values = (0..tree.len()).map(|k| if k == 0 { 0.0 } else { terminal[k] + tail - g[k] }).collect();
    let mut rates = vec![0.0; tree.len()];
    let mut asset = vec![0.0; tree.len()];
    asset[1] = 1.0;
    for k in 2..tree.len() {
        rates[k] = (g[k] - g[k / 2]) / kernel[k];
        asset[k] = asset[k / 2] * (1.0 + rates[k]);
    }
    let model = KernelModel::new(tree, dates, kernel).map_err(|e| match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("constructed kernel invalid: {m}")),
        other => other,
    })?;
    Ok(KernelFromIncreasing { model, rates, asset })
}
