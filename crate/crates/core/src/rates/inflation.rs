//! Price level and pricing kernels for a representative agent with
//! log-separable utility `A ln(k) + B ln(l)` in consumption `k` and the real
//! liquidity benefit `l = lambda M / C` of the money supply.

use serde::Serialize;

use super::kernel::{check_dates, KernelModel};
use super::lattice::{ScenarioTree, Values};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Preferences {
    /// Weight on consumption.
    pub a: f64,
    /// Weight on liquidity.
    pub b: f64,
    /// Utility discount rate per year.
    pub gamma: f64,
    /// Lagrange multiplier of the budget constraint.
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InflationModel {
    pub tree: ScenarioTree,
    pub dates: Vec<f64>,
    pub consumption: Values,
    pub money: Values,
    pub liquidity: Values,
    pub prefs: Preferences,
    pub price_level: Values,
    pub nominal_kernel: Values,
    pub real_kernel: Values,
}

impl InflationModel {
    pub fn new(
        tree: ScenarioTree,
        dates: Vec<f64>,
        consumption: Values,
        money: Values,
        liquidity: Values,
        prefs: Preferences,
    ) -> Result<Self> {
        check_dates(&dates, tree.depth())?;
        for (name, v) in [("consumption", &consumption), ("money supply", &money), ("liquidity benefit", &liquidity)] {
            tree.check_process(v, name)?;
            if v[1..].iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return invalid(format!("{name} must be strictly positive"));
            }
        }
        let Preferences { a, b, gamma, mu } = prefs;
        if [a, b, gamma, mu].iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return invalid("A, B, gamma and mu must be positive");
        }
        let discount = |k: usize| (-gamma * dates[ScenarioTree::level(k)]).exp();
        let at = |k: usize, f: &dyn Fn(usize) -> f64| if k == 0 { 0.0 } else { f(k) };
        let n = tree.len();
        let price_level: Values = (0..n).map(|k| at(k, &|k| a / b * liquidity[k] * money[k] / consumption[k])).collect();
        let nominal_kernel: Values = (0..n).map(|k| at(k, &|k| b * discount(k) / (mu * liquidity[k] * money[k]))).collect();
        let real_kernel: Values = (0..n).map(|k| at(k, &|k| a * discount(k) / (mu * consumption[k]))).collect();
        Ok(InflationModel { tree, dates, consumption, money, liquidity, prefs, price_level, nominal_kernel, real_kernel })
    }

    /// Worst node-wise defect of `k C / M = (A/B) lambda`.
    pub fn velocity_residual(&self) -> f64 {
        let ratio = self.prefs.a / self.prefs.b;
        (1..self.tree.len())
            .map(|k| (self.consumption[k] * self.price_level[k] / self.money[k] - ratio * self.liquidity[k]).abs())
            .fold(0.0, f64::max)
    }

    /// Worst defect of `pi C = real kernel` and of the two first-order conditions.
    pub fn first_order_residual(&self) -> f64 {
        let Preferences { a, b, gamma, mu } = self.prefs;
        (1..self.tree.len())
            .map(|k| {
                let t = self.dates[ScenarioTree::level(k)];
                let c = self.price_level[k];
                let l = self.liquidity[k] * self.money[k] / c;
                let rhs = mu * (gamma * t).exp() * self.nominal_kernel[k] * c;
                let real = (self.nominal_kernel[k] * c - self.real_kernel[k]).abs() / self.real_kernel[k];
                let ux = (a / self.consumption[k] - rhs).abs() / rhs;
                let uy = (b / l - rhs).abs() / rhs;
                real.max(ux).max(uy)
            })
            .fold(0.0, f64::max)
    }

    /// Nominal value at every level-`i` node of a claim paying `payoff` at
    /// level `j`: `E_i[pi_j H_j] / pi_i`.
    pub fn claim_value(&self, j: usize, payoff: &[f64]) -> Result<Values> {
        self.tree.check_process(payoff, "payoff")?;
        if j > self.tree.depth() {
            return invalid(format!("payment level {j} beyond the lattice horizon"));
        }
        let deflated: Values = self.nominal_kernel.iter().zip(payoff).map(|(p, h)| p * h).collect();
        let mut v = self.tree.conditional(&deflated, j);
        for (k, x) in v.iter_mut().enumerate().skip(1) {
            *x /= self.nominal_kernel[k];
        }
        Ok(v)
    }

    /// Nominal value of a bond paying the price level `C_j` at level `j`.
    pub fn index_linked_bond(&self, j: usize) -> Result<Values> {
        self.claim_value(j, &self.price_level)
    }

    /// Real value of one unit of real consumption at level `j`, priced with
    /// the real kernel: `E_i[pi_j C_j] / (pi_i C_i)`.
    pub fn real_bond(&self, j: usize) -> Result<Values> {
        if j > self.tree.depth() {
            return invalid(format!("payment level {j} beyond the lattice horizon"));
        }
        let mut v = self.tree.conditional(&self.real_kernel, j);
        for (k, x) in v.iter_mut().enumerate().skip(1) {
            *x /= self.real_kernel[k];
        }
        Ok(v)
    }

    /// Budget `W = E[sum_n pi_n (C_n k_n + lambda_n M_n)]` over the lattice horizon.
    pub fn budget(&self) -> f64 {
        let spend: Values = (0..self.tree.len())
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    self.nominal_kernel[k] * (self.price_level[k] * self.consumption[k] + self.liquidity[k] * self.money[k])
                }
            })
            .collect();
        (0..=self.tree.depth()).map(|n| self.tree.expectation(&spend, n)).sum()
    }

    /// `W_target - W` for a given wealth.
    pub fn budget_residual(&self, wealth: f64) -> f64 {
        wealth - self.budget()
    }

    /// The nominal kernel as a term-structure model; fails when it is not a
    /// strict supermartingale.
    pub fn kernel_model(&self) -> Result<KernelModel> {
        KernelModel::new(self.tree.clone(), self.dates.clone(), self.nominal_kernel.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo(money_scale: f64) -> InflationModel {
        let tree = ScenarioTree::binomial(4, 0.5).unwrap();
        let k = tree.process(|level, node| 1.0 + 0.02 * level as f64 + 0.01 * ScenarioTree::up_moves(node) as f64);
        let m = tree.process(|level, node| money_scale * (1.0 + 0.03 * level as f64 + 0.02 * ScenarioTree::up_moves(node) as f64));
        let l = tree.process(|_, _| 0.05);
        let prefs = Preferences { a: 1.0, b: 0.2, gamma: 0.03, mu: 1.5 };
        InflationModel::new(tree, vec![0.0, 1.0, 2.0, 3.0, 4.0], k, m, l, prefs).unwrap()
    }

    #[test]
    fn identities() {
        let model = demo(1.0);
        assert!(model.velocity_residual() < 1e-15);
        assert!(model.first_order_residual() < 1e-14);
        let nominal = model.index_linked_bond(3).unwrap();
        let real = model.real_bond(3).unwrap();
        for k in 1..(1 << 4) {
            assert!((nominal[k] - model.price_level[k] * real[k]).abs() < 1e-13 * nominal[k]);
        }
    }

    #[test]
    fn money_doubling_doubles_prices() {
        let (base, doubled) = (demo(1.0), demo(2.0));
        for k in 1..base.tree.len() {
            assert!((doubled.price_level[k] - 2.0 * base.price_level[k]).abs() < 1e-14 * base.price_level[k]);
        }
    }

    #[test]
    fn constant_liquidity_value_discounts_at_gamma() {
        let tree = ScenarioTree::binomial(3, 0.4).unwrap();
        let k = tree.process(|_, node| 1.0 + 0.1 * ScenarioTree::up_moves(node) as f64);
        let m = tree.process(|_, _| 2.0);
        let l = tree.process(|_, _| 0.1);
        let prefs = Preferences { a: 1.0, b: 1.0, gamma: 0.05, mu: 1.0 };
        let model = InflationModel::new(tree, vec![0.0, 0.5, 1.0, 1.5], k, m, l, prefs).unwrap();
        let payoff = model.tree.process(|_, node| ScenarioTree::up_moves(node) as f64);
        let v = model.claim_value(3, &payoff).unwrap();
        let want = (-0.05f64 * 1.5).exp() * model.tree.expectation(&payoff, 3);
        assert!((v[1] - want).abs() < 1e-14);
        assert!(model.budget() > 0.0);
    }
}
