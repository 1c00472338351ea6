//! Default-free discount curves.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscountCurve {
    /// Constant continuously-compounded short rate.
    Flat { rate: f64 },
    /// Log-linear interpolation of `P_0t` between nodes, flat forward beyond the last.
    Tabulated { times: Vec<f64>, factors: Vec<f64> },
}

impl DiscountCurve {
    pub fn flat(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate < 0.0 {
            return invalid("flat rate must be finite and non-negative");
        }
        Ok(DiscountCurve::Flat { rate })
    }

    /// Nodes must start at `t = 0` with factor 1 and decrease strictly.
    pub fn tabulated(times: Vec<f64>, factors: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times.len() != factors.len() {
            return invalid("tabulated curve needs at least two matching nodes");
        }
        if times[0] != 0.0 || factors[0] != 1.0 {
            return invalid("tabulated curve must start at (0, 1)");
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("curve times must increase strictly");
        }
        if factors.windows(2).any(|w| !(w[1] < w[0])) || factors.iter().any(|f| !(*f > 0.0)) {
            return invalid("discount factors must be positive and strictly decreasing");
        }
        Ok(DiscountCurve::Tabulated { times, factors })
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            DiscountCurve::Flat { rate } => Self::flat(rate),
            DiscountCurve::Tabulated { times, factors } => Self::tabulated(times, factors),
        }
    }

    /// `P_0t`.
    pub fn discount(&self, t: f64) -> f64 {
        match self {
            DiscountCurve::Flat { rate } => (-rate * t).exp(),
            DiscountCurve::Tabulated { times, factors } => {
                if t <= 0.0 {
                    return 1.0;
                }
                let n = times.len();
                let k = times.partition_point(|x| *x <= t).clamp(1, n - 1);
                let (t0, t1) = (times[k - 1], times[k]);
                let (l0, l1) = (factors[k - 1].ln(), factors[k].ln());
                (l0 + (l1 - l0) * (t - t0) / (t1 - t0)).exp()
            }
        }
    }

    /// `P_tT = P_0T / P_0t`.
    pub fn forward_discount(&self, t: f64, maturity: f64) -> f64 {
        match self {
            DiscountCurve::Flat { rate } => (-rate * (maturity - t)).exp(),
            _ => self.discount(maturity) / self.discount(t),
        }
    }

    /// Short rate `-d ln P_0t / dt` (right derivative at nodes).
    pub fn short_rate(&self, t: f64) -> f64 {
        match self {
            DiscountCurve::Flat { rate } => *rate,
            DiscountCurve::Tabulated { times, factors } => {
                let n = times.len();
                let k = times.partition_point(|x| *x <= t.max(0.0)).clamp(1, n - 1);
                -(factors[k].ln() - factors[k - 1].ln()) / (times[k] - times[k - 1])
            }
        }
    }
}
