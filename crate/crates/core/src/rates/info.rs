//! Pricing kernels driven by discrete-time information processes.
//!
//! Each factor `X` is revealed at date `t_k`. Before that the market sees
//! `xi_ik = sigma t_i X + beta_ik`, with `beta` a bridge pinned at `t_k`.
//! The kernel is `pi_j = alpha_j + beta_j prod g_f`, where each `g_f` is either
//! `exp(kappa X_f)` once revealed or its forecast `E_j[exp(kappa X_f)]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::process::{
    conditional_probs, information_path_at, Factor, InformationProcessSpec, Posterior, TimeGrid,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFactor {
    pub id: String,
    /// Index of the date at which the factor is revealed.
    pub reveal: usize,
    pub sigma: f64,
    pub prior: Factor,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorUse {
    /// `exp(kappa X)`; only allowed once `X` is revealed.
    Revealed,
    /// `E_j[exp(kappa X)]` given the information at date `j`.
    Forecast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTerm {
    pub factor: usize,
    #[serde(rename = "use")]
    pub usage: FactorUse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoKernelSpec {
    pub dates: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub factors: Vec<KernelFactor>,
    /// Terms entering `pi_j`, one list per date.
    pub terms: Vec<Vec<KernelTerm>>,
}

/// What is known about every factor at one date: the information value
/// `xi_if` before the reveal date, the factor value itself from then on.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoState {
    pub date: usize,
    pub values: Vec<f64>,
}

impl InfoKernelSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.dates.len();
        if n < 2 || self.alpha.len() != n || self.beta.len() != n || self.terms.len() != n {
            return invalid("dates, alpha, beta and terms need one entry per date, at least two");
        }
        if self.dates[0] != 0.0 || self.dates.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("dates must start at 0 and increase strictly");
        }
        if self.alpha.iter().chain(&self.beta).any(|x| !(*x > 0.0 && x.is_finite())) {
            return invalid("alpha and beta must be positive");
        }
        for f in &self.factors {
            if f.reveal == 0 || f.reveal >= n {
                return invalid(format!("factor {} must be revealed at a date index in 1..{n}", f.id));
            }
            if !(f.sigma >= 0.0 && f.sigma.is_finite() && f.exponent.is_finite()) {
                return invalid(format!("factor {} needs finite sigma >= 0 and exponent", f.id));
            }
            self.factor_spec(f)?;
        }
        for (j, terms) in self.terms.iter().enumerate() {
            let mut seen = vec![false; self.factors.len()];
            for term in terms {
                let Some(f) = self.factors.get(term.factor) else {
                    return invalid(format!("kernel at date {j} references unknown factor {}", term.factor));
                };
                if std::mem::replace(&mut seen[term.factor], true) {
                    return invalid(format!("kernel at date {j} uses factor {} twice", f.id));
                }
                if term.usage == FactorUse::Revealed && f.reveal > j {
                    return invalid(format!(
                        "kernel at date {j} uses factor {} which is only revealed at date {}",
                        f.id, f.reveal
                    ));
                }
            }
        }
        Ok(())
    }

    fn factor_spec(&self, f: &KernelFactor) -> Result<InformationProcessSpec> {
        InformationProcessSpec::new(f.sigma, self.dates[f.reveal], f.prior.clone())
    }

    fn check_state(&self, state: &InfoState) -> Result<()> {
        if state.date >= self.dates.len() || state.values.len() != self.factors.len() {
            return invalid("information state does not match the kernel specification");
        }
        if state.values.iter().any(|v| !v.is_finite()) {
            return invalid("information values must be finite");
        }
        Ok(())
    }

    /// `E_i[exp(kappa X_f)]` at the state.
    pub fn factor_forecast(&self, f: usize, state: &InfoState) -> Result<f64> {
        let factor = &self.factors[f];
        let kappa = factor.exponent;
        let value = state.values[f];
        if state.date >= factor.reveal {
            return Ok((kappa * value).exp());
        }
        let t = self.dates[state.date];
        let spec = self.factor_spec(factor)?;
        match &factor.prior {
            Factor::Discrete(payoff) => {
                let w = conditional_probs(payoff, &spec, t, value)?;
                Ok(payoff.levels().iter().zip(&w).map(|(h, p)| p * (kappa * h).exp()).sum())
            }
            Factor::Continuous(density) => {
                let (a, b) = spec.likelihood_coefficients(t, value)?;
                Posterior::new(density.clone(), a, b).expect(|x| (kappa * x).exp())
            }
        }
    }

    /// `pi_i` at the state.
    pub fn kernel(&self, state: &InfoState) -> Result<f64> {
        self.check_state(state)?;
        let i = state.date;
        let mut product = 1.0;
        for term in &self.terms[i] {
            // a revealed factor's forecast is the factor function itself
            product *= self.factor_forecast(term.factor, state)?;
        }
        Ok(self.alpha[i] + self.beta[i] * product)
    }

    /// `E_i[pi_j]` at a date-`i` state, factorized over independent factors.
    pub fn expected_kernel(&self, j: usize, state: &InfoState) -> Result<f64> {
        self.check_state(state)?;
        if j < state.date || j >= self.dates.len() {
            return invalid(format!("cannot forecast date {j} from date {}", state.date));
        }
        let mut product = 1.0;
        for term in &self.terms[j] {
            product *= self.factor_forecast(term.factor, state)?;
        }
        Ok(self.alpha[j] + self.beta[j] * product)
    }

    pub fn bond_price(&self, j: usize, state: &InfoState) -> Result<f64> {
        Ok(self.expected_kernel(j, state)? / self.kernel(state)?)
    }

    /// Information state at date `i` along sampled path `index`. Factor `f`
    /// uses stream `index * factors + f` so paths are reproducible per seed.
    pub fn sample_state(&self, i: usize, seed: u64, index: u64) -> Result<InfoState> {
        self.validate()?;
        if i >= self.dates.len() {
            return invalid(format!("date index {i} outside the schedule"));
        }
        let count = self.factors.len() as u64;
        let mut values = Vec::with_capacity(self.factors.len());
        for (f, factor) in self.factors.iter().enumerate() {
            let spec = self.factor_spec(factor)?;
            let grid = TimeGrid::new(self.dates[..=factor.reveal].to_vec(), self.dates[factor.reveal])?;
            let path = information_path_at(&spec, &grid, seed, index * count + f as u64)?;
            values.push(if i >= factor.reveal { path.terminal.unwrap_or(0.0) } else { path.values[i] });
        }
        Ok(InfoState { date: i, values })
    }

    /// Worst ratio `E_i[pi_j] / pi_i` over sampled states and all `i < j`.
    /// The kernel is a strict supermartingale on the sample when this is below one.
    pub fn supermartingale_ratio(&self, seed: u64, samples: u64) -> Result<f64> {
        let n = self.dates.len();
        let mut worst: f64 = 0.0;
        for index in 0..samples {
            for i in 0..n - 1 {
                let state = self.sample_state(i, seed, index)?;
                let here = self.kernel(&state)?;
                for j in i + 1..n {
                    worst = worst.max(self.expected_kernel(j, &state)? / here);
                }
            }
        }
        Ok(worst)
    }
}

/// Bridge noise `beta_ik` at `dates[..=k]` for sampled path `index`.
pub fn bridge_noise(dates: &[f64], k: usize, seed: u64, index: u64) -> Result<Vec<f64>> {
    if k == 0 || k >= dates.len() {
        return invalid("bridge end index outside the schedule");
    }
    let grid = TimeGrid::new(dates[..=k].to_vec(), dates[k])?;
    Ok(crate::process::bridge_path_at(&grid, seed, index)?.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{ContinuousDensity, DiscretePayoff};

    fn spec(sigma: f64) -> InfoKernelSpec {
        let dates = vec![0.0, 1.0, 2.0, 3.0];
        InfoKernelSpec {
            alpha: dates.iter().map(|t| 0.5 * (-0.03f64 * t).exp()).collect(),
            beta: dates.iter().map(|t| 0.5 * (-0.05f64 * t).exp()).collect(),
            dates,
            factors: vec![KernelFactor {
                id: "X".into(),
                reveal: 3,
                sigma,
                prior: Factor::Continuous(ContinuousDensity::gamma(2.0, 2).unwrap()),
                exponent: -0.4,
            }],
            terms: (0..4).map(|_| vec![KernelTerm { factor: 0, usage: FactorUse::Forecast }]).collect(),
        }
    }

    #[test]
    fn zero_sigma_gives_prior_forecasts() {
        let s = spec(0.0);
        s.validate().unwrap();
        let state = InfoState { date: 2, values: vec![0.7] };
        // E[exp(-0.4 X)] for a gamma(rate 2, shape 2) prior
        let mgf = (2.0f64 / 2.4).powi(2);
        assert!((s.factor_forecast(0, &state).unwrap() - mgf).abs() < 1e-12);
        let p = s.bond_price(3, &state).unwrap();
        let want = (s.alpha[3] + s.beta[3] * mgf) / (s.alpha[2] + s.beta[2] * mgf);
        assert!((p - want).abs() < 1e-12);
    }

    #[test]
    fn rejects_unrevealed_use() {
        let mut s = spec(0.3);
        s.terms[2] = vec![KernelTerm { factor: 0, usage: FactorUse::Revealed }];
        assert!(s.validate().is_err());
        s.terms[2].clear();
        s.terms[3] = vec![KernelTerm { factor: 0, usage: FactorUse::Revealed }];
        s.validate().unwrap();
    }

    #[test]
    fn forecast_kernel_is_supermartingale() {
        let s = spec(0.5);
        assert!(s.supermartingale_ratio(7, 20).unwrap() < 1.0);
    }

    #[test]
    fn discrete_factor_forecast() {
        let mut s = spec(0.8);
        s.factors[0].prior = Factor::Discrete(DiscretePayoff::binary(0.0, 1.0, 0.7).unwrap());
        let state = InfoState { date: 1, values: vec![0.5] };
        let f = s.factor_forecast(0, &state).unwrap();
        let (t, tk, sig): (f64, f64, f64) = (1.0, 3.0, 0.8);
        let w1 = 0.7 * (tk / (tk - t) * (sig * 0.5 - 0.5 * sig * sig * t)).exp();
        let want = (0.3 + w1 * (-0.4f64).exp()) / (0.3 + w1);
        assert!((f - want).abs() < 1e-14);
        let revealed = InfoState { date: 3, values: vec![1.0] };
        assert!((s.factor_forecast(0, &revealed).unwrap() - (-0.4f64).exp()).abs() < 1e-15);
    }
}
