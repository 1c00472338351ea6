use std::collections::BTreeMap;

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use infoflow::credit::{price_bond, BondState};
use infoflow::equity::{price_single_dividend, SingleDividendAsset};
use infoflow::options::{greeks, price_binary_call, price_multirecovery_call, OptionSpec};
use infoflow::rates::kernel::{money_market, RationalModelSpec};
use infoflow::rates::{KernelModel, ScenarioTree};
use infoflow::zfactor::{build_reduction, joint_from_x_probs, x_probs_from_joint, JointDistribution, ReductionTree};
use infoflow::{ContinuousDensity, DiscountCurve, DiscretePayoff, Error, InformationProcessSpec};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Divergence(_) | Error::NoSolution(_) | Error::DegenerateDistribution { .. } => {
            PyArithmeticError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for infoflow::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Deterministic discount curve.
#[pyclass(name = "Curve", frozen, from_py_object)]
#[derive(Clone)]
struct PyCurve(DiscountCurve);

#[pymethods]
impl PyCurve {
    #[staticmethod]
    fn flat(rate: f64) -> PyResult<Self> {
        Ok(PyCurve(DiscountCurve::flat(rate).py()?))
    }

    /// Discount factors at increasing times; log-linear in between.
    #[staticmethod]
    fn tabulated(times: Vec<f64>, factors: Vec<f64>) -> PyResult<Self> {
        Ok(PyCurve(DiscountCurve::tabulated(times, factors).py()?))
    }

    fn discount(&self, t: f64) -> f64 {
        self.0.discount(t)
    }

    fn forward_discount(&self, t: f64, maturity: f64) -> f64 {
        self.0.forward_discount(t, maturity)
    }
}

/// Finite payoff spectrum `levels` with a-priori probabilities `probs`.
#[pyclass(name = "Payoff", frozen, from_py_object)]
#[derive(Clone)]
struct PyPayoff(DiscretePayoff);

#[pymethods]
impl PyPayoff {
    #[new]
    fn new(levels: Vec<f64>, probs: Vec<f64>) -> PyResult<Self> {
        Ok(PyPayoff(DiscretePayoff::new(levels, probs).py()?))
    }

    #[getter]
    fn levels(&self) -> Vec<f64> {
        self.0.levels().to_vec()
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.0.probs().to_vec()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }
}

#[pyclass(name = "BondState", frozen)]
struct PyBondState(BondState);

#[pymethods]
impl PyBondState {
    #[getter]
    fn price(&self) -> f64 {
        self.0.price
    }
    #[getter]
    fn cond_probs(&self) -> Vec<f64> {
        self.0.cond_probs.clone()
    }
    #[getter]
    fn cond_mean(&self) -> f64 {
        self.0.cond_mean
    }
    #[getter]
    fn cond_var(&self) -> f64 {
        self.0.cond_var
    }
    #[getter]
    fn abs_vol(&self) -> f64 {
        self.0.abs_vol
    }

    fn __repr__(&self) -> String {
        format!("BondState(t={}, xi={}, price={})", self.0.t, self.0.xi, self.0.price)
    }
}

fn discrete_spec(payoff: &PyPayoff, sigma: f64, maturity: f64) -> PyResult<InformationProcessSpec> {
    InformationProcessSpec::discrete(sigma, maturity, payoff.0.clone()).py()
}

/// Price of a defaultable discount bond given `xi_t`.
#[pyfunction]
#[pyo3(signature = (payoff, sigma, maturity, curve, t, xi))]
fn bond_price(payoff: PyPayoff, sigma: f64, maturity: f64, curve: PyCurve, t: f64, xi: f64) -> PyResult<PyBondState> {
    let spec = discrete_spec(&payoff, sigma, maturity)?;
    Ok(PyBondState(price_bond(&payoff.0, &spec, &curve.0, t, xi).py()?))
}

fn option(payoff: PyPayoff, sigma: f64, maturity: f64, curve: PyCurve, strike: f64, expiry: f64) -> PyResult<OptionSpec> {
    let spec = discrete_spec(&payoff, sigma, maturity)?;
    OptionSpec::new(strike, expiry, payoff.0, spec, curve.0).py()
}

/// Time-0 value of a European call on the bond; binary payoffs use the closed form.
#[pyfunction]
fn bond_call(payoff: PyPayoff, sigma: f64, maturity: f64, curve: PyCurve, strike: f64, expiry: f64) -> PyResult<f64> {
    let opt = option(payoff, sigma, maturity, curve, strike, expiry)?;
    if opt.payoff.is_binary() { price_binary_call(&opt) } else { price_multirecovery_call(&opt) }.py()
}

/// `(vega, delta)` of the binary bond call.
#[pyfunction]
fn bond_call_greeks(
    payoff: PyPayoff,
    sigma: f64,
    maturity: f64,
    curve: PyCurve,
    strike: f64,
    expiry: f64,
) -> PyResult<(f64, f64)> {
    let g = greeks(&option(payoff, sigma, maturity, curve, strike, expiry)?).py()?;
    Ok((g.vega, g.delta))
}

/// Price of an asset paying one dividend at `maturity`.
///
/// `prior` is `"exponential"` (needs `mean`) or `"gamma"` (needs `rate` and `shape`).
#[pyfunction]
#[pyo3(signature = (prior, sigma, maturity, curve, t, xi, mean=None, rate=None, shape=None))]
#[allow(clippy::too_many_arguments)]
fn dividend_asset_price(
    prior: &str,
    sigma: f64,
    maturity: f64,
    curve: PyCurve,
    t: f64,
    xi: f64,
    mean: Option<f64>,
    rate: Option<f64>,
    shape: Option<u32>,
) -> PyResult<f64> {
    let density = match (prior, mean, rate, shape) {
        ("exponential", Some(m), None, None) => ContinuousDensity::exponential(m).py()?,
        ("gamma", None, Some(r), Some(n)) => ContinuousDensity::gamma(r, n).py()?,
        _ => return Err(PyValueError::new_err("use prior='exponential' with mean, or prior='gamma' with rate and shape")),
    };
    let asset = SingleDividendAsset::new(density, sigma, maturity, curve.0).py()?;
    price_single_dividend(&asset, t, xi).py()
}

/// Reduction of `n` dependent binary factors to independent X-factors.
#[pyclass(name = "Reduction", frozen)]
struct PyReduction(ReductionTree);

#[pymethods]
impl PyReduction {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(PyReduction(build_reduction(n).py()?))
    }

    #[getter]
    fn x_count(&self) -> usize {
        self.0.x_count()
    }

    fn unicode(&self, j: usize) -> PyResult<String> {
        self.0.unicode(j).py()
    }

    fn latex(&self, j: usize) -> PyResult<String> {
        self.0.latex(j).py()
    }

    /// Joint law over patterns such as `"101"` implied by independent X-factor probabilities.
    fn joint(&self, x_probs: Vec<f64>) -> PyResult<BTreeMap<String, f64>> {
        Ok(joint_from_x_probs(&self.0, &x_probs).py()?.to_patterns())
    }
}

/// X-factor probabilities that reproduce a joint law given as `{"101": p, ...}`.
#[pyfunction]
fn x_probs(joint: BTreeMap<String, f64>) -> PyResult<Vec<f64>> {
    x_probs_from_joint(&JointDistribution::from_patterns(&joint).py()?).py()
}

/// Binomial rational term-structure model `pi_i = alpha_i + beta_i N_i`.
#[pyclass(name = "RationalModel", frozen)]
struct PyRationalModel {
    spec: RationalModelSpec,
    model: KernelModel,
}

fn node_of(path: &str) -> PyResult<usize> {
    let moves = path
        .chars()
        .map(|c| match c {
            'u' => Ok(true),
            'd' => Ok(false),
            _ => Err(PyValueError::new_err("path must consist of 'u' and 'd'")),
        })
        .collect::<PyResult<Vec<bool>>>()?;
    Ok(ScenarioTree::node_of(&moves))
}

#[pymethods]
impl PyRationalModel {
    #[new]
    fn new(alpha: Vec<f64>, beta: Vec<f64>, n0: f64, up: f64, down: f64) -> PyResult<Self> {
        let spec = RationalModelSpec { alpha, beta, n0, up, down, dates: None };
        let model = spec.model().py()?;
        Ok(PyRationalModel { spec, model })
    }

    #[getter]
    fn depth(&self) -> usize {
        self.spec.depth()
    }

    #[getter]
    fn up_prob(&self) -> f64 {
        self.spec.up_prob()
    }

    /// `P_ij` at the node reached by `path` (a string of `i` moves, `u` or `d`).
    fn bond_price(&self, j: usize, path: &str) -> PyResult<f64> {
        self.model.bond_price(path.len(), j, node_of(path)?).py()
    }

    /// Money-market account at the node reached by `path`.
    fn money_market(&self, path: &str) -> PyResult<f64> {
        let node = node_of(path)?;
        money_market(&self.model)
            .get(node)
            .copied()
            .ok_or_else(|| PyValueError::new_err("path is longer than the model horizon"))
    }
}

/// Runs the command-line interface with `args` (without the program name); returns the exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    py.detach(|| infoflow::cli::run_with(std::iter::once("infoflow".to_string()).chain(args)))
}

#[pymodule]
fn infoflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_class::<PyPayoff>()?;
    m.add_class::<PyBondState>()?;
    m.add_class::<PyReduction>()?;
    m.add_class::<PyRationalModel>()?;
    m.add_function(wrap_pyfunction!(bond_price, m)?)?;
    m.add_function(wrap_pyfunction!(bond_call, m)?)?;
    m.add_function(wrap_pyfunction!(bond_call_greeks, m)?)?;
    m.add_function(wrap_pyfunction!(dividend_asset_price, m)?)?;
    m.add_function(wrap_pyfunction!(x_probs, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
