//! Config-file building blocks. Dimensioned quantities are written as
//! `{"value": 5, "units": "years"}` and bare numbers are rejected.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::CliError;
use crate::curve::DiscountCurve;
use crate::process::{ContinuousDensity, DiscretePayoff, Factor};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Quantity {
    value: f64,
    units: String,
}

macro_rules! unit_type {
    ($name:ident, $units:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
        #[serde(try_from = "Quantity")]
        pub struct $name(pub f64);

        impl TryFrom<Quantity> for $name {
            type Error = String;

            fn try_from(q: Quantity) -> Result<Self, String> {
                if q.units != $units {
                    return Err(format!("expected units \"{}\", found \"{}\"", $units, q.units));
                }
                if !q.value.is_finite() {
                    return Err("value must be finite".into());
                }
                Ok($name(q.value))
            }
        }
    };
}

unit_type!(Years, "years");
// continuously compounded, per year
unit_type!(Rate, "rate");
unit_type!(Volatility, "per_sqrt_year");

pub fn years(v: &[Years]) -> Vec<f64> {
    v.iter().map(|y| y.0).collect()
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at {path}: {}", e.into_inner()))
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveConfig {
    Flat { rate: Rate },
    Tabulated { times: Vec<Years>, factors: Vec<f64> },
}

impl CurveConfig {
    pub fn build(&self) -> crate::Result<DiscountCurve> {
        match self {
            CurveConfig::Flat { rate } => DiscountCurve::flat(rate.0),
            CurveConfig::Tabulated { times, factors } => DiscountCurve::tabulated(years(times), factors.clone()),
        }
    }
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig::Flat { rate: Rate(0.0) }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffConfig {
    pub levels: Vec<f64>,
    pub probs: Vec<f64>,
}

impl PayoffConfig {
    pub fn build(&self) -> crate::Result<DiscretePayoff> {
        DiscretePayoff::new(self.levels.clone(), self.probs.clone())
    }
}

/// A-priori law of a factor: either a payoff spectrum or a density.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FactorConfig {
    Discrete(PayoffConfig),
    Continuous(ContinuousDensity),
}

impl FactorConfig {
    pub fn build(&self) -> crate::Result<Factor> {
        Ok(match self {
            FactorConfig::Discrete(p) => Factor::Discrete(p.build()?),
            FactorConfig::Continuous(d) => Factor::Continuous(d.clone().validated()?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_are_enforced() {
        let y: Years = parse(r#"{"value": 5, "units": "years"}"#).unwrap();
        assert_eq!(y.0, 5.0);
        assert!(parse::<Years>("5").is_err());
        let err = parse::<Years>(r#"{"value": 5, "units": "rate"}"#).unwrap_err();
        assert!(err.to_string().contains("years"));
    }

    #[test]
    fn errors_carry_the_field_path() {
        // tagged enums buffer their content and lose the path, plain structs keep it
        #[derive(Debug, Deserialize)]
        #[allow(dead_code)]
        struct Probe {
            sigmas: Vec<Volatility>,
        }
        let err = parse::<Probe>(r#"{"sigmas": [{"value": 1, "units": "per_sqrt_year"}, {"value": 2}]}"#).unwrap_err();
        assert!(err.to_string().contains("sigmas[1]"), "{err}");
    }
}
