//! LDPC ensembles given by edge-perspective degree-distribution pairs.

mod published;
mod sampling;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use published::{published_ensemble, published_ensembles, PublishedEnsemble};
pub use sampling::{
    sample_parity_check, sample_parity_check_with, ParityCheckMatrix, SamplingOptions,
};

/// Tolerance on the raw coefficient sums before renormalization. Published
/// tables are rounded to three decimals and can under-sum by ~0.006.
pub const SUM_TOLERANCE: f64 = 0.01;

/// Edge-perspective degree distributions (lambda for variable nodes, rho for
/// check nodes). Keys are node degrees, values the fraction of edges attached
/// to nodes of that degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    pub lambda: BTreeMap<usize, f64>,
    pub rho: BTreeMap<usize, f64>,
    #[serde(default = "default_max_var_degree")]
    pub max_var_degree: usize,
}

fn default_max_var_degree() -> usize {
    50
}

/// What [`DegreeDistribution::validate_and_normalize`] did to the input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    pub lambda_sum: f64,
    pub rho_sum: f64,
    /// Factor applied to every lambda coefficient (1 / lambda_sum).
    pub lambda_scale: f64,
    pub rho_scale: f64,
}

impl DegreeDistribution {
    pub fn new(
        lambda: impl IntoIterator<Item = (usize, f64)>,
        rho: impl IntoIterator<Item = (usize, f64)>,
        max_var_degree: usize,
    ) -> Self {
        Self {
            lambda: lambda.into_iter().collect(),
            rho: rho.into_iter().collect(),
            max_var_degree,
        }
    }

    /// Regular ensemble with every variable node of degree `dv` and every
    /// check node of degree `dc`.
    pub fn regular(dv: usize, dc: usize) -> Self {
        Self::new([(dv, 1.0)], [(dc, 1.0)], dv.max(2))
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("degree distribution serializes")
    }

    /// Checks the coefficient invariants and rescales both sides so that they
    /// sum to one exactly.
    pub fn validate_and_normalize(&self) -> Result<(Self, NormalizationReport)> {
        let lambda_sum = check_side("lambda", &self.lambda)?;
        let rho_sum = check_side("rho", &self.rho)?;
        if let Some(&degree) = self
            .lambda
            .iter()
            .filter(|(_, &c)| c > 0.0)
            .map(|(d, _)| d)
            .max()
        {
            if degree > self.max_var_degree {
                return Err(Error::DegreeAboveMax {
                    degree,
                    max: self.max_var_degree,
                });
            }
        }
        let lambda = rescale(&self.lambda, lambda_sum);
        let rho = rescale(&self.rho, rho_sum);
        let report = NormalizationReport {
            lambda_sum,
            rho_sum,
            lambda_scale: 1.0 / lambda_sum,
            rho_scale: 1.0 / rho_sum,
        };
        Ok((
            Self {
                lambda,
                rho,
                max_var_degree: self.max_var_degree,
            },
            report,
        ))
    }

    /// `sum_i lambda_i / i`, the integral of lambda(x) over [0, 1].
    pub fn lambda_integral(&self) -> f64 {
        integral(&self.lambda)
    }

    pub fn rho_integral(&self) -> f64 {
        integral(&self.rho)
    }

    /// Nominal rate `1 - (sum_j rho_j / j) / (sum_i lambda_i / i)`.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.rho_integral() / self.lambda_integral()
    }

    /// Fraction of variable nodes of each degree.
    pub fn variable_node_fractions(&self) -> BTreeMap<usize, f64> {
        node_fractions(&self.lambda)
    }

    /// Fraction of check nodes of each degree.
    pub fn check_node_fractions(&self) -> BTreeMap<usize, f64> {
        node_fractions(&self.rho)
    }

    /// Largest variable degree with a nonzero coefficient.
    pub fn max_lambda_degree(&self) -> usize {
        max_degree(&self.lambda)
    }

    pub fn max_rho_degree(&self) -> usize {
        max_degree(&self.rho)
    }

    /// `rho'(1) = sum_j rho_j (j - 1)`.
    pub fn rho_derivative_at_one(&self) -> f64 {
        self.rho.iter().map(|(&j, &r)| r * (j as f64 - 1.0)).sum()
    }
}

fn check_side(side: &'static str, coeffs: &BTreeMap<usize, f64>) -> Result<f64> {
    for (&degree, &value) in coeffs {
        if !(value >= 0.0) {
            return Err(Error::NegativeCoefficient {
                side,
                degree,
                value,
            });
        }
        if degree < 2 {
            return Err(Error::DegreeBelowTwo { side, degree });
        }
    }
    let sum: f64 = coeffs.values().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::SumOutOfTolerance {
            side,
            sum,
            tolerance: SUM_TOLERANCE,
        });
    }
    Ok(sum)
}

fn rescale(coeffs: &BTreeMap<usize, f64>, sum: f64) -> BTreeMap<usize, f64> {
    if sum == 1.0 {
        return coeffs.clone();
    }
    coeffs.iter().map(|(&d, &c)| (d, c / sum)).collect()
}

fn integral(coeffs: &BTreeMap<usize, f64>) -> f64 {
    coeffs.iter().map(|(&d, &c)| c / d as f64).sum()
}

fn node_fractions(coeffs: &BTreeMap<usize, f64>) -> BTreeMap<usize, f64> {
    let total = integral(coeffs);
    coeffs
        .iter()
        .map(|(&d, &c)| (d, c / d as f64 / total))
        .collect()
}

fn max_degree(coeffs: &BTreeMap<usize, f64>) -> usize {
    coeffs
        .iter()
        .filter(|(_, &c)| c > 0.0)
        .map(|(&d, _)| d)
        .max()
        .unwrap_or(0)
}
