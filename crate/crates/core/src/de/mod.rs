//! Quantized density evolution for LDPC ensembles over binary-input
//! symmetric channels described by their symmetrized LLR density.

mod check;
pub mod density;
mod variable;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ensemble::DegreeDistribution;
use crate::error::{Error, Result};

pub use check::{boxplus, boxplus_magnitude, CheckKernel};
pub use density::{symmetrize, GridSpec, QuantizedDensity, SYMMETRY_FLOOR};
pub use variable::VariableKernel;

pub const DEFAULT_MAX_ITERATIONS: usize = 800;
pub const DEFAULT_TARGET_ERROR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeOptions {
    pub max_iterations: usize,
    pub target_error: f64,
    /// Stop early (not converged) once the variable-to-check density moves
    /// by less than this total variation in one iteration. Zero disables.
    #[serde(default)]
    pub stall_tolerance: f64,
}

impl Default for DeOptions {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            target_error: DEFAULT_TARGET_ERROR,
            stall_tolerance: 0.0,
        }
    }
}

impl DeOptions {
    /// Defaults plus fixed-point detection, for searches that only need the
    /// converged/not-converged verdict.
    pub fn with_stall_detection() -> Self {
        Self {
            stall_tolerance: 1e-14,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeResult {
    pub converged: bool,
    pub iterations: usize,
    pub terminal_error: f64,
    pub trajectory: Vec<f64>,
}

impl DeResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// Per-iteration view handed to [`evolve_observed`]: the check-to-variable
/// density `b` of iteration `iteration` (1-based) and the decision error.
pub struct Stage<'a> {
    pub iteration: usize,
    pub check_output: &'a QuantizedDensity,
    pub error: f64,
}

/// `sum_i lambda_i (a_ch ⊛ b^{⊛(i-1)})`, saturated at the grid ends.
pub fn vn_update(a_ch: &QuantizedDensity, b: &QuantizedDensity, lambda: &BTreeMap<usize, f64>) -> Result<QuantizedDensity> {
    a_ch.same_grid(b)?;
    let max = lambda.keys().copied().max().unwrap_or(1);
    let k = VariableKernel::new(*a_ch.grid(), max);
    Ok(k.update(&k.transform(a_ch), &k.transform(b), lambda))
}

/// `sum_j rho_j R^{(j-1)}(a)` with `R` the quantized boxplus transform.
pub fn cn_update(a: &QuantizedDensity, rho: &BTreeMap<usize, f64>) -> QuantizedDensity {
    CheckKernel::new(*a.grid()).update(a, rho)
}

pub fn evolve(dd: &DegreeDistribution, a_ch: &QuantizedDensity, opts: &DeOptions) -> DeResult {
    evolve_observed(dd, a_ch, opts, |_| {})
}

/// [`evolve`], calling `observe` once per iteration.
pub fn evolve_observed<F>(dd: &DegreeDistribution, a_ch: &QuantizedDensity, opts: &DeOptions, mut observe: F) -> DeResult
where
    F: FnMut(Stage<'_>),
{
    let grid = *a_ch.grid();
    let check = CheckKernel::new(grid);
    let max_deg = dd.lambda.keys().copied().max().unwrap_or(2);
    let var = VariableKernel::new(grid, max_deg + 1);
    let node = dd.variable_node_fractions();
    let a_hat = var.transform(a_ch);

    let mut x = a_ch.clone();
    let mut trajectory = Vec::new();
    let mut converged = false;
    for iteration in 1..=opts.max_iterations {
        let b = check.update(&x, &dd.rho);
        let b_hat = var.transform(&b);
        let error = var.decision(&a_hat, &b_hat, &node).error_prob();
        trajectory.push(error);
        observe(Stage {
            iteration,
            check_output: &b,
            error,
        });
        if error <= opts.target_error {
            converged = true;
            break;
        }
        let next = var.update(&a_hat, &b_hat, &dd.lambda);
        if opts.stall_tolerance > 0.0 {
            let moved = next.total_variation(&x).unwrap_or(f64::INFINITY);
            if moved < opts.stall_tolerance {
                break;
            }
        }
        x = next;
    }
    DeResult {
        converged,
        iterations: trajectory.len(),
        terminal_error: trajectory.last().copied().unwrap_or(a_ch.error_prob()),
        trajectory,
    }
}

/// Bisection over a channel family indexed by a parameter in dB, returning
/// the converging end of the final bracket (within `tol_db` of the
/// threshold). Either orientation is accepted as long as exactly one end of
/// `[lo, hi]` converges.
pub fn threshold_search<F>(
    dd: &DegreeDistribution,
    mut family: F,
    lo: f64,
    hi: f64,
    tol_db: f64,
    opts: &DeOptions,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<QuantizedDensity>,
{
    if !(tol_db > 0.0) {
        return Err(Error::NegativeParameter(tol_db));
    }
    let mut converges = |p: f64| -> Result<bool> { Ok(evolve(dd, &family(p)?, opts).converged) };
    let lo_ok = converges(lo)?;
    let hi_ok = converges(hi)?;
    if lo_ok == hi_ok {
        return Err(Error::NotBracketed {
            lo_converges: lo_ok,
            hi_converges: hi_ok,
        });
    }
    let (mut good, mut bad) = if hi_ok { (hi, lo) } else { (lo, hi) };
    while (good - bad).abs() > tol_db {
        let mid = 0.5 * (good + bad);
        if converges(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// Symmetrized LLR density of BPSK on AWGN at `snr_db` (`E_s/N_0` with real
/// signalling, LLR `~ N(2 snr, 4 snr)` given `+1`).
pub fn bpsk_awgn_density(grid: GridSpec, snr_db: f64) -> QuantizedDensity {
    let snr = crate::units::db_to_linear(snr_db);
    QuantizedDensity::consistent_gaussian(grid, 2.0 * snr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> GridSpec {
        GridSpec::default()
    }

    fn map(pairs: &[(usize, f64)]) -> BTreeMap<usize, f64> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn vn_point_mass_arithmetic() {
        let step = g().step();
        let a = QuantizedDensity::point_mass(g(), step);
        let out = vn_update(&a, &a, &map(&[(2, 0.5), (3, 0.5)])).unwrap();
        assert!((out.at(2) - 0.5).abs() < 1e-12);
        assert!((out.at(3) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vn_identity_and_single_term() {
        let a = QuantizedDensity::consistent_gaussian(g(), 2.0);
        let zero = QuantizedDensity::point_mass(g(), 0.0);
        let out = vn_update(&a, &zero, &map(&[(3, 0.3), (7, 0.7)])).unwrap();
        assert!(out.total_variation(&a).unwrap() < 1e-12);

        let b = QuantizedDensity::consistent_gaussian(g(), 1.0);
        let out = vn_update(&a, &b, &map(&[(2, 1.0)])).unwrap();
        // Direct convolution with saturation at the ends.
        let h = g().half_levels as isize;
        let mut direct = vec![0.0; g().len()];
        for i in -h..=h {
            for j in -h..=h {
                let k = (i + j).clamp(-h, h);
                direct[g().index(k)] += a.at(i) * b.at(j);
            }
        }
        let direct = QuantizedDensity::new(g(), direct).unwrap();
        assert!(out.total_variation(&direct).unwrap() < 1e-12);
    }

    #[test]
    fn vn_rejects_mismatched_grids() {
        let a = QuantizedDensity::point_mass(g(), 0.0);
        let b = QuantizedDensity::point_mass(GridSpec::new(25.0, 128).unwrap(), 0.0);
        assert_eq!(vn_update(&a, &b, &map(&[(2, 1.0)])), Err(Error::GridMismatch));
    }

    #[test]
    fn cn_fixed_points() {
        let sure = QuantizedDensity::point_mass(g(), g().llr_max);
        let out = cn_update(&sure, &map(&[(6, 1.0)]));
        let positive: Vec<isize> = (1..=g().half_levels as isize).filter(|&k| out.at(k) > 0.0).collect();
        assert_eq!(positive.len(), 1);
        assert!((out.at(positive[0]) - 1.0).abs() < 1e-12);
        // Exact value before quantization is 25 - 4 ln 2.
        assert!(positive[0] as f64 * g().step() >= g().llr_max - 4.0 * std::f64::consts::LN_2 - 4.0 * g().step());
        assert_eq!(out.error_prob(), 0.0);

        let erased = QuantizedDensity::point_mass(g(), 0.0);
        for rho in [map(&[(3, 1.0)]), map(&[(6, 0.4), (7, 0.6)])] {
            assert_eq!(cn_update(&erased, &rho).at(0), 1.0);
        }
    }

    #[test]
    fn cn_two_point_input() {
        let m0 = 2.0;
        let k0 = (m0 / g().step()).round() as isize;
        let mut mass = vec![0.0; g().len()];
        mass[g().index(k0)] = 0.5;
        mass[g().index(-k0)] = 0.5;
        let a = QuantizedDensity::new(g(), mass).unwrap();
        let out = cn_update(&a, &map(&[(3, 1.0)]));
        let v = boxplus_magnitude(k0 as f64 * g().step(), k0 as f64 * g().step());
        let k = (v / g().step()).round() as isize;
        assert!((out.at(k) - 0.5).abs() < 1e-15);
        assert!((out.at(-k) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trivial_evolutions() {
        let dd = DegreeDistribution::regular(3, 6);
        let sure = QuantizedDensity::point_mass(g(), g().llr_max);
        let r = evolve(&dd, &sure, &DeOptions::default());
        assert!(r.converged && r.iterations <= 1);

        let erased = QuantizedDensity::point_mass(g(), 0.0);
        let r = evolve(&dd, &erased, &DeOptions::default());
        assert!(!r.converged);
        assert_eq!(r.iterations, 800);
        assert_eq!(r.terminal_error, 0.5);
        assert!(DeOptions::with_stall_detection().stall_tolerance > 0.0);
        let fast = evolve(&dd, &erased, &DeOptions::with_stall_detection());
        assert!(!fast.converged && fast.iterations < 5);
    }

    #[test]
    fn result_json_fields() {
        let r = DeResult {
            converged: true,
            iterations: 2,
            terminal_error: 0.0,
            trajectory: vec![0.1, 0.0],
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["converged", "iterations", "terminal_error", "trajectory"] {
            assert!(v.get(key).is_some());
        }
    }

    #[test]
    fn regular_code_converges_above_threshold_only() {
        let dd = DegreeDistribution::regular(3, 6);
        let opts = DeOptions::with_stall_detection();
        assert!(evolve(&dd, &bpsk_awgn_density(g(), 1.4), &opts).converged);
        assert!(!evolve(&dd, &bpsk_awgn_density(g(), 0.8), &opts).converged);
    }

    #[test]
    fn unbracketed_search_is_an_error() {
        let dd = DegreeDistribution::regular(3, 6);
        let r = threshold_search(&dd, |p| Ok(bpsk_awgn_density(g(), p)), 3.0, 4.0, 0.01, &DeOptions::with_stall_detection());
        assert_eq!(
            r,
            Err(Error::NotBracketed {
                lo_converges: true,
                hi_converges: true
            })
        );
    }
}
