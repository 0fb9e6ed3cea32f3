//! Variable-degree optimization by iterated linear programming on density
//! evolution stages.
//!
//! Each round runs density evolution with the incumbent `lambda`, records the
//! check-to-variable density `b_l` of every iteration and asks an LP for the
//! highest-rate `lambda` whose variable-node output error, with every `b_l`
//! held fixed, still shrinks stage by stage. The LP answer is only a
//! candidate: it is accepted after an independent full density-evolution run.

use std::collections::BTreeMap;

use log::{debug, info};
use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::de::{evolve, evolve_observed, DeOptions, DeResult, QuantizedDensity, VariableKernel};
use crate::ensemble::DegreeDistribution;
use crate::error::{Error, Result};

/// Coefficients below this are dropped from LP solutions.
const COEFF_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    pub rho: BTreeMap<usize, f64>,
    pub a_ch: QuantizedDensity,
    pub max_var_degree: usize,
    pub max_iterations: usize,
    pub target_error: f64,
    /// Required relative error reduction per stage at the start.
    pub delta: f64,
    /// Rounds that gain less than `min_rate_gain` halve `delta`, down to
    /// this floor; the design stops when the floor is reached.
    pub delta_min: f64,
    pub min_rate_gain: f64,
    pub max_rounds: usize,
    /// At most this many evenly spaced stages, plus the last `tail_stages`,
    /// enter the LP.
    pub max_stages: usize,
    pub tail_stages: usize,
}

impl DesignProblem {
    pub fn new(rho: BTreeMap<usize, f64>, a_ch: QuantizedDensity) -> Self {
        Self {
            rho,
            a_ch,
            max_var_degree: 50,
            max_iterations: 800,
            target_error: 1e-6,
            delta: 0.02,
            delta_min: 1e-3,
            min_rate_gain: 1e-4,
            max_rounds: 100,
            max_stages: 200,
            tail_stages: 20,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_var_degree < 2 {
            return Err(Error::InvalidConfig("max_var_degree must be at least 2".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta {} outside (0, 1)", self.delta)));
        }
        if !(self.delta_min > 0.0 && self.delta_min <= self.delta) {
            return Err(Error::InvalidConfig(format!("delta_min {} outside (0, delta]", self.delta_min)));
        }
        DegreeDistribution::new([(2, 1.0)], self.rho.clone(), self.max_var_degree).validate_and_normalize()?;
        Ok(())
    }

    fn ensemble(&self, lambda: &BTreeMap<usize, f64>) -> DegreeDistribution {
        DegreeDistribution::new(lambda.clone(), self.rho.clone(), self.max_var_degree)
    }

    fn de_options(&self) -> DeOptions {
        DeOptions {
            max_iterations: self.max_iterations,
            target_error: self.target_error,
            stall_tolerance: 0.0,
        }
    }
}

/// Where a design was evaluated; carried through to the certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub user: String,
    pub alpha: f64,
    pub snr_y_db: f64,
    pub snr_z_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub operating_point: Option<OperatingPoint>,
    pub iterations: usize,
    pub terminal_error: f64,
    pub lp_rounds: usize,
    pub delta_final: f64,
    pub design_rate: f64,
    pub stability_limit: f64,
    pub rate_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignOutcome {
    pub distribution: DegreeDistribution,
    pub certificate: Certificate,
    pub verification: DeResult,
}

/// Largest `lambda_2` compatible with the stability condition:
/// `1 / (B rho'(1))` with `B = sum_x a(x) e^{-x/2}`, capped at 1.
pub fn stability_limit(a_ch: &QuantizedDensity, rho: &BTreeMap<usize, f64>) -> f64 {
    let rho_prime: f64 = rho.iter().map(|(&j, &r)| r * (j as f64 - 1.0)).sum();
    let b = a_ch.bhattacharyya();
    if rho_prime <= 0.0 || b <= 0.0 {
        return 1.0;
    }
    (1.0 / (b * rho_prime)).min(1.0)
}

/// Smallest `d` in `2..=max_var_degree` whose regular `lambda = {d: 1}`
/// converges on `p.a_ch`.
pub fn seed_scan(p: &DesignProblem) -> Result<BTreeMap<usize, f64>> {
    let opts = DeOptions {
        stall_tolerance: DeOptions::with_stall_detection().stall_tolerance,
        ..p.de_options()
    };
    for d in 2..=p.max_var_degree {
        let lambda = BTreeMap::from([(d, 1.0)]);
        if evolve(&p.ensemble(&lambda), &p.a_ch, &opts).converged {
            debug!("seed degree {d}");
            return Ok(lambda);
        }
    }
    Err(Error::SeedDoesNotConverge)
}

/// Per-stage error table: `errors[s][i - 2]` is the variable-node output
/// error for degree `i` against stage `s`'s check density; `incoming[s]` is
/// the error of the variable-to-check density entering that stage.
struct StageTable {
    stages: Vec<usize>,
    errors: Vec<Vec<f64>>,
    incoming: Vec<f64>,
}

fn select_stages(total: usize, max_stages: usize, tail: usize) -> Vec<usize> {
    if total <= max_stages {
        return (0..total).collect();
    }
    let stride = total.div_ceil(max_stages);
    let mut s: Vec<usize> = (0..total).step_by(stride).collect();
    s.extend(total.saturating_sub(tail)..total);
    s.sort_unstable();
    s.dedup();
    s
}

fn record_stages(p: &DesignProblem, lambda: &BTreeMap<usize, f64>, kernel: &VariableKernel) -> (DeResult, StageTable) {
    let a_hat = kernel.transform(&p.a_ch);
    let mut check_outputs: Vec<QuantizedDensity> = Vec::new();
    let result = evolve_observed(&p.ensemble(lambda), &p.a_ch, &p.de_options(), |stage| {
        check_outputs.push(stage.check_output.clone());
    });
    let stages = select_stages(check_outputs.len(), p.max_stages, p.tail_stages);
    let all: Vec<Vec<f64>> = check_outputs
        .iter()
        .map(|b| kernel.edge_errors(&a_hat, &kernel.transform(b), p.max_var_degree))
        .collect();
    // Message entering stage s: a_ch for the first, else the previous output.
    let value = |row: &[f64]| lambda.iter().map(|(&i, &l)| l * row[i - 2]).sum::<f64>();
    let mut incoming = Vec::with_capacity(stages.len());
    for &s in &stages {
        incoming.push(if s == 0 { p.a_ch.error_prob() } else { value(&all[s - 1]) });
    }
    let errors = stages.iter().map(|&s| all[s].clone()).collect();
    (result, StageTable { stages, errors, incoming })
}

fn solve_lp(p: &DesignProblem, lambda: &BTreeMap<usize, f64>, table: &StageTable, delta: f64, s_star: f64) -> Result<BTreeMap<usize, f64>> {
    let degrees: Vec<usize> = (2..=p.max_var_degree).collect();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = degrees
        .iter()
        .map(|&i| lp.add_var(1.0 / i as f64, (0.0, if i == 2 { s_star } else { 1.0 })))
        .collect();
    lp.add_constraint(vars.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    for (row, &incoming) in table.errors.iter().zip(&table.incoming) {
        let current: f64 = lambda.iter().map(|(&i, &l)| l * row[i - 2]).sum();
        let rhs = ((1.0 - delta) * incoming).max(current);
        let scale = if rhs > 0.0 { rhs } else { row.iter().copied().fold(0.0, f64::max) };
        if scale <= 0.0 {
            continue;
        }
        let terms: Vec<_> = vars.iter().zip(row).filter(|(_, &e)| e > 0.0).map(|(&v, &e)| (v, e / scale)).collect();
        lp.add_constraint(terms, ComparisonOp::Le, rhs / scale);
    }
    let solution = match lp.solve() {
        Ok(outcome) => outcome.into_solution().map_err(|_| Error::LpSolver("solve interrupted".into()))?,
        Err(microlp::Error::Infeasible) => return Err(Error::LpInfeasible { stage: None }),
        Err(e) => return Err(Error::LpSolver(e.to_string())),
    };
    let mut out: BTreeMap<usize, f64> = degrees
        .iter()
        .zip(&vars)
        .map(|(&i, &v)| (i, solution.var_value(v).max(0.0)))
        .filter(|&(_, l)| l > COEFF_FLOOR)
        .collect();
    let total: f64 = out.values().sum();
    out.values_mut().for_each(|l| *l /= total);
    Ok(out)
}

/// Iterated LP design. `seed` defaults to [`seed_scan`].
pub fn optimize_lambda(p: &DesignProblem, seed: Option<BTreeMap<usize, f64>>) -> Result<DesignOutcome> {
    p.validate()?;
    let s_star = stability_limit(&p.a_ch, &p.rho);
    let mut lambda = match seed {
        Some(l) => l,
        None => seed_scan(p)?,
    };
    if let Some(&d) = lambda.keys().find(|&&d| d > p.max_var_degree || d < 2) {
        return Err(Error::DegreeAboveMax { degree: d, max: p.max_var_degree });
    }
    let kernel = VariableKernel::new(*p.a_ch.grid(), p.max_var_degree);
    let (run, mut table) = record_stages(p, &lambda, &kernel);
    if !run.converged {
        return Err(Error::SeedDoesNotConverge);
    }
    if lambda.get(&2).copied().unwrap_or(0.0) > s_star + 1e-9 {
        return Err(Error::LpInfeasible { stage: None });
    }
    let mut rate = p.ensemble(&lambda).design_rate();
    let mut rate_history = vec![rate];
    let mut delta = p.delta;
    // Verification failures raise the floor so that delta never returns to a
    // value that produced a false candidate.
    let mut floor = p.delta_min;
    let mut rounds = 0;
    while rounds < p.max_rounds {
        rounds += 1;
        let candidate = solve_lp(p, &lambda, &table, delta, s_star)?;
        let cand_rate = p.ensemble(&candidate).design_rate();
        let gain = cand_rate - rate;
        if gain > 1e-12 {
            let (cand_run, cand_table) = record_stages(p, &candidate, &kernel);
            if !cand_run.converged {
                delta *= 1.5;
                floor = floor.max(delta);
                debug!("round {rounds}: candidate rate {cand_rate:.5} failed verification, delta -> {delta:.4}");
                if delta >= 0.9 {
                    break;
                }
                continue;
            }
            info!("round {rounds}: rate {rate:.5} -> {cand_rate:.5} (delta {delta:.4})");
            lambda = candidate;
            rate = cand_rate;
            table = cand_table;
            rate_history.push(rate);
        }
        if gain < p.min_rate_gain {
            if 0.5 * delta < floor {
                debug!("round {rounds}: gain {gain:.2e} at delta floor, stopping");
                break;
            }
            delta *= 0.5;
            debug!("round {rounds}: gain {gain:.2e}, delta -> {delta:.4}");
        }
    }
    debug_assert!(rate_history.windows(2).all(|w| w[1] >= w[0]));
    let distribution = p.ensemble(&lambda);
    // Independent final check, not reused from the recording runs.
    let verification = evolve(&distribution, &p.a_ch, &p.de_options());
    Ok(DesignOutcome {
        certificate: Certificate {
            operating_point: None,
            iterations: verification.iterations,
            terminal_error: verification.terminal_error,
            lp_rounds: rounds,
            delta_final: delta,
            design_rate: rate,
            stability_limit: s_star,
            rate_history,
        },
        distribution,
        verification,
    })
}

/// Checks a fixed `lambda` against the LP constraints at its own recorded
/// stages: every stage output error must not exceed its input error.
pub fn satisfies_stage_constraints(p: &DesignProblem, lambda: &BTreeMap<usize, f64>) -> bool {
    let kernel = VariableKernel::new(*p.a_ch.grid(), p.max_var_degree.max(lambda.keys().copied().max().unwrap_or(2)));
    let (run, table) = record_stages(p, lambda, &kernel);
    run.converged
        && lambda.get(&2).copied().unwrap_or(0.0) <= stability_limit(&p.a_ch, &p.rho) + 1e-9
        && table.errors.iter().zip(&table.incoming).zip(&table.stages).all(|((row, &inc), _)| {
            lambda.iter().map(|(&i, &l)| l * row[i - 2]).sum::<f64>() <= inc * (1.0 + 1e-9) + 1e-15
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::de::{bpsk_awgn_density, GridSpec};

    fn g() -> GridSpec {
        GridSpec::default()
    }

    #[test]
    fn stability_limit_trivial_channels() {
        let rho = BTreeMap::from([(6, 1.0)]);
        assert_eq!(stability_limit(&QuantizedDensity::point_mass(g(), 25.0), &rho), 1.0);
        let s = stability_limit(&QuantizedDensity::point_mass(g(), 0.0), &rho);
        assert!((s - 0.2).abs() < 1e-15);
    }

    #[test]
    fn stage_selection() {
        assert_eq!(select_stages(5, 200, 20), vec![0, 1, 2, 3, 4]);
        let s = select_stages(800, 200, 20);
        assert!(s.contains(&0) && s.contains(&4) && s.contains(&799) && s.contains(&780));
        assert!(s.len() <= 220);
    }

    #[test]
    fn perfect_channel_puts_everything_on_degree_two() {
        let rho = BTreeMap::from([(6, 1.0)]);
        let p = DesignProblem::new(rho, QuantizedDensity::point_mass(g(), g().llr_max));
        let out = optimize_lambda(&p, None).unwrap();
        assert_eq!(out.distribution.lambda.keys().copied().collect::<Vec<_>>(), vec![2]);
        assert!((out.certificate.design_rate - (1.0 - (1.0 / 6.0) / 0.5)).abs() < 1e-9);
        assert!(out.verification.converged);
    }

    #[test]
    fn design_improves_on_seed_and_is_deterministic() {
        let rho = BTreeMap::from([(6, 1.0)]);
        let mut p = DesignProblem::new(rho, bpsk_awgn_density(g(), 1.5));
        p.max_var_degree = 12;
        let a = optimize_lambda(&p, None).unwrap();
        let b = optimize_lambda(&p, None).unwrap();
        assert_eq!(a.distribution, b.distribution);
        assert!(a.verification.converged);
        let hist = &a.certificate.rate_history;
        assert!(hist.windows(2).all(|w| w[1] >= w[0]));
        assert!(*hist.last().unwrap() > hist[0]);
        assert!(a.distribution.lambda.keys().all(|&d| d <= 12));
        assert!(a.distribution.lambda.get(&2).copied().unwrap_or(0.0) <= a.certificate.stability_limit + 1e-9);
    }

    #[test]
    fn hopeless_channel_has_no_seed() {
        let rho = BTreeMap::from([(6, 1.0)]);
        let mut p = DesignProblem::new(rho, QuantizedDensity::point_mass(g(), 0.0));
        p.max_var_degree = 4;
        assert_eq!(optimize_lambda(&p, None).unwrap_err(), Error::SeedDoesNotConverge);
    }
}
