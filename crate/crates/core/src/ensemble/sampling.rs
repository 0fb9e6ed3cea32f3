//! Finite-length realization of an ensemble by configuration-model socket
//! matching.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DegreeDistribution;
use crate::error::{Error, Result};

/// Block length up to which 4-cycle removal runs by default.
pub const FOUR_CYCLE_REMOVAL_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingOptions {
    /// `None` applies the default (on for n <= 10^4).
    pub remove_four_cycles: Option<bool>,
    pub max_cycle_passes: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            remove_four_cycles: None,
            max_cycle_passes: 30,
        }
    }
}

/// Sparse parity-check matrix. `rows[c]` lists the variables in check `c`,
/// `cols[v]` the checks on variable `v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityCheckMatrix {
    pub n: usize,
    pub m: usize,
    pub rows: Vec<Vec<u32>>,
    pub cols: Vec<Vec<u32>>,
    pub seed: u64,
}

impl ParityCheckMatrix {
    /// Builds the matrix from check rows. Rows must not repeat a variable.
    pub fn from_rows(n: usize, rows: Vec<Vec<u32>>, seed: u64) -> Result<Self> {
        let mut cols = vec![Vec::new(); n];
        for (c, row) in rows.iter().enumerate() {
            for &v in row {
                let v = v as usize;
                if v >= n {
                    return Err(Error::Construction(format!("variable {v} out of range")));
                }
                if cols[v].contains(&(c as u32)) {
                    return Err(Error::Construction(format!("double edge ({v}, {c})")));
                }
                cols[v].push(c as u32);
            }
        }
        Ok(Self {
            n,
            m: rows.len(),
            rows,
            cols,
            seed,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn column_degrees(&self) -> Vec<usize> {
        self.cols.iter().map(Vec::len).collect()
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    /// Histogram degree -> number of variable nodes.
    pub fn column_degree_histogram(&self) -> BTreeMap<usize, usize> {
        histogram(&self.cols)
    }

    pub fn row_degree_histogram(&self) -> BTreeMap<usize, usize> {
        histogram(&self.rows)
    }

    /// True when every check is satisfied by `bits` (0/1 values).
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.n
            && self
                .rows
                .iter()
                .all(|row| row.iter().fold(0u8, |acc, &v| acc ^ bits[v as usize]) == 0)
    }

    /// Number of 4-cycles (pairs of variables sharing two checks, counted per
    /// pair of checks).
    pub fn four_cycle_count(&self) -> usize {
        let mut count = 0usize;
        let mut hits = vec![0u32; self.m];
        let mut touched = Vec::new();
        for (c, row) in self.rows.iter().enumerate() {
            for &v in row {
                for &d in &self.cols[v as usize] {
                    if d as usize > c {
                        if hits[d as usize] == 0 {
                            touched.push(d as usize);
                        }
                        hits[d as usize] += 1;
                    }
                }
            }
            for &d in &touched {
                let h = hits[d] as usize;
                count += h * (h - 1) / 2;
                hits[d] = 0;
            }
            touched.clear();
        }
        count
    }
}

fn histogram(adj: &[Vec<u32>]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for a in adj {
        *h.entry(a.len()).or_insert(0) += 1;
    }
    h
}

/// Integer node counts summing to `total` from fractions, by the largest
/// remainder method. Ties go to the smaller degree.
fn largest_remainder(fractions: &BTreeMap<usize, f64>, total: usize) -> BTreeMap<usize, usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut remainders = Vec::new();
    let mut assigned = 0usize;
    for (&d, &f) in fractions {
        let exact = f * total as f64;
        let base = exact.floor() as usize;
        counts.insert(d, base);
        assigned += base;
        remainders.push((exact - base as f64, d));
    }
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, d) in remainders.iter().take(total.saturating_sub(assigned)) {
        *counts.get_mut(&d).unwrap() += 1;
    }
    counts
}

pub fn sample_parity_check(dd: &DegreeDistribution, n: usize, seed: u64) -> Result<ParityCheckMatrix> {
    sample_parity_check_with(dd, n, seed, &SamplingOptions::default())
}

/// Samples a parity-check matrix of block length `n` from the ensemble.
///
/// Variable node counts follow the node-perspective lambda (largest
/// remainder). Check counts follow the node-perspective rho; the socket
/// surplus or deficit left by rounding is absorbed by the highest-degree
/// check nodes, one socket each. Sockets are matched by a seeded
/// permutation and double edges are re-paired by edge swaps.
pub fn sample_parity_check_with(
    dd: &DegreeDistribution,
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<ParityCheckMatrix> {
    let var_counts = largest_remainder(&dd.variable_node_fractions(), n);
    let mut var_degrees: Vec<usize> = Vec::with_capacity(n);
    for (&d, &cnt) in &var_counts {
        var_degrees.extend(std::iter::repeat_n(d, cnt));
    }
    let edges: usize = var_degrees.iter().sum();
    let m = (edges as f64 * dd.rho_integral()).round() as usize;
    if n == 0 || edges == 0 || m == 0 {
        return Err(Error::InfeasibleRounding(format!(
            "n={n} gives {edges} edges and {m} checks"
        )));
    }
    let check_counts = largest_remainder(&dd.check_node_fractions(), m);
    let mut check_degrees: Vec<usize> = Vec::with_capacity(m);
    for (&d, &cnt) in &check_counts {
        check_degrees.extend(std::iter::repeat_n(d, cnt));
    }
    // Highest degrees sit at the end; absorb the residual there.
    let sockets: usize = check_degrees.iter().sum();
    if sockets < edges {
        let deficit = edges - sockets;
        if deficit > m {
            return Err(Error::InfeasibleRounding(format!(
                "check socket deficit {deficit} exceeds {m} checks"
            )));
        }
        for d in check_degrees.iter_mut().rev().take(deficit) {
            *d += 1;
        }
    } else if sockets > edges {
        let surplus = sockets - edges;
        let reducible = check_degrees.iter().filter(|&&d| d > 2).count();
        if surplus > reducible {
            return Err(Error::InfeasibleRounding(format!(
                "check socket surplus {surplus} exceeds {reducible} reducible checks"
            )));
        }
        let mut left = surplus;
        for d in check_degrees.iter_mut().rev() {
            if left == 0 {
                break;
            }
            if *d > 2 {
                *d -= 1;
                left -= 1;
            }
        }
    }
    if check_degrees.iter().any(|&d| d > n) {
        return Err(Error::InfeasibleRounding(format!(
            "check degree exceeds block length {n}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check_sockets: Vec<u32> = Vec::with_capacity(edges);
    for (c, &d) in check_degrees.iter().enumerate() {
        check_sockets.extend(std::iter::repeat_n(c as u32, d));
    }
    check_sockets.shuffle(&mut rng);

    let mut graph = Graph::new(n, m);
    let mut socket = 0;
    for (v, &d) in var_degrees.iter().enumerate() {
        for _ in 0..d {
            graph.add_edge(v as u32, check_sockets[socket]);
            socket += 1;
        }
    }
    let edge_vars: Vec<u32> = var_degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat_n(v as u32, d))
        .collect();

    graph.remove_double_edges(&edge_vars, &mut rng)?;
    let remove_cycles = opts
        .remove_four_cycles
        .unwrap_or(n <= FOUR_CYCLE_REMOVAL_LIMIT);
    if remove_cycles {
        graph.remove_four_cycles(&edge_vars, &mut rng, opts.max_cycle_passes);
    }
    Ok(ParityCheckMatrix {
        n,
        m,
        rows: graph.rows,
        cols: graph.cols,
        seed,
    })
}

struct Graph {
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
}

impl Graph {
    fn new(n: usize, m: usize) -> Self {
        Self {
            rows: vec![Vec::new(); m],
            cols: vec![Vec::new(); n],
        }
    }

    fn add_edge(&mut self, v: u32, c: u32) {
        self.cols[v as usize].push(c);
        self.rows[c as usize].push(v);
    }

    fn multiplicity(&self, v: u32, c: u32) -> usize {
        self.cols[v as usize].iter().filter(|&&x| x == c).count()
    }

    /// Rewires (u, c), (w, d) into (u, d), (w, c) when that creates no
    /// double edge.
    fn try_swap(&mut self, u: u32, c: u32, w: u32, d: u32) -> bool {
        if u == w || c == d || self.multiplicity(u, d) > 0 || self.multiplicity(w, c) > 0 {
            return false;
        }
        replace_one(&mut self.cols[u as usize], c, d);
        replace_one(&mut self.cols[w as usize], d, c);
        replace_one(&mut self.rows[c as usize], u, w);
        replace_one(&mut self.rows[d as usize], w, u);
        true
    }

    fn random_edge(&self, edge_vars: &[u32], rng: &mut ChaCha8Rng) -> (u32, u32) {
        let w = edge_vars[rng.gen_range(0..edge_vars.len())];
        let checks = &self.cols[w as usize];
        (w, checks[rng.gen_range(0..checks.len())])
    }

    fn remove_double_edges(&mut self, edge_vars: &[u32], rng: &mut ChaCha8Rng) -> Result<()> {
        const ATTEMPTS: usize = 10_000;
        for v in 0..self.cols.len() as u32 {
            loop {
                let dup = {
                    let checks = &self.cols[v as usize];
                    checks
                        .iter()
                        .enumerate()
                        .find(|(i, c)| checks[..*i].contains(c))
                        .map(|(_, &c)| c)
                };
                let Some(c) = dup else { break };
                let mut fixed = false;
                for _ in 0..ATTEMPTS {
                    let (w, d) = self.random_edge(edge_vars, rng);
                    if self.try_swap(v, c, w, d) {
                        fixed = true;
                        break;
                    }
                }
                if !fixed {
                    return Err(Error::Construction(format!(
                        "could not re-pair double edge at variable {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Edge-swap passes that break 4-cycles; stops early when none remain.
    fn remove_four_cycles(&mut self, edge_vars: &[u32], rng: &mut ChaCha8Rng, passes: usize) {
        let m = self.rows.len();
        let mut first_var = vec![u32::MAX; m];
        for _ in 0..passes {
            let mut swaps = 0usize;
            for c in 0..m as u32 {
                // For each other check d, the first variable of c seen on d;
                // a second one closes a 4-cycle through c and d.
                let mut touched = Vec::new();
                let mut victim = None;
                'scan: for &v in &self.rows[c as usize] {
                    for &d in &self.cols[v as usize] {
                        if d == c {
                            continue;
                        }
                        if first_var[d as usize] == u32::MAX {
                            first_var[d as usize] = v;
                            touched.push(d);
                        } else if first_var[d as usize] != v {
                            victim = Some(v);
                            break 'scan;
                        }
                    }
                }
                for d in touched {
                    first_var[d as usize] = u32::MAX;
                }
                if let Some(v) = victim {
                    for _ in 0..100 {
                        let (w, d) = self.random_edge(edge_vars, rng);
                        if self.try_swap(v, c, w, d) {
                            swaps += 1;
                            break;
                        }
                    }
                }
            }
            if swaps == 0 {
                break;
            }
        }
    }
}

fn replace_one(list: &mut [u32], from: u32, to: u32) {
    let pos = list.iter().position(|&x| x == from).expect("edge present");
    list[pos] = to;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::User;
    use crate::ensemble::published_ensemble;

    fn no_double_edges(h: &ParityCheckMatrix) -> bool {
        h.cols.iter().all(|checks| {
            let mut s = checks.clone();
            s.sort_unstable();
            s.windows(2).all(|w| w[0] != w[1])
        })
    }

    #[test]
    fn regular_three_six_small() {
        let dd = DegreeDistribution::regular(3, 6);
        let h = sample_parity_check(&dd, 12, 1).unwrap();
        assert_eq!(h.m, 6);
        assert!(h.column_degrees().iter().all(|&d| d == 3));
        assert!(h.row_degrees().iter().all(|&d| d == 6));
        assert!(no_double_edges(&h));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let dd = DegreeDistribution::regular(3, 6);
        let a = sample_parity_check(&dd, 12, 1).unwrap();
        let b = sample_parity_check(&dd, 12, 1).unwrap();
        assert_eq!(a, b);
        let c = sample_parity_check(&dd, 1200, 2).unwrap();
        assert_ne!(c, sample_parity_check(&dd, 1200, 3).unwrap());
    }

    #[test]
    fn degree_sums_agree() {
        let (dd, _) = published_ensemble(User::Y, 0.3)
            .unwrap()
            .distribution
            .validate_and_normalize()
            .unwrap();
        let h = sample_parity_check(&dd, 3000, 7).unwrap();
        let cols: usize = h.column_degrees().iter().sum();
        let rows: usize = h.row_degrees().iter().sum();
        assert_eq!(cols, h.edge_count());
        assert_eq!(rows, h.edge_count());
        assert!(no_double_edges(&h));
    }

    #[test]
    fn column_histogram_follows_node_perspective_lambda() {
        let (dd, _) = published_ensemble(User::Z, 0.8)
            .unwrap()
            .distribution
            .validate_and_normalize()
            .unwrap();
        let n = 10_000;
        let h = sample_parity_check(&dd, n, 11).unwrap();
        // Oracle: recount straight from the sampled columns.
        let mut counted: BTreeMap<usize, usize> = BTreeMap::new();
        for col in &h.cols {
            *counted.entry(col.len()).or_default() += 1;
        }
        for (d, frac) in dd.variable_node_fractions() {
            let got = counted.get(&d).copied().unwrap_or(0) as f64;
            assert!((got - frac * n as f64).abs() <= 1.0, "degree {d}: {got} vs {}", frac * n as f64);
        }
    }

    #[test]
    fn four_cycle_removal_reduces_cycles() {
        let dd = DegreeDistribution::regular(3, 6);
        let off = SamplingOptions {
            remove_four_cycles: Some(false),
            ..Default::default()
        };
        let raw = sample_parity_check_with(&dd, 2000, 5, &off).unwrap();
        let cleaned = sample_parity_check(&dd, 2000, 5).unwrap();
        assert!(raw.four_cycle_count() > 0);
        assert_eq!(cleaned.four_cycle_count(), 0);
        assert!(cleaned.column_degrees().iter().all(|&d| d == 3));
        assert!(cleaned.row_degrees().iter().all(|&d| d == 6));
    }

    #[test]
    fn tiny_block_is_infeasible() {
        let dd = DegreeDistribution::regular(3, 6);
        assert!(matches!(
            sample_parity_check(&dd, 0, 1),
            Err(Error::InfeasibleRounding(_))
        ));
    }
}
