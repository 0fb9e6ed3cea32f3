//! Variable-node update by FFT convolution on an alias-free cyclic grid.

use std::collections::BTreeMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::density::{GridSpec, QuantizedDensity};

/// Convolution engine for sums of up to `max_terms` grid-valued LLRs. The
/// cyclic length is a power of two at least `2 half_levels max_terms + 1`,
/// so no partial sum wraps around; saturation is applied once at the end.
pub struct VariableKernel {
    grid: GridSpec,
    max_terms: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Transform of the hard-decision error weight (1 below zero, 1/2 at zero).
    error_weight: Vec<Complex64>,
}

impl std::fmt::Debug for VariableKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VariableKernel")
            .field("grid", &self.grid)
            .field("max_terms", &self.max_terms)
            .field("n", &self.n)
            .finish()
    }
}

impl VariableKernel {
    pub fn new(grid: GridSpec, max_terms: usize) -> Self {
        let max_terms = max_terms.max(1);
        let n = (2 * grid.half_levels * max_terms + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let reach = grid.half_levels * max_terms;
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        w[0].re = 0.5;
        for k in 1..=reach {
            w[n - k].re = 1.0;
        }
        forward.process(&mut w);
        Self {
            grid,
            max_terms,
            n,
            forward,
            inverse,
            error_weight: w,
        }
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn transform(&self, d: &QuantizedDensity) -> Vec<Complex64> {
        let h = self.grid.half_levels as isize;
        let n = self.n as isize;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        for (i, &m) in d.masses().iter().enumerate() {
            let k = i as isize - h;
            buf[k.rem_euclid(n) as usize].re = m;
        }
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform, clip round-off negatives, fold the tails into the
    /// saturation bins and renormalize.
    fn back(&self, mut spec: Vec<Complex64>) -> QuantizedDensity {
        self.inverse.process(&mut spec);
        let h = self.grid.half_levels as isize;
        let n = self.n as isize;
        let scale = 1.0 / self.n as f64;
        let mut mass = vec![0.0; self.grid.len()];
        for (idx, c) in spec.iter().enumerate() {
            let v = (c.re * scale).max(0.0);
            if v == 0.0 {
                continue;
            }
            let k = if idx as isize > n / 2 { idx as isize - n } else { idx as isize };
            mass[(k.clamp(-h, h) + h) as usize] += v;
        }
        let total: f64 = mass.iter().sum();
        if total > 0.0 {
            mass.iter_mut().for_each(|m| *m /= total);
        }
        QuantizedDensity::from_parts(self.grid, mass)
    }

    /// Dense coefficients `c[d - 1]` for degrees `d >= 1`.
    fn dense(coeffs: &BTreeMap<usize, f64>) -> Vec<f64> {
        let max = coeffs.keys().copied().max().unwrap_or(1);
        let mut c = vec![0.0; max];
        for (&d, &v) in coeffs {
            c[d - 1] = v;
        }
        c
    }

    /// `sum_d c[d - 1] b^{d-1}` by Horner's rule.
    fn polynomial(c: &[f64], b: Complex64) -> Complex64 {
        c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &v| acc * b + v)
    }

    /// `sum_i lambda_i (a ⊛ b^{⊛(i-1)})` given transforms of `a` and `b`.
    pub fn update(&self, a_hat: &[Complex64], b_hat: &[Complex64], lambda: &BTreeMap<usize, f64>) -> QuantizedDensity {
        let c = Self::dense(lambda);
        let spec = a_hat
            .iter()
            .zip(b_hat)
            .map(|(&a, &b)| a * Self::polynomial(&c, b))
            .collect();
        self.back(spec)
    }

    /// `sum_i w_i (a ⊛ b^{⊛i})`, the density seen by a bit decision at a
    /// variable node of degree `i` chosen with probability `w_i`.
    pub fn decision(&self, a_hat: &[Complex64], b_hat: &[Complex64], node_fractions: &BTreeMap<usize, f64>) -> QuantizedDensity {
        let shifted: BTreeMap<usize, f64> = node_fractions.iter().map(|(&d, &w)| (d + 1, w)).collect();
        self.update(a_hat, b_hat, &shifted)
    }

    /// Hard-decision error probability of the un-saturated density whose
    /// transform is `spec`.
    pub fn error_of(&self, spec: &[Complex64]) -> f64 {
        let dot: f64 = spec
            .iter()
            .zip(&self.error_weight)
            .map(|(s, w)| (s * w.conj()).re)
            .sum();
        (dot / self.n as f64).clamp(0.0, 1.0)
    }

    /// `e[i - 2] = error_prob(a ⊛ b^{⊛(i-1)})` for degrees `2..=max_degree`.
    pub fn edge_errors(&self, a_hat: &[Complex64], b_hat: &[Complex64], max_degree: usize) -> Vec<f64> {
        assert!(max_degree <= self.max_terms, "kernel too short for degree {max_degree}");
        let mut cur: Vec<Complex64> = a_hat.iter().zip(b_hat).map(|(a, b)| a * b).collect();
        let mut out = Vec::with_capacity(max_degree.saturating_sub(1));
        for d in 2..=max_degree {
            if d > 2 {
                cur.iter_mut().zip(b_hat).for_each(|(c, b)| *c *= b);
            }
            out.push(self.error_of(&cur));
        }
        out
    }
}
