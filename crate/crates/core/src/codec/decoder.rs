//! Flooding sum-product decoder.

use serde::{Deserialize, Serialize};

use crate::ensemble::ParityCheckMatrix;
use crate::error::{Error, Result};

/// Messages are clipped to this magnitude to keep `atanh` finite.
const MESSAGE_CLIP: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    /// Hard decisions, 0/1 per position.
    pub bits: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

/// Tanner-graph layout shared by all decodes of one code: edges grouped by
/// check, with each variable's edge list.
#[derive(Debug, Clone)]
pub struct SumProductDecoder {
    n: usize,
    check_start: Vec<usize>,
    edge_var: Vec<u32>,
    var_edges: Vec<Vec<u32>>,
}

impl SumProductDecoder {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let mut check_start = Vec::with_capacity(h.m + 1);
        let mut edge_var = Vec::with_capacity(h.edge_count());
        let mut var_edges = vec![Vec::new(); h.n];
        check_start.push(0);
        for row in &h.rows {
            for &v in row {
                var_edges[v as usize].push(edge_var.len() as u32);
                edge_var.push(v);
            }
            check_start.push(edge_var.len());
        }
        Self {
            n: h.n,
            check_start,
            edge_var,
            var_edges,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn syndrome_ok(&self, bits: &[u8]) -> bool {
        self.check_start
            .windows(2)
            .all(|w| self.edge_var[w[0]..w[1]].iter().fold(0u8, |a, &v| a ^ bits[v as usize]) == 0)
    }

    /// Decodes channel LLRs (`ln p(y|0)/p(y|1)`, natural log). Stops as soon
    /// as the hard decisions satisfy every check.
    pub fn decode(&self, llrs: &[f64], max_iter: usize) -> Result<DecodeOutcome> {
        if llrs.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: llrs.len(),
            });
        }
        let mut bits: Vec<u8> = llrs.iter().map(|&l| u8::from(l < 0.0)).collect();
        if self.syndrome_ok(&bits) {
            return Ok(DecodeOutcome {
                bits,
                converged: true,
                iterations: 0,
            });
        }
        let edges = self.edge_var.len();
        // Variable-to-check messages start at the channel LLRs.
        let mut v2c: Vec<f64> = self.edge_var.iter().map(|&v| llrs[v as usize]).collect();
        let mut c2v = vec![0.0; edges];
        let mut t = Vec::new();
        let mut suffix = Vec::new();
        for iteration in 1..=max_iter {
            for w in self.check_start.windows(2) {
                let (s, e) = (w[0], w[1]);
                t.clear();
                t.extend(v2c[s..e].iter().map(|&m| (0.5 * m.clamp(-MESSAGE_CLIP, MESSAGE_CLIP)).tanh()));
                suffix.clear();
                suffix.resize(t.len() + 1, 1.0);
                for i in (0..t.len()).rev() {
                    suffix[i] = suffix[i + 1] * t[i];
                }
                let mut prefix = 1.0;
                for i in 0..t.len() {
                    let p = (prefix * suffix[i + 1]).clamp(-1.0 + 1e-16, 1.0 - 1e-16);
                    c2v[s + i] = (2.0 * p.atanh()).clamp(-MESSAGE_CLIP, MESSAGE_CLIP);
                    prefix *= t[i];
                }
            }
            for (v, es) in self.var_edges.iter().enumerate() {
                let total = llrs[v] + es.iter().map(|&e| c2v[e as usize]).sum::<f64>();
                bits[v] = u8::from(total < 0.0);
                for &e in es {
                    v2c[e as usize] = total - c2v[e as usize];
                }
            }
            if self.syndrome_ok(&bits) {
                return Ok(DecodeOutcome {
                    bits,
                    converged: true,
                    iterations: iteration,
                });
            }
        }
        Ok(DecodeOutcome {
            bits,
            converged: false,
            iterations: max_iter,
        })
    }
}
