//! Encoder for a sparse parity-check matrix without densifying it.
//!
//! Variables are split into *pivots*, each solved from one check by
//! back-substitution, and *declared* variables that are set freely. The checks
//! left without a pivot constrain the declared variables through a small
//! dense system; a basis of that system picks the gap variables, and every
//! other declared variable carries an information bit.

use crate::ensemble::ParityCheckMatrix;
use crate::error::{Error, Result};

/// Fixed-width GF(2) vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Bits(Vec<u64>);

impl Bits {
    pub(crate) fn zeros(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    pub(crate) fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub(crate) fn flip(&mut self, i: usize) {
        self.0[i / 64] ^= 1 << (i % 64);
    }

    pub(crate) fn xor_with(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub(crate) fn lowest_set(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Encoder {
    /// `(variable, check)` in the order pivots were solved.
    pivots: Vec<(u32, u32)>,
    info: Vec<u32>,
    gap: Vec<u32>,
    /// Checks that received no pivot.
    leftover: Vec<u32>,
    /// Reduced basis of the gap columns over the leftover checks: pivot bit,
    /// reduced vector, and the gap columns it combines.
    basis: Vec<(usize, Bits, Bits)>,
}

impl Encoder {
    pub(crate) fn build(h: &ParityCheckMatrix) -> Result<Self> {
        let (n, m) = (h.n, h.m);
        let mut undetermined = vec![true; n];
        let mut used = vec![false; m];
        let mut count: Vec<usize> = h.rows.iter().map(Vec::len).collect();
        let mut pivots = Vec::with_capacity(m);
        let mut declared = Vec::new();
        let mut queue: Vec<u32> = (0..m as u32).filter(|&c| count[c as usize] == 1).collect();
        let mut remaining = n;

        let settle = |v: u32, count: &mut [usize], queue: &mut Vec<u32>, used: &[bool]| {
            for &c in &h.cols[v as usize] {
                count[c as usize] -= 1;
                if count[c as usize] == 1 && !used[c as usize] {
                    queue.push(c);
                }
            }
        };

        while remaining > 0 {
            if let Some(c) = queue.pop() {
                if used[c as usize] || count[c as usize] != 1 {
                    continue;
                }
                let v = *h.rows[c as usize]
                    .iter()
                    .find(|&&v| undetermined[v as usize])
                    .expect("count tracks undetermined variables");
                used[c as usize] = true;
                undetermined[v as usize] = false;
                remaining -= 1;
                pivots.push((v, c));
                settle(v, &mut count, &mut queue, &used);
                continue;
            }
            // Stuck: declare all but one variable of the lightest open check.
            let pick = (0..m)
                .filter(|&c| !used[c] && count[c] >= 2)
                .min_by_key(|&c| (count[c], c));
            match pick {
                Some(c) => {
                    let open: Vec<u32> = h.rows[c].iter().copied().filter(|&v| undetermined[v as usize]).collect();
                    for &v in &open[1..] {
                        undetermined[v as usize] = false;
                        remaining -= 1;
                        declared.push(v);
                        settle(v, &mut count, &mut queue, &used);
                    }
                }
                None => {
                    for v in 0..n as u32 {
                        if undetermined[v as usize] {
                            undetermined[v as usize] = false;
                            remaining -= 1;
                            declared.push(v);
                            settle(v, &mut count, &mut queue, &used);
                        }
                    }
                }
            }
        }

        let leftover: Vec<u32> = (0..m as u32).filter(|&c| !used[c as usize]).collect();
        let g = leftover.len();
        let mut slot = vec![usize::MAX; m];
        for (i, &c) in leftover.iter().enumerate() {
            slot[c as usize] = i;
        }
        // Influence of every variable on the leftover checks, pushed back
        // through the pivots in reverse solve order.
        let mut influence: Vec<Bits> = (0..n).map(|_| Bits::zeros(g)).collect();
        for v in 0..n {
            for &c in &h.cols[v] {
                if slot[c as usize] != usize::MAX {
                    influence[v].flip(slot[c as usize]);
                }
            }
        }
        for &(p, c) in pivots.iter().rev() {
            if influence[p as usize].is_zero() {
                continue;
            }
            let w = influence[p as usize].clone();
            for &u in &h.rows[c as usize] {
                if u != p {
                    influence[u as usize].xor_with(&w);
                }
            }
        }

        let mut basis: Vec<(usize, Bits, Bits)> = Vec::new();
        let mut gap = Vec::new();
        let mut info = Vec::new();
        for &d in &declared {
            let mut v = influence[d as usize].clone();
            let mut combo = Bits::zeros(g);
            for (bit, b, cb) in &basis {
                if v.get(*bit) {
                    v.xor_with(b);
                    combo.xor_with(cb);
                }
            }
            match v.lowest_set() {
                Some(bit) if gap.len() < g => {
                    combo.flip(gap.len());
                    gap.push(d);
                    basis.push((bit, v, combo));
                }
                _ => info.push(d),
            }
        }
        if info.is_empty() && n > m {
            return Err(Error::Construction("no information positions".into()));
        }
        Ok(Self {
            pivots,
            info,
            gap,
            leftover,
            basis,
        })
    }

    pub(crate) fn dimension(&self) -> usize {
        self.info.len()
    }

    pub(crate) fn rank(&self) -> usize {
        self.pivots.len() + self.gap.len()
    }

    pub(crate) fn info_positions(&self) -> &[u32] {
        &self.info
    }

    fn propagate(&self, h: &ParityCheckMatrix, word: &mut [u8]) {
        for &(p, c) in &self.pivots {
            let mut acc = 0u8;
            for &u in &h.rows[c as usize] {
                if u != p {
                    acc ^= word[u as usize];
                }
            }
            word[p as usize] = acc;
        }
    }

    pub(crate) fn encode(&self, h: &ParityCheckMatrix, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.info.len() {
            return Err(Error::LengthMismatch {
                expected: self.info.len(),
                actual: message.len(),
            });
        }
        let mut word = vec![0u8; h.n];
        for (&pos, &bit) in self.info.iter().zip(message) {
            word[pos as usize] = bit & 1;
        }
        self.propagate(h, &mut word);
        if self.gap.is_empty() {
            return Ok(word);
        }
        let mut s = Bits::zeros(self.leftover.len());
        for (i, &c) in self.leftover.iter().enumerate() {
            let parity = h.rows[c as usize].iter().fold(0u8, |a, &v| a ^ word[v as usize]);
            if parity == 1 {
                s.flip(i);
            }
        }
        let mut x = Bits::zeros(self.gap.len());
        for (bit, b, combo) in &self.basis {
            if s.get(*bit) {
                s.xor_with(b);
                x.xor_with(combo);
            }
        }
        debug_assert!(s.is_zero(), "leftover checks inconsistent");
        for (j, &pos) in self.gap.iter().enumerate() {
            word[pos as usize] = u8::from(x.get(j));
        }
        self.propagate(h, &mut word);
        Ok(word)
    }
}
