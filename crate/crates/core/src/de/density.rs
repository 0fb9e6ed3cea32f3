//! LLR grids and probability masses on them.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::normal_interval_mass;

/// Floor used in the denominator of [`QuantizedDensity::symmetry_violation`].
pub const SYMMETRY_FLOOR: f64 = 1e-12;

/// Uniform saturating LLR grid with bins `-half_levels..=half_levels`, step
/// `llr_max / half_levels`. Bin `k` collects LLRs in `[(k-1/2)step,
/// (k+1/2)step)`; the two end bins also collect everything beyond them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub llr_max: f64,
    pub half_levels: usize,
}

impl Default for GridSpec {
    /// `llr_max = 25` and a 9-bit quantizer (256 magnitude steps).
    fn default() -> Self {
        Self {
            llr_max: 25.0,
            half_levels: 256,
        }
    }
}

impl GridSpec {
    pub fn new(llr_max: f64, half_levels: usize) -> Result<Self> {
        if !(llr_max > 0.0) || half_levels == 0 {
            return Err(Error::InvalidConfig(format!(
                "grid needs llr_max > 0 and half_levels > 0 (got {llr_max}, {half_levels})"
            )));
        }
        Ok(Self {
            llr_max,
            half_levels,
        })
    }

    pub fn step(&self) -> f64 {
        self.llr_max / self.half_levels as f64
    }

    pub fn len(&self) -> usize {
        2 * self.half_levels + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Storage index of signed bin `k`.
    pub fn index(&self, k: isize) -> usize {
        (k + self.half_levels as isize) as usize
    }

    /// Signed bin of storage index `i`.
    pub fn bin(&self, i: usize) -> isize {
        i as isize - self.half_levels as isize
    }

    pub fn value(&self, i: usize) -> f64 {
        self.bin(i) as f64 * self.step()
    }

    /// Nearest bin, saturating at the ends.
    pub fn quantize(&self, llr: f64) -> usize {
        let k = (llr / self.step()).round();
        let h = self.half_levels as f64;
        self.index(k.clamp(-h, h) as isize)
    }
}

/// Probability masses on a [`GridSpec`]; index 0 is bin `-half_levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDensity {
    grid: GridSpec,
    mass: Vec<f64>,
}

impl QuantizedDensity {
    pub fn new(grid: GridSpec, mass: Vec<f64>) -> Result<Self> {
        if mass.len().is_multiple_of(2) {
            return Err(Error::AsymmetricGrid(mass.len()));
        }
        if mass.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, mass })
    }

    pub(crate) fn from_parts(grid: GridSpec, mass: Vec<f64>) -> Self {
        debug_assert_eq!(mass.len(), grid.len());
        Self { grid, mass }
    }

    pub fn point_mass(grid: GridSpec, llr: f64) -> Self {
        let mut mass = vec![0.0; grid.len()];
        mass[grid.quantize(llr)] = 1.0;
        Self { grid, mass }
    }

    /// Discretized consistent Gaussian LLR density `N(mean, 2 mean)`, the
    /// law of the LLR of BPSK on AWGN. `mean = 0` gives a point mass at 0.
    pub fn consistent_gaussian(grid: GridSpec, mean: f64) -> Self {
        if mean <= 0.0 {
            return Self::point_mass(grid, 0.0);
        }
        let sd = (2.0 * mean).sqrt();
        let step = grid.step();
        let h = grid.half_levels as isize;
        let mass = (0..grid.len())
            .map(|i| {
                let k = grid.bin(i);
                let lo = if k == -h { f64::NEG_INFINITY } else { (k as f64 - 0.5) * step };
                let hi = if k == h { f64::INFINITY } else { (k as f64 + 0.5) * step };
                normal_interval_mass((lo - mean) / sd, (hi - mean) / sd)
            })
            .collect();
        Self { grid, mass }.normalized()
    }

    /// Histogram of LLR samples (nearest bin, saturating).
    pub fn from_samples(grid: GridSpec, samples: &[f64]) -> Self {
        let mut mass = vec![0.0; grid.len()];
        for &s in samples {
            mass[grid.quantize(s)] += 1.0;
        }
        let w = 1.0 / samples.len().max(1) as f64;
        mass.iter_mut().for_each(|m| *m *= w);
        Self { grid, mass }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn into_masses(self) -> Vec<f64> {
        self.mass
    }

    /// Mass of signed bin `k`.
    pub fn at(&self, k: isize) -> f64 {
        self.mass[self.grid.index(k)]
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn normalized(mut self) -> Self {
        let t = self.total_mass();
        if t > 0.0 {
            self.mass.iter_mut().for_each(|m| *m /= t);
        }
        self
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Probability of a wrong hard decision: negative mass plus half the
    /// mass at zero.
    pub fn error_prob(&self) -> f64 {
        let h = self.grid.half_levels;
        self.mass[..h].iter().sum::<f64>() + 0.5 * self.mass[h]
    }

    /// The density of `-L`.
    pub fn mirrored(&self) -> Self {
        let mut mass = self.mass.clone();
        mass.reverse();
        Self {
            grid: self.grid,
            mass,
        }
    }

    /// `sum_k mass(k) e^{-k step / 2}`.
    pub fn bhattacharyya(&self) -> f64 {
        let step = self.grid.step();
        self.mass
            .iter()
            .enumerate()
            .map(|(i, &m)| m * (-0.5 * self.grid.bin(i) as f64 * step).exp())
            .sum()
    }

    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        Ok(0.5
            * self
                .mass
                .iter()
                .zip(&other.mass)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Largest relative violation of `a(-x) = a(x) e^{-x}` over the paired
    /// bins `1..half_levels`. The saturation pair is skipped: it carries the
    /// folded tail mass, which is not a point mass at `llr_max`.
    pub fn symmetry_violation(&self) -> f64 {
        let step = self.grid.step();
        (1..self.grid.half_levels as isize)
            .map(|k| {
                let expected = self.at(k) * (-(k as f64) * step).exp();
                (self.at(-k) - expected).abs() / expected.max(SYMMETRY_FLOOR)
            })
            .fold(0.0, f64::max)
    }

    /// Projects onto the exact grid symmetry: the total of each pair
    /// `(k, -k)` is kept and split in the ratio `1 : e^{-k step}`. The result
    /// is a floating-point fixed point, so applying this twice is bit-exact.
    pub fn enforce_symmetry(mut self) -> Self {
        let step = self.grid.step();
        for k in 1..=self.grid.half_levels as isize {
            let neg_share = 1.0 / (1.0 + (k as f64 * step).exp());
            let (ip, ineg) = (self.grid.index(k), self.grid.index(-k));
            let mut total = self.mass[ip] + self.mass[ineg];
            for _ in 0..16 {
                let neg = total * neg_share;
                let pos = total - neg;
                self.mass[ip] = pos;
                self.mass[ineg] = neg;
                let again = pos + neg;
                if again == total {
                    break;
                }
                total = again;
            }
        }
        self
    }

    /// Writes `bin_index,llr_value,mass` rows after `#`-prefixed header lines.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "bin_index,llr_value,mass")?;
        for (i, m) in self.mass.iter().enumerate() {
            writeln!(w, "{},{:.10},{:.17e}", self.grid.bin(i), self.grid.value(i), m)?;
        }
        Ok(())
    }
}

/// Symmetrized density `1/2 [a(m|+1) + a(-m|-1)]`, projected onto the exact
/// grid symmetry.
pub fn symmetrize(given_plus: &QuantizedDensity, given_minus: &QuantizedDensity) -> Result<QuantizedDensity> {
    given_plus.same_grid(given_minus)?;
    let n = given_plus.mass.len();
    let mass = (0..n)
        .map(|i| 0.5 * (given_plus.mass[i] + given_minus.mass[n - 1 - i]))
        .collect();
    Ok(QuantizedDensity::from_parts(given_plus.grid, mass).enforce_symmetry())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_geometry() {
        let g = GridSpec::default();
        assert_eq!(g.len(), 513);
        assert!((g.step() - 25.0 / 256.0).abs() < 1e-15);
        assert_eq!(g.quantize(100.0), 512);
        assert_eq!(g.quantize(-100.0), 0);
        assert_eq!(g.quantize(0.04), 256);
        assert_eq!(g.value(512), 25.0);
    }

    #[test]
    fn error_prob_of_point_masses() {
        let g = GridSpec::default();
        assert_eq!(QuantizedDensity::point_mass(g, 25.0).error_prob(), 0.0);
        assert_eq!(QuantizedDensity::point_mass(g, 0.0).error_prob(), 0.5);
        assert_eq!(QuantizedDensity::point_mass(g, -3.0).error_prob(), 1.0);
    }

    #[test]
    fn point_mass_at_zero_has_no_violation() {
        let d = QuantizedDensity::point_mass(GridSpec::default(), 0.0);
        assert_eq!(d.symmetry_violation(), 0.0);
    }

    #[test]
    fn consistent_gaussian_is_symmetric_within_bin_tolerance() {
        let g = GridSpec::default();
        let tol = (0.5 * g.step()).exp() - 1.0;
        for mean in [0.5, 2.0, 6.0] {
            let d = QuantizedDensity::consistent_gaussian(g, mean);
            assert!((d.total_mass() - 1.0).abs() < 1e-12);
            let v = d.symmetry_violation();
            assert!(v <= tol, "mean {mean}: {v}");
        }
    }

    #[test]
    fn enforce_symmetry_is_exact_and_idempotent() {
        let g = GridSpec::default();
        let d = QuantizedDensity::consistent_gaussian(g, 3.0);
        let s = d.clone().enforce_symmetry();
        assert!(s.symmetry_violation() < 1e-12);
        assert!((s.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(s.clone().enforce_symmetry(), s);
        let again = symmetrize(&s, &s.mirrored()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn odd_lengths_only() {
        let g = GridSpec::new(1.0, 2).unwrap();
        assert!(matches!(
            QuantizedDensity::new(g, vec![0.25; 4]),
            Err(Error::AsymmetricGrid(4))
        ));
        assert!(QuantizedDensity::new(g, vec![0.2; 5]).is_ok());
    }
}
