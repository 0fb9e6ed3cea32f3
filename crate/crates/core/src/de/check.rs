//! Check-node update on a sign-magnitude grid via a quantized boxplus table.

use super::density::{GridSpec, QuantizedDensity};

/// `2 atanh(tanh(a/2) tanh(b/2))` for `a, b >= 0`, written to stay exact for
/// large arguments.
pub fn boxplus_magnitude(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    a.min(b) + (-(a + b)).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// Signed boxplus.
pub fn boxplus(a: f64, b: f64) -> f64 {
    let m = boxplus_magnitude(a.abs(), b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// Precomputed magnitude table `T[i][j] = round(boxplus(i step, j step) / step)`.
#[derive(Debug, Clone)]
pub struct CheckKernel {
    grid: GridSpec,
    table: Vec<u16>,
}

impl CheckKernel {
    pub fn new(grid: GridSpec) -> Self {
        let h = grid.half_levels;
        let step = grid.step();
        let mut table = vec![0u16; (h + 1) * (h + 1)];
        for i in 1..=h {
            for j in i..=h {
                let v = boxplus_magnitude(i as f64 * step, j as f64 * step);
                let k = ((v / step).round() as usize).min(i) as u16;
                table[i * (h + 1) + j] = k;
                table[j * (h + 1) + i] = k;
            }
        }
        Self { grid, table }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Density of `m1 boxplus m2` for independent `m1 ~ a`, `m2 ~ b`.
    pub fn pair(&self, a: &QuantizedDensity, b: &QuantizedDensity) -> QuantizedDensity {
        let h = self.grid.half_levels;
        let (am, bm) = (a.masses(), b.masses());
        let split = |m: &[f64]| -> (Vec<f64>, Vec<f64>) {
            ((0..=h).map(|i| m[h + i]).collect(), (0..=h).map(|i| m[h - i]).collect())
        };
        let (ap, an) = split(am);
        let (bp, bn) = split(bm);
        let (atot, btot) = (a.total_mass(), b.total_mass());
        let mut pos = vec![0.0; h + 1];
        let mut neg = vec![0.0; h + 1];
        let zero = am[h] * btot + (atot - am[h]) * bm[h];
        for i in 1..=h {
            let (xp, xn) = (ap[i], an[i]);
            if xp == 0.0 && xn == 0.0 {
                continue;
            }
            let row = &self.table[i * (h + 1)..(i + 1) * (h + 1)];
            for j in 1..=h {
                let (yp, yn) = (bp[j], bn[j]);
                let t = row[j] as usize;
                pos[t] += xp * yp + xn * yn;
                neg[t] += xp * yn + xn * yp;
            }
        }
        let mut mass = vec![0.0; self.grid.len()];
        mass[h] = zero + pos[0] + neg[0];
        for k in 1..=h {
            mass[h + k] = pos[k];
            mass[h - k] = neg[k];
        }
        QuantizedDensity::from_parts(self.grid, mass)
    }

    /// `sum_j rho_j R^{(j-1)}(a)`, where `R^{(j-1)}` combines `j - 1`
    /// independent copies of `a`.
    pub fn update(&self, a: &QuantizedDensity, rho: &std::collections::BTreeMap<usize, f64>) -> QuantizedDensity {
        let n = self.grid.len();
        let mut out = vec![0.0; n];
        let max = rho.keys().copied().max().unwrap_or(0);
        let mut power = a.clone();
        for j in 2..=max {
            if j > 2 {
                power = self.pair(&power, a);
            }
            if let Some(&r) = rho.get(&j) {
                for (o, m) in out.iter_mut().zip(power.masses()) {
                    *o += r * m;
                }
            }
        }
        QuantizedDensity::from_parts(self.grid, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tanh_rule(a: f64, b: f64) -> f64 {
        2.0 * ((a / 2.0).tanh() * (b / 2.0).tanh()).atanh()
    }

    #[test]
    fn stable_boxplus_matches_tanh_rule() {
        for &(a, b) in &[(0.3, 0.7), (1.0, 1.0), (2.5, 4.0), (-1.5, 3.0), (5.0, -0.2)] {
            assert!((boxplus(a, b) - tanh_rule(a, b)).abs() < 1e-12);
        }
        assert!((boxplus(60.0, 60.0) - (60.0 - std::f64::consts::LN_2)).abs() < 1e-9);
        assert_eq!(boxplus(0.0, 3.0), 0.0);
    }

    proptest! {
        #[test]
        fn boxplus_bounded_by_min_and_symmetric(a in -30.0f64..30.0, b in -30.0f64..30.0) {
            let c = boxplus(a, b);
            prop_assert!(c.abs() <= a.abs().min(b.abs()) + 1e-12);
            prop_assert!((c - boxplus(b, a)).abs() < 1e-12);
        }
    }
}
