//! Bitwise LLR densities of one user's demapper output.

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{build_constellation, ChannelConfig, Demapper, LabelingRule, User};
use crate::de::{symmetrize, GridSpec, QuantizedDensity};
use crate::error::{Error, Result};
use crate::numeric::normal_interval_mass;

/// Mass allowed to fall outside the integration window of each point.
const LEAK_TOLERANCE: f64 = 1e-9;

/// Output-domain integration: each constellation point's noise is integrated
/// over `center +/- sigma_span * sigma` in `intervals` equal pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityQuadrature {
    pub sigma_span: f64,
    pub intervals: usize,
}

impl Default for DensityQuadrature {
    fn default() -> Self {
        Self {
            sigma_span: 8.0,
            intervals: 1 << 14,
        }
    }
}

/// Conditional LLR densities for one user and their symmetrized average.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannelDensity {
    pub user: User,
    pub given_plus: QuantizedDensity,
    pub given_minus: QuantizedDensity,
    pub symmetrized: QuantizedDensity,
}

impl UserChannelDensity {
    /// Writes `<stem>_plus.csv`, `<stem>_minus.csv`, `<stem>_sym.csv`.
    pub fn write_csv_files(&self, dir: &Path, stem: &str, header: &[String]) -> io::Result<Vec<PathBuf>> {
        let mut paths = Vec::with_capacity(3);
        for (suffix, d) in [
            ("plus", &self.given_plus),
            ("minus", &self.given_minus),
            ("sym", &self.symmetrized),
        ] {
            let path = dir.join(format!("{stem}_{suffix}.csv"));
            let mut lines = header.to_vec();
            lines.push(format!("user={} density={suffix}", self.user));
            d.write_csv(BufWriter::new(File::create(&path)?), &lines)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Adds `w` spread uniformly over the continuous grid coordinate `[ua, ub]`
/// (bin `i` spans `[i, i+1)`), folding anything outside into the end bins.
fn spread(mass: &mut [f64], ua: f64, ub: f64, w: f64) {
    let len = mass.len() as f64;
    let last = mass.len() - 1;
    let (lo, hi) = if ua <= ub { (ua, ub) } else { (ub, ua) };
    if hi - lo < 1e-12 {
        let i = lo.floor().clamp(0.0, last as f64) as usize;
        mass[i] += w;
        return;
    }
    let scale = w / (hi - lo);
    if lo < 0.0 {
        mass[0] += (hi.min(0.0) - lo) * scale;
    }
    if hi > len {
        mass[last] += (hi - lo.max(len)) * scale;
    }
    let (a, b) = (lo.max(0.0), hi.min(len));
    if a < b {
        let first = a.floor() as usize;
        let end = (b.ceil() as usize).min(mass.len());
        for (i, m) in mass.iter_mut().enumerate().take(end).skip(first) {
            let overlap = (b.min(i as f64 + 1.0) - a.max(i as f64)).max(0.0);
            *m += overlap * scale;
        }
    }
}

fn conditional(
    demapper: &Demapper,
    centers: [f64; 2],
    sigma: f64,
    grid: GridSpec,
    quad: DensityQuadrature,
) -> Result<QuantizedDensity> {
    let mut mass = vec![0.0; grid.len()];
    let step = grid.step();
    let offset = grid.half_levels as f64 + 0.5;
    let coord = |l: f64| l / step + offset;
    let mut captured = 0.0;
    let n = quad.intervals.max(1);
    let dz = 2.0 * quad.sigma_span / n as f64;
    for c in centers {
        let mut z_prev = -quad.sigma_span;
        let mut u_prev = coord(demapper.llr(c + sigma * z_prev));
        for j in 1..=n {
            let z = -quad.sigma_span + j as f64 * dz;
            let u = coord(demapper.llr(c + sigma * z));
            let w = 0.5 * normal_interval_mass(z_prev, z);
            spread(&mut mass, u_prev, u, w);
            captured += w;
            z_prev = z;
            u_prev = u;
        }
    }
    let leaked = 1.0 - captured;
    if leaked > LEAK_TOLERANCE {
        return Err(Error::GridTooCoarse { leaked });
    }
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    Ok(QuantizedDensity::from_parts(grid, mass))
}

/// Quantized densities of `user`'s demapper LLR given its bit is `+1` and
/// `-1`, with the other user's bit uniform, plus the symmetrized density
/// used by density evolution.
pub fn llr_density(
    user: User,
    cfg: &ChannelConfig,
    rule: LabelingRule,
    grid: GridSpec,
    quad: DensityQuadrature,
) -> Result<UserChannelDensity> {
    cfg.validate()?;
    let constellation = build_constellation(cfg, rule);
    let gain = cfg.gain(user);
    let demapper = Demapper::new(&constellation, user, gain, cfg.noise_variance);
    let sigma = cfg.noise_variance.sqrt();
    let centers = |bit| {
        let mut it = constellation.points_with(user, bit).map(|p| gain * p.amplitude);
        [it.next().unwrap(), it.next().unwrap()]
    };
    let given_plus = conditional(&demapper, centers(1), sigma, grid, quad)?;
    let given_minus = conditional(&demapper, centers(-1), sigma, grid, quad)?;
    let symmetrized = symmetrize(&given_plus, &given_minus)?;
    Ok(UserChannelDensity {
        user,
        given_plus,
        given_minus,
        symmetrized,
    })
}
