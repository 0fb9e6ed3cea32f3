//! Capacity-region curves for the two-user broadcast channel.
//!
//! All rates are in bits. Three input families are covered: Gaussian
//! superposition, binary superposition (BPSK per user) and the adaptive Gray
//! labeling, whose rates follow from `I(X_z; Z)` and `I(X; Y | X_z)`.

use std::io::{self, Write};
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussHermite;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{build_constellation, ChannelConfig, LabelingRule, User};
use crate::error::{Error, Result};
use crate::numeric::{log2_one_plus_exp, log_add_exp};

pub const DEFAULT_GH_NODES: usize = 64;

/// Numerical settings for the capacity integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss-Hermite nodes for Gaussian expectations.
    pub gh_nodes: usize,
    /// Half-width of the integration window around each mixture component,
    /// in noise standard deviations.
    pub sigma_span: f64,
    /// Intervals of the uniform grid used for mixture integrals.
    pub grid_intervals: usize,
    /// Allowed change when the grid is refined by 2x.
    pub refinement_tolerance: f64,
    /// Samples for Monte Carlo cross-checks.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            gh_nodes: DEFAULT_GH_NODES,
            sigma_span: 8.0,
            grid_intervals: 1 << 14,
            refinement_tolerance: 1e-4,
            mc_samples: 10_000_000,
            seed: 0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.gh_nodes < 32 {
            return Err(Error::InvalidConfig(format!("gh_nodes {} < 32", self.gh_nodes)));
        }
        if self.sigma_span < 8.0 {
            return Err(Error::InvalidConfig(format!("sigma_span {} < 8", self.sigma_span)));
        }
        if self.grid_intervals < 2 {
            return Err(Error::InvalidConfig("grid_intervals must be at least 2".into()));
        }
        Ok(())
    }
}

/// `1/2 log2(1 + x)`.
pub fn c_awgn(x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::NegativeSnr(x));
    }
    Ok(0.5 * x.ln_1p() / std::f64::consts::LN_2)
}

fn default_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(NonZeroUsize::new(DEFAULT_GH_NODES).unwrap()))
}

/// BPSK capacity on a real AWGN channel at SNR `t`:
/// `1 - E log2(1 + e^{-M})` with `M ~ N(2t, 4t)` the LLR given `+1`.
pub fn j_binary(t: f64) -> Result<f64> {
    j_eval(t, default_rule())
}

/// [`j_binary`] with an explicit Gauss-Hermite node count.
pub fn j_binary_with(t: f64, nodes: usize) -> Result<f64> {
    let n = NonZeroUsize::new(nodes).ok_or_else(|| Error::InvalidConfig("zero Gauss-Hermite nodes".into()))?;
    j_eval(t, &GaussHermite::new(n))
}

fn j_eval(t: f64, rule: &GaussHermite) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeParameter(t));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let mean = 2.0 * t;
    let spread = (8.0 * t).sqrt();
    let e = rule.integrate(|u| log2_one_plus_exp(-(mean + spread * u))) / std::f64::consts::PI.sqrt();
    Ok((1.0 - e).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionMethod {
    Gaussian,
    BinarySuperposition,
    ProposedGray,
    /// Upper concave envelope of the proposed curve (time sharing allowed).
    ProposedGrayEnvelope,
}

impl RegionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionMethod::Gaussian => "gaussian",
            RegionMethod::BinarySuperposition => "binary_superposition",
            RegionMethod::ProposedGray => "proposed_gray",
            RegionMethod::ProposedGrayEnvelope => "proposed_gray_envelope",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub alpha: f64,
    pub r_y: f64,
    pub r_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCurve {
    pub method: RegionMethod,
    pub points: Vec<RegionPoint>,
    pub config: ChannelConfig,
    pub quadrature: QuadratureSpec,
}

impl RegionCurve {
    /// Rows `method,alpha,R_y_bits,R_z_bits`, header included when asked.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> io::Result<()> {
        if header {
            writeln!(w, "method,alpha,R_y_bits,R_z_bits")?;
        }
        for p in &self.points {
            writeln!(w, "{},{:.6},{:.9},{:.9}", self.method.as_str(), p.alpha, p.r_y, p.r_z)?;
        }
        Ok(())
    }

    /// Upper concave envelope in the `(R_z, R_y)` plane, including the
    /// single-user corner points. Envelope vertices keep the `alpha` of the
    /// curve point they come from; corners use `NaN`-free alphas 0 and 1.
    pub fn upper_concave_envelope(&self) -> RegionCurve {
        let mut pts = self.points.clone();
        let max_y = pts.iter().map(|p| p.r_y).fold(0.0, f64::max);
        let max_z = pts.iter().map(|p| p.r_z).fold(0.0, f64::max);
        pts.push(RegionPoint { alpha: 1.0, r_y: max_y, r_z: 0.0 });
        pts.push(RegionPoint { alpha: 0.0, r_y: 0.0, r_z: max_z });
        pts.sort_by(|a, b| a.r_z.total_cmp(&b.r_z).then(b.r_y.total_cmp(&a.r_y)));
        pts.dedup_by(|a, b| a.r_y == b.r_y && a.r_z == b.r_z);
        let mut hull: Vec<RegionPoint> = Vec::new();
        for p in pts {
            while hull.len() >= 2 {
                let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (a.r_z - o.r_z) * (p.r_y - o.r_y) - (a.r_y - o.r_y) * (p.r_z - o.r_z);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        RegionCurve {
            method: RegionMethod::ProposedGrayEnvelope,
            points: hull,
            config: self.config,
            quadrature: self.quadrature,
        }
    }
}

/// `n` uniform points on `[0, 1]`.
pub fn alpha_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    match alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        Some(a) => Err(Error::InvalidConfig(format!("alpha {a} outside [0, 1]"))),
        None => Ok(()),
    }
}

fn curve<F>(method: RegionMethod, cfg: &ChannelConfig, quad: QuadratureSpec, alphas: &[f64], f: F) -> Result<RegionCurve>
where
    F: Fn(f64) -> Result<(f64, f64)> + Sync,
{
    check_alphas(alphas)?;
    let points = alphas
        .par_iter()
        .map(|&alpha| f(alpha).map(|(r_y, r_z)| RegionPoint { alpha, r_y, r_z }))
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionCurve {
        method,
        points,
        config: *cfg,
        quadrature: quad,
    })
}

/// `R_y = C(alpha snr_y)`, `R_z = C(snr_z) - C(alpha snr_z)`.
pub fn gaussian_region(cfg: &ChannelConfig, alphas: &[f64]) -> Result<RegionCurve> {
    let (sy, sz) = (cfg.snr(User::Y), cfg.snr(User::Z));
    curve(RegionMethod::Gaussian, cfg, QuadratureSpec::default(), alphas, |a| {
        Ok((c_awgn(a * sy)?, c_awgn(sz)? - c_awgn(a * sz)?))
    })
}

/// `R_y = J(alpha snr_y)`, `R_z = J(snr_z) - J(alpha snr_z)`.
pub fn binary_superposition_region(cfg: &ChannelConfig, alphas: &[f64]) -> Result<RegionCurve> {
    let (sy, sz) = (cfg.snr(User::Y), cfg.snr(User::Z));
    curve(RegionMethod::BinarySuperposition, cfg, QuadratureSpec::default(), alphas, |a| {
        Ok(((j_binary(a * sy)?), (j_binary(sz)? - j_binary(a * sz)?).max(0.0)))
    })
}

/// Pairs `(conditional_mi_fine, mixture_mi_cloud)` per alpha, with no convex
/// hull taken.
pub fn proposed_region(cfg: &ChannelConfig, alphas: &[f64], quad: &QuadratureSpec) -> Result<RegionCurve> {
    quad.validate()?;
    curve(RegionMethod::ProposedGray, cfg, *quad, alphas, |a| {
        let c = cfg.with_alpha(a)?;
        Ok((conditional_mi_fine(&c, quad)?, mixture_mi_cloud(&c, quad)?))
    })
}

/// Received centres `gain * amplitude` of the points whose `by` bit is `bit`.
fn centers(cfg: &ChannelConfig, seen_by: User, by: User, bit: i8) -> Vec<f64> {
    let g = cfg.gain(seen_by);
    build_constellation(cfg, LabelingRule::AdaptiveGray)
        .points_with(by, bit)
        .map(|p| g * p.amplitude)
        .collect()
}

fn all_centers(cfg: &ChannelConfig, seen_by: User) -> Vec<f64> {
    let g = cfg.gain(seen_by);
    build_constellation(cfg, LabelingRule::AdaptiveGray)
        .points
        .iter()
        .map(|p| g * p.amplitude)
        .collect()
}

/// Natural log of the equal-weight Gaussian mixture density at `y`.
fn ln_mixture(y: f64, centers: &[f64], sigma: f64) -> f64 {
    let inv = 0.5 / (sigma * sigma);
    let lse = centers
        .iter()
        .map(|c| -(y - c) * (y - c) * inv)
        .fold(f64::NEG_INFINITY, log_add_exp);
    lse - (centers.len() as f64 * sigma * (2.0 * std::f64::consts::PI).sqrt()).ln()
}

/// Trapezoid rule of `f` over `[lo, hi]` with `n` intervals, then again with
/// `2n`; fails when the two disagree by more than `tol`.
fn refined_integral<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, tol: f64) -> Result<f64> {
    let trap = |n: usize| {
        let h = (hi - lo) / n as f64;
        let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
        h * (inner + 0.5 * (f(lo) + f(hi)))
    };
    let coarse = trap(n);
    let fine = trap(2 * n);
    let change = (fine - coarse).abs();
    if change > tol {
        return Err(Error::IntegrationNotConverged { change });
    }
    Ok(fine)
}

fn window(points: &[f64], sigma: f64, span: f64) -> (f64, f64) {
    let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo - span * sigma, hi + span * sigma)
}

/// Differential entropy in bits of an equal-weight Gaussian mixture.
fn mixture_entropy_bits(centers: &[f64], sigma: f64, quad: &QuadratureSpec) -> Result<f64> {
    let (lo, hi) = window(centers, sigma, quad.sigma_span);
    let nats = refined_integral(
        |y| {
            let l = ln_mixture(y, centers, sigma);
            -l.exp() * l
        },
        lo,
        hi,
        quad.grid_intervals,
        quad.refinement_tolerance,
    )?;
    Ok(nats / std::f64::consts::LN_2)
}

fn gaussian_entropy_bits(noise_variance: f64) -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * noise_variance).log2()
}

/// `I(X_bit; R)` in bits for one user's bit seen through `seen_by`'s channel,
/// written as `1 - 1/2 sum_b E[log2(1 + p(r|-b)/p(r|b)) | b]`.
pub fn bit_mi(cfg: &ChannelConfig, bit_of: User, seen_by: User, quad: &QuadratureSpec) -> Result<f64> {
    cfg.validate()?;
    quad.validate()?;
    let sigma = cfg.noise_variance.sqrt();
    let plus = centers(cfg, seen_by, bit_of, 1);
    let minus = centers(cfg, seen_by, bit_of, -1);
    let (lo, hi) = window(&all_centers(cfg, seen_by), sigma, quad.sigma_span);
    let loss = refined_integral(
        |r| {
            let lp = ln_mixture(r, &plus, sigma);
            let lm = ln_mixture(r, &minus, sigma);
            0.5 * (lp.exp() * log2_one_plus_exp(lm - lp) + lm.exp() * log2_one_plus_exp(lp - lm))
        },
        lo,
        hi,
        quad.grid_intervals,
        quad.refinement_tolerance,
    )?;
    Ok((1.0 - loss).max(0.0))
}

/// Rate bound for user Z: `I(X_z; Z)` under the adaptive Gray labeling.
pub fn mixture_mi_cloud(cfg: &ChannelConfig, quad: &QuadratureSpec) -> Result<f64> {
    bit_mi(cfg, User::Z, User::Z, quad)
}

/// Rate bound for user Y: `I(X; Y | X_z) = 1/2 [H(Y|X_z=+1) + H(Y|X_z=-1)]
/// - 1/2 log2(2 pi e N0)`.
pub fn conditional_mi_fine(cfg: &ChannelConfig, quad: &QuadratureSpec) -> Result<f64> {
    cfg.validate()?;
    quad.validate()?;
    let sigma = cfg.noise_variance.sqrt();
    let mut h = 0.0;
    for bit in [1, -1] {
        h += 0.5 * mixture_entropy_bits(&centers(cfg, User::Y, User::Z, bit), sigma, quad)?;
    }
    Ok((h - gaussian_entropy_bits(cfg.noise_variance)).max(0.0))
}

/// `I(X; R)` over the whole four-point constellation seen by `seen_by`.
pub fn joint_mi(cfg: &ChannelConfig, seen_by: User, quad: &QuadratureSpec) -> Result<f64> {
    cfg.validate()?;
    quad.validate()?;
    let sigma = cfg.noise_variance.sqrt();
    let h = mixture_entropy_bits(&all_centers(cfg, seen_by), sigma, quad)?;
    Ok((h - gaussian_entropy_bits(cfg.noise_variance)).max(0.0))
}
