//! Two-user Gaussian broadcast channel with superposition-labeled 4-PAM.
//!
//! Labelings (bits in {+1, -1}, `a = sqrt(alpha P)`, `b = sqrt((1-alpha) P)`):
//!
//! | rule                  | alpha      | amplitude                  |
//! |-----------------------|------------|----------------------------|
//! | binary superposition  | any        | `a x_y + b x_z`            |
//! | adaptive Gray         | `>= 1/2`   | `a x_y + b x_y x_z`        |
//! | adaptive Gray         | `< 1/2`    | `a x_y x_z + b x_z`        |
//!
//! The adaptive rule keeps amplitude neighbours one bit apart for every
//! power split. User Z's bit is always carried by an antipodal pair of point
//! sets, user Y's only for `alpha >= 1/2`.

mod density;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_add_exp;
use crate::units::{db_to_linear, linear_to_db};

pub use density::{llr_density, DensityQuadrature, UserChannelDensity};

/// Receiver index. Y is the stronger user (larger gain).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum User {
    Y,
    Z,
}

impl User {
    pub const BOTH: [User; 2] = [User::Y, User::Z];
}

impl fmt::Display for User {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            User::Y => "y",
            User::Z => "z",
        })
    }
}

impl FromStr for User {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "y" => Ok(User::Y),
            "z" => Ok(User::Z),
            other => Err(Error::InvalidConfig(format!("unknown user '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelingRule {
    BinarySuperposition,
    AdaptiveGray,
}

impl fmt::Display for LabelingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelingRule::BinarySuperposition => "binary_superposition",
            LabelingRule::AdaptiveGray => "adaptive_gray",
        })
    }
}

impl FromStr for LabelingRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary_superposition" | "binary" => Ok(LabelingRule::BinarySuperposition),
            "adaptive_gray" | "gray" => Ok(LabelingRule::AdaptiveGray),
            other => Err(Error::InvalidConfig(format!("unknown labeling rule '{other}'"))),
        }
    }
}

/// Power split, power, noise variance and the two constant channel gains.
/// `Y = gain_y X + N_y`, `Z = gain_z X + N_z`, both noises `N(0, noise_variance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub alpha: f64,
    pub power: f64,
    pub noise_variance: f64,
    pub gain_y: f64,
    pub gain_z: f64,
}

impl ChannelConfig {
    pub fn new(alpha: f64, power: f64, noise_variance: f64, gain_y: f64, gain_z: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            power,
            noise_variance,
            gain_y,
            gain_z,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Unit power and unit noise variance; gains set from the per-user SNRs
    /// `10 log10(gain^2 P / N0)`.
    pub fn from_snr_db(alpha: f64, snr_y_db: f64, snr_z_db: f64) -> Result<Self> {
        Self::new(
            alpha,
            1.0,
            1.0,
            db_to_linear(snr_y_db).sqrt(),
            db_to_linear(snr_z_db).sqrt(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.power > 0.0) {
            return Err(Error::InvalidConfig(format!("power {} must be positive", self.power)));
        }
        if !(self.noise_variance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise variance {} must be positive",
                self.noise_variance
            )));
        }
        if !self.gain_y.is_finite() || !self.gain_z.is_finite() {
            return Err(Error::InvalidConfig("gains must be finite".into()));
        }
        Ok(())
    }

    pub fn alpha_bar(&self) -> f64 {
        1.0 - self.alpha
    }

    pub fn gain(&self, user: User) -> f64 {
        match user {
            User::Y => self.gain_y,
            User::Z => self.gain_z,
        }
    }

    /// Linear receive SNR `gain^2 P / N0`.
    pub fn snr(&self, user: User) -> f64 {
        self.gain(user).powi(2) * self.power / self.noise_variance
    }

    pub fn snr_db(&self, user: User) -> f64 {
        linear_to_db(self.snr(user))
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.power, self.noise_variance, self.gain_y, self.gain_z)
    }

    /// Same configuration with one user's SNR raised by `offset_db`.
    pub fn with_snr_offset_db(&self, user: User, offset_db: f64) -> Self {
        let scale = db_to_linear(offset_db).sqrt();
        let mut cfg = *self;
        match user {
            User::Y => cfg.gain_y *= scale,
            User::Z => cfg.gain_z *= scale,
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub amplitude: f64,
    pub bit_y: i8,
    pub bit_z: i8,
}

impl LabeledPoint {
    pub fn bit(&self, user: User) -> i8 {
        match user {
            User::Y => self.bit_y,
            User::Z => self.bit_z,
        }
    }
}

/// Four labeled amplitudes, one per `(bit_y, bit_z)` pair, in the order
/// `(+,+), (+,-), (-,+), (-,-)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledConstellation {
    pub rule: LabelingRule,
    pub alpha: f64,
    pub points: [LabeledPoint; 4],
}

const LABELS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

impl LabeledConstellation {
    pub fn amplitude(&self, bit_y: i8, bit_z: i8) -> f64 {
        let idx = usize::from(bit_y < 0) * 2 + usize::from(bit_z < 0);
        self.points[idx].amplitude
    }

    pub fn mean_power(&self) -> f64 {
        self.points.iter().map(|p| p.amplitude * p.amplitude).sum::<f64>() / 4.0
    }

    pub fn sorted_by_amplitude(&self) -> [LabeledPoint; 4] {
        let mut pts = self.points;
        pts.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
        pts
    }

    /// Points whose `user` bit equals `bit`.
    pub fn points_with(&self, user: User, bit: i8) -> impl Iterator<Item = &LabeledPoint> {
        self.points.iter().filter(move |p| p.bit(user) == bit)
    }
}

pub fn build_constellation(cfg: &ChannelConfig, rule: LabelingRule) -> LabeledConstellation {
    let a = (cfg.alpha * cfg.power).sqrt();
    let b = (cfg.alpha_bar() * cfg.power).sqrt();
    let gray_high = cfg.alpha >= 0.5;
    let points = LABELS.map(|(by, bz)| {
        let (y, z) = (f64::from(by), f64::from(bz));
        let amplitude = match rule {
            LabelingRule::BinarySuperposition => a * y + b * z,
            LabelingRule::AdaptiveGray if gray_high => a * y + b * y * z,
            LabelingRule::AdaptiveGray => a * y * z + b * z,
        };
        LabeledPoint {
            amplitude,
            bit_y: by,
            bit_z: bz,
        }
    });
    LabeledConstellation {
        rule,
        alpha: cfg.alpha,
        points,
    }
}

/// Maps bit pairs (+1/-1 entries; anything negative counts as -1) to
/// amplitudes.
pub fn modulate(bits_y: &[i8], bits_z: &[i8], cfg: &ChannelConfig, rule: LabelingRule) -> Result<Vec<f64>> {
    if bits_y.len() != bits_z.len() {
        return Err(Error::LengthMismatch {
            expected: bits_y.len(),
            actual: bits_z.len(),
        });
    }
    let c = build_constellation(cfg, rule);
    Ok(bits_y
        .iter()
        .zip(bits_z)
        .map(|(&y, &z)| c.amplitude(y.signum().max(-1) | 1, z.signum().max(-1) | 1))
        .collect())
}

/// `gain * x_i + n_i` with `n_i ~ N(0, noise_variance)` drawn from a
/// ChaCha stream seeded by `seed`.
pub fn transmit(symbols: &[f64], gain: f64, noise_variance: f64, seed: u64) -> Result<Vec<f64>> {
    if !(noise_variance > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise variance {noise_variance} must be positive"
        )));
    }
    let normal = Normal::new(0.0, noise_variance.sqrt()).expect("finite standard deviation");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(symbols
        .iter()
        .map(|&x| gain * x + normal.sample(&mut rng))
        .collect())
}

/// Bitwise LLR computer for one user: marginalizes the other user's bit over
/// the labeled constellation as seen through this user's gain.
#[derive(Debug, Clone, Copy)]
pub struct Demapper {
    plus: [f64; 2],
    minus: [f64; 2],
    inv_two_n0: f64,
}

impl Demapper {
    pub fn new(constellation: &LabeledConstellation, user: User, gain: f64, noise_variance: f64) -> Self {
        let centers = |bit| {
            let mut it = constellation.points_with(user, bit).map(|p| gain * p.amplitude);
            [it.next().unwrap(), it.next().unwrap()]
        };
        Self {
            plus: centers(1),
            minus: centers(-1),
            inv_two_n0: 0.5 / noise_variance,
        }
    }

    pub fn for_user(cfg: &ChannelConfig, rule: LabelingRule, user: User) -> Self {
        Self::new(&build_constellation(cfg, rule), user, cfg.gain(user), cfg.noise_variance)
    }

    /// Natural-log LLR `ln p(y | bit = +1) / p(y | bit = -1)`.
    pub fn llr(&self, y: f64) -> f64 {
        let e = |c: f64| -(y - c) * (y - c) * self.inv_two_n0;
        log_add_exp(e(self.plus[0]), e(self.plus[1])) - log_add_exp(e(self.minus[0]), e(self.minus[1]))
    }
}

pub fn demap_llr(y: f64, user: User, cfg: &ChannelConfig, rule: LabelingRule) -> f64 {
    Demapper::for_user(cfg, rule, user).llr(y)
}
