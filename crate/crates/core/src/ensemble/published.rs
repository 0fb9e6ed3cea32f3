//! Optimized ensembles for the operating point snr_y = 5.059 dB,
//! snr_z = 3.871 dB, as published with three-decimal coefficients.

use super::DegreeDistribution;
use crate::channel::User;

/// One published (alpha, user) column: raw rounded coefficients and the
/// rate reported alongside them.
#[derive(Debug, Clone)]
pub struct PublishedEnsemble {
    pub user: User,
    pub alpha: f64,
    pub reported_rate: f64,
    pub distribution: DegreeDistribution,
}

struct Column {
    alpha: f64,
    rate: f64,
    lambda: &'static [(usize, f64)],
    rho: &'static [(usize, f64)],
}

const USER_Y: [Column; 4] = [
    Column {
        alpha: 0.1,
        rate: 0.187,
        lambda: &[
            (2, 0.276),
            (3, 0.215),
            (7, 0.012),
            (8, 0.210),
            (9, 0.012),
            (10, 0.020),
            (50, 0.249),
        ],
        rho: &[(5, 1.0), (6, 0.0)],
    },
    Column {
        alpha: 0.2,
        rate: 0.320,
        lambda: &[
            (2, 0.263),
            (3, 0.233),
            (5, 0.000),
            (6, 0.009),
            (7, 0.144),
            (8, 0.071),
            (9, 0.014),
            (10, 0.007),
            (11, 0.005),
            (12, 0.029),
            (19, 0.006),
            (20, 0.007),
            (21, 0.009),
            (22, 0.011),
            (23, 0.014),
            (24, 0.018),
            (25, 0.022),
            (26, 0.023),
            (27, 0.022),
            (28, 0.018),
            (29, 0.014),
            (30, 0.011),
            (31, 0.008),
            (32, 0.006),
            (33, 0.036),
        ],
        rho: &[(5, 0.173), (6, 0.827)],
    },
    Column {
        alpha: 0.3,
        rate: 0.426,
        lambda: &[
            (2, 0.190),
            (3, 0.201),
            (5, 0.007),
            (6, 0.029),
            (7, 0.055),
            (8, 0.045),
            (9, 0.042),
            (10, 0.044),
            (11, 0.036),
            (12, 0.021),
            (13, 0.012),
            (14, 0.007),
            (15, 0.005),
            (16, 0.036),
            (48, 0.000),
            (49, 0.009),
            (50, 0.261),
        ],
        rho: &[(8, 0.471), (9, 0.529)],
    },
    Column {
        alpha: 0.8,
        rate: 0.637,
        lambda: &[
            (2, 0.162),
            (3, 0.194),
            (5, 0.007),
            (6, 0.035),
            (7, 0.065),
            (8, 0.036),
            (9, 0.030),
            (10, 0.033),
            (11, 0.037),
            (12, 0.031),
            (13, 0.020),
            (14, 0.012),
            (15, 0.007),
            (16, 0.033),
            (48, 0.025),
            (49, 0.010),
            (50, 0.263),
        ],
        rho: &[(14, 0.483), (15, 0.517)],
    },
];

const USER_Z: [Column; 4] = [
    Column {
        alpha: 0.1,
        rate: 0.672,
        lambda: &[
            (2, 0.148),
            (3, 0.197),
            (5, 0.007),
            (6, 0.027),
            (7, 0.067),
            (8, 0.047),
            (9, 0.035),
            (10, 0.032),
            (11, 0.030),
            (12, 0.026),
            (13, 0.019),
            (14, 0.013),
            (15, 0.009),
            (16, 0.006),
            (17, 0.005),
            (18, 0.049),
            (47, 0.005),
            (48, 0.008),
            (49, 0.015),
            (50, 0.255),
        ],
        rho: &[(16, 0.485), (17, 0.515)],
    },
    Column {
        alpha: 0.2,
        rate: 0.572,
        lambda: &[
            (2, 0.169),
            (3, 0.200),
            (5, 0.007),
            (6, 0.024),
            (7, 0.057),
            (8, 0.050),
            (9, 0.043),
            (10, 0.040),
            (11, 0.033),
            (12, 0.023),
            (13, 0.014),
            (14, 0.009),
            (15, 0.006),
            (16, 0.038),
            (47, 0.018),
            (48, 0.006),
            (49, 0.011),
            (50, 0.252),
        ],
        rho: &[(12, 1.0)],
    },
    Column {
        alpha: 0.3,
        rate: 0.473,
        lambda: &[
            (2, 0.238),
            (3, 0.237),
            (5, 0.000),
            (6, 0.011),
            (7, 0.198),
            (8, 0.025),
            (9, 0.008),
            (10, 0.005),
            (15, 0.045),
            (16, 0.007),
            (17, 0.007),
            (18, 0.009),
            (19, 0.014),
            (20, 0.023),
            (21, 0.038),
            (22, 0.049),
            (23, 0.037),
            (24, 0.022),
            (25, 0.013),
            (26, 0.008),
            (27, 0.006),
            (28, 0.000),
        ],
        rho: &[(7, 0.273), (8, 0.727)],
    },
    Column {
        alpha: 0.8,
        rate: 0.244,
        lambda: &[
            (2, 0.292),
            (3, 0.235),
            (5, 0.000),
            (6, 0.009),
            (7, 0.096),
            (8, 0.101),
            (9, 0.018),
            (10, 0.009),
            (11, 0.006),
            (12, 0.005),
            (19, 0.060),
            (20, 0.008),
            (21, 0.005),
            (22, 0.006),
            (23, 0.006),
            (24, 0.007),
            (25, 0.008),
            (26, 0.009),
            (27, 0.011),
            (28, 0.012),
            (29, 0.012),
            (30, 0.013),
            (31, 0.012),
            (32, 0.012),
            (33, 0.011),
            (34, 0.010),
            (35, 0.008),
            (36, 0.007),
            (37, 0.006),
            (38, 0.006),
        ],
        rho: &[(4, 0.0), (5, 1.0)],
    },
];

fn to_published(user: User, col: &Column) -> PublishedEnsemble {
    PublishedEnsemble {
        user,
        alpha: col.alpha,
        reported_rate: col.rate,
        distribution: DegreeDistribution::new(col.lambda.iter().copied(), col.rho.iter().copied(), 50),
    }
}

/// All eight published columns, user Y first, each in increasing alpha.
pub fn published_ensembles() -> Vec<PublishedEnsemble> {
    USER_Y
        .iter()
        .map(|c| to_published(User::Y, c))
        .chain(USER_Z.iter().map(|c| to_published(User::Z, c)))
        .collect()
}

/// Column for `user` at power split `alpha` (one of 0.1, 0.2, 0.3, 0.8).
pub fn published_ensemble(user: User, alpha: f64) -> Option<PublishedEnsemble> {
    let table = match user {
        User::Y => &USER_Y,
        User::Z => &USER_Z,
    };
    table
        .iter()
        .find(|c| (c.alpha - alpha).abs() < 1e-9)
        .map(|c| to_published(user, c))
}
