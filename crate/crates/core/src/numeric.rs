//! Small numeric helpers shared across modules.

use libm::erfc;

/// Upper tail `P(N(0,1) > z)`.
pub(crate) fn normal_q(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 0.0;
    }
    if z == f64::NEG_INFINITY {
        return 1.0;
    }
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// `P(za < N(0,1) <= zb)`, evaluated on whichever tail keeps precision.
pub(crate) fn normal_interval_mass(za: f64, zb: f64) -> f64 {
    if zb <= za {
        return 0.0;
    }
    if za >= 0.0 {
        normal_q(za) - normal_q(zb)
    } else if zb <= 0.0 {
        normal_q(-zb) - normal_q(-za)
    } else {
        1.0 - normal_q(-za) - normal_q(zb)
    }
}

/// `ln(e^a + e^b)` without overflow.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log2(1 + e^x)`.
pub(crate) fn log2_one_plus_exp(x: f64) -> f64 {
    let nat = if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    };
    nat / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_mass_matches_known_values() {
        assert!((normal_interval_mass(-1.0, 1.0) - 0.682_689_492_137_085_9).abs() < 1e-15);
        assert!((normal_interval_mass(f64::NEG_INFINITY, f64::INFINITY) - 1.0).abs() < 1e-15);
        let tail = normal_interval_mass(8.0, f64::INFINITY);
        assert!((tail / 6.220_960_574_271_785e-16 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_add_exp_is_stable() {
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, -3.0), -3.0);
        assert!((log2_one_plus_exp(0.0) - 1.0).abs() < 1e-15);
        assert!((log2_one_plus_exp(800.0) - 800.0 / std::f64::consts::LN_2).abs() < 1e-9);
    }
}
