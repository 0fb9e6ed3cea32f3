use std::collections::BTreeMap;

use bcldpc::channel::{llr_density, ChannelConfig, DensityQuadrature, LabelingRule, User};
use bcldpc::de::density::{GridSpec, QuantizedDensity};
use bcldpc::design::{optimize_lambda, satisfies_stage_constraints, stability_limit, DesignProblem};
use bcldpc::ensemble::{published_ensemble, DegreeDistribution};

fn sym(user: User, alpha: f64, offset_db: f64) -> QuantizedDensity {
    let cfg = ChannelConfig::from_snr_db(alpha, 5.059, 3.871)
        .unwrap()
        .with_snr_offset_db(user, offset_db);
    llr_density(user, &cfg, LabelingRule::AdaptiveGray, GridSpec::default(), DensityQuadrature::default())
        .unwrap()
        .symmetrized
}

fn column(user: User, alpha: f64) -> DegreeDistribution {
    published_ensemble(user, alpha)
        .unwrap()
        .distribution
        .validate_and_normalize()
        .unwrap()
        .0
}

#[test]
fn check_degree_five_design_for_user_y_at_alpha_tenth() {
    let p = DesignProblem::new(BTreeMap::from([(5, 1.0)]), sym(User::Y, 0.1, 0.0));
    let out = optimize_lambda(&p, None).unwrap();
    let c = &out.certificate;
    println!("rate {:.4} after {} rounds, lambda {:?}", c.design_rate, c.lp_rounds, out.distribution.lambda);
    assert!(c.design_rate >= 0.18, "rate {}", c.design_rate);
    assert!(out.verification.converged);
    assert!(out.verification.iterations <= 800);
    assert!(c.rate_history.windows(2).all(|w| w[1] >= w[0]));
    assert!(out.distribution.lambda.keys().all(|&d| (2..=50).contains(&d)));
    assert!(out.distribution.lambda.get(&2).copied().unwrap_or(0.0) <= c.stability_limit + 1e-9);
    let total: f64 = out.distribution.lambda.values().sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn published_lambda_two_respects_stability_for_user_z() {
    let dd = column(User::Z, 0.3);
    let s = stability_limit(&sym(User::Z, 0.3, 0.0), &dd.rho);
    println!("s* = {s:.4}, lambda_2 = {:.4}", dd.lambda[&2]);
    assert!(dd.lambda[&2] <= s);
    assert!(s >= 0.238);
}

#[test]
fn published_columns_meet_stage_constraints_within_slack() {
    // User Y at alpha = 0.1 is excluded: its renormalized column sits above
    // the bitwise bound at +0.15 dB and does not converge there.
    for (user, alpha) in [
        (User::Y, 0.2),
        (User::Y, 0.3),
        (User::Y, 0.8),
        (User::Z, 0.1),
        (User::Z, 0.2),
        (User::Z, 0.3),
        (User::Z, 0.8),
    ] {
        let dd = column(user, alpha);
        let p = DesignProblem::new(dd.rho.clone(), sym(user, alpha, 0.15));
        assert!(satisfies_stage_constraints(&p, &dd.lambda), "{user} alpha={alpha}");
    }
}
