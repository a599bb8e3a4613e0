use proptest::prelude::*;

use super::*;
use crate::optimize::integrate;

fn beta(alpha: f64, beta: f64) -> MarginDistribution {
    MarginDistribution::new(MarginParams::Beta { alpha, beta }).unwrap()
}

fn beta_binomial(k: u32, alpha: f64, beta: f64) -> MarginDistribution {
    MarginDistribution::new(MarginParams::BetaBinomial { k, alpha, beta }).unwrap()
}

fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d
            .max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Mean of a continuous margin by adaptive quadrature of `∫ x g(x) dx`,
/// independent of the grid used inside the margin.
fn integrated_mean(dist: &MarginDistribution) -> f64 {
    integrate(|x| x * dist.log_density(x).exp(), 0.0, 1.0, 1e-12)
}

#[test]
fn uniform_identities() {
    let u = beta(1.0, 1.0);
    assert!((u.cdf(0.3) - 0.3).abs() < 1e-14);
    assert!((u.quantile(0.25).unwrap() - 0.25).abs() < 1e-14);
    assert_eq!(u.mean(), 0.5);
    assert_eq!(u.support(), Support::Interval { lo: 0.0, hi: 1.0 });
}

#[test]
fn beta_binomial_uniform_mixture() {
    let d = beta_binomial(10, 1.0, 1.0);
    assert!((d.mean() - 0.5).abs() < 1e-12);
    let (points, probs) = d.point_masses().unwrap();
    assert_eq!(points.len(), 11);
    for (j, (x, p)) in points.iter().zip(probs).enumerate() {
        assert_eq!(*x, j as f64 / 10.0);
        assert!((p - 1.0 / 11.0).abs() < 1e-12);
    }
}

#[test]
fn quantile_rejects_out_of_range() {
    let d = beta(2.0, 3.0);
    assert!(matches!(d.quantile(1.5), Err(Error::InvalidArgument(_))));
    assert!(matches!(d.quantile(-0.1), Err(Error::InvalidArgument(_))));
    assert_eq!(d.quantile(0.0).unwrap(), 0.0);
    assert_eq!(d.quantile(1.0).unwrap(), 1.0);
}

#[test]
fn quantile_inverts_cdf_on_continuous_support() {
    let margins = [
        beta(2.0, 5.0),
        beta(0.4, 0.7),
        MarginDistribution::new(MarginParams::TruncatedNormal {
            mu: 0.2,
            sigma: 0.15,
        })
        .unwrap(),
        MarginDistribution::new(MarginParams::TruncatedNormal {
            mu: -0.3,
            sigma: 0.2,
        })
        .unwrap(),
        beta(2.0, 2.0).with_target_mean(0.6, 1e-5).unwrap(),
    ];
    for m in &margins {
        for i in 1..100 {
            let x = i as f64 / 100.0;
            // the inverse is ill-conditioned where the density vanishes
            if m.log_density(x) < (1e-4f64).ln() {
                continue;
            }
            let back = m.quantile(m.cdf(x)).unwrap();
            assert!((back - x).abs() < 1e-9, "{:?}: {x} -> {back}", m.params());
        }
    }
}

#[test]
fn discrete_quantile_is_generalised_inverse() {
    let d = beta_binomial(10, 2.0, 3.0);
    let (points, _) = d.point_masses().unwrap();
    for &x in points {
        let c = d.cdf(x);
        assert_eq!(d.quantile(c).unwrap(), x);
        // just above the cdf step jumps to the next point
        if x < 1.0 {
            assert!(d.quantile((c + 1e-9).min(1.0)).unwrap() > x);
        }
    }
    assert_eq!(d.cdf(1.0), 1.0);
    assert_eq!(d.cdf(-0.5), 0.0);
}

#[test]
fn cached_means_match_oracles() {
    for m in [
        beta(2.0, 5.0),
        beta(0.5, 0.5),
        MarginDistribution::new(MarginParams::TruncatedNormal {
            mu: 0.3,
            sigma: 0.25,
        })
        .unwrap(),
    ] {
        assert!((m.mean() - integrated_mean(&m)).abs() < 1e-6);
        // exponent-1 grid mean agrees with the closed form
        assert!((m.mean_under(1.0 + 1e-15) - m.mean()).abs() < 1e-9);
    }
    let d = beta_binomial(10, 0.7, 1.9);
    let (pts, probs) = d.point_masses().unwrap();
    let direct: f64 = pts.iter().zip(probs).map(|(x, p)| x * p).sum();
    assert!((d.mean() - direct).abs() < 1e-15);
    // closed form α / (α + β) for the beta-binomial proportion
    assert!((d.mean() - 0.7 / 2.6).abs() < 1e-12);
}

#[test]
fn monte_carlo_mean_of_samples() {
    let n = 1_000_000;
    for m in [beta(2.0, 5.0), beta_binomial(10, 1.5, 2.5)] {
        let s = m.sample(n, 17);
        let mean = s.iter().sum::<f64>() / n as f64;
        let sd = m.variance().sqrt();
        assert!(
            (mean - m.mean()).abs() <= 4.0 * sd / (n as f64).sqrt(),
            "{:?}",
            m.params()
        );
    }
}

#[test]
fn samples_pass_ks_band() {
    let n = 100_000;
    let band = 1.95 / (n as f64).sqrt();
    let m = beta(0.8, 2.4);
    let mut s = m.sample(n, 3);
    assert!(ks_statistic(&mut s, |x| m.cdf(x)) < band);
    let t = m.with_target_mean(0.4, 1e-5).unwrap();
    let mut s = t.sample(n, 4);
    assert!(ks_statistic(&mut s, |x| t.cdf(x)) < band);
}

#[test]
fn fit_recovers_beta() {
    let truth = beta(2.0, 5.0);
    let data = truth.sample(500, 2024);
    let (dist, report) = fit_margin(&data, &SupportHint::Continuous).unwrap();
    assert_eq!(report.selected, MarginFamily::Beta);
    assert_eq!(dist.family(), MarginFamily::Beta);
    assert!((dist.mean() - 2.0 / 7.0).abs() < 0.02);
    for (_, ll) in &report.candidates {
        assert!(report.loglik >= *ll);
    }
}

#[test]
fn fit_recovers_truncated_normal() {
    let truth = MarginDistribution::new(MarginParams::TruncatedNormal {
        mu: 0.35,
        sigma: 0.2,
    })
    .unwrap();
    let data = truth.sample(2000, 8);
    let (dist, report) = fit_margin(&data, &SupportHint::Continuous).unwrap();
    assert_eq!(report.selected, MarginFamily::TruncatedNormal);
    match dist.params() {
        MarginParams::TruncatedNormal { mu, sigma } => {
            assert!((mu - 0.35).abs() < 0.03 && (sigma - 0.2).abs() < 0.02);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn discrete_hint_limits_candidates() {
    let truth = beta_binomial(10, 2.0, 3.0);
    let data = truth.sample(300, 5);
    let (dist, report) = fit_margin(&data, &SupportHint::Discrete { k: 10 }).unwrap();
    let fams: Vec<_> = report.candidates.iter().map(|c| c.0).collect();
    assert_eq!(
        fams,
        vec![MarginFamily::BetaBinomial, MarginFamily::DiscreteEmpirical]
    );
    assert!(dist.is_discrete());
    let ll_selected = data.iter().map(|x| dist.log_density(*x)).sum::<f64>();
    assert!((ll_selected - report.loglik).abs() < 1e-6);
}

#[test]
fn reciprocal_rank_point_set() {
    let hint = SupportHint::reciprocal_rank(100);
    let data: Vec<f64> = [
        1.0,
        0.5,
        1.0,
        0.0,
        1.0 / 3.0,
        0.25,
        1.0,
        0.1,
        0.5,
        1.0,
        0.01,
        0.0,
    ]
    .to_vec();
    let (dist, report) = fit_margin(&data, &hint).unwrap();
    assert_eq!(report.selected, MarginFamily::DiscreteEmpirical);
    assert_eq!(dist.point_masses().unwrap().0.len(), 101);
    // every support point keeps positive mass after smoothing
    assert!(dist.point_masses().unwrap().1.iter().all(|p| *p > 0.0));
}

#[test]
fn fit_errors() {
    assert!(matches!(
        fit_margin(&[0.4; 50], &SupportHint::Continuous),
        Err(Error::DegenerateSample(_))
    ));
    assert!(matches!(
        fit_margin(&[0.1, 0.2], &SupportHint::Continuous),
        Err(Error::InsufficientSample { .. })
    ));
    let mut bad = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.3];
    bad[3] = 1.2;
    assert!(matches!(
        fit_margin(&bad, &SupportHint::Continuous),
        Err(Error::InvalidData(_))
    ));
    bad[3] = 0.35;
    assert!(matches!(
        fit_margin(&bad, &SupportHint::Discrete { k: 10 }),
        Err(Error::InvalidData(_))
    ));
}

#[test]
fn target_mean_identity() {
    let d = beta(2.0, 2.0);
    let t = d.with_target_mean(0.5, 1e-5).unwrap();
    assert_eq!(t.transform(), 1.0);
    assert_eq!(t.mean(), 0.5);
}

#[test]
fn target_mean_continuous_shift() {
    let d = beta(2.0, 2.0);
    let t = d.with_target_mean(0.55, 1e-5).unwrap();
    assert!(t.transform() > 1.0);
    assert!((t.mean() - 0.55).abs() <= 1e-5);
    assert!((integrated_mean(&t) - 0.55).abs() <= 1e-5);
    assert_eq!(t.support(), Support::Interval { lo: 0.0, hi: 1.0 });
}

#[test]
fn target_mean_discrete_shift() {
    let d = beta_binomial(10, 2.0, 5.0);
    let t = d.with_target_mean(d.mean() + 0.07, 1e-5).unwrap();
    assert!((t.mean() - d.mean() - 0.07).abs() <= 1e-5);
    assert_eq!(t.support(), d.support());
    assert!(matches!(
        d.with_target_mean(1.01, 1e-5),
        Err(Error::UnreachableMean { .. })
    ));
    assert!(matches!(
        d.with_target_mean(0.0, 1e-5),
        Err(Error::UnreachableMean { .. })
    ));
}

#[test]
fn target_mean_is_monotone() {
    let d = beta(0.7, 2.0);
    let mut last = 0.0;
    for target in [0.1, 0.2, 0.26, 0.3, 0.5, 0.8, 0.95] {
        let a = d.with_target_mean(target, 1e-5).unwrap().transform();
        assert!(a > last, "target {target}");
        last = a;
    }
    let d = beta_binomial(10, 0.7, 2.0);
    let mut last = f64::NEG_INFINITY;
    for target in [0.05, 0.2, 0.5, 0.9] {
        let l = d.with_target_mean(target, 1e-5).unwrap().transform();
        assert!(l > last);
        last = l;
    }
}

#[test]
fn retargeting_a_shifted_margin_composes() {
    let d = beta(2.0, 5.0);
    let once = d.with_target_mean(0.4, 1e-5).unwrap();
    let back = once.with_target_mean(d.mean(), 1e-5).unwrap();
    assert!((back.transform() - 1.0).abs() < 1e-3);
    let d = beta_binomial(10, 2.0, 5.0);
    let once = d.with_target_mean(0.5, 1e-5).unwrap();
    let back = once.with_target_mean(d.mean(), 1e-5).unwrap();
    assert!(back.transform().abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cdf_monotone_and_inverse(a in 0.3f64..8.0, b in 0.3f64..8.0, xs in prop::collection::vec(0.0f64..1.0, 2..20)) {
        let m = beta(a, b);
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        let mut last = 0.0;
        for &x in &xs {
            let c = m.cdf(x);
            prop_assert!(c >= last);
            last = c;
        }
        prop_assert_eq!(m.cdf(1.0), 1.0);
        for &x in &xs {
            if x > 1e-6 && x < 1.0 - 1e-6 {
                let c = m.cdf(x);
                if c > 1e-12 && c < 1.0 - 1e-12 && m.log_density(x) > (1e-4f64).ln() {
                    prop_assert!((m.quantile(c).unwrap() - x).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn tilt_hits_target(a in 0.5f64..6.0, b in 0.5f64..6.0, shift in -0.1f64..0.1) {
        let m = beta(a, b);
        let target = m.mean() + shift;
        prop_assume!(target > 0.02 && target < 0.98);
        let t = m.with_target_mean(target, 1e-5).unwrap();
        prop_assert!((t.mean() - target).abs() <= 1e-5);
    }
}

#[test]
fn json_round_trip_keeps_every_family() {
    let margins = [
        MarginDistribution::with_transform(
            MarginParams::TruncatedNormal {
                mu: 0.3,
                sigma: 0.2,
            },
            Some(1.7),
        )
        .unwrap(),
        MarginDistribution::with_transform(
            MarginParams::Beta {
                alpha: 0.7,
                beta: 2.3,
            },
            Some(0.4),
        )
        .unwrap(),
        MarginDistribution::with_transform(
            MarginParams::BetaBinomial {
                k: 10,
                alpha: 1.1,
                beta: 3.0,
            },
            Some(-0.9),
        )
        .unwrap(),
        MarginDistribution::new(MarginParams::DiscreteEmpirical {
            points: vec![0.0, 0.5, 1.0],
            probs: vec![0.2, 0.3, 0.5],
        })
        .unwrap(),
    ];
    for m in margins {
        let s = serde_json::to_string(&m).unwrap();
        let back: MarginDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.mean().to_bits(), m.mean().to_bits());
    }
    let beta = serde_json::to_value(
        MarginDistribution::new(MarginParams::Beta {
            alpha: 2.0,
            beta: 5.0,
        })
        .unwrap(),
    )
    .unwrap();
    assert_eq!(
        beta,
        serde_json::json!({
            "family": "beta",
            "params": [2.0, 5.0],
            "support": {"kind": "interval", "lo": 0.0, "hi": 1.0},
            "transform_exponent": 1.0
        })
    );
}

#[test]
fn json_rejects_mismatched_support() {
    let bad = r#"{"family":"beta","params":[2.0,5.0],"support":{"kind":"grid","k":10},"transform_exponent":1.0}"#;
    assert!(serde_json::from_str::<MarginDistribution>(bad).is_err());
    let bad = r#"{"family":"beta","params":[2.0],"support":{"kind":"interval","lo":0.0,"hi":1.0},"transform_exponent":1.0}"#;
    assert!(serde_json::from_str::<MarginDistribution>(bad).is_err());
}
