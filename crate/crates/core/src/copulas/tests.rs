use super::*;
use crate::margins::{MarginParams, SupportHint};
use crate::rng::stream_rng;

fn model(family: CopulaFamily, rotation: Rotation, theta: f64) -> CopulaModel {
    CopulaModel::new(family, rotation, theta).unwrap()
}

fn uniform_pobs(n: usize, seed: u64) -> PseudoObservations {
    let mut rng = stream_rng(seed, 0);
    let u = (0..n).map(|_| open_uniform(&mut rng)).collect();
    let v = (0..n).map(|_| open_uniform(&mut rng)).collect();
    PseudoObservations::new(u, v).unwrap()
}

fn ks_uniform(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

fn all_models() -> Vec<CopulaModel> {
    let mut out = vec![
        CopulaModel::independence(),
        model(CopulaFamily::Gaussian, Rotation::R0, 0.6),
        model(CopulaFamily::Gaussian, Rotation::R0, -0.4),
        model(CopulaFamily::Frank, Rotation::R0, 6.0),
        model(CopulaFamily::Frank, Rotation::R0, -3.0),
    ];
    for r in Rotation::ALL {
        out.push(model(CopulaFamily::Clayton, r, 2.5));
        out.push(model(CopulaFamily::Gumbel, r, 1.8));
    }
    out
}

#[test]
fn independence_loglik_is_zero() {
    let p = uniform_pobs(100, 1);
    assert_eq!(copula_loglik(&CopulaModel::independence(), &p), 0.0);
}

#[test]
fn frank_near_zero_matches_independence() {
    let p = uniform_pobs(500, 2);
    for theta in [1e-7, -1e-7] {
        let ll = copula_loglik(&model(CopulaFamily::Frank, Rotation::R0, theta), &p);
        assert!(ll.abs() < 1e-6, "{theta}: {ll}");
    }
}

#[test]
fn frank_negative_matches_direct_formula() {
    let theta: f64 = -3.0;
    let direct = |u: f64, v: f64| {
        let num = theta * (1.0 - (-theta).exp()) * (-theta * (u + v)).exp();
        let den = (1.0 - (-theta).exp()) - (1.0 - (-theta * u).exp()) * (1.0 - (-theta * v).exp());
        (num / (den * den)).ln()
    };
    let m = model(CopulaFamily::Frank, Rotation::R0, theta);
    for &(u, v) in &[(0.1, 0.2), (0.5, 0.5), (0.9, 0.05), (0.3, 0.99)] {
        assert!((m.log_density(u, v) - direct(u, v)).abs() < 1e-12);
    }
}

#[test]
fn density_is_derivative_of_h_and_h_inverse_round_trips() {
    let grid = [0.03, 0.2, 0.5, 0.77, 0.96];
    for m in all_models() {
        if m.rotation() != Rotation::R0 {
            continue;
        }
        let (f, th) = (m.family(), m.theta());
        for &u in &grid {
            for &v in &grid {
                let eps = 1e-6;
                let dh =
                    (families::h(f, th, u, v + eps) - families::h(f, th, u, v - eps)) / (2.0 * eps);
                let c = m.log_density(u, v).exp();
                assert!(
                    (dh - c).abs() < 1e-5 * c.max(1.0),
                    "{m:?} at ({u}, {v}): {dh} vs {c}"
                );
                let w = families::h(f, th, u, v);
                let back = families::h_inverse(f, th, u, w);
                assert!((back - v).abs() < 1e-8, "{m:?}: {v} -> {back}");
            }
            assert!(families::h(f, th, u, 1e-12) < 1e-3);
            assert!(families::h(f, th, u, 1.0 - 1e-12) > 1.0 - 1e-3);
        }
    }
}

#[test]
fn closed_form_taus() {
    let g = model(CopulaFamily::Gaussian, Rotation::R0, 0.9);
    assert!((g.kendall_tau() - 0.7128).abs() < 1e-4);
    assert_eq!(
        model(CopulaFamily::Clayton, Rotation::R0, 2.0).kendall_tau(),
        0.5
    );
    assert_eq!(
        model(CopulaFamily::Gumbel, Rotation::R0, 2.0).kendall_tau(),
        0.5
    );
    assert_eq!(
        model(CopulaFamily::Clayton, Rotation::R90, 2.0).kendall_tau(),
        -0.5
    );
    assert_eq!(
        model(CopulaFamily::Gumbel, Rotation::R180, 2.0).kendall_tau(),
        0.5
    );
    // Frank: θ ≈ 5.7363 gives τ = 1/2
    let f = model(CopulaFamily::Frank, Rotation::R0, 5.7363);
    assert!((f.kendall_tau() - 0.5).abs() < 1e-3);
    let f = model(CopulaFamily::Frank, Rotation::R0, -5.7363);
    assert!((f.kendall_tau() + 0.5).abs() < 1e-3);
}

#[test]
fn debye_small_and_known_values() {
    // D1(x) ≈ 1 - x/4 + x²/36 near zero
    let x: f64 = 0.01;
    assert!((families::debye1(x) - (1.0 - x / 4.0 + x * x / 36.0)).abs() < 1e-10);
    // D1(x) → π²/(6x) for large x
    assert!((families::debye1(50.0) - std::f64::consts::PI.powi(2) / 300.0).abs() < 1e-8);
}

#[test]
fn invalid_parameters_rejected() {
    for (f, t) in [
        (CopulaFamily::Clayton, 0.0),
        (CopulaFamily::Clayton, -1.0),
        (CopulaFamily::Gumbel, 0.9),
        (CopulaFamily::Frank, 0.0),
        (CopulaFamily::Gaussian, 1.0),
        (CopulaFamily::Gaussian, f64::NAN),
    ] {
        assert!(matches!(
            CopulaModel::new(f, Rotation::R0, t),
            Err(Error::InvalidModel(_))
        ));
    }
}

#[test]
fn json_shape_and_validation() {
    let m = model(CopulaFamily::Clayton, Rotation::R270, 1.5);
    let s = serde_json::to_string(&m).unwrap();
    assert_eq!(s, r#"{"family":"clayton","rotation":270,"theta":1.5}"#);
    assert_eq!(serde_json::from_str::<CopulaModel>(&s).unwrap(), m);
    assert!(serde_json::from_str::<CopulaModel>(
        r#"{"family":"clayton","rotation":45,"theta":1.5}"#
    )
    .is_err());
    assert!(
        serde_json::from_str::<CopulaModel>(r#"{"family":"gumbel","rotation":0,"theta":0.5}"#)
            .is_err()
    );
}

#[test]
fn sampled_independence_and_gaussian_tau() {
    let n = 10_000;
    let s = CopulaModel::independence().sample(n, 5);
    let tau = empirical_kendall_tau(&s.u, &s.v);
    assert!(tau.abs() <= 3.0 * 2.0 / (n as f64).sqrt());
    let s = model(CopulaFamily::Gaussian, Rotation::R0, 0.9).sample(n, 6);
    assert!((empirical_kendall_tau(&s.u, &s.v) - 0.713).abs() < 0.05);
}

#[test]
fn sampled_margins_are_uniform() {
    let n = 100_000;
    let band = 1.95 / (n as f64).sqrt();
    for (i, m) in all_models().into_iter().enumerate() {
        let s = m.sample(n, 100 + i as u64);
        assert!(s.u.iter().chain(&s.v).all(|x| *x > 0.0 && *x < 1.0));
        let (du, dv) = (ks_uniform(&s.u), ks_uniform(&s.v));
        assert!(du < band && dv < band, "{m:?}: {du} {dv}");
    }
}

#[test]
fn sampling_is_deterministic() {
    let m = model(CopulaFamily::Gumbel, Rotation::R90, 3.0);
    assert_eq!(m.sample(50, 9), m.sample(50, 9));
    assert_ne!(m.sample(50, 9), m.sample(50, 10));
}

#[test]
fn rotation_coherence() {
    let n = 5_000;
    let rotated = model(CopulaFamily::Clayton, Rotation::R180, 3.0).sample(n, 21);
    let (u, v): (Vec<f64>, Vec<f64>) = rotated
        .u
        .iter()
        .zip(&rotated.v)
        .map(|(a, b)| (1.0 - a, 1.0 - b))
        .unzip();
    let base = model(CopulaFamily::Clayton, Rotation::R0, 3.0).sample(n, 22);
    let t1 = empirical_kendall_tau(&u, &v);
    let t2 = empirical_kendall_tau(&base.u, &base.v);
    assert!((t1 - t2).abs() < 3.0 * 2.0 * (2.0 / n as f64).sqrt());
    assert!((t1 - 0.6).abs() < 0.05);
    // upper-tail dependence like the Gumbel: joint exceedances above 0.95
    let joint = |u: &[f64], v: &[f64]| {
        u.iter()
            .zip(v)
            .filter(|(a, b)| **a > 0.95 && **b > 0.95)
            .count()
    };
    let g = model(CopulaFamily::Gumbel, Rotation::R0, 2.5).sample(n, 23);
    assert!(joint(&rotated.u, &rotated.v) > joint(&base.u, &base.v));
    assert!(joint(&g.u, &g.v) > joint(&base.u, &base.v));
}

#[test]
fn fit_independent_pairs() {
    let p = uniform_pobs(2000, 31);
    let (m, report) = fit_copula(&p, &CopulaFamily::ALL).unwrap();
    assert!(m.kendall_tau().abs() <= 0.05);
    assert!(report.candidates.iter().all(|c| c.1 <= report.loglik));
}

#[test]
fn fit_comonotone_pairs() {
    let p = uniform_pobs(200, 32);
    let p = PseudoObservations::new(p.u.clone(), p.u).unwrap();
    let (m, _) = fit_copula(&p, &CopulaFamily::ALL).unwrap();
    assert!(m.kendall_tau() >= 0.95, "{m:?}");
}

#[test]
fn fit_clayton_sample() {
    let truth = model(CopulaFamily::Clayton, Rotation::R0, 2.0);
    let p = truth.sample(2000, 33);
    let (m, _) = fit_copula(&p, &CopulaFamily::ALL).unwrap();
    assert!((m.kendall_tau() - 0.5).abs() < 0.08, "{m:?}");
    let (c, _) = fit_copula(&p, &[CopulaFamily::Clayton]).unwrap();
    let ll = copula_loglik(&c, &p);
    for t in [c.theta() / 2.0, c.theta() * 2.0] {
        let other = model(CopulaFamily::Clayton, c.rotation(), t);
        assert!(ll >= copula_loglik(&other, &p));
    }
}

#[test]
fn fit_needs_ten_points() {
    let p = uniform_pobs(9, 1);
    assert!(matches!(
        fit_copula(&p, &CopulaFamily::ALL),
        Err(Error::InsufficientSample { .. })
    ));
}

#[test]
fn pseudo_observations_use_cdf_and_clamp() {
    let uni = MarginDistribution::new(MarginParams::Beta {
        alpha: 1.0,
        beta: 1.0,
    })
    .unwrap();
    let p = pseudo_observations(&[0.3, 0.6, 0.1, 0.95], &[0.5, 0.0, 1.0, 0.4], &uni, &uni).unwrap();
    for (got, want) in p.u.iter().zip([0.3, 0.6, 0.125, 0.875]) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    for (got, want) in p.v.iter().zip([0.5, 0.125, 0.875, 0.4]) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    let scores = [0.0, 0.1, 0.1, 0.2, 0.3, 0.3, 0.3, 0.5, 0.7, 1.0];
    let (fd, _) = crate::margins::fit_margin(&scores, &SupportHint::Discrete { k: 10 }).unwrap();
    let p = pseudo_observations(&scores, &scores, &fd, &fd).unwrap();
    let (pts, probs) = fd.point_masses().unwrap();
    let eps = 1.0 / 20.0;
    for (i, &x) in scores.iter().enumerate() {
        let direct: f64 = pts
            .iter()
            .zip(probs)
            .filter(|(p, _)| **p <= x + 1e-12)
            .map(|(_, q)| q)
            .sum();
        assert!((p.u[i] - direct.clamp(eps, 1.0 - eps)).abs() < 1e-12);
        assert!(p.u[i] > 0.0 && p.u[i] < 1.0);
    }
}
