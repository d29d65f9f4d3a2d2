use matern_rf::critical::{expected_crit_euclidean, height_distribution};
use matern_rf::matern::matern_cov;
use matern_rf::simulate::{
    empirical_critical_points, peak_height_histogram, run_validation, sample_field, FieldSampler, GridSpec,
    Scenario,
};
use matern_rf::stats::MeanAccumulator;
use matern_rf::{GeometryTag, MaternParams};
use statrs::distribution::{Binomial, DiscreteCDF};

fn unit3() -> MaternParams {
    MaternParams::new(1.0, 1.0, 3.0).unwrap()
}

#[test]
fn marginal_variance_and_pair_covariance() {
    let p = MaternParams::new(2.0, 1.0, 3.0).unwrap();
    let s = FieldSampler::new(&p, &GridSpec::box_grid(vec![1.0], 4.0).unwrap()).unwrap();
    let draws: Vec<Vec<f64>> = (0..2000).map(|r| s.draw(11, r).values).collect();
    for k in 0..5 {
        let acc: MeanAccumulator = draws.iter().map(|v| v[k] * v[k]).collect();
        assert!((acc.mean() - 2.0).abs() < 3.0 * acc.stderr(), "point {k}: {}", acc.mean());
    }
    // the end points are one correlation length apart
    let acc: MeanAccumulator = draws.iter().map(|v| v[0] * v[4]).collect();
    let c = matern_cov(&p, 1.0).unwrap();
    assert!((acc.mean() - c).abs() < 3.0 * acc.stderr(), "{} vs {c}", acc.mean());
}

#[test]
fn sphere_mesh_draws_have_unit_variance() {
    let p = unit3();
    let s = FieldSampler::new(&p, &GridSpec::SphereMesh { subdivisions: 2 }).unwrap();
    let acc: MeanAccumulator = (0..2000).map(|r| s.draw(4, r).values[17].powi(2)).collect();
    assert!((acc.mean() - 1.0).abs() < 3.0 * acc.stderr());
}

#[test]
fn seeds_reproduce_draws() {
    let spec = GridSpec::box_grid(vec![1.0, 1.0], 8.0).unwrap();
    let a = sample_field(&unit3(), &spec, 123).unwrap();
    let b = sample_field(&unit3(), &spec, 123).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.locations().len(), 81);
}

#[test]
fn refinement_changes_counts_within_budget() {
    let p = unit3();
    let analytic = expected_crit_euclidean(&p, 1, 1).unwrap().density;
    let mut means = Vec::new();
    for &ppu in &[40.0, 80.0] {
        let s = FieldSampler::new(&p, &GridSpec::box_grid(vec![5.0], ppu).unwrap()).unwrap();
        let acc: MeanAccumulator = (0..800)
            .map(|r| empirical_critical_points(&s.draw(5, r), f64::NEG_INFINITY).unwrap().count(1) as f64 / 5.0)
            .collect();
        means.push(acc);
    }
    let gap = (means[0].mean() - means[1].mean()).abs();
    let se = (means[0].stderr().powi(2) + means[1].stderr().powi(2)).sqrt();
    assert!(gap < 0.05 * analytic + 3.0 * se, "{} vs {}", means[0].mean(), means[1].mean());
}

#[test]
fn pooled_peak_heights_pass_binomial_test() {
    let p = unit3();
    let levels = [0.0, 1.0, 2.0];
    let curve =
        peak_height_histogram(&p, &GridSpec::box_grid(vec![5.0], 80.0).unwrap(), 1, &levels, 2000, 99).unwrap();
    assert!(curve.warnings.is_empty());
    let n = curve.pooled as u64;
    for (j, &u) in levels.iter().enumerate() {
        let f = height_distribution(&p, GeometryTag::Euclidean, 1, 1, u).unwrap();
        let k = (curve.values[j] * n as f64).round() as u64;
        let b = Binomial::new(f, n).unwrap();
        let lower = b.cdf(k);
        let upper = 1.0 - if k == 0 { 0.0 } else { b.cdf(k - 1) };
        let p_value = (2.0 * lower.min(upper)).min(1.0);
        assert!(p_value > 0.001 / levels.len() as f64, "u={u}: {k}/{n} vs F={f}, p={p_value}");
    }
}

#[test]
fn survival_curve_properties() {
    let p = unit3();
    let levels: Vec<f64> = (-8..=8).map(|k| 0.5 * k as f64).chain([f64::NEG_INFINITY]).collect();
    let c = peak_height_histogram(&p, &GridSpec::box_grid(vec![5.0], 40.0).unwrap(), 1, &levels, 100, 3).unwrap();
    assert_eq!(*c.values.last().unwrap(), 1.0);
    assert!(c.values[..17].windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn validation_reports_are_reproducible() {
    let p = unit3();
    let scenarios = vec![
        Scenario::EecBox { sides: vec![1.0, 1.0], points_per_unit: 16.0, levels: vec![0.0, 1.0], replications: 60 },
        Scenario::Critical1d { length: 5.0, points_per_unit: 40.0, levels: vec![1.0], replications: 60 },
    ];
    let a = run_validation(&p, &scenarios, 8);
    let b = run_validation(&p, &scenarios, 8);
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv(), b.to_csv());
    assert_ne!(a.to_json(), run_validation(&p, &scenarios, 9).to_json());
}
