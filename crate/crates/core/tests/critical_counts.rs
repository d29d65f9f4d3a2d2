use matern_rf::critical::{
    expected_crit, expected_crit_euclidean, CritOptions, CriticalProfile, InnerMethod,
};
use matern_rf::ec::expected_ec_sphere;
use matern_rf::geometry::sphere_area;
use matern_rf::matern::spectral_summary_euclidean;
use matern_rf::{GeometryTag, MaternParams};

#[test]
fn one_dimensional_totals_match_rice_formula() {
    for &nu in &[2.5, 3.0, 6.0] {
        for &ell in &[0.5, 1.0, 2.0] {
            let p = MaternParams::new(1.0, ell, nu).unwrap();
            let eta = spectral_summary_euclidean(&p).eta;
            let total: f64 = (0..=1).map(|i| expected_crit_euclidean(&p, 1, i).unwrap().density).sum();
            let rice = 6f64.sqrt() / (std::f64::consts::PI * eta);
            assert!((total - rice).abs() < 1e-6 * rice, "nu={nu} ell={ell}: {total} vs {rice}");
        }
    }
}

#[test]
fn counts_above_very_low_level_match_unconditional() {
    let p = MaternParams::new(2.0, 0.8, 3.0).unwrap();
    let u = -40.0 * p.sigma();
    let cases = [(GeometryTag::Euclidean, 1), (GeometryTag::Euclidean, 2), (GeometryTag::Sphere, 2)];
    for (tag, n) in cases {
        let mut prof = CriticalProfile::new(&p, tag, n, CritOptions::default()).unwrap();
        for i in 0..=n {
            let all = prof.density(i).unwrap().density;
            let above = prof.density_above(i, u).unwrap().density;
            assert!((above - all).abs() < 1e-5 * all, "{tag:?} N={n} i={i}: {above} vs {all}");
        }
    }
}

#[test]
fn morse_sum_on_sphere_matches_eec() {
    let p = MaternParams::new(1.0, 0.5, 3.0).unwrap();
    let mut prof = CriticalProfile::new(&p, GeometryTag::Sphere, 2, CritOptions::default()).unwrap();
    let area = sphere_area(2);
    let anchor = area * prof.alternating_sum_above(-40.0).unwrap();
    assert!((anchor - 2.0).abs() < 1e-4, "{anchor}");
    for &u in &[0.0, 1.0, 2.0] {
        let morse = area * prof.alternating_sum_above(u * p.sigma()).unwrap();
        let eec = expected_ec_sphere(&p, 2, u * p.sigma()).unwrap();
        assert!((morse - eec).abs() < 1e-4, "u={u}: {morse} vs {eec}");
    }
}

#[test]
fn monte_carlo_route_matches_quadrature() {
    let p = MaternParams::new(1.0, 1.0, 4.0).unwrap();
    let quad = CritOptions { inner: InnerMethod::Quadrature, ..CritOptions::default() };
    let mc = CritOptions { inner: InnerMethod::MonteCarlo, mc_samples: 200_000, ..CritOptions::default() };
    let mut q = CriticalProfile::new(&p, GeometryTag::Euclidean, 2, quad).unwrap();
    let mut m = CriticalProfile::new(&p, GeometryTag::Euclidean, 2, mc).unwrap();
    for i in 0..=2 {
        let a = q.density(i).unwrap();
        let b = m.density(i).unwrap();
        assert!((a.density - b.density).abs() < 4.0 * b.stderr, "i={i}: {a:?} vs {b:?}");
        for &u in &[-0.5, 1.0] {
            let a = q.density_above(i, u).unwrap();
            let b = m.density_above(i, u).unwrap();
            assert!((a.density - b.density).abs() < 4.0 * b.stderr + 1e-12, "i={i} u={u}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn three_dimensional_monte_carlo_is_consistent() {
    let p = MaternParams::new(1.0, 1.0, 3.5).unwrap();
    let opts = CritOptions { mc_samples: 100_000, ..CritOptions::default() };
    let mut prof = CriticalProfile::new(&p, GeometryTag::Euclidean, 3, opts).unwrap();
    // the Euler characteristic density of a stationary field vanishes at u = -inf
    let alt: f64 = prof.alternating_sum_above(-40.0).unwrap();
    let scale = prof.density(1).unwrap().density;
    assert!(alt.abs() < 0.02 * scale, "{alt} vs {scale}");
    let h = prof.height_distribution(3, -40.0).unwrap();
    assert!((h.value - 1.0).abs() < 5.0 * h.stderr.max(1e-3), "{h:?}");
    let max = expected_crit(&p, GeometryTag::Euclidean, 3, 3, opts).unwrap();
    let min = expected_crit(&p, GeometryTag::Euclidean, 3, 0, opts).unwrap();
    assert!((max.density - min.density).abs() < 4.0 * (max.stderr + min.stderr));
}

#[test]
fn heights_decrease_with_level() {
    let p = MaternParams::new(1.0, 1.0, 3.0).unwrap();
    let mut prof = CriticalProfile::new(&p, GeometryTag::Euclidean, 2, CritOptions::default()).unwrap();
    let mut prev = 1.0 + 1e-9;
    for k in -6..=8 {
        let h = prof.height_distribution(2, 0.5 * k as f64).unwrap();
        assert!(h.value <= prev && !h.clamped, "u={}: {h:?}", 0.5 * k as f64);
        prev = h.value;
    }
}
