//! Expected Euler characteristic of excursion sets `{t : X(t) >= u}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{lk_box, lk_sphere, Domain, LkCurvatures};
use crate::matern::MaternParams;
use crate::special::{gauss_pdf, gauss_tail, hermite};

/// Number of levels in the default curve grid.
pub const DEFAULT_LEVEL_COUNT: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcCurve {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
}

/// EC density `xi_j(x)`: `Psi(x)` for j = 0, `(2 pi)^{-j/2} H_{j-1}(x) phi(x)` otherwise.
pub fn ec_density(j: usize, x: f64) -> f64 {
    if j == 0 {
        gauss_tail(x)
    } else {
        (2.0 * std::f64::consts::PI).powf(-0.5 * j as f64) * hermite(j - 1, x) * gauss_pdf(x)
    }
}

fn lk_sum(params: &MaternParams, lk: &LkCurvatures, u: f64) -> f64 {
    let x = u / params.sigma();
    let scale = params.metric_scale2().sqrt();
    lk.values()
        .iter()
        .enumerate()
        .map(|(j, &l)| if l == 0.0 { 0.0 } else { scale.powi(j as i32) * l * ec_density(j, x) })
        .sum()
}

/// Expected EC of the excursion set above `u` over a box.
pub fn expected_ec_box(params: &MaternParams, domain: &Domain, u: f64) -> Result<f64> {
    match domain {
        Domain::Box { sides } => Ok(lk_sum(params, &lk_box(sides)?, u)),
        Domain::Sphere { .. } => Err(Error::Mismatch("expected_ec_box needs a box domain".into())),
    }
}

/// Expected EC of the excursion set above `u` over the unit sphere `S^n`.
pub fn expected_ec_sphere(params: &MaternParams, n: usize, u: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("sphere dimension must be at least 1".into()));
    }
    Ok(lk_sum(params, &lk_sphere(n), u))
}

pub fn expected_ec(params: &MaternParams, domain: &Domain, u: f64) -> Result<f64> {
    match domain {
        Domain::Box { .. } => expected_ec_box(params, domain, u),
        Domain::Sphere { dim } => expected_ec_sphere(params, *dim, u),
    }
}

/// `count` equally spaced points over `[lo, hi]`.
pub fn level_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect(),
    }
}

/// 101 levels over `[-3 sigma, 5 sigma]`.
pub fn default_levels(params: &MaternParams) -> Vec<f64> {
    let s = params.sigma();
    level_grid(-3.0 * s, 5.0 * s, DEFAULT_LEVEL_COUNT)
}

pub fn ec_curve(params: &MaternParams, domain: &Domain, levels: &[f64]) -> Result<EcCurve> {
    let lk = domain.lk_curvatures()?;
    let values = levels.par_iter().map(|&u| lk_sum(params, &lk, u)).collect();
    Ok(EcCurve { levels: levels.to_vec(), values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcursionApprox {
    /// Expected EC clamped to `[0, 1]`.
    pub probability: f64,
    /// The unclamped expected EC.
    pub expected_ec: f64,
    /// False below `u = sigma`, where the EC heuristic is not a tail approximation.
    pub reliable: bool,
}

/// Approximates `P(sup_T X >= u)` by the expected EC of the excursion set.
pub fn excursion_prob_approx(params: &MaternParams, domain: &Domain, u: f64) -> Result<ExcursionApprox> {
    let eec = expected_ec(params, domain, u)?;
    Ok(ExcursionApprox {
        probability: eec.clamp(0.0, 1.0),
        expected_ec: eec,
        reliable: u >= params.sigma(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::binomial;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit3() -> MaternParams {
        MaternParams::new(1.0, 1.0, 3.0).unwrap()
    }

    // standard normal table values
    const PHI_1: f64 = 0.241_970_724_519_143_37;
    const PSI_1: f64 = 0.158_655_253_931_457_05;
    const PHI_3: f64 = 0.004_431_848_411_938_008;
    const PSI_3: f64 = 0.001_349_898_031_630_094_6;

    #[test]
    fn densities() {
        assert_eq!(ec_density(0, 0.0), 0.5);
        assert_relative_eq!(ec_density(1, 0.0), 1.0 / (2.0 * PI), max_relative = 1e-15);
        assert_eq!(ec_density(2, 0.0), 0.0);
    }

    #[test]
    fn unit_interval() {
        let d = Domain::new_box(vec![1.0]).unwrap();
        let v = expected_ec_box(&unit3(), &d, 1.0).unwrap();
        let expect = PSI_1 + 1.5f64.sqrt() * (2.0 * PI).powf(-0.5) * PHI_1;
        assert_relative_eq!(v, expect, max_relative = 1e-12);
        assert_relative_eq!(v, 0.27688, epsilon = 1e-5);
        assert!((expected_ec_box(&unit3(), &d, -40.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_matches_cube_expansion() {
        let p = unit3();
        for &b in &[0.5f64, 1.0, 3.0] {
            let d = Domain::cube(2, b).unwrap();
            for &u in &[-2.0, 0.0, 0.7, 2.5] {
                let (nu, ell, n) = (3.0f64, 1.0f64, 2usize);
                let mut expect = gauss_tail(u);
                for j in 1..=n {
                    let h = 0.5 * j as f64;
                    expect += gauss_pdf(u) * binomial(n, j) * b.powi(j as i32) * nu.powf(h)
                        / ((2.0 * PI).powf(h) * (nu - 1.0).powf(h) * ell.powi(j as i32))
                        * hermite(j - 1, u);
                }
                assert_relative_eq!(expected_ec_box(&p, &d, u).unwrap(), expect, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn sphere_values() {
        let p = unit3();
        assert_relative_eq!(expected_ec_sphere(&p, 2, 0.0).unwrap(), 1.0, max_relative = 1e-14);
        assert!((expected_ec_sphere(&p, 2, -40.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(expected_ec_sphere(&p, 1, -40.0).unwrap().abs() < 1e-12);
        assert!(expected_ec_sphere(&p, 3, -40.0).unwrap().abs() < 1e-12);
        assert!((expected_ec_sphere(&p, 4, -40.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(expected_ec_sphere(&p, 0, 0.0).is_err());
        assert!(expected_ec_box(&p, &Domain::sphere(2).unwrap(), 0.0).is_err());
    }

    #[test]
    fn excursion_probability() {
        let p = unit3();
        let d = Domain::new_box(vec![1.0]).unwrap();
        let a = excursion_prob_approx(&p, &d, 3.0).unwrap();
        let expect = PSI_3 + 1.5f64.sqrt() * (2.0 * PI).powf(-0.5) * PHI_3;
        assert_relative_eq!(a.probability, expect, max_relative = 1e-12);
        assert_relative_eq!(a.probability, 0.003_515_3, epsilon = 1e-7);
        assert!(a.reliable);
        let low = excursion_prob_approx(&p, &d, -40.0).unwrap();
        assert_eq!(low.probability, 1.0);
        assert!(!low.reliable);
        // a large square has EEC > 1 at moderate levels
        let big = excursion_prob_approx(&p, &Domain::cube(2, 20.0).unwrap(), 0.5).unwrap();
        assert!(big.expected_ec > 1.0 && big.probability == 1.0);
    }

    #[test]
    fn curve_grid() {
        let p = unit3();
        let c = ec_curve(&p, &Domain::cube(2, 1.0).unwrap(), &default_levels(&p)).unwrap();
        assert_eq!(c.levels.len(), 101);
        assert_eq!(c.levels[0], -3.0);
        assert_eq!(c.levels[100], 5.0);
        assert!(c.values.iter().all(|v| v.is_finite()));
        assert!(level_grid(0.0, 1.0, 0).is_empty());
    }

    #[test]
    fn leading_term_dominates_high_levels() {
        let p = MaternParams::new(2.0, 0.7, 4.0).unwrap();
        let d = Domain::new_box(vec![1.0, 2.0, 0.5]).unwrap();
        let lk = d.lk_curvatures().unwrap();
        let gap = |x: f64| {
            let lead = p.metric_scale2().powf(1.5) * lk.values()[3] * ec_density(3, x);
            expected_ec(&p, &d, x * p.sigma()).unwrap() / lead - 1.0
        };
        // the correction is O(1/x)
        let mut prev = f64::INFINITY;
        for &x in &[5.0, 10.0, 20.0, 35.0] {
            let g = gap(x);
            assert!(g > 0.0 && g < prev && g * x < 10.0, "x={x}: {g}");
            prev = g;
        }
    }

    proptest::proptest! {
        #[test]
        fn depends_on_level_only_through_u_over_sigma(u in -4.0f64..6.0, c in proptest::sample::select(vec![0.5, 2.0, 10.0])) {
            let p = MaternParams::new(1.3, 0.9, 3.4).unwrap();
            let q = MaternParams::new(1.3 * c * c, 0.9, 3.4).unwrap();
            let d = Domain::new_box(vec![1.0, 2.5]).unwrap();
            let a = expected_ec_box(&p, &d, u).unwrap();
            let b = expected_ec_box(&q, &d, c * u).unwrap();
            proptest::prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn length_scale_invariance(u in -4.0f64..6.0, c in 0.2f64..5.0) {
            let p = MaternParams::new(1.0, 0.9, 3.4).unwrap();
            let q = MaternParams::new(1.0, 0.9 * c, 3.4).unwrap();
            let d = Domain::new_box(vec![1.0, 2.5]).unwrap();
            let dc = Domain::new_box(vec![c, 2.5 * c]).unwrap();
            let a = expected_ec_box(&p, &d, u).unwrap();
            let b = expected_ec_box(&q, &dc, u).unwrap();
            proptest::prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
