//! Matérn covariance on R^N and on the unit sphere (through chordal distance),
//! together with the derivative constants that drive the geometric formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::scaled_matern_profile;

/// Variance `sigma2`, length-scale `ell` and smoothness `nu > 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    sigma2: f64,
    ell: f64,
    nu: f64,
}

impl MaternParams {
    pub fn new(sigma2: f64, ell: f64, nu: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Domain(format!("variance must be positive, got {sigma2}")));
        }
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(Error::Domain(format!("length-scale must be positive, got {ell}")));
        }
        if !(nu > 2.0) || !nu.is_finite() {
            return Err(Error::Smoothness(nu));
        }
        Ok(Self { sigma2, ell, nu })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Same smoothness and length-scale with a new variance.
    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        Self::new(sigma2, self.ell, self.nu)
    }

    /// Squared scale of the metric induced by the standardized field: `nu / ((nu-1) ell^2)`.
    pub fn metric_scale2(&self) -> f64 {
        self.nu / ((self.nu - 1.0) * self.ell * self.ell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryTag {
    Euclidean,
    Sphere,
}

/// Derivative constants of the covariance.
///
/// For `Euclidean`, `first`/`second` are `rho'(0)` and `rho''(0)` of the covariance
/// as a function of squared distance; for `Sphere` they are `C'(1)` and `C''(1)`
/// of the covariance as a function of the inner product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub first: f64,
    pub second: f64,
    /// Evaluated at unit variance.
    pub kappa: f64,
    pub eta: f64,
    pub geometry: GeometryTag,
}

/// `M(d) = sigma2 2^{1-nu}/Gamma(nu) (sqrt(2 nu) d/ell)^nu K_nu(sqrt(2 nu) d/ell)`.
pub fn matern_cov(params: &MaternParams, d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("distance must be non-negative, got {d}")));
    }
    let r = (2.0 * params.nu).sqrt() * d / params.ell;
    Ok(params.sigma2 * scaled_matern_profile(params.nu, r)?)
}

/// Covariance as a function of squared distance, `rho(t) = M(sqrt(t))`.
pub fn rho_profile(params: &MaternParams, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("squared distance must be non-negative, got {t}")));
    }
    matern_cov(params, t.sqrt())
}

/// Covariance on the unit sphere as a function of `p = <x, y>`: `M(sqrt(2(1-p)))`.
pub fn sphere_cov(params: &MaternParams, p: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !(p.abs() <= 1.0 + SLACK) {
        return Err(Error::Domain(format!("inner product must lie in [-1, 1], got {p}")));
    }
    let p = p.clamp(-1.0, 1.0);
    matern_cov(params, (2.0 * (1.0 - p)).sqrt())
}

pub fn spectral_summary_euclidean(params: &MaternParams) -> SpectralSummary {
    let MaternParams { sigma2, ell, nu } = *params;
    let l2 = ell * ell;
    SpectralSummary {
        first: -sigma2 * nu / (2.0 * (nu - 1.0) * l2),
        second: sigma2 * nu * nu / (4.0 * (nu - 1.0) * (nu - 2.0) * l2 * l2),
        kappa: ((nu - 2.0) / (nu - 1.0)).sqrt(),
        eta: (2.0 * (nu - 2.0) / nu).sqrt() * ell,
        geometry: GeometryTag::Euclidean,
    }
}

pub fn spectral_summary_sphere(params: &MaternParams) -> SpectralSummary {
    let MaternParams { sigma2, ell, nu } = *params;
    let l2 = ell * ell;
    SpectralSummary {
        first: sigma2 * nu / ((nu - 1.0) * l2),
        second: sigma2 * nu * nu / ((nu - 1.0) * (nu - 2.0) * l2 * l2),
        kappa: ((nu - 2.0) / (nu - 1.0)).sqrt(),
        eta: ((nu - 2.0) / nu).sqrt() * ell,
        geometry: GeometryTag::Sphere,
    }
}

pub fn spectral_summary(params: &MaternParams, geometry: GeometryTag) -> SpectralSummary {
    match geometry {
        GeometryTag::Euclidean => spectral_summary_euclidean(params),
        GeometryTag::Sphere => spectral_summary_sphere(params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(nu: f64) -> MaternParams {
        MaternParams::new(1.0, 1.0, nu).unwrap()
    }

    fn matern52(d: f64) -> f64 {
        let r = 5f64.sqrt() * d;
        (1.0 + r + r * r / 3.0) * (-r).exp()
    }

    #[test]
    fn rejects_invalid_params() {
        assert_eq!(MaternParams::new(1.0, 1.0, 1.5), Err(Error::Smoothness(1.5)));
        assert_eq!(MaternParams::new(1.0, 1.0, 2.0), Err(Error::Smoothness(2.0)));
        assert!(MaternParams::new(0.0, 1.0, 3.0).is_err());
        assert!(MaternParams::new(1.0, -1.0, 3.0).is_err());
        assert!(MaternParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn covariance_values() {
        assert_eq!(matern_cov(&MaternParams::new(2.0, 1.0, 3.0).unwrap(), 0.0).unwrap(), 2.0);
        assert_relative_eq!(matern_cov(&unit(2.5), 1.0).unwrap(), matern52(1.0), max_relative = 1e-12);
        assert!(matern_cov(&unit(3.0), -0.1).is_err());
        let p = MaternParams::new(1.3, 0.7, 4.2).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let c = matern_cov(&p, 0.05 * k as f64).unwrap();
            assert!(c > 0.0 && c < prev);
            prev = c;
        }
    }

    #[test]
    fn covariance_small_distance_law() {
        let p = MaternParams::new(1.7, 0.8, 3.6).unwrap();
        let nu = p.nu();
        for &d in &[1e-3, 3e-3, 1e-2] {
            let x = d / p.ell();
            let taylor = p.sigma2()
                * (1.0 - nu / (2.0 * (nu - 1.0)) * x * x
                    + nu * nu / (8.0 * (nu - 1.0) * (nu - 2.0)) * x.powi(4));
            let c = matern_cov(&p, d).unwrap();
            // next term is O(d^{2 nu}) = O(d^{7.2}) against O(d^6) analytic
            assert!((c - taylor).abs() < 50.0 * x.powi(6), "d={d}: {c} vs {taylor}");
        }
    }

    #[test]
    fn rho_is_covariance_of_squared_distance() {
        let p = unit(3.0);
        assert_eq!(rho_profile(&p, 0.0).unwrap(), 1.0);
        for &t in &[0.25, 1.0, 4.0] {
            assert_eq!(rho_profile(&p, t).unwrap(), matern_cov(&p, t.sqrt()).unwrap());
        }
        let t = 1e-6;
        assert!((rho_profile(&p, t).unwrap() - (1.0 - 0.75e-6)).abs() < 2e-12);
    }

    #[test]
    fn summaries() {
        let e = spectral_summary_euclidean(&unit(3.0));
        assert_relative_eq!(e.first, -0.75, max_relative = 1e-15);
        assert_relative_eq!(e.second, 1.125, max_relative = 1e-15);
        assert_relative_eq!(e.kappa, 0.5f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(e.eta, (2.0f64 / 3.0).sqrt(), max_relative = 1e-15);
        let s = spectral_summary_sphere(&unit(3.0));
        assert_relative_eq!(s.first, 1.5, max_relative = 1e-15);
        assert_relative_eq!(s.second, 4.5, max_relative = 1e-15);
        assert_relative_eq!(s.eta, (1.0f64 / 3.0).sqrt(), max_relative = 1e-15);
        let big = spectral_summary_euclidean(&MaternParams::new(1.0, 1.3, 1e6).unwrap());
        assert!((big.kappa - 1.0).abs() < 1e-5);
        assert!((big.eta - 2f64.sqrt() * 1.3).abs() < 1e-5);
    }

    #[test]
    fn kappa_in_unit_interval_and_increasing() {
        let mut prev = 0.0;
        for &nu in &[2.1, 2.5, 3.0, 5.0, 10.0, 100.0] {
            let k = spectral_summary_euclidean(&unit(nu)).kappa;
            assert!(k > prev && k < 1.0);
            prev = k;
        }
    }

    #[test]
    fn sphere_covariance() {
        let p = unit(2.5);
        assert_eq!(sphere_cov(&p, 1.0).unwrap(), 1.0);
        assert_relative_eq!(sphere_cov(&p, -1.0).unwrap(), matern52(2.0), max_relative = 1e-12);
        assert_relative_eq!(matern52(2.0), 0.138_660, epsilon = 1e-6);
        assert_relative_eq!(sphere_cov(&p, 0.5).unwrap(), matern_cov(&p, 1.0).unwrap(), max_relative = 1e-14);
        assert!(sphere_cov(&p, 1.0 + 1e-13).is_ok());
        assert!(sphere_cov(&p, 1.01).is_err());
        assert!(sphere_cov(&p, -1.01).is_err());
    }

    proptest::proptest! {
        #[test]
        fn sphere_and_chordal_agree(theta in 0.0f64..std::f64::consts::PI, nu in 2.05f64..8.0, ell in 0.2f64..3.0) {
            let p = MaternParams::new(2.0, ell, nu).unwrap();
            let a = sphere_cov(&p, theta.cos()).unwrap();
            let b = matern_cov(&p, 2.0 * (0.5 * theta).sin()).unwrap();
            proptest::prop_assert!((a - b).abs() <= 1e-9 * 2.0);
        }

        #[test]
        fn sphere_constants_relate_to_euclidean(nu in 2.01f64..50.0, ell in 0.1f64..10.0) {
            let p = MaternParams::new(1.0, ell, nu).unwrap();
            let e = spectral_summary_euclidean(&p);
            let s = spectral_summary_sphere(&p);
            proptest::prop_assert_eq!(e.kappa, s.kappa);
            proptest::prop_assert!((s.eta - e.eta / 2f64.sqrt()).abs() <= 1e-14 * e.eta);
            proptest::prop_assert!(e.first < 0.0 && e.second > 0.0 && s.first > 0.0 && s.second > 0.0);
        }
    }
}
