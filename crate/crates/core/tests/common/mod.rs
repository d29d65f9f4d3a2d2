#![allow(dead_code)]

use matern_rf::matern::rho_profile;
use matern_rf::MaternParams;
use nalgebra::{DMatrix, DVector};

/// `(rho'(0), rho''(0))` by Richardson extrapolation of `rho(h) - rho(0)`
/// over a halving sequence of steps.
///
/// The expansion of `rho` at zero carries `t^{nu+k}` terms (times `ln t`
/// when `nu` is an integer) beside the integer powers, so the elimination
/// uses those exponents rather than assuming a pure Taylor series.
pub fn richardson_derivatives(params: &MaternParams, h0: f64) -> (f64, f64) {
    let nu = params.nu();
    let integer = (nu - nu.round()).abs() < 1e-9;
    let mut basis: Vec<Box<dyn Fn(f64) -> f64>> = (1..=5).map(|k| Box::new(move |h: f64| h.powi(k)) as _).collect();
    let mut e = nu;
    while e <= 5.5 {
        if integer {
            basis.push(Box::new(move |h: f64| h.powf(e) * h.ln()));
        } else {
            basis.push(Box::new(move |h: f64| h.powf(e)));
        }
        e += 1.0;
    }
    let m = basis.len();
    let steps: Vec<f64> = (0..m).map(|k| h0 * 0.5f64.powi(k as i32)).collect();
    let a = DMatrix::from_fn(m, m, |r, c| basis[c](steps[r]));
    let rho0 = rho_profile(params, 0.0).unwrap();
    let b = DVector::from_iterator(m, steps.iter().map(|&h| rho_profile(params, h).unwrap() - rho0));
    let coef = a.lu().solve(&b).expect("nonsingular step system");
    (coef[0], 2.0 * coef[1])
}
