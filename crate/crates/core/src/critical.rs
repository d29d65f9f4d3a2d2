//! Expected numbers of critical points by index, counts above a level and
//! height distributions of critical values, per unit volume of the domain.
//!
//! Each quantity is a GOI expectation of the crossing functional. The
//! unconditional density uses the ensemble GOI(c0) at shift 0. The count
//! above `u` integrates, over standardized heights `x >= u/sigma`, the
//! ensemble GOI(c1) at shift `kappa x / sqrt(2)` against `phi(x)`:
//!
//! | geometry  | prefactor                    | c0              | c1                        |
//! |-----------|------------------------------|-----------------|---------------------------|
//! | Euclidean | `(2/pi)^{N/2} eta^{-N}`      | `1/2`           | `(1 - kappa^2)/2`         |
//! | sphere    | `pi^{-N/2} eta~^{-N}`        | `(1 + eta~^2)/2`| `(1 + eta~^2 - kappa~^2)/2`|

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::goi::{
    crossing_functional, goi_expectation, EigenSamples, ExpectationMethod, GoiParams, MethodTag,
    DEFAULT_MC_SAMPLES, DEFAULT_QUAD_TOL, MAX_QUADRATURE_DIM,
};
use crate::matern::{spectral_summary, GeometryTag, MaternParams};
use crate::quad;
use crate::special::{gauss_pdf, gauss_tail};
use crate::stats::DEFAULT_SEED;

/// Standardized heights below this contribute nothing at double precision.
pub const HEIGHT_FLOOR: f64 = -14.0;
/// Upper truncation of the height integral, above `max(u/sigma, 0)`.
pub const HEIGHT_TAIL: f64 = 12.0;
/// Largest dimension handled by quadrature when `InnerMethod::Auto` is selected.
pub const AUTO_QUADRATURE_MAX_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    /// Quadrature for `N <= 2`, Monte Carlo above.
    Auto,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CritOptions {
    pub inner: InnerMethod,
    pub quad_tol: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for CritOptions {
    fn default() -> Self {
        Self {
            inner: InnerMethod::Auto,
            quad_tol: DEFAULT_QUAD_TOL,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CritResult {
    /// Expected count per unit volume (length^{-N}, or per unit spherical area).
    pub density: f64,
    pub stderr: f64,
    pub method: MethodTag,
}

/// Constants linking a Matérn field to its GOI representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSetup {
    pub geometry: GeometryTag,
    pub dim: usize,
    pub prefactor: f64,
    /// Ensemble parameter of the unconditional count.
    pub c_all: f64,
    /// Ensemble parameter of the count above a level.
    pub c_level: f64,
    /// Shift per standardized height is `kappa / sqrt(2)`.
    pub kappa: f64,
}

pub fn ensemble_setup(params: &MaternParams, geometry: GeometryTag, dim: usize) -> Result<EnsembleSetup> {
    if dim == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let s = spectral_summary(params, geometry);
    let nf = dim as f64;
    let k2 = s.kappa * s.kappa;
    let (prefactor, c_all, c_level) = match geometry {
        GeometryTag::Euclidean => (
            (2.0 / std::f64::consts::PI).powf(0.5 * nf) / s.eta.powi(dim as i32),
            0.5,
            0.5 * (1.0 - k2),
        ),
        GeometryTag::Sphere => {
            let e2 = s.eta * s.eta;
            (
                std::f64::consts::PI.powf(-0.5 * nf) / s.eta.powi(dim as i32),
                0.5 * (1.0 + e2),
                0.5 * (1.0 + e2 - k2),
            )
        }
    };
    Ok(EnsembleSetup { geometry, dim, prefactor, c_all, c_level, kappa: s.kappa })
}

/// Evaluates critical-point quantities for one field and geometry, caching
/// the eigenvalue draws when the Monte Carlo route is in use.
pub struct CriticalProfile {
    setup: EnsembleSetup,
    sigma: f64,
    opts: CritOptions,
    use_quadrature: bool,
    draws_all: Option<EigenSamples>,
    draws_level: Option<EigenSamples>,
}

impl CriticalProfile {
    pub fn new(params: &MaternParams, geometry: GeometryTag, dim: usize, opts: CritOptions) -> Result<Self> {
        let setup = ensemble_setup(params, geometry, dim)?;
        let use_quadrature = match opts.inner {
            InnerMethod::Auto => dim <= AUTO_QUADRATURE_MAX_DIM,
            InnerMethod::Quadrature => {
                if dim > MAX_QUADRATURE_DIM {
                    return Err(Error::Unsupported(format!(
                        "quadrature supports N <= {MAX_QUADRATURE_DIM}, got N = {dim}"
                    )));
                }
                true
            }
            InnerMethod::MonteCarlo => false,
        };
        if !use_quadrature && opts.mc_samples < 2 {
            return Err(Error::Domain("Monte Carlo needs at least 2 samples".into()));
        }
        Ok(Self {
            setup,
            sigma: params.sigma(),
            opts,
            use_quadrature,
            draws_all: None,
            draws_level: None,
        })
    }

    pub fn setup(&self) -> &EnsembleSetup {
        &self.setup
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i > self.setup.dim {
            return Err(Error::IndexOutOfRange { index: i, dim: self.setup.dim });
        }
        Ok(())
    }

    fn draws(&mut self, level: bool) -> Result<&EigenSamples> {
        let (c, slot, stream_offset) = if level {
            (self.setup.c_level, &mut self.draws_level, 1)
        } else {
            (self.setup.c_all, &mut self.draws_all, 0)
        };
        if slot.is_none() {
            let p = GoiParams::new(self.setup.dim, c)?;
            // distinct seeds keep the two ensembles independent
            let seed = self.opts.seed.wrapping_add(stream_offset).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            *slot = Some(EigenSamples::generate(&p, self.opts.mc_samples, seed)?);
        }
        Ok(slot.as_ref().expect("filled above"))
    }

    /// Expected number of index-`i` critical points per unit volume.
    pub fn density(&mut self, i: usize) -> Result<CritResult> {
        self.check_index(i)?;
        let pref = self.setup.prefactor;
        if self.use_quadrature {
            let p = GoiParams::new(self.setup.dim, self.setup.c_all)?;
            let r = goi_expectation(
                &p,
                &crossing_functional(i, 0.0),
                ExpectationMethod::Quadrature { abs_tol: self.opts.quad_tol },
            )?;
            Ok(CritResult { density: pref * r.value, stderr: 0.0, method: MethodTag::Quadrature })
        } else {
            let g = crossing_functional(i, 0.0);
            let acc = self.draws(false)?.mean_of(|l| g.eval(l));
            Ok(CritResult { density: pref * acc.mean(), stderr: pref * acc.stderr(), method: MethodTag::Mc })
        }
    }

    /// Expected number of index-`i` critical points with value at least `u`, per unit volume.
    pub fn density_above(&mut self, i: usize, u: f64) -> Result<CritResult> {
        self.check_index(i)?;
        if u.is_nan() {
            return Err(Error::Domain("level must not be NaN".into()));
        }
        let x_lo = (u / self.sigma).max(HEIGHT_FLOOR);
        let x_hi = (u / self.sigma).max(0.0) + HEIGHT_TAIL;
        let pref = self.setup.prefactor;
        if !(x_hi > x_lo) || x_lo > -HEIGHT_FLOOR + HEIGHT_TAIL {
            let method = if self.use_quadrature { MethodTag::Quadrature } else { MethodTag::Mc };
            return Ok(CritResult { density: 0.0, stderr: 0.0, method });
        }
        let kappa = self.setup.kappa;
        let shift_per_x = kappa / std::f64::consts::SQRT_2;
        if self.use_quadrature {
            let p = GoiParams::new(self.setup.dim, self.setup.c_level)?;
            let tol = self.opts.quad_tol;
            let mut failure = None;
            let r = quad::integrate(
                |x| {
                    let phi = gauss_pdf(x);
                    if phi == 0.0 {
                        return 0.0;
                    }
                    match goi_expectation(
                        &p,
                        &crossing_functional(i, shift_per_x * x),
                        ExpectationMethod::Quadrature { abs_tol: tol * 1e-2 },
                    ) {
                        Ok(e) => phi * e.value,
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                x_lo,
                x_hi,
                &[],
                tol,
                1e-10,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(CritResult { density: pref * r.value, stderr: 0.0, method: MethodTag::Quadrature })
        } else {
            let n = self.setup.dim;
            let acc = self
                .draws(true)?
                .mean_of(|l| height_integral(l, n, i, shift_per_x, x_lo, x_hi));
            Ok(CritResult { density: pref * acc.mean(), stderr: pref * acc.stderr(), method: MethodTag::Mc })
        }
    }

    /// `F_i(u)`, the probability that an index-`i` critical value exceeds `u`.
    pub fn height_distribution(&mut self, i: usize, u: f64) -> Result<HeightValue> {
        let all = self.density(i)?;
        if !(all.density > f64::MIN_POSITIVE) {
            return Err(Error::Degenerate(format!("unconditional density of index {i} is {}", all.density)));
        }
        let above = self.density_above(i, u)?;
        let raw = above.density / all.density;
        let value = raw.clamp(0.0, 1.0);
        // delta-method error of a ratio of independent estimates
        let stderr = raw * ((above.stderr / above.density.max(f64::MIN_POSITIVE)).powi(2)
            + (all.stderr / all.density).powi(2))
        .sqrt();
        Ok(HeightValue { value, raw, clamped: value != raw, stderr: if above.density > 0.0 { stderr } else { 0.0 } })
    }

    /// Sum over indices with alternating signs `sum_i (-1)^{N-i} E[mu_i above u]`.
    pub fn alternating_sum_above(&mut self, u: f64) -> Result<f64> {
        let n = self.setup.dim;
        let mut total = 0.0;
        for i in 0..=n {
            let sign = if (n - i).is_multiple_of(2) { 1.0 } else { -1.0 };
            total += sign * self.density_above(i, u)?.density;
        }
        Ok(total)
    }
}

/// Value of the height distribution with its pre-clamp ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightValue {
    pub value: f64,
    pub raw: f64,
    /// Set when `raw` fell outside `[0, 1]`.
    pub clamped: bool,
    pub stderr: f64,
}

/// `int phi(x) prod_j |l_j - a x| 1{l_i < a x < l_{i+1}} dx` over `[x_lo, x_hi]`, exactly.
///
/// Inside the indicator the integrand is `phi(x)` times a degree-N polynomial
/// of fixed sign, so Gaussian moments over the clipped interval give it in
/// closed form.
fn height_integral(lambdas: &[f64], n: usize, i: usize, a: f64, x_lo: f64, x_hi: f64) -> f64 {
    let mut lo = x_lo;
    let mut hi = x_hi;
    if i > 0 {
        lo = lo.max(lambdas[i - 1] / a);
    }
    if i < n {
        hi = hi.min(lambdas[i] / a);
    }
    if !(hi > lo) {
        return 0.0;
    }
    // coefficients of prod_{j<i} (a x - l_j) prod_{j>=i} (l_j - a x), ascending powers
    let mut poly = vec![0.0; n + 1];
    poly[0] = 1.0;
    for (j, &l) in lambdas.iter().enumerate() {
        let (c0, c1) = if j < i { (-l, a) } else { (l, -a) };
        for k in (0..=j + 1).rev() {
            let carry = if k > 0 { poly[k - 1] * c1 } else { 0.0 };
            poly[k] = poly[k] * c0 + carry;
        }
    }
    let moments = gaussian_moments(lo, hi, n);
    poly.iter().zip(&moments).map(|(c, m)| c * m).sum()
}

/// `int_lo^hi x^k phi(x) dx` for `k = 0..=kmax`.
fn gaussian_moments(lo: f64, hi: f64, kmax: usize) -> Vec<f64> {
    let lo = lo.max(-60.0);
    let hi = hi.min(60.0);
    let (pa, pb) = (gauss_pdf(lo), gauss_pdf(hi));
    let mut m = Vec::with_capacity(kmax + 1);
    let m0 = if lo > 0.0 { gauss_tail(lo) - gauss_tail(hi) } else { gauss_tail(-hi) - gauss_tail(-lo) };
    m.push(m0);
    if kmax >= 1 {
        m.push(pa - pb);
    }
    for k in 2..=kmax {
        let v = lo.powi(k as i32 - 1) * pa - hi.powi(k as i32 - 1) * pb + (k - 1) as f64 * m[k - 2];
        m.push(v);
    }
    m
}

pub fn expected_crit(params: &MaternParams, geometry: GeometryTag, dim: usize, i: usize, opts: CritOptions) -> Result<CritResult> {
    CriticalProfile::new(params, geometry, dim, opts)?.density(i)
}

pub fn expected_crit_above(
    params: &MaternParams,
    geometry: GeometryTag,
    dim: usize,
    i: usize,
    u: f64,
    opts: CritOptions,
) -> Result<CritResult> {
    CriticalProfile::new(params, geometry, dim, opts)?.density_above(i, u)
}

pub fn expected_crit_euclidean(params: &MaternParams, dim: usize, i: usize) -> Result<CritResult> {
    expected_crit(params, GeometryTag::Euclidean, dim, i, CritOptions::default())
}

pub fn expected_crit_above_euclidean(params: &MaternParams, dim: usize, i: usize, u: f64) -> Result<CritResult> {
    expected_crit_above(params, GeometryTag::Euclidean, dim, i, u, CritOptions::default())
}

pub fn expected_crit_sphere(params: &MaternParams, dim: usize, i: usize) -> Result<CritResult> {
    expected_crit(params, GeometryTag::Sphere, dim, i, CritOptions::default())
}

pub fn expected_crit_above_sphere(params: &MaternParams, dim: usize, i: usize, u: f64) -> Result<CritResult> {
    expected_crit_above(params, GeometryTag::Sphere, dim, i, u, CritOptions::default())
}

/// `F_i(u) = E[mu_i above u] / E[mu_i]` with default options.
pub fn height_distribution(params: &MaternParams, geometry: GeometryTag, dim: usize, i: usize, u: f64) -> Result<f64> {
    Ok(CriticalProfile::new(params, geometry, dim, CritOptions::default())?
        .height_distribution(i, u)?
        .value)
}

/// `F_i` over a grid of levels, evaluated in parallel.
pub fn height_curve(
    params: &MaternParams,
    geometry: GeometryTag,
    dim: usize,
    i: usize,
    levels: &[f64],
    opts: CritOptions,
) -> Result<Vec<HeightValue>> {
    let mut profile = CriticalProfile::new(params, geometry, dim, opts)?;
    // warm the caches once so the parallel evaluations share nothing mutable
    profile.density(i)?;
    profile.density_above(i, 0.0)?;
    let profile = &profile;
    levels
        .par_iter()
        .map(|&u| {
            let mut local = CriticalProfile {
                setup: profile.setup,
                sigma: profile.sigma,
                opts: profile.opts,
                use_quadrature: profile.use_quadrature,
                draws_all: profile.draws_all.clone(),
                draws_level: profile.draws_level.clone(),
            };
            local.height_distribution(i, u)
        })
        .collect()
}

/// Whole-domain expected count from a per-unit-volume density.
pub fn count_over(density: f64, domain: &crate::geometry::Domain) -> f64 {
    density * domain.volume()
}
