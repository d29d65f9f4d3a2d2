//! Gaussian Orthogonally Invariant matrices.
//!
//! A symmetric `N x N` matrix `M` is GOI(c) when its entries are centered
//! Gaussian with `E[M_ij M_kl] = (d_ik d_jl + d_il d_jk)/2 + c d_ij d_kl`.
//! GOI(0) is the GOE. For `c >= 0` a draw is `G + sqrt(c) z I` with `G` from
//! the GOE and `z` an independent standard normal.
//!
//! Expectations of functionals of the ordered eigenvalues are computed either
//! by Monte Carlo over such draws or, for `N <= 3`, by nested adaptive
//! quadrature of the ordered-eigenvalue density.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::special::ln_gamma;
use crate::stats::{stream_rng, MeanAccumulator};

/// Draws per independent RNG stream.
pub const CHUNK: usize = 8192;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
pub const MAX_QUADRATURE_DIM: usize = 3;
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoiParams {
    n: usize,
    c: f64,
}

impl GoiParams {
    pub fn new(n: usize, c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("GOI matrix size must be at least 1".into()));
        }
        if !(1.0 + n as f64 * c > 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("GOI parameter needs 1 + N c > 0 (N = {n}, c = {c})")));
        }
        Ok(Self { n, c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// Ascending eigenvalues of one GOI draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoiSample {
    pub eigenvalues: Vec<f64>,
}

/// Functionals of the ordered eigenvalues with known quadrature regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    /// `g = 1`.
    Unit,
    /// `prod_j |l_j - shift|`.
    AbsProduct { shift: f64 },
    /// `prod_j |l_j - shift| 1{l_index < shift < l_{index+1}}`, `l_0 = -inf`, `l_{N+1} = +inf`.
    Crossing { index: usize, shift: f64 },
    /// `1{l_N <= bound}`.
    LargestAtMost { bound: f64 },
}

/// The crossing functional selecting matrices with exactly `i` eigenvalues below `s`.
pub fn crossing_functional(i: usize, s: f64) -> Functional {
    Functional::Crossing { index: i, shift: s }
}

impl Functional {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Functional::Crossing { index, .. } if index > n => Err(Error::IndexOutOfRange { index, dim: n }),
            _ => Ok(()),
        }
    }

    /// Evaluates on ascending eigenvalues. Ties at the shift count as outside the region.
    pub fn eval(&self, lambdas: &[f64]) -> f64 {
        match *self {
            Functional::Unit => 1.0,
            Functional::AbsProduct { shift } => lambdas.iter().map(|l| (l - shift).abs()).product(),
            Functional::Crossing { index, shift } => {
                let below_ok = index == 0 || lambdas[index - 1] < shift;
                let above_ok = index == lambdas.len() || lambdas[index] > shift;
                if below_ok && above_ok {
                    lambdas.iter().map(|l| (l - shift).abs()).product()
                } else {
                    0.0
                }
            }
            Functional::LargestAtMost { bound } => {
                if lambdas.last().is_some_and(|&l| l <= bound) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ExpectationMethod {
    MonteCarlo { samples: usize, seed: u64 },
    Quadrature { abs_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    Mc,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub value: f64,
    /// Zero for quadrature.
    pub stderr: f64,
    pub method: MethodTag,
    /// Monte Carlo draws, or integrand evaluations for quadrature.
    pub samples_or_nodes: usize,
}

/// `ln K_N` with `K_N = 2^{N/2} prod_{i=1}^N Gamma(i/2)`.
fn ln_normalizer(n: usize) -> f64 {
    0.5 * n as f64 * std::f64::consts::LN_2 + (1..=n).map(|i| ln_gamma(0.5 * i as f64)).sum::<f64>()
}

/// Density of the ordered eigenvalues of GOI(c); zero off the ordered cone.
pub fn goi_density(params: &GoiParams, lambdas: &[f64]) -> Result<f64> {
    if lambdas.len() != params.n {
        return Err(Error::Mismatch(format!(
            "expected {} eigenvalues, got {}",
            params.n,
            lambdas.len()
        )));
    }
    if lambdas.windows(2).any(|w| w[0] > w[1]) {
        return Ok(0.0);
    }
    Ok(ordered_density(params.n, params.c, ln_normalizer(params.n), lambdas))
}

fn ordered_density(n: usize, c: f64, ln_k: f64, lambdas: &[f64]) -> f64 {
    let one_nc = 1.0 + n as f64 * c;
    let (sum, sum_sq) = lambdas.iter().fold((0.0, 0.0), |(s, q), &l| (s + l, q + l * l));
    let mut vandermonde = 1.0;
    for j in 1..n {
        for i in 0..j {
            vandermonde *= lambdas[j] - lambdas[i];
        }
    }
    let exponent = -0.5 * sum_sq + c / (2.0 * one_nc) * sum * sum - ln_k - 0.5 * one_nc.ln();
    exponent.exp() * vandermonde.abs()
}

/// One GOI(c) matrix, `c >= 0`.
pub fn sample_goi_matrix<R: Rng + ?Sized>(params: &GoiParams, rng: &mut R) -> Result<DMatrix<f64>> {
    require_sampleable(params)?;
    let n = params.n;
    let mut m = DMatrix::zeros(n, n);
    let off = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        m[(j, j)] = rng.sample::<f64, _>(StandardNormal);
        for i in 0..j {
            let v = off * rng.sample::<f64, _>(StandardNormal);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let shift = params.c.sqrt() * rng.sample::<f64, _>(StandardNormal);
    for j in 0..n {
        m[(j, j)] += shift;
    }
    Ok(m)
}

fn require_sampleable(params: &GoiParams) -> Result<()> {
    if params.c < 0.0 {
        return Err(Error::Unsupported(format!(
            "sampling GOI(c) requires c >= 0 (got {}); use quadrature",
            params.c
        )));
    }
    Ok(())
}

/// Writes the ascending eigenvalues of one draw into `out`.
fn draw_eigenvalues<R: Rng + ?Sized>(params: &GoiParams, rng: &mut R, out: &mut [f64]) {
    let m = sample_goi_matrix(params, rng).expect("checked by caller");
    match params.n {
        1 => out[0] = m[(0, 0)],
        2 => {
            let mid = 0.5 * (m[(0, 0)] + m[(1, 1)]);
            let half = 0.5 * (m[(0, 0)] - m[(1, 1)]);
            let rad = half.hypot(m[(0, 1)]);
            out[0] = mid - rad;
            out[1] = mid + rad;
        }
        _ => {
            let ev = m.symmetric_eigenvalues();
            out.copy_from_slice(ev.as_slice());
            out.sort_by(f64::total_cmp);
        }
    }
}

/// One draw of ascending eigenvalues.
pub fn sample_goi(params: &GoiParams, seed: u64) -> Result<GoiSample> {
    require_sampleable(params)?;
    let mut rng = stream_rng(seed, 0);
    let mut eigenvalues = vec![0.0; params.n];
    draw_eigenvalues(params, &mut rng, &mut eigenvalues);
    Ok(GoiSample { eigenvalues })
}

/// A fixed set of eigenvalue draws, generated in `CHUNK`-sized streams so the
/// result depends only on `(params, samples, seed)`.
#[derive(Debug, Clone)]
pub struct EigenSamples {
    n: usize,
    data: Vec<f64>,
}

impl EigenSamples {
    pub fn generate(params: &GoiParams, samples: usize, seed: u64) -> Result<Self> {
        require_sampleable(params)?;
        let n = params.n;
        let mut data = vec![0.0; samples * n];
        data.par_chunks_mut(CHUNK * n).enumerate().for_each(|(chunk, buf)| {
            let mut rng = stream_rng(seed, chunk as u64);
            for row in buf.chunks_mut(n) {
                draw_eigenvalues(params, &mut rng, row);
            }
        });
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n)
    }

    /// Mean and standard error of `h` over the draws, reduced chunk by chunk in order.
    pub fn mean_of<H>(&self, h: H) -> MeanAccumulator
    where
        H: Fn(&[f64]) -> f64 + Sync,
    {
        let partials: Vec<MeanAccumulator> = self
            .data
            .par_chunks(CHUNK * self.n)
            .map(|buf| buf.chunks(self.n).map(&h).collect())
            .collect();
        let mut total = MeanAccumulator::default();
        for p in &partials {
            total.merge(p);
        }
        total
    }
}

/// `E^N_{GOI(c)}[g(l_1, ..., l_N)]`.
pub fn goi_expectation(
    params: &GoiParams,
    functional: &Functional,
    method: ExpectationMethod,
) -> Result<ExpectationResult> {
    functional.validate(params.n)?;
    match method {
        ExpectationMethod::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::Domain("Monte Carlo needs at least 2 samples".into()));
            }
            let draws = EigenSamples::generate(params, samples, seed)?;
            let acc = draws.mean_of(|l| functional.eval(l));
            Ok(ExpectationResult {
                value: acc.mean(),
                stderr: acc.stderr(),
                method: MethodTag::Mc,
                samples_or_nodes: samples,
            })
        }
        ExpectationMethod::Quadrature { abs_tol } => {
            let (value, evals) = quadrature_expectation(params, functional, abs_tol)?;
            Ok(ExpectationResult {
                value,
                stderr: 0.0,
                method: MethodTag::Quadrature,
                samples_or_nodes: evals,
            })
        }
    }
}

/// Per-coordinate bounds of the integration region on the ordered cone, plus
/// the product weight applied inside it.
struct OrderedRegion {
    n: usize,
    c: f64,
    ln_k: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    breaks: Vec<f64>,
    weight_shift: Option<f64>,
    abs_tol: f64,
}

impl OrderedRegion {
    fn new(params: &GoiParams, functional: &Functional, abs_tol: f64) -> Self {
        let n = params.n;
        let spread = (1.0 + n as f64 * params.c.max(0.0)).sqrt();
        let mut half_width = (2.0 * (n as f64).sqrt() + 10.0) * spread;
        let mut region = OrderedRegion {
            n,
            c: params.c,
            ln_k: ln_normalizer(n),
            lower: vec![],
            upper: vec![],
            breaks: vec![],
            weight_shift: None,
            abs_tol,
        };
        match *functional {
            Functional::Unit => {}
            Functional::AbsProduct { shift } => {
                half_width = half_width.max(shift.abs() + 10.0 * spread);
                region.breaks.push(shift);
                region.weight_shift = Some(shift);
            }
            Functional::Crossing { shift, .. } => {
                half_width = half_width.max(shift.abs() + 10.0 * spread);
                region.weight_shift = Some(shift);
            }
            Functional::LargestAtMost { bound } => {
                half_width = half_width.max(bound.abs() + 10.0 * spread);
            }
        }
        region.lower = vec![-half_width; n];
        region.upper = vec![half_width; n];
        match *functional {
            Functional::Crossing { index, shift } => {
                for k in 0..n {
                    if k < index {
                        region.upper[k] = shift;
                    } else {
                        region.lower[k] = shift;
                    }
                }
            }
            Functional::LargestAtMost { bound } => {
                for k in 0..n {
                    region.upper[k] = region.upper[k].min(bound);
                }
            }
            _ => {}
        }
        region
    }

    fn leaf(&self, lambdas: &[f64]) -> f64 {
        let w = match self.weight_shift {
            Some(s) => lambdas.iter().map(|l| (l - s).abs()).product(),
            None => 1.0,
        };
        w * ordered_density(self.n, self.c, self.ln_k, lambdas)
    }

    fn integrate_level(&self, k: usize, lambdas: &mut Vec<f64>, evals: &mut usize) -> f64 {
        let lo = if k == 0 { self.lower[0] } else { self.lower[k].max(lambdas[k - 1]) };
        let hi = self.upper[k];
        if !(hi > lo) {
            return 0.0;
        }
        // the innermost levels carry the outer errors, so they run tighter
        let depth_factor = 1e-2f64.powi(k as i32);
        let tol = self.abs_tol * depth_factor;
        let last = k + 1 == self.n;
        let r = quad::integrate(
            |x| {
                lambdas.truncate(k);
                lambdas.push(x);
                if last {
                    *evals += 1;
                    self.leaf(lambdas)
                } else {
                    self.integrate_level(k + 1, lambdas, evals)
                }
            },
            lo,
            hi,
            &self.breaks,
            tol,
            1e-12,
        );
        r.value
    }
}

fn quadrature_expectation(params: &GoiParams, functional: &Functional, abs_tol: f64) -> Result<(f64, usize)> {
    if params.n > MAX_QUADRATURE_DIM {
        return Err(Error::Unsupported(format!(
            "quadrature supports N <= {MAX_QUADRATURE_DIM}, got N = {}",
            params.n
        )));
    }
    if !(abs_tol > 0.0) {
        return Err(Error::Domain(format!("quadrature tolerance must be positive, got {abs_tol}")));
    }
    let region = OrderedRegion::new(params, functional, abs_tol);
    let mut lambdas = Vec::with_capacity(params.n);
    let mut evals = 0;
    let value = region.integrate_level(0, &mut lambdas, &mut evals);
    Ok((value, evals))
}
