use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::grid::{Discretization, GridSpec};
use crate::error::{Error, Result};
use crate::matern::{matern_cov, MaternParams};
use crate::stats::stream_rng;

/// Diagonal jitter tried in turn, relative to `sigma^2`, when the Gram
/// matrix is numerically indefinite.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10];

/// One joint draw of the field at the points of a discretization.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub grid: Arc<Discretization>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub replication: u64,
}

impl FieldSample {
    pub fn locations(&self) -> &[[f64; 3]] {
        &self.grid.points
    }
}

/// Cholesky factor of the Gram matrix, computed once per grid and shared by
/// every replication.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    grid: Arc<Discretization>,
    factor: DMatrix<f64>,
    jitter: f64,
}

impl FieldSampler {
    pub fn new(params: &MaternParams, spec: &GridSpec) -> Result<Self> {
        Self::from_discretization(params, spec.build()?)
    }

    /// Covariances use Euclidean distance between embedded points, which on the
    /// unit sphere is the chordal distance `2 sin(theta / 2)`.
    pub fn from_discretization(params: &MaternParams, grid: Discretization) -> Result<Self> {
        let n = grid.len();
        if n == 0 {
            return Err(Error::Domain("cannot sample on an empty grid".into()));
        }
        let mut gram = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            gram[(i, i)] = params.sigma2();
            for j in 0..i {
                let c = matern_cov(params, distance(&grid.points[i], &grid.points[j]))?;
                gram[(i, j)] = c;
                gram[(j, i)] = c;
            }
        }
        let mut last = 0.0;
        for rel in JITTER_LADDER {
            let jitter = rel * params.sigma2();
            let mut m = gram.clone();
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            if let Some(ch) = m.cholesky() {
                return Ok(Self { grid: Arc::new(grid), factor: ch.unpack(), jitter });
            }
            last = jitter;
        }
        Err(Error::Factorization { jitter: last })
    }

    pub fn grid(&self) -> &Arc<Discretization> {
        &self.grid
    }

    /// Diagonal jitter that was needed for the factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Draw number `replication` under `seed`; independent across replications.
    pub fn draw(&self, seed: u64, replication: u64) -> FieldSample {
        let mut rng = stream_rng(seed, replication);
        let n = self.grid.len();
        let z = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
        let values = (&self.factor * z).data.into();
        FieldSample { grid: Arc::clone(&self.grid), values, seed, replication }
    }
}

pub fn sample_field(params: &MaternParams, spec: &GridSpec, seed: u64) -> Result<FieldSample> {
    Ok(FieldSampler::new(params, spec)?.draw(seed, 0))
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_values() {
        let p = MaternParams::new(1.0, 1.0, 3.0).unwrap();
        let spec = GridSpec::box_grid(vec![2.0], 10.0).unwrap();
        let a = sample_field(&p, &spec, 9).unwrap();
        let b = sample_field(&p, &spec, 9).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.values.len(), 21);
        let c = sample_field(&p, &spec, 10).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn factor_reproduces_gram() {
        let p = MaternParams::new(2.0, 0.5, 3.5).unwrap();
        let s = FieldSampler::new(&p, &GridSpec::box_grid(vec![1.0, 1.0], 4.0).unwrap()).unwrap();
        let g = &s.factor * s.factor.transpose();
        let pts = &s.grid.points;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                let c = matern_cov(&p, distance(&pts[i], &pts[j])).unwrap();
                assert!((g[(i, j)] - c).abs() < 1e-10);
            }
        }
    }
}
