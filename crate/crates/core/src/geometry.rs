//! Boxes in R^N and unit spheres S^N with their Lipschitz–Killing curvatures.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma_fn;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// `[0, b_1] x ... x [0, b_N]`.
    Box { sides: Vec<f64> },
    /// The unit sphere `S^N` embedded in `R^{N+1}`.
    Sphere { dim: usize },
}

impl Domain {
    pub fn new_box(sides: Vec<f64>) -> Result<Self> {
        validate_sides(&sides)?;
        Ok(Domain::Box { sides })
    }

    pub fn cube(dim: usize, side: f64) -> Result<Self> {
        Self::new_box(vec![side; dim])
    }

    pub fn sphere(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("sphere dimension must be at least 1".into()));
        }
        Ok(Domain::Sphere { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { sides } => sides.len(),
            Domain::Sphere { dim } => *dim,
        }
    }

    pub fn lk_curvatures(&self) -> Result<LkCurvatures> {
        match self {
            Domain::Box { sides } => lk_box(sides),
            Domain::Sphere { dim } => Ok(lk_sphere(*dim)),
        }
    }

    /// Lebesgue volume of a box, or the area `omega_N` of the sphere.
    pub fn volume(&self) -> f64 {
        match self {
            Domain::Box { sides } => sides.iter().product(),
            Domain::Sphere { dim } => sphere_area(*dim),
        }
    }

    /// Euler characteristic of the whole domain.
    pub fn euler_characteristic(&self) -> i64 {
        match self {
            Domain::Box { .. } => 1,
            Domain::Sphere { dim } => 1 + if dim % 2 == 0 { 1 } else { -1 },
        }
    }
}

fn validate_sides(sides: &[f64]) -> Result<()> {
    if sides.is_empty() {
        return Err(Error::Domain("a box needs at least one side".into()));
    }
    if let Some(s) = sides.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::Domain(format!("box sides must be positive, got {s}")));
    }
    Ok(())
}

/// `(L_0, ..., L_N)`; `L_j` carries units of length^j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LkCurvatures(pub Vec<f64>);

impl LkCurvatures {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Surface area of the unit sphere `S^j`: `2 pi^{(j+1)/2} / Gamma((j+1)/2)`.
pub fn sphere_area(j: usize) -> f64 {
    let h = 0.5 * (j as f64 + 1.0);
    2.0 * PI.powf(h) / gamma_fn(h)
}

/// Intrinsic volumes of a box: elementary symmetric polynomials of the sides.
/// For a cube of side `b` this is `C(N, j) b^j`.
pub fn lk_box(sides: &[f64]) -> Result<LkCurvatures> {
    validate_sides(sides)?;
    let mut e = vec![0.0; sides.len() + 1];
    e[0] = 1.0;
    for (k, &b) in sides.iter().enumerate() {
        for j in (1..=k + 1).rev() {
            e[j] += b * e[j - 1];
        }
    }
    Ok(LkCurvatures(e))
}

/// `L_j(S^N) = 2 C(N, j) omega_N / omega_{N-j}` when `N - j` is even, else 0.
pub fn lk_sphere(n: usize) -> LkCurvatures {
    let omega_n = sphere_area(n);
    LkCurvatures(
        (0..=n)
            .map(|j| {
                if (n - j).is_multiple_of(2) {
                    2.0 * binomial(n, j) * omega_n / sphere_area(n - j)
                } else {
                    0.0
                }
            })
            .collect(),
    )
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
