use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{GridSpec, Topology};
use super::sampler::{FieldSample, FieldSampler};
use crate::error::{Error, Result};
use crate::matern::MaternParams;

/// Pooled peak counts below this produce a warning.
pub const MIN_POOLED_PEAKS: usize = 100;

/// Euler characteristic of `{x >= u}` on the sample's grid or mesh.
///
/// Lattices use the cubical complex whose cells are those with every corner
/// above the level; triangulations use the full subcomplex on the vertices
/// above the level.
pub fn empirical_ec(sample: &FieldSample, u: f64) -> i64 {
    let above: Vec<bool> = sample.values.iter().map(|&v| v >= u).collect();
    match &sample.grid.topology {
        Topology::Lattice { dims, .. } => lattice_ec(dims, &above),
        Topology::Triangulation { edges, faces } => {
            let v = above.iter().filter(|&&a| a).count() as i64;
            let e = edges.iter().filter(|e| above[e[0]] && above[e[1]]).count() as i64;
            let f = faces.iter().filter(|f| f.iter().all(|&k| above[k])).count() as i64;
            v - e + f
        }
    }
}

/// Sums `(-1)^dim` over cells; a cell is a base vertex plus a subset of axes.
pub(crate) fn lattice_ec(dims: &[usize], above: &[bool]) -> i64 {
    let nd = dims.len();
    let mut strides = vec![1usize; nd];
    for k in (0..nd.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let mut chi = 0i64;
    let mut idx = vec![0usize; nd];
    for flat in 0..above.len() {
        if above[flat] {
            'cells: for mask in 0u32..(1 << nd) {
                if (0..nd).any(|k| mask & (1 << k) != 0 && idx[k] + 1 >= dims[k]) {
                    continue;
                }
                // every corner of the cell
                let mut sub = mask;
                loop {
                    let off: usize = (0..nd).filter(|k| sub & (1 << k) != 0).map(|k| strides[k]).sum();
                    if !above[flat + off] {
                        continue 'cells;
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & mask;
                }
                chi += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            }
        }
        for k in (0..nd).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    chi
}

/// Counts of interior critical points by index, with their heights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCounts {
    pub dim: usize,
    /// `heights[i]` holds the (grid or interpolated) value of every index-`i` point found.
    pub heights: Vec<Vec<f64>>,
}

impl CriticalCounts {
    pub fn count(&self, index: usize) -> usize {
        self.heights.get(index).map_or(0, Vec::len)
    }

    pub fn counts(&self) -> Vec<usize> {
        self.heights.iter().map(Vec::len).collect()
    }
}

/// Interior critical points with value at least `u` on a 1D or 2D lattice.
///
/// Extrema are strict local extrema over the 3-point (1D) or 8-point (2D)
/// neighborhood. Saddles are zeros of the bilinear interpolant of the
/// centered-difference gradient inside a cell, kept when the interpolant's
/// Jacobian has negative determinant.
pub fn empirical_critical_points(sample: &FieldSample, u: f64) -> Result<CriticalCounts> {
    let dims = match &sample.grid.topology {
        Topology::Lattice { dims, .. } => dims,
        Topology::Triangulation { .. } => {
            return Err(Error::Unsupported("critical points are counted on box grids only".into()))
        }
    };
    let v = &sample.values;
    match dims.len() {
        1 => {
            let mut heights = vec![Vec::new(), Vec::new()];
            for k in 1..dims[0].saturating_sub(1) {
                let (l, c, r) = (v[k - 1], v[k], v[k + 1]);
                if c < u {
                    continue;
                }
                if c > l && c > r {
                    heights[1].push(c);
                } else if c < l && c < r {
                    heights[0].push(c);
                }
            }
            Ok(CriticalCounts { dim: 1, heights })
        }
        2 => Ok(CriticalCounts { dim: 2, heights: planar_critical_points(dims[0], dims[1], v, u) }),
        n => Err(Error::Unsupported(format!("critical points are counted in 1D and 2D only, got {n}D"))),
    }
}

fn planar_critical_points(nx: usize, ny: usize, v: &[f64], u: f64) -> Vec<Vec<f64>> {
    let at = |i: usize, j: usize| v[i * ny + j];
    let mut heights = vec![Vec::new(), Vec::new(), Vec::new()];
    for i in 1..nx.saturating_sub(1) {
        for j in 1..ny.saturating_sub(1) {
            let c = at(i, j);
            if c < u {
                continue;
            }
            let mut higher = 0;
            let mut lower = 0;
            for di in 0..3 {
                for dj in 0..3 {
                    if di == 1 && dj == 1 {
                        continue;
                    }
                    let w = at(i + di - 1, j + dj - 1);
                    if w < c {
                        lower += 1;
                    } else if w > c {
                        higher += 1;
                    }
                }
            }
            if lower == 8 {
                heights[2].push(c);
            } else if higher == 8 {
                heights[0].push(c);
            }
        }
    }

    // grid spacing cancels in the sign tests below
    let gx = |i: usize, j: usize| at(i + 1, j) - at(i - 1, j);
    let gy = |i: usize, j: usize| at(i, j + 1) - at(i, j - 1);
    for i in 1..nx.saturating_sub(2) {
        for j in 1..ny.saturating_sub(2) {
            let a = bilinear(gx(i, j), gx(i + 1, j), gx(i, j + 1), gx(i + 1, j + 1));
            let b = bilinear(gy(i, j), gy(i + 1, j), gy(i, j + 1), gy(i + 1, j + 1));
            for (s, t) in bilinear_zeros(&a, &b) {
                let det = (a[1] + a[3] * t) * (b[2] + b[3] * s) - (a[2] + a[3] * s) * (b[1] + b[3] * t);
                if det >= 0.0 {
                    continue;
                }
                let f = bilinear(at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1));
                let h = f[0] + f[1] * s + f[2] * t + f[3] * s * t;
                if h >= u {
                    heights[1].push(h);
                }
            }
        }
    }
    heights
}

/// Coefficients of `c0 + c1 s + c2 t + c3 s t` through corner values.
fn bilinear(f00: f64, f10: f64, f01: f64, f11: f64) -> [f64; 4] {
    [f00, f10 - f00, f01 - f00, f11 - f10 - f01 + f00]
}

/// Common zeros of two bilinear forms in the half-open unit square.
fn bilinear_zeros(a: &[f64; 4], b: &[f64; 4]) -> Vec<(f64, f64)> {
    // eliminating s leaves a quadratic in t
    let qa = b[2] * a[3] - b[3] * a[2];
    let qb = b[0] * a[3] + b[2] * a[1] - b[1] * a[2] - b[3] * a[0];
    let qc = b[0] * a[1] - b[1] * a[0];
    let scale = qa.abs().max(qb.abs()).max(qc.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    let mut ts = Vec::with_capacity(2);
    if qa.abs() <= 1e-12 * scale {
        if qb != 0.0 {
            ts.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Vec::new();
        }
        let q = -0.5 * (qb + qb.signum() * disc.sqrt());
        ts.push(q / qa);
        if q != 0.0 {
            let t2 = qc / q;
            if t2 != ts[0] {
                ts.push(t2);
            }
        }
    }
    let mut out = Vec::new();
    for t in ts {
        if !(0.0..1.0).contains(&t) {
            continue;
        }
        let da = a[1] + a[3] * t;
        let db = b[1] + b[3] * t;
        let s = if da.abs() >= db.abs() {
            if da == 0.0 {
                continue;
            }
            -(a[0] + a[2] * t) / da
        } else {
            -(b[0] + b[2] * t) / db
        };
        if (0.0..1.0).contains(&s) {
            out.push((s, t));
        }
    }
    out
}

/// Empirical survival function of pooled critical values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    /// Binomial standard error `sqrt(F (1 - F) / n)`.
    pub stderr: Vec<f64>,
    pub pooled: usize,
    pub warnings: Vec<String>,
}

pub fn survival_curve(heights: &[f64], levels: &[f64]) -> SurvivalCurve {
    let n = heights.len();
    let mut sorted = heights.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (values, stderr) = levels
        .iter()
        .map(|&u| {
            if n == 0 {
                return (f64::NAN, f64::NAN);
            }
            let below = sorted.partition_point(|&h| h < u);
            let f = (n - below) as f64 / n as f64;
            (f, (f * (1.0 - f) / n as f64).sqrt())
        })
        .unzip();
    let mut warnings = Vec::new();
    if n < MIN_POOLED_PEAKS {
        warnings.push(format!("only {n} pooled critical points (recommended >= {MIN_POOLED_PEAKS})"));
    }
    SurvivalCurve { levels: levels.to_vec(), values, stderr, pooled: n, warnings }
}

/// Simulates `replications` fields and pools the heights of index-`index` critical points.
pub fn peak_height_histogram(
    params: &MaternParams,
    spec: &GridSpec,
    index: usize,
    levels: &[f64],
    replications: usize,
    seed: u64,
) -> Result<SurvivalCurve> {
    let sampler = FieldSampler::new(params, spec)?;
    let per_rep: Vec<Vec<f64>> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let c = empirical_critical_points(&sampler.draw(seed, r), f64::NEG_INFINITY)?;
            if index > c.dim {
                return Err(Error::IndexOutOfRange { index, dim: c.dim });
            }
            Ok(c.heights[index].clone())
        })
        .collect::<Result<_>>()?;
    let pooled: Vec<f64> = per_rep.into_iter().flatten().collect();
    let mut curve = survival_curve(&pooled, levels);
    curve.warnings.extend(spec.warnings(params));
    Ok(curve)
}
