use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matern::MaternParams;

/// Box resolution below this many points per correlation length triggers a warning.
pub const MIN_POINTS_PER_ELL: f64 = 8.0;
/// Smallest vertex count accepted for a sphere mesh.
pub const MIN_SPHERE_VERTICES: usize = 200;

/// How a domain is discretized for simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// Regular lattice over `[0, s_1] x ... x [0, s_N]`, `N <= 3`.
    BoxGrid { sides: Vec<f64>, points_per_unit: f64 },
    /// Subdivided icosahedron projected onto the unit sphere `S^2`.
    SphereMesh { subdivisions: u32 },
}

impl GridSpec {
    pub fn box_grid(sides: Vec<f64>, points_per_unit: f64) -> Result<Self> {
        if sides.is_empty() || sides.len() > 3 {
            return Err(Error::Unsupported(format!("box grids need 1 to 3 sides, got {}", sides.len())));
        }
        if sides.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Domain(format!("box sides must be positive and finite: {sides:?}")));
        }
        if !(points_per_unit.is_finite() && points_per_unit > 0.0) {
            return Err(Error::Domain(format!("points per unit must be positive, got {points_per_unit}")));
        }
        Ok(GridSpec::BoxGrid { sides, points_per_unit })
    }

    /// Number of points in the discretization.
    pub fn vertex_count(&self) -> usize {
        match self {
            GridSpec::BoxGrid { sides, points_per_unit } => {
                sides.iter().map(|s| points_per_side(*s, *points_per_unit)).product()
            }
            GridSpec::SphereMesh { subdivisions } => icosphere_vertex_count(*subdivisions),
        }
    }

    /// Human-readable resolution warnings for these parameters.
    pub fn warnings(&self, params: &MaternParams) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            GridSpec::BoxGrid { sides, points_per_unit } => {
                for (k, s) in sides.iter().enumerate() {
                    let n = points_per_side(*s, *points_per_unit);
                    let per_ell = (n - 1) as f64 / s * params.ell();
                    if per_ell < MIN_POINTS_PER_ELL {
                        out.push(format!(
                            "axis {k}: {per_ell:.2} grid points per correlation length (recommended >= {MIN_POINTS_PER_ELL})"
                        ));
                    }
                }
            }
            GridSpec::SphereMesh { subdivisions } => {
                let v = icosphere_vertex_count(*subdivisions);
                if v < MIN_SPHERE_VERTICES {
                    out.push(format!("sphere mesh has {v} vertices (recommended >= {MIN_SPHERE_VERTICES})"));
                }
            }
        }
        out
    }

    pub fn build(&self) -> Result<Discretization> {
        match self {
            GridSpec::BoxGrid { sides, points_per_unit } => {
                GridSpec::box_grid(sides.clone(), *points_per_unit)?;
                Ok(lattice(sides, *points_per_unit))
            }
            GridSpec::SphereMesh { subdivisions } => Ok(icosphere(*subdivisions)),
        }
    }
}

/// The coarsest icosphere with at least `target` vertices.
pub fn sphere_mesh(target: usize) -> Result<GridSpec> {
    if target < MIN_SPHERE_VERTICES {
        return Err(Error::Domain(format!(
            "sphere mesh needs at least {MIN_SPHERE_VERTICES} vertices, got {target}"
        )));
    }
    let mut k = 0;
    while icosphere_vertex_count(k) < target {
        k += 1;
    }
    Ok(GridSpec::SphereMesh { subdivisions: k })
}

/// `10 * 4^k + 2`.
pub fn icosphere_vertex_count(subdivisions: u32) -> usize {
    10 * 4usize.pow(subdivisions) + 2
}

fn points_per_side(side: f64, points_per_unit: f64) -> usize {
    ((side * points_per_unit).round() as usize).max(1) + 1
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    /// Row-major lattice: the first axis varies slowest.
    Lattice { dims: Vec<usize>, spacing: Vec<f64> },
    Triangulation { edges: Vec<[usize; 2]>, faces: Vec<[usize; 3]> },
}

/// Points (embedded in R^3) and their connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub points: Vec<[f64; 3]>,
    pub topology: Topology,
}

impl Discretization {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// V - E + F of a triangulation, or of the full cubical complex.
    pub fn euler_characteristic(&self) -> i64 {
        match &self.topology {
            Topology::Lattice { .. } => 1,
            Topology::Triangulation { edges, faces } => {
                self.points.len() as i64 - edges.len() as i64 + faces.len() as i64
            }
        }
    }
}

fn lattice(sides: &[f64], points_per_unit: f64) -> Discretization {
    let dims: Vec<usize> = sides.iter().map(|s| points_per_side(*s, points_per_unit)).collect();
    let spacing: Vec<f64> = sides.iter().zip(&dims).map(|(s, n)| s / (n - 1) as f64).collect();
    let total: usize = dims.iter().product();
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..total {
        let mut p = [0.0; 3];
        for (k, &i) in idx.iter().enumerate() {
            p[k] = i as f64 * spacing[k];
        }
        points.push(p);
        for k in (0..dims.len()).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Discretization { points, topology: Topology::Lattice { dims, spacing } }
}

/// Icosahedron subdivided `subdivisions` times, each edge split at its
/// midpoint and every vertex projected back to the unit sphere.
pub fn icosphere(subdivisions: u32) -> Discretization {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut points: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| normalize(*p))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, points: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let (p, q) = (points[a], points[b]);
                points.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                points.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut points);
            let bc = mid(b, c, &mut points);
            let ca = mid(c, a, &mut points);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }

    let edges: BTreeSet<[usize; 2]> = faces
        .iter()
        .flat_map(|&[a, b, c]| [[a, b], [b, c], [c, a]])
        .map(|[a, b]| [a.min(b), a.max(b)])
        .collect();
    Discretization {
        points,
        topology: Topology::Triangulation { edges: edges.into_iter().collect(), faces },
    }
}

fn normalize(p: [f64; 3]) -> [f64; 3] {
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / r, p[1] / r, p[2] / r]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(d: &Discretization) -> (usize, usize, usize) {
        match &d.topology {
            Topology::Triangulation { edges, faces } => (d.len(), edges.len(), faces.len()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn icosahedron_and_first_subdivision() {
        let base = icosphere(0);
        assert_eq!(counts(&base), (12, 30, 20));
        assert_eq!(base.euler_characteristic(), 2);
        let one = icosphere(1);
        assert_eq!(counts(&one), (42, 120, 80));
        assert_eq!(one.euler_characteristic(), 2);
    }

    #[test]
    fn mesh_selection_and_norms() {
        let spec = sphere_mesh(642).unwrap();
        assert_eq!(spec, GridSpec::SphereMesh { subdivisions: 3 });
        let mesh = spec.build().unwrap();
        assert_eq!(mesh.len(), 642);
        assert_eq!(mesh.euler_characteristic(), 2);
        for p in &mesh.points {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
        assert_eq!(sphere_mesh(200).unwrap(), GridSpec::SphereMesh { subdivisions: 3 });
        assert!(sphere_mesh(100).is_err());
    }

    #[test]
    fn lattice_layout() {
        let g = GridSpec::box_grid(vec![1.0, 2.0], 4.0).unwrap().build().unwrap();
        match &g.topology {
            Topology::Lattice { dims, spacing } => {
                assert_eq!(dims, &vec![5, 9]);
                assert_eq!(spacing, &vec![0.25, 0.25]);
            }
            _ => unreachable!(),
        }
        assert_eq!(g.points[1], [0.0, 0.25, 0.0]);
        assert_eq!(g.points[9], [0.25, 0.0, 0.0]);
        assert_eq!(g.points[44], [1.0, 2.0, 0.0]);
        assert!(GridSpec::box_grid(vec![1.0; 4], 4.0).is_err());
    }

    #[test]
    fn resolution_warning() {
        let p = MaternParams::new(1.0, 1.0, 3.0).unwrap();
        assert!(GridSpec::box_grid(vec![1.0], 4.0).unwrap().warnings(&p).len() == 1);
        assert!(GridSpec::box_grid(vec![1.0], 32.0).unwrap().warnings(&p).is_empty());
    }
}
