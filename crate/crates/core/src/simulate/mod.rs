//! Brute-force checks of the analytic results: exact joint draws of the field
//! on grids and sphere meshes, empirical Euler characteristics, critical
//! points and peak heights, and a batch harness comparing them with theory.

mod grid;
mod sampler;
mod topology;
mod validate;

pub use grid::{
    icosphere, icosphere_vertex_count, sphere_mesh, Discretization, GridSpec, Topology, MIN_POINTS_PER_ELL,
    MIN_SPHERE_VERTICES,
};
pub use sampler::{sample_field, FieldSample, FieldSampler, JITTER_LADDER};
pub use topology::{
    empirical_critical_points, empirical_ec, peak_height_histogram, survival_curve, CriticalCounts,
    SurvivalCurve, MIN_POOLED_PEAKS,
};
pub use validate::{
    run_validation, standard_scenarios, ReportRow, Scenario, ValidationReport, BIAS_REL, CSV_HEADER,
    EEC_BIAS_ABS, FULL_DOMAIN_LEVEL,
};
