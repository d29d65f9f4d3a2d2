use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{sphere_mesh, GridSpec};
use super::sampler::FieldSampler;
use super::topology::{empirical_critical_points, empirical_ec, survival_curve};
use crate::critical::{expected_crit_euclidean, height_distribution};
use crate::ec::{excursion_prob_approx, expected_ec_box, expected_ec_sphere};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::matern::{GeometryTag, MaternParams};
use crate::stats::MeanAccumulator;

/// Relative discretization-bias allowance added to `3 * stderr`.
pub const BIAS_REL: f64 = 0.05;
/// Absolute allowance for EEC comparisons, where the analytic value crosses zero.
pub const EEC_BIAS_ABS: f64 = 0.01;
/// Levels at which the full domain must be recovered exactly, in units of sigma.
pub const FULL_DOMAIN_LEVEL: f64 = -40.0;
/// Allowance for comparisons that must hold exactly.
const EXACT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// EEC of the excursion set over a box; `levels` are in field units.
    EecBox { sides: Vec<f64>, points_per_unit: f64, levels: Vec<f64>, replications: usize },
    /// EEC over the unit sphere `S^2`.
    EecSphere { vertices: usize, levels: Vec<f64>, replications: usize },
    /// Densities of maxima and minima on `[0, length]` and `F_1` at `levels`.
    Critical1d { length: f64, points_per_unit: f64, levels: Vec<f64>, replications: usize },
    /// `P(sup X >= level)` on `[0, length]` against the EEC approximation.
    ExcursionProb { length: f64, points_per_unit: f64, level: f64, replications: usize },
}

impl Scenario {
    pub fn id(&self) -> &'static str {
        match self {
            Scenario::EecBox { .. } => "eec_box",
            Scenario::EecSphere { .. } => "eec_sphere",
            Scenario::Critical1d { .. } => "critical_1d",
            Scenario::ExcursionProb { .. } => "excursion_prob",
        }
    }

    pub fn replications(&self) -> usize {
        match self {
            Scenario::EecBox { replications, .. }
            | Scenario::EecSphere { replications, .. }
            | Scenario::Critical1d { replications, .. }
            | Scenario::ExcursionProb { replications, .. } => *replications,
        }
    }

    pub fn with_replications(mut self, n: usize) -> Self {
        match &mut self {
            Scenario::EecBox { replications, .. }
            | Scenario::EecSphere { replications, .. }
            | Scenario::Critical1d { replications, .. }
            | Scenario::ExcursionProb { replications, .. } => *replications = n,
        }
        self
    }
}

/// The standard battery: EEC on the unit square and on S^2 at seven levels,
/// 1D critical points on `[0, 5]`, and the excursion probability at `2.5 sigma`.
pub fn standard_scenarios(params: &MaternParams) -> Vec<Scenario> {
    let s = params.sigma();
    let seven: Vec<f64> = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0].iter().map(|k| k * s).collect();
    let per_ell = 1.0 / params.ell();
    vec![
        Scenario::EecBox {
            sides: vec![1.0, 1.0],
            points_per_unit: (32.0f64).max(8.0 * per_ell),
            levels: seven.clone(),
            replications: 500,
        },
        Scenario::EecSphere { vertices: 642, levels: seven, replications: 500 },
        Scenario::Critical1d {
            length: 5.0,
            points_per_unit: 80.0 * per_ell,
            levels: vec![0.0, s, 2.0 * s],
            replications: 2000,
        },
        Scenario::ExcursionProb { length: 1.0, points_per_unit: 80.0 * per_ell, level: 2.5 * s, replications: 10_000 },
    ]
}

/// One analytic-versus-empirical comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub quantity: String,
    pub analytic: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub replications: usize,
    pub budget: f64,
    pub pass: bool,
    pub note: String,
}

impl ReportRow {
    fn compare(scenario: &str, quantity: String, analytic: f64, acc: &MeanAccumulator, budget: f64) -> Self {
        Self::with_stderr(scenario, quantity, analytic, acc.mean(), acc.stderr(), acc.count() as usize, budget)
    }

    fn with_stderr(
        scenario: &str,
        quantity: String,
        analytic: f64,
        empirical: f64,
        stderr: f64,
        replications: usize,
        budget: f64,
    ) -> Self {
        let pass = (analytic - empirical).abs() <= 3.0 * stderr + budget;
        ReportRow {
            scenario: scenario.to_string(),
            quantity,
            analytic,
            empirical,
            stderr,
            replications,
            budget,
            pass,
            note: String::new(),
        }
    }

    fn failure(scenario: &str, err: &Error, replications: usize) -> Self {
        ReportRow {
            scenario: scenario.to_string(),
            quantity: "error".into(),
            analytic: f64::NAN,
            empirical: f64::NAN,
            stderr: f64::NAN,
            replications,
            budget: 0.0,
            pass: false,
            note: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub rows: Vec<ReportRow>,
}

pub const CSV_HEADER: [&str; 9] =
    ["scenario", "quantity", "analytic", "empirical", "stderr", "replications", "budget", "pass", "note"];

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.scenario.clone(),
                r.quantity.clone(),
                r.analytic.to_string(),
                r.empirical.to_string(),
                r.stderr.to_string(),
                r.replications.to_string(),
                r.budget.to_string(),
                r.pass.to_string(),
                r.note.clone(),
            ])?;
        }
        w.flush()
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Derives an independent seed per scenario position.
fn scenario_seed(seed: u64, position: usize) -> u64 {
    seed ^ (position as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs every scenario and collects comparisons; a scenario that fails to
/// run contributes one failing `error` row instead of aborting the batch.
///
/// Replications are drawn from per-replication RNG streams and reduced in
/// replication order, so the report does not depend on the thread count.
pub fn run_validation(params: &MaternParams, scenarios: &[Scenario], seed: u64) -> ValidationReport {
    let mut rows = Vec::new();
    for (k, sc) in scenarios.iter().enumerate() {
        match run_scenario(params, sc, scenario_seed(seed, k)) {
            Ok(mut r) => {
                let warnings = scenario_warnings(params, sc);
                if !warnings.is_empty() {
                    for row in &mut r {
                        row.note = warnings.join("; ");
                    }
                }
                rows.extend(r)
            }
            Err(e) => rows.push(ReportRow::failure(sc.id(), &e, sc.replications())),
        }
    }
    ValidationReport { seed, rows }
}

fn scenario_warnings(params: &MaternParams, sc: &Scenario) -> Vec<String> {
    match sc {
        Scenario::EecBox { sides, points_per_unit, .. } => GridSpec::box_grid(sides.clone(), *points_per_unit)
            .map(|g| g.warnings(params))
            .unwrap_or_default(),
        Scenario::Critical1d { length, points_per_unit, .. }
        | Scenario::ExcursionProb { length, points_per_unit, .. } => {
            GridSpec::box_grid(vec![*length], *points_per_unit).map(|g| g.warnings(params)).unwrap_or_default()
        }
        Scenario::EecSphere { .. } => Vec::new(),
    }
}

fn run_scenario(params: &MaternParams, sc: &Scenario, seed: u64) -> Result<Vec<ReportRow>> {
    if sc.replications() < 2 {
        return Err(Error::Domain("a scenario needs at least 2 replications".into()));
    }
    let id = sc.id();
    let full = FULL_DOMAIN_LEVEL * params.sigma();
    match sc {
        Scenario::EecBox { sides, points_per_unit, levels, replications } => {
            let domain = Domain::new_box(sides.clone())?;
            let spec = GridSpec::box_grid(sides.clone(), *points_per_unit)?;
            let mut rows = ec_rows(params, &spec, levels, *replications, seed, id, |u| {
                expected_ec_box(params, &domain, u)
            })?;
            rows.extend(ec_rows(params, &spec, &[full], *replications, seed, id, |u| {
                expected_ec_box(params, &domain, u)
            })?
            .into_iter()
            .map(exact_row));
            Ok(rows)
        }
        Scenario::EecSphere { vertices, levels, replications } => {
            let spec = sphere_mesh(*vertices)?;
            let mut rows =
                ec_rows(params, &spec, levels, *replications, seed, id, |u| expected_ec_sphere(params, 2, u))?;
            rows.extend(
                ec_rows(params, &spec, &[full], *replications, seed, id, |u| expected_ec_sphere(params, 2, u))?
                    .into_iter()
                    .map(exact_row),
            );
            Ok(rows)
        }
        Scenario::Critical1d { length, points_per_unit, levels, replications } => {
            let spec = GridSpec::box_grid(vec![*length], *points_per_unit)?;
            let sampler = FieldSampler::new(params, &spec)?;
            let per_rep: Vec<(usize, Vec<f64>, usize)> = (0..*replications as u64)
                .into_par_iter()
                .map(|r| {
                    let c = empirical_critical_points(&sampler.draw(seed, r), f64::NEG_INFINITY)?;
                    let mut heights = c.heights;
                    let maxima = heights.pop().expect("two indices in 1D");
                    Ok((heights[0].len(), maxima.clone(), maxima.len()))
                })
                .collect::<Result<_>>()?;
            let mut minima = MeanAccumulator::default();
            let mut maxima = MeanAccumulator::default();
            let mut pooled = Vec::new();
            for (n_min, heights, n_max) in per_rep {
                minima.push(n_min as f64 / length);
                maxima.push(n_max as f64 / length);
                pooled.extend(heights);
            }
            let mut rows = Vec::new();
            let d1 = expected_crit_euclidean(params, 1, 1)?.density;
            let d0 = expected_crit_euclidean(params, 1, 0)?.density;
            rows.push(ReportRow::compare(id, "maxima_density".into(), d1, &maxima, BIAS_REL * d1));
            rows.push(ReportRow::compare(id, "minima_density".into(), d0, &minima, BIAS_REL * d0));
            let curve = survival_curve(&pooled, levels);
            for (j, &u) in levels.iter().enumerate() {
                let f = height_distribution(params, GeometryTag::Euclidean, 1, 1, u)?;
                let mut row = ReportRow::with_stderr(
                    id,
                    format!("height_F1(u={u})"),
                    f,
                    curve.values[j],
                    curve.stderr[j],
                    *replications,
                    BIAS_REL * f,
                );
                row.note = curve.warnings.join("; ");
                rows.push(row);
            }
            Ok(rows)
        }
        Scenario::ExcursionProb { length, points_per_unit, level, replications } => {
            let spec = GridSpec::box_grid(vec![*length], *points_per_unit)?;
            let sampler = FieldSampler::new(params, &spec)?;
            let hits: Vec<f64> = (0..*replications as u64)
                .into_par_iter()
                .map(|r| {
                    let s = sampler.draw(seed, r);
                    let top = s.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if top >= *level {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let acc: MeanAccumulator = hits.into_iter().collect();
            let approx = excursion_prob_approx(params, &Domain::new_box(vec![*length])?, *level)?;
            Ok(vec![ReportRow::compare(id, format!("p_sup(u={level})"), approx.probability, &acc, 0.0)])
        }
    }
}

fn exact_row(mut row: ReportRow) -> ReportRow {
    row.quantity = format!("full_domain_{}", row.quantity);
    row.budget = EXACT;
    row.pass = row.stderr == 0.0 && (row.analytic - row.empirical).abs() <= EXACT;
    row
}

fn ec_rows(
    params: &MaternParams,
    spec: &GridSpec,
    levels: &[f64],
    replications: usize,
    seed: u64,
    id: &str,
    analytic: impl Fn(f64) -> Result<f64>,
) -> Result<Vec<ReportRow>> {
    let sampler = FieldSampler::new(params, spec)?;
    let per_rep: Vec<Vec<i64>> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let s = sampler.draw(seed, r);
            levels.iter().map(|&u| empirical_ec(&s, u)).collect()
        })
        .collect();
    levels
        .iter()
        .enumerate()
        .map(|(j, &u)| {
            let acc: MeanAccumulator = per_rep.iter().map(|v| v[j] as f64).collect();
            let a = analytic(u)?;
            Ok(ReportRow::compare(id, format!("ec(u={u})"), a, &acc, BIAS_REL * a.abs() + EEC_BIAS_ABS))
        })
        .collect()
}
