use serde_json::Value;

use matern_rf::critical::{height_curve, CritOptions, CriticalProfile, InnerMethod};
use matern_rf::ec::{default_levels, ec_curve, level_grid};
use matern_rf::goi::{goi_expectation, ExpectationMethod, Functional, GoiParams, MethodTag};
use matern_rf::simulate::{run_validation, sphere_mesh, standard_scenarios, FieldSampler, GridSpec, Scenario};
use matern_rf::stats::DEFAULT_SEED;
use matern_rf::{Domain, Error, GeometryTag, MaternParams};

use crate::args::{enum_name, Args, CommandKind, DomainKind, Format, FunctionalKind, Method};
use crate::output::{emit, num, Table};
use crate::CliError;

const DEFAULT_SAMPLES: usize = matern_rf::goi::DEFAULT_MC_SAMPLES;
const DEFAULT_TOL: f64 = matern_rf::goi::DEFAULT_QUAD_TOL;
const DEFAULT_SIM_VERTICES: usize = 642;

pub enum Outcome {
    Done,
    ValidationFailed,
}

/// Fills in the documented defaults so a dumped config is complete.
pub fn apply_defaults(args: &mut Args) {
    args.sigma2.get_or_insert(1.0);
    args.ell.get_or_insert(1.0);
    args.seed.get_or_insert(DEFAULT_SEED);
    args.format.get_or_insert(Format::Csv);
    args.method.get_or_insert(Method::Auto);
    args.tol.get_or_insert(DEFAULT_TOL);
    args.samples.get_or_insert(DEFAULT_SAMPLES);
}

pub fn run(args: &Args) -> Result<Outcome, CliError> {
    let command = args.command.ok_or_else(|| {
        CliError::Input("missing command (eec, crit, height, goi, simulate or validate)".into())
    })?;
    match command {
        CommandKind::Eec => eec(args),
        CommandKind::Crit => crit(args),
        CommandKind::Height => height(args),
        CommandKind::Goi => goi(args),
        CommandKind::Simulate => simulate(args),
        CommandKind::Validate => validate(args),
    }
}

fn lib_err(flag: &str) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::Input(format!("{flag}: {e}"))
}

fn params(args: &Args) -> Result<MaternParams, CliError> {
    let nu = args.nu.ok_or_else(|| CliError::Input("--nu is required".into()))?;
    let sigma2 = args.sigma2.unwrap_or(1.0);
    let ell = args.ell.unwrap_or(1.0);
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(CliError::Input(format!("--sigma2 must be positive and finite (got {sigma2})")));
    }
    if !(ell.is_finite() && ell > 0.0) {
        return Err(CliError::Input(format!("--ell must be positive and finite (got {ell})")));
    }
    MaternParams::new(sigma2, ell, nu).map_err(lib_err("--nu"))
}

fn levels(args: &Args, p: &MaternParams) -> Result<Vec<f64>, CliError> {
    let Some(spec) = &args.levels else {
        return Ok(default_levels(p));
    };
    let bad = || CliError::Input(format!("--levels: expected lo:hi:count, got `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite()) || count == 0 {
        return Err(bad());
    }
    Ok(level_grid(lo, hi, count))
}

fn eec_domain(args: &Args) -> Result<Domain, CliError> {
    match (&args.box_sides, args.sphere) {
        (Some(_), Some(_)) => Err(CliError::Input("--box and --sphere are mutually exclusive".into())),
        (Some(sides), None) => Domain::new_box(sides.clone()).map_err(lib_err("--box")),
        (None, Some(n)) => Domain::sphere(n).map_err(lib_err("--sphere")),
        (None, None) => Err(CliError::Input("a domain is required: --box SIDES or --sphere N".into())),
    }
}

/// Geometry and dimension for critical-point commands.
fn crit_geometry(args: &Args) -> Result<(GeometryTag, usize), CliError> {
    let (tag, n) = match (args.sphere, &args.box_sides, args.dim) {
        (Some(n), None, _) => (GeometryTag::Sphere, n),
        (None, Some(s), _) => (GeometryTag::Euclidean, s.len()),
        (None, None, Some(n)) => match args.domain.unwrap_or(DomainKind::Euclidean) {
            DomainKind::Euclidean => (GeometryTag::Euclidean, n),
            DomainKind::Sphere => (GeometryTag::Sphere, n),
        },
        (Some(_), Some(_), _) => return Err(CliError::Input("--box and --sphere are mutually exclusive".into())),
        (None, None, None) => return Err(CliError::Input("--dim is required (or --box / --sphere)".into())),
    };
    let conflict = match args.domain {
        Some(DomainKind::Euclidean) => args.sphere.is_some(),
        Some(DomainKind::Sphere) => args.box_sides.is_some(),
        None => false,
    };
    if conflict {
        return Err(CliError::Input("--domain conflicts with --box/--sphere".into()));
    }
    if n == 0 {
        return Err(CliError::Input("--dim must be at least 1".into()));
    }
    Ok((tag, n))
}

fn crit_options(args: &Args) -> CritOptions {
    CritOptions {
        inner: match args.method.unwrap_or(Method::Auto) {
            Method::Auto => InnerMethod::Auto,
            Method::Quadrature => InnerMethod::Quadrature,
            Method::Mc => InnerMethod::MonteCarlo,
        },
        quad_tol: args.tol.unwrap_or(DEFAULT_TOL),
        mc_samples: args.samples.unwrap_or(DEFAULT_SAMPLES),
        seed: args.seed.unwrap_or(DEFAULT_SEED),
    }
}

fn method_name(m: MethodTag) -> Value {
    Value::from(match m {
        MethodTag::Mc => "mc",
        MethodTag::Quadrature => "quadrature",
    })
}

fn finish(table: Table, args: &Args, default_name: Option<&str>) -> Result<Outcome, CliError> {
    let text = table.render(args.format.unwrap_or(Format::Csv));
    if let Some(path) = emit(&text, args.output.as_deref(), default_name)? {
        eprintln!("wrote {} rows to {}", table.rows.len(), path.display());
    }
    Ok(Outcome::Done)
}

fn eec(args: &Args) -> Result<Outcome, CliError> {
    let p = params(args)?;
    let domain = eec_domain(args)?;
    let us = levels(args, &p)?;
    let curve = ec_curve(&p, &domain, &us).map_err(lib_err("--box"))?;
    let mut t = Table::new("eec", &["u", "eec"]);
    for (u, v) in curve.levels.iter().zip(&curve.values) {
        t.push(vec![num(*u), num(*v)]);
    }
    finish(t, args, None)
}

fn crit(args: &Args) -> Result<Outcome, CliError> {
    let p = params(args)?;
    let (tag, n) = crit_geometry(args)?;
    let mut prof = CriticalProfile::new(&p, tag, n, crit_options(args)).map_err(lib_err("--method"))?;
    let mut t = Table::new("crit", &["index", "u", "density", "stderr", "method"]);
    for i in 0..=n {
        let r = match args.u {
            Some(u) => prof.density_above(i, u).map_err(lib_err("--u"))?,
            None => prof.density(i).map_err(lib_err("--dim"))?,
        };
        t.push(vec![Value::from(i), args.u.map_or(Value::Null, num), num(r.density), num(r.stderr), method_name(r.method)]);
    }
    finish(t, args, None)
}

fn height(args: &Args) -> Result<Outcome, CliError> {
    let p = params(args)?;
    let (tag, n) = crit_geometry(args)?;
    let i = args.index.ok_or_else(|| CliError::Input("--index is required for height".into()))?;
    if i > n {
        return Err(CliError::Input(format!("--index: {i} exceeds the dimension {n}")));
    }
    let us = levels(args, &p)?;
    let curve = height_curve(&p, tag, n, i, &us, crit_options(args)).map_err(lib_err("--index"))?;
    let mut t = Table::new("height", &["u", "height", "stderr", "clamped"]);
    for (u, h) in us.iter().zip(&curve) {
        t.push(vec![num(*u), num(h.value), num(h.stderr), Value::from(h.clamped)]);
    }
    finish(t, args, None)
}

fn goi(args: &Args) -> Result<Outcome, CliError> {
    let n = args.dim.ok_or_else(|| CliError::Input("--dim is required for goi".into()))?;
    let c = args.c.unwrap_or(0.0);
    let gp = GoiParams::new(n, c).map_err(lib_err("--c"))?;
    let shift = args.shift.unwrap_or(0.0);
    let kind = args.functional.unwrap_or(if args.index.is_some() {
        FunctionalKind::Crossing
    } else {
        FunctionalKind::AbsProduct
    });
    let f = match kind {
        FunctionalKind::Unit => Functional::Unit,
        FunctionalKind::AbsProduct => Functional::AbsProduct { shift },
        FunctionalKind::Crossing => Functional::Crossing {
            index: args.index.ok_or_else(|| CliError::Input("--index is required for the crossing functional".into()))?,
            shift,
        },
        FunctionalKind::LargestAtMost => Functional::LargestAtMost { bound: shift },
    };
    let method = match args.method.unwrap_or(Method::Auto) {
        Method::Quadrature => ExpectationMethod::Quadrature { abs_tol: args.tol.unwrap_or(DEFAULT_TOL) },
        Method::Auto if n <= 2 => ExpectationMethod::Quadrature { abs_tol: args.tol.unwrap_or(DEFAULT_TOL) },
        _ => ExpectationMethod::MonteCarlo {
            samples: args.samples.unwrap_or(DEFAULT_SAMPLES),
            seed: args.seed.unwrap_or(DEFAULT_SEED),
        },
    };
    let r = goi_expectation(&gp, &f, method).map_err(lib_err("--functional"))?;
    let mut t = Table::new(
        "goi",
        &["n", "c", "functional", "index", "shift", "value", "stderr", "method", "samples_or_nodes"],
    );
    let name = enum_name(kind);
    t.push(vec![
        Value::from(n),
        num(c),
        Value::from(name),
        args.index.map_or(Value::Null, Value::from),
        num(shift),
        num(r.value),
        num(r.stderr),
        method_name(r.method),
        Value::from(r.samples_or_nodes),
    ]);
    finish(t, args, None)
}

fn simulate(args: &Args) -> Result<Outcome, CliError> {
    let p = params(args)?;
    let spec = match (&args.box_sides, args.sphere) {
        (Some(_), Some(_)) => return Err(CliError::Input("--box and --sphere are mutually exclusive".into())),
        (Some(sides), None) => {
            let ppu = args.resolution.unwrap_or(16.0 / p.ell());
            GridSpec::box_grid(sides.clone(), ppu).map_err(lib_err("--box"))?
        }
        (None, Some(2)) => sphere_mesh(args.vertices.unwrap_or(DEFAULT_SIM_VERTICES)).map_err(lib_err("--vertices"))?,
        (None, Some(n)) => return Err(CliError::Input(format!("--sphere: simulation supports S^2 only, got S^{n}"))),
        (None, None) => return Err(CliError::Input("a domain is required: --box SIDES or --sphere 2".into())),
    };
    for w in spec.warnings(&p) {
        eprintln!("warning: {w}");
    }
    let reps = args.replications.unwrap_or(1);
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let sampler = FieldSampler::new(&p, &spec).map_err(lib_err("--resolution"))?;
    let mut t = Table::new("simulate", &["replication", "point", "x", "y", "z", "value"]);
    for r in 0..reps as u64 {
        let s = sampler.draw(seed, r);
        for (k, (loc, v)) in s.locations().iter().zip(&s.values).enumerate() {
            t.push(vec![Value::from(r), Value::from(k), num(loc[0]), num(loc[1]), num(loc[2]), num(*v)]);
        }
    }
    let default_name = match args.format.unwrap_or(Format::Csv) {
        Format::Csv => "field_draws.csv",
        Format::Json => "field_draws.json",
    };
    finish(t, args, Some(default_name))
}

fn validate(args: &Args) -> Result<Outcome, CliError> {
    let p = params(args)?;
    let mut scenarios = standard_scenarios(&p);
    if let Some(wanted) = &args.scenarios {
        for w in wanted {
            if !scenarios.iter().any(|s| s.id() == w) {
                return Err(CliError::Input(format!(
                    "--scenarios: unknown scenario `{w}` (expected eec_box, eec_sphere, critical_1d, excursion_prob)"
                )));
            }
        }
        scenarios.retain(|s| wanted.iter().any(|w| w == s.id()));
    }
    let scenarios: Vec<Scenario> = scenarios
        .into_iter()
        .map(|mut s| {
            if let Some(n) = args.replications {
                s = s.with_replications(n);
            }
            match &mut s {
                Scenario::EecBox { points_per_unit, .. }
                | Scenario::Critical1d { points_per_unit, .. }
                | Scenario::ExcursionProb { points_per_unit, .. } => {
                    if let Some(r) = args.resolution {
                        *points_per_unit = r;
                    }
                }
                Scenario::EecSphere { vertices, .. } => {
                    if let Some(v) = args.vertices {
                        *vertices = v;
                    }
                }
            }
            s
        })
        .collect();
    let report = run_validation(&p, &scenarios, args.seed.unwrap_or(DEFAULT_SEED));
    let text = match args.format.unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json() + "\n",
    };
    if let Some(path) = emit(&text, args.output.as_deref(), None)? {
        eprintln!("wrote {} rows to {}", report.rows.len(), path.display());
    }
    for r in report.rows.iter().filter(|r| !r.pass) {
        eprintln!("FAIL {} {}: analytic {} empirical {} stderr {} {}", r.scenario, r.quantity, r.analytic, r.empirical, r.stderr, r.note);
    }
    Ok(if report.all_pass() { Outcome::Done } else { Outcome::ValidationFailed })
}
