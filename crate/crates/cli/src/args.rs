use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandKind {
    /// Expected Euler characteristic curve.
    Eec,
    /// Critical-point densities for every index.
    Crit,
    /// Height distribution F_i over a level grid.
    Height,
    /// A raw GOI expectation.
    Goi,
    /// Field draws written to a file.
    Simulate,
    /// Simulation-versus-theory validation report.
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainKind {
    Euclidean,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Auto,
    Quadrature,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FunctionalKind {
    Unit,
    AbsProduct,
    Crossing,
    LargestAtMost,
}

/// Matérn random-field geometry: EEC curves, critical-point densities, peak
/// height distributions, GOI expectations and simulation checks.
///
/// Every flag may also be given in a `--config` file as `key = value`
/// lines using the long flag name; flags on the command line win.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "matern-rf", version, allow_negative_numbers = true)]
pub struct Args {
    /// eec | crit | height | goi | simulate | validate
    #[arg(value_enum)]
    pub command: Option<CommandKind>,

    /// Key-value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub dump_config: bool,

    /// Field variance sigma^2 [default: 1].
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Correlation length ell [default: 1].
    #[arg(long)]
    pub ell: Option<f64>,
    /// Smoothness nu (must exceed 2).
    #[arg(long)]
    pub nu: Option<f64>,

    /// Box side lengths, comma separated (e.g. 1,2).
    #[arg(long = "box", value_delimiter = ',')]
    pub box_sides: Option<Vec<f64>>,
    /// Unit sphere S^N of this dimension.
    #[arg(long)]
    pub sphere: Option<usize>,
    /// Dimension N for crit, height and goi.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Geometry for crit and height [default: euclidean].
    #[arg(long, value_enum)]
    pub domain: Option<DomainKind>,

    /// Level grid lo:hi:count [default: -3 sigma : 5 sigma : 101].
    #[arg(long, allow_hyphen_values = true)]
    pub levels: Option<String>,
    /// Critical-point index i.
    #[arg(long)]
    pub index: Option<usize>,
    /// Single level u (crit: counts above u).
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<f64>,

    /// GOI parameter c.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// GOI functional [default: crossing when --index is given, else abs-product].
    #[arg(long, value_enum)]
    pub functional: Option<FunctionalKind>,
    /// Shift (or bound for largest-at-most) of the GOI functional [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub shift: Option<f64>,

    /// Inner expectation method [default: auto].
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Monte Carlo sample count [default: 1000000].
    #[arg(long)]
    pub samples: Option<usize>,
    /// Quadrature absolute tolerance [default: 1e-10].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Random seed [default: 20240917].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker thread cap; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,

    /// simulate/validate: replication count.
    #[arg(long)]
    pub replications: Option<usize>,
    /// simulate/validate: box grid points per unit length.
    #[arg(long)]
    pub resolution: Option<f64>,
    /// simulate/validate: target sphere mesh vertex count.
    #[arg(long)]
    pub vertices: Option<usize>,
    /// validate: comma-separated subset of eec_box, eec_sphere, critical_1d, excursion_prob.
    #[arg(long, value_delimiter = ',')]
    pub scenarios: Option<Vec<String>>,

    /// Output format [default: csv].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; relative paths resolve under $MATERN_RF_OUT_DIR when set.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f; } )*
    };
}

impl Args {
    /// Fills every unset field from `other`.
    pub fn merge_from(&mut self, other: Args) {
        let a = self;
        merge_fields!(a, other; command, sigma2, ell, nu, box_sides, sphere, dim, domain, levels, index, u,
            c, functional, shift, method, samples, tol, seed, threads, replications, resolution, vertices,
            scenarios, format, output);
    }

    /// Key-value text that `--config` reads back to the same run.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                let _ = writeln!(out, "{k} = {v}");
            }
        };
        let list = |v: &Option<Vec<f64>>| v.as_ref().map(|xs| xs.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        line("command", self.command.map(enum_name));
        line("sigma2", self.sigma2.map(|v| v.to_string()));
        line("ell", self.ell.map(|v| v.to_string()));
        line("nu", self.nu.map(|v| v.to_string()));
        line("box", list(&self.box_sides));
        line("sphere", self.sphere.map(|v| v.to_string()));
        line("dim", self.dim.map(|v| v.to_string()));
        line("domain", self.domain.map(enum_name));
        line("levels", self.levels.clone());
        line("index", self.index.map(|v| v.to_string()));
        line("u", self.u.map(|v| v.to_string()));
        line("c", self.c.map(|v| v.to_string()));
        line("functional", self.functional.map(enum_name));
        line("shift", self.shift.map(|v| v.to_string()));
        line("method", self.method.map(enum_name));
        line("samples", self.samples.map(|v| v.to_string()));
        line("tol", self.tol.map(|v| v.to_string()));
        line("seed", self.seed.map(|v| v.to_string()));
        line("threads", self.threads.map(|v| v.to_string()));
        line("replications", self.replications.map(|v| v.to_string()));
        line("resolution", self.resolution.map(|v| v.to_string()));
        line("vertices", self.vertices.map(|v| v.to_string()));
        line("scenarios", self.scenarios.as_ref().map(|s| s.join(",")));
        line("format", self.format.map(enum_name));
        out
    }
}

pub fn enum_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

/// Turns `key = value` lines into an argument vector for the parser.
pub fn config_to_argv(text: &str) -> Result<Vec<String>, String> {
    let mut argv = vec!["matern-rf".to_string()];
    let mut command = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`, got `{line}`", n + 1))?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "command" => command = Some(v.to_string()),
            "config" | "dump-config" | "dump_config" => {
                return Err(format!("config line {}: `{k}` is not allowed in a config file", n + 1))
            }
            _ => {
                argv.push(format!("--{}", k.replace('_', "-")));
                argv.push(v.to_string());
            }
        }
    }
    if let Some(c) = command {
        argv.insert(1, c);
    }
    Ok(argv)
}
