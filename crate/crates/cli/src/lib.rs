//! Command-line front end for `crparallax-core`: the surface catalog, point
//! sampling, parallel per-point analysis and JSON reports.

pub mod analysis;
pub mod catalog;
pub mod points;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use crparallax_core::dsl::SurfaceSpec;
use crparallax_core::frame::Tolerances;
use crparallax_core::invariants::ORDER_J;

use analysis::{Backend, Command, Plan, PointSource, Suites};
use points::PointSpec;

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_SAMPLES: usize = 20;
pub const DEFAULT_BOX: f64 = 0.3;
pub const DEFAULT_ORDER: usize = 8;
/// Default order for the exact backend, where the cost grows much faster.
pub const DEFAULT_EXACT_ORDER: usize = ORDER_J;

#[derive(Debug, Parser)]
#[command(name = "crparallax", version, about = "Invariants of Levi-degenerate hypersurfaces in C^3 given as graphs u = F")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Full per-point report: admissibility, k, l, P, H, W, J, identities.
    Analyze(RunArgs),
    /// Flat / BRANCH_J / BRANCH_W verdict over the points.
    Classify(RunArgs),
    /// Run the identity suites; exits 0 only if every check passes.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[command(flatten)]
        run: RunArgs,
    },
    /// List or show the built-in surfaces.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    List,
    Show { name: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Brackets,
    Jacobi,
    Wprobe,
    ModelAlgebra,
    All,
}

impl Suite {
    pub fn suites(self) -> Suites {
        match self {
            Suite::Brackets => Suites {
                brackets: true,
                ..Suites::default()
            },
            Suite::Jacobi => Suites {
                jacobi: true,
                ..Suites::default()
            },
            Suite::Wprobe => Suites {
                wprobe: true,
                ..Suites::default()
            },
            Suite::ModelAlgebra => Suites {
                model_algebra: true,
                ..Suites::default()
            },
            Suite::All => Suites::all(),
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    /// Catalog name or path to a surface file.
    #[arg(long)]
    pub surface: Option<String>,
    /// Explicit point `z1=a+bi,z2=c+di,v=e`; repeatable. Disables sampling.
    #[arg(long = "point")]
    pub points: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Seeds sampling and the `random-tube` generator.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Sampling radius for |z1|, |z2| and |v|.
    #[arg(long = "box", default_value_t = DEFAULT_BOX)]
    pub box_radius: f64,
    /// Sampling center, same syntax as --point. Defaults per catalog entry.
    #[arg(long)]
    pub center: Option<String>,
    /// Expansion order of F [default: 8, or 6 with --exact].
    #[arg(long)]
    pub order: Option<usize>,
    /// Exact Gaussian-rational arithmetic.
    #[arg(long)]
    pub exact: bool,
    /// Relabel z1 <-> z2 (surface and points) before building the frame.
    #[arg(long)]
    pub swap_z: bool,
    /// Write the JSON report here; `-` writes it to stdout instead of the summary.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, env = "CRPARALLAX_WORKERS")]
    pub workers: Option<usize>,
    /// Continue with a warning when conj(F) != F.
    #[arg(long)]
    pub allow_nonreal: bool,
    #[arg(long)]
    pub tol_pivot: Option<f64>,
    #[arg(long)]
    pub tol_rank: Option<f64>,
    #[arg(long)]
    pub tol_two_nondeg: Option<f64>,
    #[arg(long)]
    pub tol_flat: Option<f64>,
    #[arg(long)]
    pub tol_identity: Option<f64>,
}

/// Errors raised before any analysis runs.
#[derive(Debug, thiserror::Error)]
pub enum RequestError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}:{column}: found {found}, expected one of: {expected}")]
    SurfaceParse {
        path: String,
        line: usize,
        column: usize,
        found: String,
        expected: String,
    },
    #[error(transparent)]
    Point(#[from] points::PointError),
    #[error("exact mode needs rational input: {0}")]
    ExactViolation(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl RequestError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RequestError::ExactViolation(_) => 5,
            RequestError::Io { .. } => 1,
            _ => 3,
        }
    }
}

pub fn load_surface(name_or_path: &str, seed: u64) -> Result<SurfaceSpec, RequestError> {
    if let Some(spec) = catalog::load(name_or_path, seed) {
        return Ok(spec);
    }
    let path = Path::new(name_or_path);
    let text = std::fs::read_to_string(path).map_err(|source| RequestError::Io {
        path: name_or_path.to_owned(),
        source,
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name_or_path);
    SurfaceSpec::parse(&text, stem).map_err(|e| RequestError::SurfaceParse {
        path: name_or_path.to_owned(),
        line: e.line,
        column: e.column,
        found: e.found.clone(),
        expected: e.expected.iter().cloned().collect::<Vec<_>>().join(", "),
    })
}

fn tolerances(a: &RunArgs) -> Tolerances {
    let d = Tolerances::default();
    Tolerances {
        pivot: a.tol_pivot.unwrap_or(d.pivot),
        rank: a.tol_rank.unwrap_or(d.rank),
        two_nondeg: a.tol_two_nondeg.unwrap_or(d.two_nondeg),
        flat: a.tol_flat.unwrap_or(d.flat),
        identity: a.tol_identity.unwrap_or(d.identity),
    }
}

/// Turns parsed arguments into an analysis plan.
pub fn plan(command: Command, a: &RunArgs) -> Result<Plan, RequestError> {
    let needs_surface = match command {
        Command::Verify(s) => s.needs_surface(),
        _ => true,
    };
    let surface = match (&a.surface, needs_surface) {
        (Some(s), true) => Some(load_surface(s, a.seed)?),
        (None, true) => return Err(RequestError::Usage("--surface is required".to_owned())),
        (_, false) => None,
    };
    let surface = surface.map(|mut s| {
        if a.swap_z {
            s.expr = s.expr.swap_z();
            s.source_text = s.expr.to_string();
        }
        s
    });
    if a.samples == 0 {
        return Err(RequestError::Usage("--samples must be at least 1".to_owned()));
    }
    if !(a.box_radius.is_finite() && a.box_radius >= 0.0) {
        return Err(RequestError::Usage("--box must be a non-negative number".to_owned()));
    }
    let points = if a.points.is_empty() {
        let center = match &a.center {
            Some(c) => PointSpec::parse(c)?,
            None => a.surface.as_deref().map(catalog::default_center).unwrap_or_default(),
        };
        PointSource::Sampled {
            seed: a.seed,
            count: a.samples,
            radius: a.box_radius,
            center,
        }
    } else {
        PointSource::Explicit(a.points.iter().map(|p| PointSpec::parse(p)).collect::<Result<_, _>>()?)
    };
    let backend = if a.exact { Backend::Exact } else { Backend::Floating };
    if a.exact {
        let decimal = match &points {
            PointSource::Explicit(ps) => ps.iter().find(|p| p.decimal).map(|p| p.to_string()),
            PointSource::Sampled { center, .. } => center.decimal.then(|| format!("center {center}")),
        };
        if let Some(p) = decimal {
            return Err(RequestError::ExactViolation(format!("decimal coordinates in {p}; write them as fractions")));
        }
    }
    Ok(Plan {
        command,
        surface,
        points,
        order: a.order.unwrap_or(if a.exact { DEFAULT_EXACT_ORDER } else { DEFAULT_ORDER }),
        backend,
        swap_z: a.swap_z,
        tol: tolerances(a),
        allow_nonreal: a.allow_nonreal,
        workers: a.workers,
    })
}

pub fn catalog_text(action: &CatalogAction) -> Result<String, RequestError> {
    match action {
        CatalogAction::List => Ok(catalog::ENTRIES
            .iter()
            .map(|e| format!("{:<18} {}\n", e.name, e.summary))
            .collect()),
        CatalogAction::Show { name } => {
            let entry = catalog::entry(name).ok_or_else(|| RequestError::Usage(format!("unknown surface '{name}'")))?;
            let spec = catalog::load(name, DEFAULT_SEED).expect("catalog entry loads");
            let mut out = format!("{}\n", spec.source_text);
            if let Some(note) = entry.note {
                out.push_str(&format!("# {note}\n"));
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(extra: &[&str]) -> RunArgs {
        let mut argv = vec!["crparallax", "analyze"];
        argv.extend_from_slice(extra);
        match Cli::try_parse_from(argv).unwrap().command {
            Cmd::Analyze(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults() {
        let p = plan(Command::Analyze, &args(&["--surface", "lightcone"])).unwrap();
        assert_eq!(p.order, 8);
        assert!(matches!(p.points, PointSource::Sampled { seed: 7, count: 20, .. }));
        let p = plan(Command::Analyze, &args(&["--surface", "lightcone", "--exact"])).unwrap();
        assert_eq!(p.order, 6);
    }

    #[test]
    fn catalog_center_applies() {
        let p = plan(Command::Analyze, &args(&["--surface", "cone-quartic"])).unwrap();
        let PointSource::Sampled { center, .. } = p.points else { panic!() };
        assert_eq!(center, PointSpec::parse("z1=1,z2=1").unwrap());
    }

    #[test]
    fn exact_rejects_decimals() {
        let e = plan(Command::Analyze, &args(&["--surface", "lightcone", "--exact", "--point", "z1=0.1"])).unwrap_err();
        assert_eq!(e.exit_code(), 5);
    }

    #[test]
    fn tolerance_overrides() {
        let p = plan(Command::Analyze, &args(&["--surface", "lightcone", "--tol-flat", "1e-3"])).unwrap();
        assert_eq!(p.tol.flat, 1e-3);
        assert_eq!(p.tol.pivot, Tolerances::default().pivot);
    }

    #[test]
    fn missing_surface_is_usage_error() {
        assert_eq!(plan(Command::Analyze, &args(&[])).unwrap_err().exit_code(), 3);
        assert!(plan(Command::Verify(Suite::ModelAlgebra.suites()), &args(&[])).is_ok());
    }

    #[test]
    fn swap_relabels_surface() {
        let p = plan(Command::Analyze, &args(&["--surface", "cylinderlike", "--swap-z"])).unwrap();
        assert!(p.surface.unwrap().source_text.contains("z2"));
    }

    #[test]
    fn catalog_listing() {
        let list = catalog_text(&CatalogAction::List).unwrap();
        assert_eq!(list.lines().count(), 6);
        let show = catalog_text(&CatalogAction::Show {
            name: "cone-quartic".to_owned(),
        })
        .unwrap();
        assert!(show.starts_with("re(z1)^4 / re(z2)^3"));
        assert!(show.contains("x2 != 0"));
    }
}
