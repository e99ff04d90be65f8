//! Command-line front end: argument parsing, report assembly, output routing.
//!
//! Exit codes: 0 on success, 2 when a verification pass fails or a numerical
//! guard trips, 3 for bad input (flags, configuration files, chart points).
//! Reports go to stdout unless `--out` names a file or [`OUT_DIR_ENV`] names
//! a directory for default file names.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{self, GAMMA_CURVATURE_SIGN};
use crate::oracle::{self, VERIFY_T_GRID};
use crate::report::{self, ExperimentConfig};
use crate::topology;

/// Environment variable naming the directory for default output files.
/// Only consulted when `--out` is absent.
pub const OUT_DIR_ENV: &str = "ANCOLAB_OUT_DIR";

#[derive(Parser)]
#[command(name = "ancolab", version, about = "Curvature-operator laboratory for collapsing principal-bundle metrics", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the truncated curvature operator over a shrinking grid and
    /// report the scaled eigenvalue floor at every step.
    Analyze(AnalyzeArgs),
    /// Check the block engine against the finite-difference oracle and the
    /// curvature symmetry identities.
    Verify(VerifyArgs),
    /// Integer cohomology, fundamental group, and duality diagnostics of a
    /// circle bundle over a product of complex projective spaces.
    Topology(TopologyArgs),
    /// Tabulate torsion invariants across a range of Euler weights.
    TopologySweep(TopologySweepArgs),
    /// Run a short guided tour over the built-in presets.
    Demo,
}

/// Where an experiment comes from: a configuration file or a preset name.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// JSON experiment configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Built-in preset: flat, su2-demo, hopf, or pkl:<k>:<l>.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: Source,

    /// Override the configured shrinking grid
    /// (default, geom:<start>:<ratio>:<count>, or list:a,b,..).
    #[arg(long, value_name = "SPEC")]
    t_grid: Option<String>,

    /// Override the configured number of base sample points.
    #[arg(long, value_name = "N")]
    samples: Option<usize>,

    /// Override the configured sampling seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Report layout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Output file (defaults to stdout, or a default name under the
    /// directory in ANCOLAB_OUT_DIR).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,

    /// Number of base sample points to verify at.
    #[arg(long, value_name = "N", default_value_t = 2)]
    points: usize,

    /// Sampling seed.
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,

    /// Shrinking grid for the block fits; needs at least four values
    /// (defaults to the built-in verification grid).
    #[arg(long, value_name = "SPEC")]
    t_grid: Option<String>,

    /// Flip the trivialization sign fed to the engine predictions.  The
    /// comparison must then fail; this exercises the failure exit path.
    #[arg(long)]
    inject_sign_error: bool,

    /// Output file for the verification report.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TopologyArgs {
    /// JSON experiment configuration file describing a circle bundle.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["preset", "base", "euler"])]
    config: Option<PathBuf>,

    /// Built-in preset describing a circle bundle (hopf or pkl:<k>:<l>).
    #[arg(long, value_name = "NAME", conflicts_with_all = ["base", "euler"])]
    preset: Option<String>,

    /// Projective factors of the base, comma separated (e.g. cp:1,cp:2).
    #[arg(long, value_name = "LIST", requires = "euler")]
    base: Option<String>,

    /// Integer Euler weights of the circle bundle, one per factor.
    #[arg(long, value_name = "LIST", requires = "base", allow_hyphen_values = true)]
    euler: Option<String>,

    /// Output file for the topology report.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TopologySweepArgs {
    /// Euler weight on the first factor, held fixed.
    #[arg(long, value_name = "K", default_value_t = 1, allow_hyphen_values = true)]
    k: i64,

    /// Inclusive range of Euler weights on the second factor.
    #[arg(long, value_name = "A..B", default_value = "1..50", allow_hyphen_values = true)]
    l_range: String,

    /// Report layout.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output file.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Parses `args` and runs the selected subcommand, translating every error
/// into its process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let _ = e.print();
            return 3;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Analyze(args) => run_analyze(args),
        Command::Verify(args) => run_verify(args),
        Command::Topology(args) => run_topology(args),
        Command::TopologySweep(args) => run_topology_sweep(args),
        Command::Demo => run_demo(),
    }
}

fn load_config(config: Option<&Path>, preset: Option<&str>) -> Result<ExperimentConfig> {
    match (config, preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Input(format!("bad configuration {}: {e}", path.display())))
        }
        (None, Some(name)) => ExperimentConfig::for_preset(name),
        _ => Err(Error::Input(
            "give exactly one of --config or --preset".into(),
        )),
    }
}

/// Writes to stdout, treating a closed pipe as success so that piping a
/// report through `head` or a pager that exits early never aborts the run.
fn write_stdout(contents: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    match out.write_all(contents.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(Error::Input(format!("cannot write stdout: {e}"))),
    }
}

/// Resolves the output destination and writes `contents` there: `--out` wins,
/// then `OUT_DIR_ENV` joined with `default_name`, then stdout.
fn emit(out: Option<&Path>, default_name: &str, contents: &str) -> Result<()> {
    let path = match out {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(OUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(default_name)),
    };
    match path {
        Some(p) => {
            fs::write(&p, contents)
                .map_err(|e| Error::Input(format!("cannot write {}: {e}", p.display())))?;
            eprintln!("wrote {}", p.display());
        }
        None => write_stdout(contents)?,
    }
    Ok(())
}

fn run_analyze(args: AnalyzeArgs) -> Result<()> {
    let mut config = load_config(args.source.config.as_deref(), args.source.preset.as_deref())?;
    if let Some(grid) = args.t_grid {
        config.t_grid = grid;
    }
    if let Some(samples) = args.samples {
        config.samples = samples;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let run = report::build_run(&config)?;
    let (contents, default_name) = match args.format {
        Format::Json => (report::to_json(&run)?, "analyze.json"),
        Format::Csv => (report::sweep_csv(&run.sweep.rows), "analyze.csv"),
    };
    emit(args.out.as_deref(), default_name, &contents)
}

fn run_verify(args: VerifyArgs) -> Result<()> {
    let config = load_config(args.source.config.as_deref(), args.source.preset.as_deref())?;
    let grid = match args.t_grid {
        Some(spec) => report::parse_t_grid(&spec)?,
        None => VERIFY_T_GRID.to_vec(),
    };
    let sign = if args.inject_sign_error {
        -GAMMA_CURVATURE_SIGN
    } else {
        GAMMA_CURVATURE_SIGN
    };
    let verification = report::build_verification(&config, args.points, args.seed, &grid, sign)?;
    emit(
        args.out.as_deref(),
        "verify.json",
        &report::to_json(&verification)?,
    )?;
    if !verification.pass {
        return Err(Error::Verification(format!(
            "{}: oracle and engine disagree",
            verification.label
        )));
    }
    Ok(())
}

fn parse_int_list<T: std::str::FromStr>(list: &str, what: &str) -> Result<Vec<T>> {
    list.split(',')
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| Error::Input(format!("bad {what} entry '{v}' in '{list}'")))
        })
        .collect()
}

/// Parses a comma-separated projective factor list like `cp:1,cp:2` into
/// complex dimensions.
fn parse_factor_list(list: &str) -> Result<Vec<usize>> {
    list.split(',')
        .map(|entry| {
            let entry = entry.trim();
            entry
                .strip_prefix("cp:")
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| {
                    Error::Input(format!(
                        "bad factor '{entry}' in '{list}'; expected cp:<n>"
                    ))
                })
        })
        .collect()
}

/// Parses an inclusive integer range `a..b`.
fn parse_range(spec: &str) -> Result<(i64, i64)> {
    let Some((a, b)) = spec.split_once("..") else {
        return Err(Error::Input(format!(
            "bad range '{spec}'; expected <a>..<b>"
        )));
    };
    let lo: i64 = a
        .trim()
        .parse()
        .map_err(|_| Error::Input(format!("bad range start '{a}' in '{spec}'")))?;
    let hi: i64 = b
        .trim()
        .parse()
        .map_err(|_| Error::Input(format!("bad range end '{b}' in '{spec}'")))?;
    if lo > hi {
        return Err(Error::Input(format!("empty range '{spec}'")));
    }
    Ok((lo, hi))
}

fn run_topology(args: TopologyArgs) -> Result<()> {
    let topo = match (&args.base, &args.euler) {
        (Some(base), Some(euler)) => report::build_topology_for(
            &parse_factor_list(base)?,
            &parse_int_list::<i64>(euler, "Euler weight")?,
        )?,
        (None, None) => {
            if args.config.is_none() && args.preset.is_none() {
                return Err(Error::Input(
                    "give --config, --preset, or --base with --euler".into(),
                ));
            }
            let config = load_config(args.config.as_deref(), args.preset.as_deref())?;
            report::build_topology(&config)?
        }
        _ => unreachable!("clap enforces that --base and --euler come together"),
    };
    emit(args.out.as_deref(), "topology.json", &report::to_json(&topo)?)?;
    if !topo.pass() {
        return Err(Error::Verification(
            "cohomology failed its duality or Betti-bound diagnostics".into(),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct TorsionSweepReport {
    k: i64,
    l_range: String,
    rows: Vec<topology::TorsionClassRow>,
}

fn run_topology_sweep(args: TopologySweepArgs) -> Result<()> {
    let (lo, hi) = parse_range(&args.l_range)?;
    let count = hi - lo + 1;
    if count > 10_000 {
        return Err(Error::Input(format!("weight range too large ({count})")));
    }
    let ls: Vec<i64> = (lo..=hi).collect();
    let rows = topology::torsion_class_sweep(args.k, &ls)?;
    let (contents, default_name) = match args.format {
        Format::Csv => (report::topology_csv(&rows), "topology-sweep.csv"),
        Format::Json => (
            report::to_json(&TorsionSweepReport {
                k: args.k,
                l_range: args.l_range,
                rows,
            })?,
            "topology-sweep.json",
        ),
    };
    emit(args.out.as_deref(), default_name, &contents)
}

fn run_demo() -> Result<()> {
    let mut text = String::new();
    text.push_str("collapsing sweeps (8 shrinking steps, 3 sample points each):\n");
    for preset in ["flat", "hopf", "pkl:1:2", "su2-demo"] {
        let mut config = ExperimentConfig::for_preset(preset)?;
        config.t_grid = "geom:1.0:0.5:8".into();
        config.samples = 3;
        let conn = config.connection()?;
        let points = conn.sample_points(config.samples, config.seed)?;
        let ts = config.t_values()?;
        let sweep = operator::t_sweep(&conn, &points, &ts, config.criterion_tol)?;
        let last = sweep
            .rows
            .last()
            .ok_or_else(|| Error::Numeric("empty sweep".into()))?;
        let _ = writeln!(
            text,
            "  {preset:<9} perpendicularity criterion {}; at t = {:.6} the eigenvalue floor times diameter^2 is {:+.6}",
            if sweep.criterion.holds {
                "holds"
            } else {
                "fails"
            },
            last.t,
            last.anco_quantity,
        );
    }
    let config = ExperimentConfig::for_preset("hopf")?;
    let conn = config.connection()?;
    let point = [0.2, -0.3, 0.0];
    let comparison = oracle::compare_blocks(&conn, &point, &VERIFY_T_GRID)?;
    let _ = writeln!(
        text,
        "oracle block comparison on hopf at {:?}: {}",
        &point[..2],
        if comparison.pass { "pass" } else { "FAIL" }
    );
    let cohomology = topology::circle_bundle_cohomology(&[1, 2], &[1, 2])?;
    text.push_str("circle bundle over CP^1 x CP^2 with weights (1, 2):\n");
    for (degree, group) in cohomology.groups.iter().enumerate() {
        let _ = writeln!(text, "  H^{degree} = {group}");
    }
    write_stdout(&text)
}
