//! Command-line front end of the `geofence-opt` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Error;
use crate::estimators::{
    polygon_apothem, polygon_side, radius_focal, radius_lambda, radius_polygon, radius_sector, radius_window, LambdaSearch,
    PrivacyConstraint, RadiusEstimate,
};
use crate::geometry::{polygon_vertices, Geofence, Point, StudyWindow};
use crate::point_process::raster::{format_raster, read_raster};
use crate::point_process::{generate_grf_field, GrfConfig, Grid, IntensityField};
use crate::risk::{
    build_radii_map, sample_null_distribution, score_risk, write_scatter_csv_file, CentroidStatus, NullCounts, NullOptions,
    NullRadii, ScoreOptions,
};
use crate::simulator::{agent_rows, round_rows, run_rounds, summarize, write_csv_file, ConfigRanges};
use crate::verification::{all_passed, parse_suite, run_suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "geofence-opt", version, about = "Geofence perimeter estimation under a privacy constraint")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, env = "GEOFENCE_OPT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a perimeter radius with one of the plug-in estimators.
    Estimate(EstimateArgs),
    /// Run agent-based simulation rounds and write per-round CSV tables.
    Simulate(SimulateArgs),
    /// Score selective-expansion risk against a density raster.
    Risk(RiskArgs),
    /// Run the Monte-Carlo verification suite.
    Verify(VerifyArgs),
    /// Generate a synthetic intensity raster.
    FieldGen(FieldGenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Window,
    Focal,
    Sector,
    Polygon,
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    pub estimator: EstimatorArg,
    /// Privacy constraint: expected number of captured individuals.
    #[arg(long)]
    pub k: f64,
    /// Window area (window estimator).
    #[arg(long)]
    pub area: Option<f64>,
    /// Population inside the window (window estimator).
    #[arg(long)]
    pub n: Option<usize>,
    /// Intensity at the site (focal, sector, polygon).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Central angle in radians (sector).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Number of polygon sides (polygon).
    #[arg(long)]
    pub sides: Option<usize>,
    /// Rotation of the first polygon vertex, radians.
    #[arg(long)]
    pub rotation: Option<f64>,
    /// Intensity raster (lambda).
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Site `x,y` (required for lambda; polygon vertex centre, default 0,0).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub site: Option<(f64, f64)>,
    /// Accepted |Lambda - k| for the lambda search.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Full parameter table (1 to 1000 steps).
    Table,
    /// Table with at most 100 steps per round.
    Desk,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 300)]
    pub rounds: usize,
    #[arg(long, default_value_t = 30)]
    pub sites: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub preset: Preset,
    /// Also write one row per (round, site, perimeter, agent).
    #[arg(long)]
    pub agents_csv: bool,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Spacing of the centroid grid; defaults to the raster cell size.
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub null_samples: usize,
    /// Radius band `lo,hi`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub band: Option<(f64, f64)>,
    /// Proposed circle `x,y,r`.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    pub proposal: Option<(f64, f64, f64)>,
    /// Draw null radii uniformly from `lo,hi` instead of the optimal radii.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub null_radii: Option<(f64, f64)>,
    /// Use Poisson-sampled counts for the null instead of expected counts.
    #[arg(long)]
    pub sampled_counts: bool,
    /// Slack on `k_hat <= k`; defaults to the lambda acceptance band
    /// max(0.01 k, 0.05).
    #[arg(long)]
    pub threshold_tolerance: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory for report.json and scatter.csv (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// `all` or a single check name.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 20_000)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Optional JSON results file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldType {
    Uniform,
    Grf,
}

#[derive(Debug, Args)]
pub struct FieldGenArgs {
    #[arg(long = "type", value_enum)]
    pub field_type: FieldType,
    #[arg(long, default_value_t = 10.0)]
    pub width: f64,
    #[arg(long, default_value_t = 10.0)]
    pub height: f64,
    /// Cells along the longer edge.
    #[arg(long, default_value_t = 64)]
    pub cells: usize,
    /// Constant intensity (uniform).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub psill: Option<f64>,
    #[arg(long)]
    pub range: Option<f64>,
    #[arg(long)]
    pub nugget: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Matern smoothness: 0.5, 1.5 or 2.5.
    #[arg(long)]
    pub smoothness: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output raster file.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_numbers(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got '{s}'"));
    }
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect()
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let v = parse_numbers(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_triple(s: &str) -> Result<(f64, f64, f64), String> {
    let v = parse_numbers(s, 3)?;
    Ok((v[0], v[1], v[2]))
}

/// Failure of a subcommand, mapped to an exit code by [`CliError::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] Error),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::ChecksFailed(_) => EXIT_CHECK_FAILED,
            CliError::Domain(e) => match e {
                Error::Io { .. } | Error::Csv(_) | Error::Json(_) | Error::RasterParse { .. } => EXIT_IO,
                _ => EXIT_USAGE,
            },
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Domain(Error::io(path, e))
}

/// Six significant digits, trailing zeros trimmed.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Run a parsed command line, writing human output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        // Fails only if a pool already exists (e.g. repeated calls in one process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Estimate(a) => run_estimate(a, out),
        Command::Simulate(a) => run_simulate(a, out),
        Command::Risk(a) => run_risk(a, out),
        Command::Verify(a) => run_verify(a, out),
        Command::FieldGen(a) => run_field_gen(a, out),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> CliResult {
    out.write_all(text.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))
}

#[derive(Debug, Serialize)]
struct EstimateDocument {
    estimator: &'static str,
    k: f64,
    radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    apothem: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    side: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<Point>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<crate::estimators::SearchDiagnostics>,
}

fn run_estimate(a: EstimateArgs, out: &mut dyn Write) -> CliResult {
    use EstimatorArg::*;
    let allowed: &[&str] = match a.estimator {
        Window => &["area", "n"],
        Focal => &["lambda"],
        Sector => &["lambda", "theta"],
        Polygon => &["lambda", "sides", "rotation", "site"],
        Lambda => &["field", "site", "tolerance"],
    };
    let given = [
        ("area", a.area.is_some()),
        ("n", a.n.is_some()),
        ("lambda", a.lambda.is_some()),
        ("theta", a.theta.is_some()),
        ("sides", a.sides.is_some()),
        ("rotation", a.rotation.is_some()),
        ("field", a.field.is_some()),
        ("site", a.site.is_some()),
        ("tolerance", a.tolerance.is_some()),
    ];
    let name = a.estimator.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    for (flag, present) in given {
        if present && !allowed.contains(&flag) {
            return Err(usage(format!("--{flag} is not used by the {name} estimator")));
        }
    }
    let need = |flag: &str| usage(format!("the {name} estimator requires --{flag}"));
    let k = PrivacyConstraint::new(a.k)?;

    let doc = |est: RadiusEstimate| EstimateDocument {
        estimator: est.estimator.as_str(),
        k: a.k,
        radius: est.radius,
        apothem: None,
        side: None,
        vertices: None,
        diagnostics: est.diagnostics,
    };
    let document = match a.estimator {
        Window => doc(radius_window(a.area.ok_or_else(|| need("area"))?, a.n.ok_or_else(|| need("n"))?, k)?),
        Focal => doc(radius_focal(a.lambda.ok_or_else(|| need("lambda"))?, k)?),
        Sector => doc(radius_sector(a.lambda.ok_or_else(|| need("lambda"))?, k, a.theta.ok_or_else(|| need("theta"))?)?),
        Polygon => {
            let sides = a.sides.ok_or_else(|| need("sides"))?;
            let est = radius_polygon(a.lambda.ok_or_else(|| need("lambda"))?, k, sides)?;
            let r = est.radius;
            let (x, y) = a.site.unwrap_or((0.0, 0.0));
            let mut d = doc(est);
            d.apothem = Some(polygon_apothem(r, sides)?);
            d.side = Some(polygon_side(r, sides)?);
            if sides <= 64 {
                d.vertices = Some(polygon_vertices(Point::new(x, y), r, sides, a.rotation.unwrap_or(0.0))?);
            }
            d
        }
        Lambda => {
            let path = a.field.ok_or_else(|| need("field"))?;
            let (x, y) = a.site.ok_or_else(|| need("site"))?;
            let field = read_raster(&path)?;
            let search = LambdaSearch {
                tolerance: a.tolerance,
                ..LambdaSearch::default()
            };
            doc(radius_lambda(&field, Point::new(x, y), k, &search)?)
        }
    };

    let text = match a.format {
        OutputFormat::Json => serde_json::to_string_pretty(&document).map_err(Error::from)? + "\n",
        OutputFormat::Text => {
            let mut s = format!("estimator: {}\nk: {}\nradius: {}\n", document.estimator, sig6(document.k), sig6(document.radius));
            if let Some(v) = document.apothem {
                s += &format!("apothem: {}\n", sig6(v));
            }
            if let Some(v) = document.side {
                s += &format!("side: {}\n", sig6(v));
            }
            if let Some(vs) = &document.vertices {
                let list: Vec<String> = vs.iter().map(|p| format!("({}, {})", sig6(p.x), sig6(p.y))).collect();
                s += &format!("vertices: {}\n", list.join(" "));
            }
            if let Some(d) = &document.diagnostics {
                s += &format!(
                    "seed_radius: {}\nexpected_count: {}\nobjective: {}\niterations: {}\ntolerance: {}\nwithin_tolerance: {}\nused_grid_scan: {}\n",
                    sig6(d.seed_radius),
                    sig6(d.expected_count),
                    sig6(d.objective),
                    d.iterations,
                    sig6(d.tolerance),
                    d.within_tolerance,
                    d.used_grid_scan
                );
            }
            s
        }
    };
    write_out(out, &text)
}

/// Create `dir` and check that `files` inside it can be created.
fn prepare_out_dir(dir: &Path, files: &[&str]) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    files
        .iter()
        .map(|f| {
            let p = dir.join(f);
            fs::File::create(&p).map_err(|e| io_err(&p, e))?;
            Ok(p)
        })
        .collect()
}

fn run_simulate(a: SimulateArgs, out: &mut dyn Write) -> CliResult {
    if a.rounds == 0 || a.sites == 0 {
        return Err(usage("--rounds and --sites must be >= 1"));
    }
    let mut names = vec!["rounds.csv", "summary.csv"];
    if a.agents_csv {
        names.push("agents.csv");
    }
    let paths = prepare_out_dir(&a.out, &names)?;
    let ranges = match a.preset {
        Preset::Table => ConfigRanges::table(),
        Preset::Desk => ConfigRanges::desk(),
    }
    .with_sites(a.sites);

    let results = run_rounds(a.seed, a.rounds, &ranges, false)?;
    let rows = round_rows(&results);
    let summary = summarize(&rows);
    write_csv_file(&rows, &paths[0])?;
    write_csv_file(&summary, &paths[1])?;
    if a.agents_csv {
        write_csv_file(&agent_rows(&results), &paths[2])?;
    }

    let mut s = format!("rounds: {}  sites: {}  rows: {}\n", a.rounds, a.sites, rows.len());
    s += &format!("{:<14}{:>14}{:>22}\n", "perimeter", "mean_abs_dev", "mean_fraction_error");
    for p in &summary {
        s += &format!("{:<14}{:>14}{:>22}\n", p.perimeter_type.as_str(), sig6(p.mean_abs_dev), sig6(p.mean_fraction_error));
    }
    write_out(out, &s)
}

fn run_risk(a: RiskArgs, out: &mut dyn Write) -> CliResult {
    let k = PrivacyConstraint::new(a.k)?;
    if a.null_samples == 0 {
        return Err(usage("--null-samples must be >= 1"));
    }
    let field = read_raster(&a.field)?;
    let paths = prepare_out_dir(&a.out, &["report.json", "scatter.csv"])?;
    let grid_step = a.grid_step.unwrap_or(field.cell_size());

    let map = build_radii_map(&field, grid_step, k)?;
    let options = NullOptions {
        radii: match a.null_radii {
            Some((lo, hi)) => NullRadii::Uniform { lo, hi },
            None => NullRadii::OptimalRadii,
        },
        counts: if a.sampled_counts { NullCounts::Sampled } else { NullCounts::Expected },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let nd = sample_null_distribution(&field, &map, a.null_samples, options, &mut rng)?;
    let proposal = match a.proposal {
        Some((x, y, r)) => Some(Geofence::circle(Point::new(x, y), r)?),
        None => None,
    };
    let score = ScoreOptions {
        band: a.band,
        threshold_tolerance: a.threshold_tolerance.unwrap_or_else(|| k.default_tolerance()),
    };
    let report = score_risk(&nd, k, score, proposal.as_ref(), &field)?;

    #[derive(Serialize)]
    struct MapSummary {
        grid_step: f64,
        centroids: usize,
        resolved: usize,
        zero_density: usize,
        unreachable: usize,
        search_tolerance: f64,
    }
    #[derive(Serialize)]
    struct Document<'a> {
        seed: u64,
        null_options: NullOptions,
        radii_map: MapSummary,
        #[serde(flatten)]
        report: &'a crate::risk::RiskReport,
    }
    let doc = Document {
        seed: a.seed,
        null_options: options,
        radii_map: MapSummary {
            grid_step,
            centroids: map.entries.len(),
            resolved: map.count(CentroidStatus::Resolved),
            zero_density: map.count(CentroidStatus::ZeroDensity),
            unreachable: map.count(CentroidStatus::Unreachable),
            search_tolerance: map.tolerance,
        },
        report: &report,
    };
    let json = serde_json::to_string_pretty(&doc).map_err(Error::from)? + "\n";
    fs::write(&paths[0], json).map_err(|e| io_err(&paths[0], e))?;
    write_scatter_csv_file(&nd, &paths[1])?;

    let mut s = format!(
        "k: {}\nnull samples: {}\ncapture_probability: {}\n",
        sig6(report.k),
        report.n_samples,
        sig6(report.capture_probability)
    );
    if let Some(b) = &report.band {
        let p = b.probability.map_or_else(|| "null (no samples in band)".to_string(), sig6);
        s += &format!("band [{}, {}]: {} samples, probability {}\n", sig6(b.lo), sig6(b.hi), b.samples, p);
    }
    if let Some(p) = &report.proposal {
        s += &format!(
            "proposal ({}, {}) r={}: k_hat {}, percentile {}\n",
            sig6(p.center.x),
            sig6(p.center.y),
            sig6(p.radius),
            sig6(p.k_hat),
            sig6(p.percentile)
        );
    }
    write_out(out, &s)
}

fn run_verify(a: VerifyArgs, out: &mut dyn Write) -> CliResult {
    parse_suite(&a.suite).map_err(|e| usage(e.to_string()))?;
    if a.reps == 0 {
        return Err(usage("--reps must be >= 1"));
    }
    if let Some(p) = &a.out {
        fs::File::create(p).map_err(|e| io_err(p, e))?;
    }
    let results = run_suite(&a.suite, a.reps, a.seed)?;
    let mut s = String::new();
    for r in &results {
        s += &format!("{r}\n");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    s += &format!("{} of {} checks passed\n", results.len() - failed, results.len());
    if let Some(p) = &a.out {
        let json = serde_json::to_string_pretty(&results).map_err(Error::from)? + "\n";
        fs::write(p, json).map_err(|e| io_err(p, e))?;
    }
    write_out(out, &s)?;
    if all_passed(&results) {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failed))
    }
}

fn run_field_gen(a: FieldGenArgs, out: &mut dyn Write) -> CliResult {
    let window = StudyWindow::from_extent(a.width, a.height)?;
    let grid = Grid::covering(&window, a.cells)?;
    let field = match a.field_type {
        FieldType::Uniform => {
            for (flag, given) in [
                ("psill", a.psill.is_some()),
                ("range", a.range.is_some()),
                ("nugget", a.nugget.is_some()),
                ("beta", a.beta.is_some()),
                ("smoothness", a.smoothness.is_some()),
            ] {
                if given {
                    return Err(usage(format!("--{flag} is only used with --type grf")));
                }
            }
            let lambda = a.lambda.unwrap_or(1.0);
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(usage(format!("--lambda {lambda} must be finite and >= 0")));
            }
            IntensityField::constant(window, grid, lambda)?
        }
        FieldType::Grf => {
            if a.lambda.is_some() {
                return Err(usage("--lambda is only used with --type uniform"));
            }
            let cfg = GrfConfig {
                psill: a.psill.unwrap_or(1.0),
                range: a.range.unwrap_or(0.2 * window.hypotenuse()),
                nugget: a.nugget.unwrap_or(0.0),
                beta: a.beta.unwrap_or(0.0),
                smoothness: a.smoothness.unwrap_or(GrfConfig::DEFAULT_SMOOTHNESS),
            };
            cfg.validate()?;
            fs::File::create(&a.out).map_err(|e| io_err(&a.out, e))?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            generate_grf_field(window, grid, &cfg, &mut rng)?
        }
    };
    fs::write(&a.out, format_raster(&field)).map_err(|e| io_err(&a.out, e))?;
    write_out(
        out,
        &format!(
            "wrote {} ({}x{} cells of {}, max {})\n",
            a.out.display(),
            field.n_cols(),
            field.n_rows(),
            sig6(field.cell_size()),
            sig6(field.max_value())
        ),
    )
}
