//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage or validation errors, 2 for
//! failures while running.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::clt::constraints::{constraint_grid, write_grid_csv};
use crate::clt::report::EstimateMode;
use crate::diagnostics::qq_data;
use crate::error::{Error, Result};
use crate::experiments::output::write_outputs;
use crate::experiments::spec::{apply_overrides, AnalysisKind, ExperimentSpec};
use crate::experiments::{analyze_nonoscillatory, analyze_oscillatory, analyze_swarm, run_experiment, RunOptions};
use crate::objectives::Registry;
use crate::regime::classification_report;
use crate::swarm::{run_with_id, PsoParams};
use crate::trajectory::Trajectory;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "swarmclt", version, about = "Particle swarm runs with central-limit confidence regions")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Plugin,
    Known,
}

impl From<ModeArg> for EstimateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Plugin => EstimateMode::Plugin,
            ModeArg::Known => EstimateMode::Known,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum TrajFormat {
    Binary,
    Csv,
    Both,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment spec (JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Registered objective name; overrides the spec.
    #[arg(long)]
    pub objective: Option<String>,
    /// Base seed; overrides the spec.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "SWARMCLT_OUT")]
    pub out: Option<PathBuf>,
    /// Extra `dotted.key=value` overrides applied to the spec JSON.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one swarm and store its trajectory.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value = "binary")]
        format: TrajFormat,
    },
    /// Run a Monte Carlo experiment spec.
    Mc {
        #[command(flatten)]
        common: CommonArgs,
        /// Thread cap for replications.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Also write SVG probability plots.
        #[arg(long)]
        svg: bool,
    },
    /// Classify and analyse a stored trajectory.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Binary trajectory written by `run`.
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Export the admissible-parameter grid as CSV.
    Regions {
        /// Points per axis.
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Output file or directory; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normal probability plot data from a statistics CSV.
    Qqplot {
        /// CSV with a `value` column (as in h_stats.csv) or numbers in the first column.
        #[arg(long)]
        input: PathBuf,
        /// Keep only rows whose `statistic` column equals this.
        #[arg(long)]
        statistic: Option<String>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG next to the CSV.
        #[arg(long)]
        svg: bool,
    },
}

/// Parses and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
        }
    };
    init_logging(cli.verbose);
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
}

pub fn execute(cli: Cli) -> Result<()> {
    let registry = Registry::with_builtins();
    match cli.command {
        Command::Run { common, format } => cmd_run(&registry, &common, format),
        Command::Mc {
            common,
            threads,
            alpha,
            mode,
            svg,
        } => cmd_mc(&registry, &common, threads, alpha, mode, svg),
        Command::Analyze {
            common,
            trajectory,
            alpha,
            mode,
        } => cmd_analyze(&registry, &common, &trajectory, alpha, mode),
        Command::Regions { grid, out } => cmd_regions(grid, out.as_deref()),
        Command::Qqplot {
            input,
            statistic,
            out,
            svg,
        } => cmd_qqplot(&input, statistic.as_deref(), out.as_deref(), svg),
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Flag overrides expressed as spec assignments, so they are recorded in
/// provenance alongside `--set` items.
fn flag_overrides(common: &CommonArgs, alpha: Option<f64>, mode: Option<ModeArg>) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(o) = &common.objective {
        out.push(format!("objective={}", Value::String(o.clone())));
    }
    if let Some(s) = common.seed {
        out.push(format!("base.seed={s}"));
    }
    if let Some(a) = alpha {
        out.push(format!("analysis.alpha={a}"));
    }
    if let Some(m) = mode {
        let m: EstimateMode = m.into();
        out.push(format!("analysis.mode={}", serde_json::to_string(&m).expect("mode serializes")));
    }
    out.extend(common.overrides.iter().cloned());
    out
}

fn load_spec(common: &CommonArgs, overrides: &[String]) -> Result<ExperimentSpec> {
    let path = common
        .spec
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("--spec is required".into()))?;
    ExperimentSpec::load(path, overrides)
}

fn out_dir(common: &CommonArgs, fallback: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(fallback))
}

/// Swarm parameters for `run`: the spec's `base` when the file is an
/// experiment spec, the file itself when it holds bare parameters, or the
/// classical calibration on the objective's default domain.
fn run_params(registry: &Registry, common: &CommonArgs) -> Result<(String, PsoParams, Vec<String>)> {
    let overrides = flag_overrides(common, None, None);
    let mut doc = match &common.spec {
        Some(path) => read_json(path)?,
        None => {
            let name = common.objective.clone().unwrap_or_else(|| "himmelblau".to_string());
            let obj = registry.lookup(&name)?;
            let params = PsoParams::classical(obj.dim(), obj.default_domain().clone(), 200, 2000, 0);
            json!({"name": "run", "objective": name, "base": params})
        }
    };
    let is_experiment = doc.get("base").is_some();
    if !is_experiment {
        doc = json!({"objective": common.objective.clone().unwrap_or_else(|| "himmelblau".into()), "base": doc});
    }
    apply_overrides(&mut doc, &overrides)?;
    let objective: String = serde_json::from_value(doc["objective"].clone())
        .map_err(|_| Error::InvalidParams("spec needs an `objective` name".into()))?;
    let params: PsoParams = serde_json::from_value(doc["base"].clone())?;
    params.validate()?;
    Ok((objective, params, overrides))
}

fn cmd_run(registry: &Registry, common: &CommonArgs, format: TrajFormat) -> Result<()> {
    let (objective, params, overrides) = run_params(registry, common)?;
    let obj = registry.lookup(&objective)?;
    let traj = run_with_id(&params, obj, 0)?;
    let dir = out_dir(common, ".");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    if format != TrajFormat::Csv {
        traj.save_binary(&dir.join("trajectory.bin"))?;
    }
    if format != TrajFormat::Binary {
        traj.save_csv(&dir.join("trajectory.csv"))?;
    }
    let digest = traj.digest();
    let meta = json!({
        "objective": objective,
        "params": params,
        "digest": digest,
        "exits": traj.exits(),
        "overrides": overrides,
        "code_version": env!("CARGO_PKG_VERSION"),
    });
    let path = dir.join("run.json");
    std::fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| Error::io(&path, e))?;
    println!("{digest}");
    Ok(())
}

fn cmd_mc(
    registry: &Registry,
    common: &CommonArgs,
    threads: Option<usize>,
    alpha: Option<f64>,
    mode: Option<ModeArg>,
    svg: bool,
) -> Result<()> {
    let overrides = flag_overrides(common, alpha, mode);
    let spec = load_spec(common, &overrides)?;
    let dir = common
        .out
        .clone()
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&spec.name));
    let result = run_experiment(&spec, registry, RunOptions { threads }, &overrides)?;
    let written = write_outputs(&result, &dir, svg || spec.analysis.write_svg)?;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&result.pooled)?);
    for q in &result.qq {
        let _ = writeln!(stdout, "qq_corr[{}] = {:.5} (n = {})", q.name, q.qq_corr, q.n);
    }
    for w in &result.warnings {
        log::warn!("{w}");
    }
    log::info!("wrote {} files to {}", written.len(), dir.display());
    Ok(())
}

fn cmd_analyze(
    registry: &Registry,
    common: &CommonArgs,
    trajectory: &Path,
    alpha: Option<f64>,
    mode: Option<ModeArg>,
) -> Result<()> {
    let overrides = flag_overrides(common, alpha, mode);
    let spec = load_spec(common, &overrides)?;
    let obj = registry.lookup(&spec.objective)?;
    let traj = Trajectory::load_binary(trajectory)?;
    if traj.dim() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: traj.dim(),
        });
    }
    let a = &spec.analysis;
    let (labels, analysis) = match a.kind {
        AnalysisKind::Oscillatory => {
            let (labels, cohort) = analyze_oscillatory(&traj, obj, a, spec.base.omega, spec.base.c)?;
            (Some(labels), serde_json::to_value(cohort)?)
        }
        AnalysisKind::NonOscillatory => {
            let (labels, cohort, belated, without) = analyze_nonoscillatory(&traj, obj, a)?;
            let value = json!({"cohort": cohort, "belated_excluded": belated, "without_window": without});
            (Some(labels), value)
        }
        AnalysisKind::SwarmFixedStep => (None, serde_json::to_value(analyze_swarm(&traj, obj, a)?)?),
    };
    let dir = out_dir(common, ".");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    if let Some(labels) = &labels {
        let path = dir.join("classification.json");
        let text = serde_json::to_string_pretty(&classification_report(labels))? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join("analysis.json");
    let doc = json!({
        "trajectory_digest": traj.digest(),
        "spec_digest": spec.digest(),
        "overrides": overrides,
        "analysis": analysis,
    });
    std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn cmd_regions(grid: usize, out: Option<&Path>) -> Result<()> {
    if grid < 2 {
        return Err(Error::InvalidParams("--grid must be at least 2".into()));
    }
    let points = constraint_grid(grid);
    match out {
        None => write_grid_csv(&points, std::io::stdout().lock()).map_err(|e| Error::io("<stdout>", e)),
        Some(path) => {
            let file = if path.extension().is_some_and(|e| e == "csv") {
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                }
                path.to_path_buf()
            } else {
                std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
                path.join("constraints.csv")
            };
            let w = std::fs::File::create(&file).map_err(|e| Error::io(&file, e))?;
            let mut w = std::io::BufWriter::new(w);
            write_grid_csv(&points, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(&file, e))
        }
    }
}

/// Reads the sample for `qqplot`: the `value` column when the header has
/// one (optionally filtered on `statistic`), else the first column.
pub fn read_stat_column(text: &str, statistic: Option<&str>) -> Result<Vec<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let Some(first) = lines.next() else {
        return Ok(Vec::new());
    };
    let header: Vec<&str> = first.split(',').map(str::trim).collect();
    let has_header = header.iter().any(|h| h.parse::<f64>().is_err());
    let value_col = if has_header {
        header.iter().position(|h| *h == "value").unwrap_or(0)
    } else {
        0
    };
    let stat_col = header.iter().position(|h| *h == "statistic");
    if statistic.is_some() && stat_col.is_none() {
        return Err(Error::InvalidParams("input has no `statistic` column to filter on".into()));
    }
    let rows: Box<dyn Iterator<Item = &str>> = if has_header {
        Box::new(lines)
    } else {
        Box::new(std::iter::once(first).chain(lines))
    };
    let mut out = Vec::new();
    for (i, row) in rows.enumerate() {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        if let (Some(want), Some(col)) = (statistic, stat_col) {
            if cells.get(col) != Some(&want) {
                continue;
            }
        }
        let cell = cells
            .get(value_col)
            .ok_or_else(|| Error::InvalidParams(format!("row {} has no column {value_col}", i + 1)))?;
        let v: f64 = cell
            .parse()
            .map_err(|_| Error::InvalidParams(format!("row {}: `{cell}` is not a number", i + 1)))?;
        out.push(v);
    }
    Ok(out)
}

fn cmd_qqplot(input: &Path, statistic: Option<&str>, out: Option<&Path>, svg: bool) -> Result<()> {
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let sample = read_stat_column(&text, statistic)?;
    let qq = qq_data(&sample)?;
    match out {
        None => qq
            .write_csv(std::io::stdout().lock())
            .map_err(|e| Error::io("<stdout>", e))?,
        Some(path) => {
            let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
            qq.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))?;
            if svg {
                let svg_path = path.with_extension("svg");
                let title = statistic.unwrap_or("sample");
                std::fs::write(&svg_path, qq.to_svg(title)).map_err(|e| Error::io(&svg_path, e))?;
            }
        }
    }
    eprintln!("qq_corr = {:.6} (n = {})", qq.qq_corr, sample.len());
    Ok(())
}
