//! Subcommands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use levydiff_core::analysis::find_alpha_star;
use levydiff_core::io::{ingest, read_snapshot};
use levydiff_core::DensitySnapshot;

use crate::config::{Config, RecipeName, Simulator};
use crate::output::{OutputDir, RunManifest};
use crate::plot::{render, Figure};
use crate::recipe::{self, analyze, emit_figure, Needs, PointData};
use crate::report::to_lines;
use crate::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "levydiff",
    version,
    about = "Anomalous diffusion simulations and exponent analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; must be absent or empty.
    #[arg(long, env = "LEVYDIFF_OUT")]
    pub out: PathBuf,
    /// Master seed; overrides `diffusion_cli.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the Lévy walk in `[ctrw_walker]`.
    SimulateCtrw(#[command(flatten)] Common),
    /// Simulate the lattice in `[sisyphus_lattice]`.
    SimulateLattice {
        #[command(flatten)]
        common: Common,
        /// Quantum trajectories on the `[mcwf_grid]` grid instead of the semiclassical model.
        #[arg(long)]
        mcwf: bool,
    },
    /// Widths, dynamical, self-similarity and shape exponents of a snapshot series.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Snapshot files or directories of `.dat` files; defaults to `[ingest].files`.
        inputs: Vec<PathBuf>,
    },
    /// The self-similarity measure over trial exponents and its minimum.
    Collapse {
        #[command(flatten)]
        common: Common,
        inputs: Vec<PathBuf>,
    },
    /// Validate, baseline-correct and normalize measured curves.
    Ingest {
        #[command(flatten)]
        common: Common,
        inputs: Vec<PathBuf>,
    },
    /// Render a figure data file written by `run-recipe`.
    Plot {
        #[command(flatten)]
        common: Common,
        /// Figure data (JSON).
        data: PathBuf,
    },
    /// Run a figure workflow end to end.
    RunRecipe {
        #[command(flatten)]
        common: Common,
        /// Overrides `recipe.name`.
        #[arg(long, value_parser = parse_recipe)]
        recipe: Option<RecipeName>,
    },
}

fn parse_recipe(s: &str) -> std::result::Result<RecipeName, String> {
    RecipeName::parse(s).ok_or_else(|| {
        let names: Vec<&str> = RecipeName::ALL.iter().map(|r| r.as_str()).collect();
        format!("unknown recipe {s:?}; expected one of {}", names.join(", "))
    })
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::SimulateCtrw(c) => c,
            Command::SimulateLattice { common, .. }
            | Command::Analyze { common, .. }
            | Command::Collapse { common, .. }
            | Command::Ingest { common, .. }
            | Command::Plot { common, .. }
            | Command::RunRecipe { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::SimulateCtrw(_) => "simulate-ctrw",
            Command::SimulateLattice { .. } => "simulate-lattice",
            Command::Analyze { .. } => "analyze",
            Command::Collapse { .. } => "collapse",
            Command::Ingest { .. } => "ingest",
            Command::Plot { .. } => "plot",
            Command::RunRecipe { .. } => "run-recipe",
        }
    }
}

fn load_config(c: &Common, required: bool) -> Result<Config> {
    match &c.config {
        Some(p) => Config::load(p),
        None if required => Err(CliError::Config(
            "--config is required for this command".into(),
        )),
        None => Ok(Config::default()),
    }
}

/// Expands directories to their `.dat` files in name order.
fn expand_inputs(inputs: &[PathBuf], cfg: &Config) -> Result<Vec<PathBuf>> {
    let listed: Vec<PathBuf> = if inputs.is_empty() {
        cfg.ingest
            .as_ref()
            .map(|i| i.files.clone())
            .unwrap_or_default()
    } else {
        inputs.to_vec()
    };
    let mut out = Vec::new();
    for p in listed {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(&p)
                .map_err(|e| CliError::io(&p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "dat"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no input snapshots given".into()));
    }
    Ok(out)
}

/// Snapshots scaled to unit integral and sorted by time. No baseline is
/// removed; run measured curves through `ingest` first.
fn read_series(paths: &[PathBuf]) -> Result<Vec<DensitySnapshot>> {
    let mut series = paths
        .iter()
        .map(|p| read_snapshot(p)?.normalized())
        .collect::<levydiff_core::Result<Vec<_>>>()?;
    series.sort_by(|a, b| a.time.total_cmp(&b.time));
    if let Some(w) = series.windows(2).find(|w| w[0].time == w[1].time) {
        return Err(levydiff_core::Error::Input(format!(
            "duplicate snapshot time {} ms",
            w[0].time
        ))
        .into());
    }
    Ok(series)
}

fn input_label(paths: &[PathBuf]) -> String {
    paths
        .first()
        .and_then(|p| p.parent())
        .and_then(Path::file_name)
        .map(|n| n.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "input".into())
}

/// Runs one command and returns the manifest of its output directory.
pub fn execute(cmd: &Command) -> Result<RunManifest> {
    let common = cmd.common();
    let needs_config = matches!(
        cmd,
        Command::SimulateCtrw(_) | Command::SimulateLattice { .. } | Command::RunRecipe { .. }
    );
    let cfg = load_config(common, needs_config)?;
    let seed = common.seed.or(cfg.diffusion_cli.seed).unwrap_or(0);
    let digest = cfg.digest();
    let mut out = OutputDir::create(&common.out)?;
    match cmd {
        Command::SimulateCtrw(_) => {
            let data = recipe::simulate(&single(&cfg, Simulator::Ctrw, seed)?, &digest)?;
            out.write_snapshots("snapshots", "ctrw", &data.series)?;
        }
        Command::SimulateLattice { mcwf, .. } => {
            let sim = if *mcwf {
                Simulator::Mcwf
            } else {
                Simulator::Semiclassical
            };
            let data = recipe::simulate(&single(&cfg, sim, seed)?, &digest)?;
            let stem = if *mcwf { "mcwf" } else { "semiclassical" };
            out.write_snapshots("snapshots", stem, &data.series)?;
            if let Some(d) = &data.diagnostics {
                out.write_json("diagnostics.json", d)?;
            }
        }
        Command::Analyze { inputs, .. } => {
            let paths = expand_inputs(inputs, &cfg)?;
            let series = read_series(&paths)?;
            let label = input_label(&paths);
            let a = analyze(&label, &series, &cfg.anomalous_analysis, Needs::ALL)?;
            out.write("reports.jsonl", to_lines(&a.records).as_bytes())?;
            if let Some(w) = &a.widths {
                let mut csv = String::from("time_ms,fwhm_um,uncertainty_um\n");
                for ((t, w), u) in w.times.iter().zip(&w.widths).zip(&w.uncertainties) {
                    csv.push_str(&format!("{t},{w},{u}\n"));
                }
                out.write("widths.csv", csv.as_bytes())?;
            }
        }
        Command::Collapse { inputs, .. } => {
            let paths = expand_inputs(inputs, &cfg)?;
            let series = read_series(&paths)?;
            let c = find_alpha_star(&series, &cfg.anomalous_analysis.collapse)?;
            let data = [PointData {
                label: input_label(&paths),
                depth: None,
                series,
                diagnostics: None,
            }];
            let fit = recipe::collapse_fit(&c, data[0].series.len());
            let digests: Vec<String> = data[0]
                .series
                .iter()
                .map(crate::report::snapshot_digest)
                .collect();
            let mut rec = crate::report::FitRecord::new(&data[0].label, &fit, &digests);
            if let Some(w) = &c.boundary_warning {
                rec = rec.with_note(w.clone());
            }
            out.write("reports.jsonl", to_lines(&[rec]).as_bytes())?;
            let analyses = [recipe::PointAnalysis {
                collapse: Some(c),
                ..Default::default()
            }];
            emit_figure(&mut out, RecipeName::Fig4Collapse, &data, &analyses)?;
        }
        Command::Ingest { inputs, .. } => {
            let paths = expand_inputs(inputs, &cfg)?;
            let series = ingest(&paths)?;
            out.write_snapshots("snapshots", "ingested", &series)?;
        }
        Command::Plot { data, .. } => {
            let text = std::fs::read_to_string(data).map_err(|e| CliError::io(data, e))?;
            let fig: Figure = serde_json::from_str(&text)
                .map_err(|e| levydiff_core::Error::Input(format!("{}: {e}", data.display())))?;
            let stem = data
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or("figure".into());
            out.write(&format!("{stem}.svg"), render(&fig)?.as_bytes())?;
        }
        Command::RunRecipe { recipe: name, .. } => {
            let r = cfg
                .recipe
                .as_ref()
                .ok_or_else(|| CliError::Config("missing [recipe] section".into()))?;
            let name = name.unwrap_or(r.name);
            recipe::run_recipe(&mut out, &cfg, name, r.simulator, &r.sweep, seed)?;
        }
    }
    let workers = rayon::current_num_threads();
    out.finish(cmd.name(), &digest, seed, workers)
}

fn single(cfg: &Config, sim: Simulator, seed: u64) -> Result<recipe::PointSpec> {
    Ok(recipe::points(cfg, sim, &[], seed)?.remove(0))
}

/// Parses arguments, runs the command on a pool of the requested size, and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.command.common().workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return 2;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(&cli.command)) {
        Ok(m) => {
            println!(
                "{}: {} artifacts in {} (data digest {})",
                m.command,
                m.artifacts.len(),
                cli.command.common().out.display(),
                m.data_digest
            );
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
