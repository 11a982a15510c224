//! `scb`: simultaneous confidence bands and Monte-Carlo experiments.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use scb_core::band::{scb_one_sample, scb_scale_space, scb_two_sample, QuantileMethod, ScBand};
use scb_core::grid::{linspace, Grid1D};
use scb_core::io::{read_sample, write_csv, write_json, write_sample};
use scb_core::rng::substream;
use scb_core::scale_space::{GaussianKernel, ScaleGrid};
use scb_core::sim::{
    add_observation_noise, run_coverage, run_width, CoefficientLaw, Design, ExperimentConfig,
    Model, ModelKind, ModelSpec,
};
use scb_core::ScbError;

#[derive(Parser)]
#[command(name = "scb", version, about = "Simultaneous confidence bands for functional data")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw curves from a benchmark model and write them as CSV.
    Generate(GenerateArgs),
    /// Band for the mean of one sample, or the difference of two means.
    Scb(ScbArgs),
    /// Band for the scale-space mean of raw 1-D curves.
    ScaleScb(ScaleArgs),
    /// Coverage study from a JSON experiment config.
    Coverage(ExperimentArgs),
    /// Average band quantiles plus a Monte-Carlo "true" row.
    Width(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// JSON model spec; overrides --model, --law, --resolution and --design.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "A")]
    model: String,
    /// gaussian, t3 or chisq:<dof>.
    #[arg(long, default_value = "gaussian")]
    law: String,
    #[arg(long)]
    resolution: Option<usize>,
    /// equidistant or midpoint.
    #[arg(long, default_value = "equidistant")]
    design: String,
    #[arg(short, long, default_value_t = 50)]
    n: usize,
    /// Sd of i.i.d. Gaussian observation noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MethodArgs {
    /// tGKF, Boots-t, Boots, gMult-t, gMult, rMult-t, rMult or GaussSim.
    #[arg(long, default_value = "tGKF")]
    method: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap replicates or Gaussian-simulation draws.
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Band JSON destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl MethodArgs {
    fn method(&self) -> anyhow::Result<QuantileMethod> {
        let m: QuantileMethod = self.method.parse()?;
        Ok(match self.replicates {
            Some(b) => m.with_replicates(b),
            None => m,
        })
    }
}

#[derive(Args)]
struct ScbArgs {
    #[arg(long)]
    input: PathBuf,
    /// Second sample; the band is then for mean(input) - mean(input-x).
    #[arg(long)]
    input_x: Option<PathBuf>,
    #[command(flatten)]
    method: MethodArgs,
}

#[derive(Args)]
struct ScaleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    h_min: f64,
    #[arg(long, default_value_t = 0.1)]
    h_max: f64,
    #[arg(long, default_value_t = 20)]
    n_h: usize,
    /// Output locations, equidistant over the input range.
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Use the raw 1/P kernel weights instead of weights summing to one.
    #[arg(long)]
    raw_weights: bool,
    #[command(flatten)]
    method: MethodArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; JSON goes to `<stem>.json`, one CSV row per cell to
    /// `<stem>.csv`. Falls back to the config's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ErrorReport {
    error: ErrorBody,
}

#[derive(Serialize)]
struct ErrorBody {
    kind: String,
    message: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .downcast_ref::<ScbError>()
                .map(|s| s.kind().to_string())
                .unwrap_or_else(|| "cli".into());
            let report = ErrorReport { error: ErrorBody { kind, message: format!("{e:#}") } };
            eprintln!("{}", serde_json::to_string(&report).unwrap_or_default());
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Scb(a) => scb(a),
        Command::ScaleScb(a) => scale_scb(a),
        Command::Coverage(a) => experiment(a, true),
        Command::Width(a) => experiment(a, false),
    }
}

fn parse_model(s: &str) -> anyhow::Result<ModelKind> {
    Ok(match s.to_ascii_uppercase().as_str() {
        "A" => ModelKind::A,
        "B" => ModelKind::B,
        "C" => ModelKind::C,
        _ => bail!("unknown model {s:?}, expected A, B or C"),
    })
}

fn parse_law(s: &str) -> anyhow::Result<CoefficientLaw> {
    let lower = s.to_ascii_lowercase();
    Ok(match lower.as_str() {
        "gaussian" | "normal" => CoefficientLaw::Gaussian,
        "t3" => CoefficientLaw::ScaledT3,
        _ => match lower.strip_prefix("chisq:") {
            Some(dof) => CoefficientLaw::CenteredChiSq {
                dof: dof.parse().with_context(|| format!("bad chi-square dof {dof:?}"))?,
            },
            None => bail!("unknown law {s:?}, expected gaussian, t3 or chisq:<dof>"),
        },
    })
}

fn generate(a: GenerateArgs) -> anyhow::Result<()> {
    let spec = match &a.config {
        Some(p) => serde_json::from_str::<ModelSpec>(&read(p)?)?,
        None => {
            let design = match a.design.as_str() {
                "equidistant" => Design::Equidistant,
                "midpoint" => Design::Midpoint,
                d => bail!("unknown design {d:?}"),
            };
            ModelSpec {
                model: parse_model(&a.model)?,
                law: parse_law(&a.law)?,
                resolution: a.resolution,
                design,
            }
        }
    };
    let mut rng = substream(a.seed, 0);
    let sample = Model::new(&spec)?.generate(a.n, &mut rng)?;
    let sample = add_observation_noise(&sample, a.noise, &mut rng)?;
    write_sample(&a.out, &sample)?;
    Ok(())
}

fn emit_band(band: &ScBand, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => write_json(p, band)?,
        None => print_stdout(&band.to_json()?)?,
    }
    Ok(())
}

/// A closed pipe (`scb ... | head`) is not an error.
fn print_stdout(text: &str) -> anyhow::Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn scb(a: ScbArgs) -> anyhow::Result<()> {
    let method = a.method.method()?;
    let y = read_sample(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let band = match &a.input_x {
        Some(px) => {
            let x = read_sample(px).with_context(|| format!("reading {}", px.display()))?;
            scb_two_sample(&y, &x, &method, a.method.alpha, a.method.seed)?
        }
        None => scb_one_sample(&y, &method, a.method.alpha, a.method.seed)?,
    };
    emit_band(&band, a.method.out.as_deref())
}

fn scale_scb(a: ScaleArgs) -> anyhow::Result<()> {
    let method = a.method.method()?;
    let raw = read_sample(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let Some(g) = raw.grid().as_1d() else {
        bail!("scale-scb needs 1-D curves");
    };
    let (lo, hi) = (g.points()[0], g.points()[g.len() - 1]);
    let s = Grid1D::new(linspace(lo, hi, a.points))?;
    let sg = ScaleGrid::new(s, linspace(a.h_min, a.h_max, a.n_h))?;
    let band = scb_scale_space(
        &raw,
        &GaussianKernel,
        &sg,
        !a.raw_weights,
        &method,
        a.method.alpha,
        a.method.seed,
    )?;
    emit_band(&band, a.method.out.as_deref())
}

fn read(p: &Path) -> anyhow::Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn experiment(a: ExperimentArgs, coverage: bool) -> anyhow::Result<()> {
    let mut cfg: ExperimentConfig = serde_json::from_str(&read(&a.config)?)
        .with_context(|| format!("parsing {}", a.config.display()))?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let out = a.out.clone().or_else(|| cfg.output.clone());
    if coverage {
        let r = run_coverage(&cfg)?;
        write_report(out.as_deref(), &r, &r.cells)
    } else {
        let r = run_width(&cfg)?;
        write_report(out.as_deref(), &r, &r.rows)
    }
}

fn write_report<T: Serialize, R: Serialize>(out: Option<&Path>, full: &T, rows: &[R]) -> anyhow::Result<()> {
    match out {
        None => print_stdout(&serde_json::to_string_pretty(full)?)?,
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            write_json(p.with_extension("json"), full)?;
            write_csv(p.with_extension("csv"), rows)?;
        }
    }
    Ok(())
}
