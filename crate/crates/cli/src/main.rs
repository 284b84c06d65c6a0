use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use groundscale::eval::{evaluate, EvalError, Trajectory};
use groundscale::io::{read_poses_kitti, write_all_atomic, write_atomic, write_synthetic_sequence, Config, ConfigError, IoError};
use groundscale::pipeline::{recover_dir, PipelineError};
use groundscale::plot::{positions_csv, render_svg};
use groundscale::synth::generate_sequence;

const EXIT_CONFIG: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_FAILURE: u8 = 4;

#[derive(Parser)]
#[command(name = "groundscale", version, about = "Metric scale recovery for monocular VO from the camera mounting height")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sequence directory.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover the metric trajectory of a sequence directory.
    Recover {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `input_dir` from the config.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare an estimated trajectory with a reference and write a JSON report.
    Eval {
        #[arg(long)]
        est: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw trajectories top-down as SVG, with a CSV of the plotted positions.
    Plot {
        #[arg(long = "traj", required = true)]
        trajectories: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Self { code, message: message.to_string() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(EXIT_CONFIG, e)
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let code = if e.is_format_error() { EXIT_PARSE } else { EXIT_FAILURE };
        Failure::new(code, e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Io(io) => io.into(),
            PipelineError::InvalidInput(_) => Failure::new(EXIT_PARSE, e),
            PipelineError::Scale(_) => Failure::new(EXIT_FAILURE, e),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::new(EXIT_FAILURE, e)
    }
}

fn synth(config: &Path, out: &Path) -> Result<(), Failure> {
    let config = Config::load(config)?;
    let frames = generate_sequence(&config.scene_spec()).map_err(|e| Failure::new(EXIT_CONFIG, e))?;
    write_synthetic_sequence(out, &frames, config.global_scale)?;
    log::info!("wrote {} frames to {}", frames.len(), out.display());
    Ok(())
}

fn recover(config: &Path, input: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), Failure> {
    let config = Config::load(config)?;
    let input = input.or_else(|| config.input_dir.clone()).ok_or_else(|| Failure::new(EXIT_CONFIG, "no input directory: pass --in or set input_dir"))?;
    let out = out.or_else(|| config.output_dir.clone()).ok_or_else(|| Failure::new(EXIT_CONFIG, "no output directory: pass --out or set output_dir"))?;
    let result = recover_dir(&config, &input, &out)?;
    let fallbacks = result.records.iter().filter(|r| r.mode != groundscale::scale::ScaleMode::Fit).count();
    log::info!("recovered {} frames ({} fallbacks)", result.poses.len(), fallbacks);
    Ok(())
}

fn eval(est: &Path, reference: &Path, out: &Path) -> Result<(), Failure> {
    let est = read_poses_kitti(est)?;
    let reference = read_poses_kitti(reference)?;
    let report = evaluate(&est, &reference)?;
    write_atomic(out, report.to_json().as_bytes())?;
    Ok(())
}

fn plot(paths: &[PathBuf], out: &Path) -> Result<(), Failure> {
    let trajectories: Vec<(String, Trajectory)> = paths
        .iter()
        .map(|p| Ok((p.display().to_string(), read_poses_kitti(p)?)))
        .collect::<Result<_, IoError>>()?;
    write_all_atomic(&[
        (out.to_path_buf(), render_svg(&trajectories).into_bytes()),
        (out.with_extension("csv"), positions_csv(&trajectories).into_bytes()),
    ])?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth { config, out } => synth(&config, &out),
        Command::Recover { config, input, out } => recover(&config, input, out),
        Command::Eval { est, reference, out } => eval(&est, &reference, &out),
        Command::Plot { trajectories, out } => plot(&trajectories, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
