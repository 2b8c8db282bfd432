use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use cagewarp::batch::{run_ablate, run_render, AblateArgs, RenderArgs, Sweep};
use cagewarp::convert::parse_voxel_text;
use cagewarp::inputs::parse_mode;
use cagewarp::replay::{parse_log, replay, write_outcome};
use cagewarp::service::serve;
use cagewarp::CliError;
use cagewarp_core::field::save_grid_field;
use cagewarp_core::render::RenderSettings;
use cagewarp_core::session::SessionConfig;
use cagewarp_core::warp::DEFAULT_WARP_RESOLUTION;
use clap::{Args, Parser, Subcommand};

/// Cage-driven geometry editing of volumetric radiance fields.
#[derive(Parser)]
#[command(name = "cagewarp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RenderFlags {
    /// Ray samples per pixel.
    #[arg(long, default_value_t = 128)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Near distance along each ray.
    #[arg(long, default_value_t = 0.1)]
    near: f64,
    /// Far distance along each ray.
    #[arg(long, default_value_t = 10.0)]
    far: f64,
    /// Jitter sample positions within their strata.
    #[arg(long)]
    jitter: bool,
}

impl RenderFlags {
    fn settings(&self) -> RenderSettings {
        RenderSettings {
            samples_per_ray: self.samples,
            near: self.near,
            far: self.far,
            stratified_jitter: self.jitter,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Render an edited scene and write images plus metrics.json.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        cages: PathBuf,
        /// Manipulation list, or {"edits": [...]} for several edits.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Camera JSON or a transforms.json-style camera path.
        #[arg(long)]
        camera: PathBuf,
        /// discrete-empty, discrete-copy or continuous.
        #[arg(long, default_value = "continuous")]
        mode: String,
        #[arg(long, default_value_t = DEFAULT_WARP_RESOLUTION)]
        warp_resolution: usize,
        #[command(flatten)]
        render: RenderFlags,
        /// Also compare against the exact per-sample mapping.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep outer-cage scale or warp resolution and write a CSV report.
    Ablate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        cages: PathBuf,
        #[arg(long)]
        script: Option<PathBuf>,
        /// Optional camera for render timings.
        #[arg(long)]
        camera: Option<PathBuf>,
        #[arg(long, default_value = "continuous")]
        mode: String,
        /// outer-scale=1.2,1.5,2.0 or resolution=64,128,256
        #[arg(long)]
        sweep: String,
        #[arg(long, default_value_t = DEFAULT_WARP_RESOLUTION)]
        warp_resolution: usize,
        #[command(flatten)]
        render: RenderFlags,
        /// CSV file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a text voxel list into a grid field file.
    Convert {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a recorded command log headlessly.
    Replay {
        #[arg(long)]
        script: PathBuf,
        /// Directory load_scene paths are relative to.
        #[arg(long, default_value = ".")]
        scene_root: PathBuf,
        #[arg(long, default_value_t = 64)]
        warp_resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the editing service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        bind: String,
        #[arg(long, default_value = ".")]
        scene_root: PathBuf,
        /// Bake resolution for live edits.
        #[arg(long, default_value_t = 64)]
        warp_resolution: usize,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CAGEWARP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| CliError::Usage(format!("CAGEWARP_THREADS must be a positive integer, got {v:?}")))?;
    if n == 0 {
        return Err(CliError::Usage("CAGEWARP_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Compute(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Render {
            scene,
            cages,
            script,
            camera,
            mode,
            warp_resolution,
            render,
            oracle,
            out,
        } => {
            let report = run_render(&RenderArgs {
                scene,
                cages,
                script,
                camera,
                mode: parse_mode(&mode)?,
                warp_resolution,
                settings: render.settings(),
                oracle,
                out,
            })?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
        Command::Ablate {
            scene,
            cages,
            script,
            camera,
            mode,
            sweep,
            warp_resolution,
            render,
            out,
        } => {
            let sweep: Sweep = sweep.parse().map_err(CliError::Usage)?;
            let rows = run_ablate(&AblateArgs {
                scene,
                cages,
                script,
                camera,
                mode: parse_mode(&mode)?,
                sweep,
                warp_resolution,
                settings: render.settings(),
                out: out.clone(),
            })?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Convert { input, out } => {
            let text = fs::read_to_string(&input).map_err(|e| CliError::io(&input, e))?;
            let grid = parse_voxel_text(&text)?;
            save_grid_field(&grid, &out)?;
        }
        Command::Replay {
            script,
            scene_root,
            warp_resolution,
            out,
        } => {
            let text = fs::read_to_string(&script).map_err(|e| CliError::io(&script, e))?;
            let commands = parse_log(&text)?;
            let config = SessionConfig {
                warp_resolution: Some(warp_resolution),
                ..Default::default()
            };
            let outcome = replay(&commands, scene_root, config)?;
            write_outcome(&outcome, &out)?;
            let failed = outcome.acks.iter().filter(|a| !a.ok).count();
            println!("replayed {} commands ({failed} rejected)", outcome.acks.len());
        }
        Command::Serve {
            bind,
            scene_root,
            warp_resolution,
        } => {
            let config = SessionConfig {
                warp_resolution: Some(warp_resolution),
                ..Default::default()
            };
            serve(&bind, scene_root, config).map_err(|e| CliError::Io {
                path: PathBuf::from(&bind),
                source: e,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
