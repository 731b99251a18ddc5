use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use granule_scope::commands::{self, InsituArgs, Workspace};
use granule_scope::{serve, CliError, RunSpec};

/// Surrogate-informed in situ visualization of granular column collapse.
#[derive(Debug, Parser)]
#[command(name = "granule-scope", version)]
struct Cli {
    /// TOML run spec; built-in defaults otherwise.
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Overrides the spec seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Data directory. Falls back to $GRANULE_SCOPE_DATA, then the spec.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate randomized columns for training.
    GenData {
        #[arg(long)]
        count: Option<usize>,
    },
    /// Train the surrogate on the generated data.
    Train {
        #[arg(long)]
        steps: Option<u64>,
        /// Continue from the saved checkpoint and optimizer state.
        #[arg(long)]
        resume: bool,
    },
    /// Predict the held-out column with a trained checkpoint.
    Rollout {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        /// Also export every frame as VTK PolyData.
        #[arg(long)]
        vtp: bool,
        #[arg(long, default_value = "surrogate")]
        id: String,
    },
    /// Derive an in situ config from a rollout.
    Harvest {
        #[arg(long)]
        rollout: Option<PathBuf>,
        /// JSON array of cameras; the side/top/aerial presets otherwise.
        #[arg(long)]
        cameras: Option<PathBuf>,
        #[arg(long, default_value = "column-collapse")]
        label: String,
    },
    /// Run the simulation with in situ rendering.
    InsituRun {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Render every view over the whole run instead.
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        ranks: Option<usize>,
        #[arg(long)]
        run_name: Option<String>,
        /// Validate and print the planned image count only.
        #[arg(long)]
        dry_run: bool,
        /// Skip writing PPM images.
        #[arg(long)]
        no_images: bool,
    },
    /// Serve rollouts and configs over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Print a run report, or the savings of the second over the first.
    Report {
        #[arg(required = true, num_args = 1..=2)]
        reports: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut spec = RunSpec::load(cli.spec.as_deref())?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    let ws = Workspace::new(spec.resolve_out(cli.out.as_deref()));
    match cli.command {
        Command::GenData { count } => {
            commands::gen_data(&spec, &ws, count)?;
        }
        Command::Train { steps, resume } => {
            commands::train(&spec, &ws, steps, resume)?;
        }
        Command::Rollout {
            checkpoint,
            steps,
            vtp,
            id,
        } => {
            commands::rollout(&spec, &ws, checkpoint.as_deref(), steps, vtp, &id)?;
        }
        Command::Harvest { rollout, cameras, label } => {
            let rollout = rollout.unwrap_or_else(|| ws.rollouts().join("surrogate.gtraj"));
            commands::harvest(&spec, &ws, &rollout, cameras.as_deref(), &label)?;
        }
        Command::InsituRun {
            config,
            baseline,
            ranks,
            run_name,
            dry_run,
            no_images,
        } => {
            let args = InsituArgs {
                config,
                baseline,
                ranks,
                run_name,
                dry_run,
                no_images,
            };
            commands::insitu_run(&spec, &ws, &args)?;
        }
        Command::Serve { port } => {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(serve::serve(ws.root.clone(), port))?;
        }
        Command::Report { reports } => {
            commands::report(&reports)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
