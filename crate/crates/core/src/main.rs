use clap::{Parser, Subcommand};
use phasefrac::config::SimulationConfig;
use phasefrac::driver::{run_bench, run_to_files};
use phasefrac::recovery::{compute_error_map, RecoveryContext};
use phasefrac::solver::Simulation;
use phasefrac::vtk::write_vtk;
use std::path::PathBuf;
use std::process::ExitCode;

/// Adaptive phase-field fracture solver for orthotropic and functionally
/// graded plates on quadtree meshes.
#[derive(Parser)]
#[command(name = "phasefrac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory override.
    #[arg(long, global = true, env = "PHASEFRAC_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,

    /// Stop after this many load steps.
    #[arg(long, global = true, env = "PHASEFRAC_MAX_STEPS")]
    max_steps: Option<usize>,

    /// Worker threads for element-parallel loops (1 = sequential).
    #[arg(long, global = true, env = "PHASEFRAC_THREADS")]
    threads: Option<usize>,

    /// Reserved for future stochastic features; accepted and recorded only.
    #[arg(long, global = true, env = "PHASEFRAC_SEED")]
    seed: Option<u64>,

    /// Log level: error, warn, info, debug, trace.
    #[arg(long, global = true, env = "PHASEFRAC_LOG_LEVEL", default_value = "info")]
    log_level: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full load schedule of a config file.
    Run { config: PathBuf },
    /// Validate a config file and print the effective parameters.
    Check { config: PathBuf },
    /// Emit the initial mesh (with notch) as a VTK snapshot.
    Mesh { config: PathBuf },
    /// Compare adaptive refinement against a uniform mesh at matching
    /// crack-region resolution (first load step).
    Bench { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();

    #[cfg(feature = "parallel")]
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
        {
            eprintln!("warning: thread pool: {e}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    if cli.threads.is_some() {
        eprintln!("warning: built without the 'parallel' feature; --threads ignored");
    }
    if let Some(seed) = cli.seed {
        log::info!("seed {seed} recorded (reserved)");
    }

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> phasefrac::Result<()> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = SimulationConfig::from_path(config)?;
            let summary = run_to_files(cfg, cli.output_dir.as_deref(), cli.max_steps)?;
            println!(
                "completed {} steps; results in {}",
                summary.records.len(),
                summary.output_dir.display()
            );
            Ok(())
        }
        Command::Check { config } => {
            let cfg = SimulationConfig::from_path(config)?;
            let sim = Simulation::new(cfg.clone())?;
            println!("config ok: {}", config.display());
            println!("  {}", cfg.provenance());
            println!(
                "  domain {} x {} mm, base mesh {} elements, {} nodes ({} dofs)",
                cfg.geometry.width,
                cfg.geometry.height,
                sim.mesh.elements().len(),
                sim.mesh.nodes().len(),
                sim.dof_count()
            );
            println!(
                "  schedule: {} steps of du = {:.4e} mm",
                cfg.schedule.steps,
                cfg.du()
            );
            Ok(())
        }
        Command::Mesh { config } => {
            let cfg = SimulationConfig::from_path(config)?;
            let out_dir = cli
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            let provenance = cfg.provenance();
            let sim = Simulation::new(cfg)?;
            let path = out_dir.join("mesh_initial.vtk");
            let errors = {
                let ctx = RecoveryContext::build(&sim.mesh, sim.crack.as_ref(), sim.mls_config())?;
                compute_error_map(&sim.mesh, &sim.quad, &ctx, &sim.state.u)
                    .map(|e| e.per_element)
                    .unwrap_or_default()
            };
            write_vtk(&path, &sim.mesh, &sim.state, &errors, &provenance, 0)?;
            println!(
                "initial mesh: {} elements, {} nodes -> {}",
                sim.mesh.elements().len(),
                sim.mesh.nodes().len(),
                path.display()
            );
            Ok(())
        }
        Command::Bench { config } => {
            let cfg = SimulationConfig::from_path(config)?;
            let report = run_bench(cfg, cli.output_dir.as_deref())?;
            print!("{}", report.render_table());
            Ok(())
        }
    }
}
