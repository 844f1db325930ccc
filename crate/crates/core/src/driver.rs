//! High-level entry points shared by the CLI and the test suites: full runs
//! with per-step file output, and the uniform-vs-adaptive benchmark.

use crate::config::SimulationConfig;
use crate::error::Result;
use crate::recovery::{compute_error_map, RecoveryContext};
use crate::report::{BenchLeg, BenchReport, LoadDisplacementWriter};
use crate::solver::{Simulation, StepRecord};
use crate::vtk::write_vtk;
use log::info;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug)]
pub struct RunSummary {
    pub records: Vec<StepRecord>,
    pub output_dir: PathBuf,
    pub csv_path: PathBuf,
}

fn vtk_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("step_{step:05}.vtk"))
}

/// Runs the configured load schedule, writing the load-displacement CSV and
/// VTK snapshots (per output stride) into the output directory.
pub fn run_to_files(
    cfg: SimulationConfig,
    output_dir: Option<&Path>,
    max_steps: Option<usize>,
) -> Result<RunSummary> {
    let out_dir = output_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    std::fs::create_dir_all(&out_dir)?;
    let provenance = cfg.provenance();
    // echo the finalized config next to the results
    std::fs::write(
        out_dir.join("config_echo.toml"),
        toml::to_string_pretty(&cfg).unwrap_or_default(),
    )?;

    let steps = max_steps.unwrap_or(cfg.schedule.steps).min(cfg.schedule.steps);
    let stride = cfg.output.stride;
    let mut sim = Simulation::new(cfg)?;
    let csv_path = out_dir.join("load_displacement.csv");
    let mut csv = LoadDisplacementWriter::create(&csv_path, &provenance)?;

    // step-0 snapshot: the initial mesh and fields
    write_vtk(
        &vtk_path(&out_dir, 0),
        &sim.mesh,
        &sim.state,
        &[],
        &provenance,
        0,
    )?;

    for _ in 0..steps {
        let record = sim.run_step()?;
        csv.append(&record)?;
        if stride != usize::MAX && record.step % stride == 0 {
            let errors = {
                let ctx =
                    RecoveryContext::build(&sim.mesh, sim.crack.as_ref(), sim.mls_config())?;
                compute_error_map(&sim.mesh, &sim.quad, &ctx, &sim.state.u)?
            };
            write_vtk(
                &vtk_path(&out_dir, record.step),
                &sim.mesh,
                &sim.state,
                &errors.per_element,
                &provenance,
                record.step,
            )?;
        }
    }
    info!(
        "run finished: {} steps, final dofs {}, output in {}",
        sim.records.len(),
        sim.dof_count(),
        out_dir.display()
    );
    if let Some(angle) = sim.damage_band_angle(0.95) {
        info!("damage band angle: {angle:.2} deg");
    }
    Ok(RunSummary {
        records: sim.records,
        output_dir: out_dir,
        csv_path,
    })
}

/// Compares the adaptive first load step against a uniform mesh whose
/// element size matches the crack-region resolution the adaptive run
/// reached. The uniform leg solves the same staggered problem once, without
/// any indicator or remeshing work.
pub fn run_bench(cfg: SimulationConfig, output_dir: Option<&Path>) -> Result<BenchReport> {
    let provenance = cfg.provenance();
    let out_dir = output_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory));

    // adaptive leg: one full load step including refinement passes
    let mut adaptive_cfg = cfg.clone();
    adaptive_cfg.output.stride = usize::MAX;
    let mut sim = Simulation::new(adaptive_cfg)?;
    let t0 = Instant::now();
    sim.run_step()?;
    let adaptive_wall = t0.elapsed().as_secs_f64();
    let adaptive = BenchLeg {
        label: "adaptive".into(),
        dofs: sim.dof_count(),
        elements: sim.mesh.elements().len(),
        timers: sim.timers,
        wall_s: adaptive_wall,
    };
    let crack_level = sim.mesh.max_leaf_level();

    // uniform leg at the matching resolution
    let mut uniform_cfg = cfg;
    uniform_cfg.mesh.base_level = crack_level;
    uniform_cfg.mesh.max_depth = crack_level.max(uniform_cfg.mesh.max_depth);
    let mut uni = Simulation::new(uniform_cfg)?;
    let du = uni.du_current;
    let t0 = Instant::now();
    uni.staggered_step(du)?;
    let uniform_wall = t0.elapsed().as_secs_f64();
    let uniform = BenchLeg {
        label: "uniform".into(),
        dofs: uni.dof_count(),
        elements: uni.mesh.elements().len(),
        timers: uni.timers,
        wall_s: uniform_wall,
    };

    let report = BenchReport { adaptive, uniform };
    std::fs::create_dir_all(&out_dir)?;
    report.write_csv(&out_dir.join("bench.csv"), &provenance)?;
    Ok(report)
}
