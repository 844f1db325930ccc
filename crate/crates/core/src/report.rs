//! CSV reports: the load-displacement history and the uniform-vs-adaptive
//! benchmark table.
//!
//! Rows are appended and flushed per step so a crashed run keeps every
//! completed step. All physics columns are deterministically formatted;
//! wall-clock columns necessarily vary between runs.

use crate::error::Result;
use crate::solver::{PhaseTimers, StepRecord};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub struct LoadDisplacementWriter {
    out: BufWriter<File>,
}

impl LoadDisplacementWriter {
    pub fn create(path: &Path, provenance: &str) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# phasefrac load-displacement history")?;
        writeln!(out, "# {provenance}")?;
        writeln!(
            out,
            "step,displacement_mm,reaction_n,dofs,staggered_iterations,wall_s"
        )?;
        out.flush()?;
        Ok(LoadDisplacementWriter { out })
    }

    pub fn append(&mut self, r: &StepRecord) -> Result<()> {
        writeln!(
            self.out,
            "{},{:.12e},{:.12e},{},{},{:.3}",
            r.step, r.applied, r.reaction, r.dofs, r.staggered_iters, r.wall_s
        )?;
        self.out.flush()?;
        Ok(())
    }
}

/// One leg of the adaptivity benchmark.
#[derive(Debug, Clone)]
pub struct BenchLeg {
    pub label: String,
    pub dofs: usize,
    pub elements: usize,
    pub timers: PhaseTimers,
    pub wall_s: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub adaptive: BenchLeg,
    pub uniform: BenchLeg,
}

impl BenchReport {
    pub fn dof_ratio(&self) -> f64 {
        self.adaptive.dofs as f64 / self.uniform.dofs as f64
    }

    pub fn render_table(&self) -> String {
        let mut s = String::new();
        s.push_str(
            "strategy          dofs  elements  indicator  remesh  asm(phi)  sol(phi)  asm(u)  sol(u)  total\n",
        );
        for leg in [&self.adaptive, &self.uniform] {
            s.push_str(&format!(
                "{:<14} {:>7} {:>9} {:>10.3} {:>7.3} {:>9.3} {:>9.3} {:>7.3} {:>7.3} {:>6.2}\n",
                leg.label,
                leg.dofs,
                leg.elements,
                leg.timers.indicator,
                leg.timers.remesh,
                leg.timers.assemble_phi,
                leg.timers.solve_phi,
                leg.timers.assemble_u,
                leg.timers.solve_u,
                leg.wall_s
            ));
        }
        s.push_str(&format!(
            "adaptive dofs / uniform dofs = {:.4}; wall time ratio = {:.4}\n",
            self.dof_ratio(),
            self.adaptive.wall_s / self.uniform.wall_s
        ));
        s
    }

    pub fn write_csv(&self, path: &Path, provenance: &str) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# phasefrac adaptivity benchmark")?;
        writeln!(out, "# {provenance}")?;
        writeln!(
            out,
            "strategy,dofs,elements,indicator_s,remesh_s,assemble_phi_s,solve_phi_s,assemble_u_s,solve_u_s,total_s"
        )?;
        for leg in [&self.adaptive, &self.uniform] {
            writeln!(
                out,
                "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
                leg.label,
                leg.dofs,
                leg.elements,
                leg.timers.indicator,
                leg.timers.remesh,
                leg.timers.assemble_phi,
                leg.timers.solve_phi,
                leg.timers.assemble_u,
                leg.timers.solve_u,
                leg.wall_s
            )?;
        }
        out.flush()?;
        Ok(())
    }
}
