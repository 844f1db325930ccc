//! Legacy-ASCII VTK output of mesh and fields.
//!
//! Hanging-node elements are written as generic polygon cells, so an
//! unmodified viewer renders them without splitting. The title line carries
//! the config hash and the effective parameters.

use crate::error::Result;
use crate::mesh::{ElementKind, QuadtreeMesh};
use crate::state::SolutionState;
use std::io::Write;
use std::path::Path;

const VTK_POLYGON: u8 = 7;
const VTK_QUAD: u8 = 9;

/// Writes one snapshot. `element_error` may be empty when no indicator has
/// run yet; the field is then omitted.
pub fn write_vtk(
    path: &Path,
    mesh: &QuadtreeMesh,
    state: &SolutionState,
    element_error: &[f64],
    provenance: &str,
    step: usize,
) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);

    writeln!(out, "# vtk DataFile Version 3.0")?;
    // the legacy title line is capped at 256 characters
    let mut title = format!("phasefrac step {step} {provenance}");
    title.truncate(255);
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;

    let nodes = mesh.nodes();
    writeln!(out, "POINTS {} double", nodes.len())?;
    for n in nodes {
        writeln!(out, "{:.16e} {:.16e} 0.0", n.pos.x, n.pos.y)?;
    }

    let elements = mesh.elements();
    let total: usize = elements.iter().map(|e| e.nodes.len() + 1).sum();
    writeln!(out, "CELLS {} {}", elements.len(), total)?;
    for e in elements {
        write!(out, "{}", e.nodes.len())?;
        for &n in &e.nodes {
            write!(out, " {n}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "CELL_TYPES {}", elements.len())?;
    for e in elements {
        let t = match e.kind {
            ElementKind::Quad => VTK_QUAD,
            ElementKind::Polygon => VTK_POLYGON,
        };
        writeln!(out, "{t}")?;
    }

    writeln!(out, "POINT_DATA {}", nodes.len())?;
    writeln!(out, "VECTORS displacement double")?;
    for i in 0..nodes.len() {
        writeln!(
            out,
            "{:.16e} {:.16e} 0.0",
            state.u[2 * i],
            state.u[2 * i + 1]
        )?;
    }
    writeln!(out, "SCALARS phi double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for &p in &state.phi {
        writeln!(out, "{:.16e}", p)?;
    }

    writeln!(out, "CELL_DATA {}", elements.len())?;
    if element_error.len() == elements.len() {
        writeln!(out, "SCALARS element_error double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for &e in element_error {
            writeln!(out, "{:.16e}", e)?;
        }
    }
    writeln!(out, "SCALARS refinement_level int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for e in elements {
        writeln!(out, "{}", mesh.cell(e.cell).level)?;
    }
    out.flush()?;
    Ok(())
}
