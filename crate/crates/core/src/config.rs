//! Simulation configuration: strict TOML schema, validation and defaults.
//!
//! Unknown keys are rejected so a typo cannot silently fall back to a
//! default physics parameter. Defaults are filled during finalization and
//! echoed into every output file for provenance.

use crate::error::{Error, Result};
use crate::material::{GradationSpec, GradingDirection, OrthotropicBase, SplitModuli};
use crate::mesh::BoundaryEdge;
use crate::phasefield::PhaseFieldParams;
use crate::sparse::SolverBackend;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Domain width (mm).
    pub width: f64,
    /// Domain height (mm).
    pub height: f64,
    /// Initial notch polyline [[x0,y0],[x1,y1]] (mm); axis-aligned, mouth on
    /// the boundary, aligned with the base mesh.
    pub notch: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub e1: f64,
    pub e2: f64,
    pub g12: f64,
    pub nu12: f64,
    pub gc: f64,
    /// Material orientation in degrees.
    pub theta_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradationConfig {
    pub direction: GradingDirection,
    pub alpha: f64,
    pub beta_idx: f64,
    pub gamma: f64,
    pub grade_toughness: bool,
    /// Defaults to the domain extent along the grading direction.
    pub reference_length: Option<f64>,
}

impl Default for GradationConfig {
    fn default() -> Self {
        GradationConfig {
            direction: GradingDirection::None,
            alpha: 0.0,
            beta_idx: 0.0,
            gamma: 0.0,
            grade_toughness: false,
            reference_length: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseFieldConfig {
    /// Length scale (mm); defaults to twice the finest admissible element.
    pub ell0: Option<f64>,
    pub beta_penalty: f64,
    pub k_p: f64,
    /// Effective isotropic pair feeding the energy split.
    pub split_moduli: SplitModuli,
}

impl Default for PhaseFieldConfig {
    fn default() -> Self {
        PhaseFieldConfig {
            ell0: None,
            beta_penalty: 20.0,
            k_p: 1e-6,
            split_moduli: SplitModuli::E1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Displacement increment per step (mm); defaults to 1e-4 x the larger
    /// domain dimension.
    pub du: Option<f64>,
    pub steps: usize,
    #[serde(default = "default_staggered_tol")]
    pub staggered_tol: f64,
    #[serde(default = "default_max_staggered")]
    pub max_staggered_iters: usize,
    /// Step halvings attempted when the staggered loop stalls.
    #[serde(default = "default_max_halvings")]
    pub max_halvings: usize,
}

fn default_staggered_tol() -> f64 {
    1e-4
}

fn default_max_staggered() -> usize {
    200
}

fn default_max_halvings() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub base_level: u32,
    #[serde(default = "default_max_depth")]
    pub max_depth: u32,
    #[serde(default = "default_error_tol")]
    pub error_tol: f64,
    /// Refinement passes per load step before the rest carries over.
    #[serde(default = "default_refine_passes")]
    pub refine_passes: usize,
}

fn default_max_depth() -> u32 {
    8
}

fn default_error_tol() -> f64 {
    1e-5
}

fn default_refine_passes() -> usize {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    /// Write VTK snapshots every `stride` steps (0 disables field output).
    pub stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".into(),
            stride: 1,
        }
    }
}

/// Prescribed value of a Dirichlet entry: a fixed number or the string
/// "load", which tracks the applied displacement of the load schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BcValue {
    Fixed(f64),
    Tracked(String),
}

impl BcValue {
    pub fn is_load(&self) -> bool {
        matches!(self, BcValue::Tracked(s) if s == "load")
    }

    pub fn evaluate(&self, load: f64) -> f64 {
        match self {
            BcValue::Fixed(v) => *v,
            BcValue::Tracked(_) => load,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DofComponent {
    X,
    Y,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletSpec {
    pub edge: BoundaryEdge,
    pub component: DofComponent,
    pub value: BcValue,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionSpec {
    pub edge: BoundaryEdge,
    /// Traction vector (N/mm of edge length).
    pub tx: f64,
    pub ty: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct BoundaryConfig {
    pub dirichlet: Vec<DirichletSpec>,
    pub traction: Vec<TractionSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    #[serde(flatten)]
    pub backend: SolverBackend,
    /// Abort instead of warning when a staggered loop exhausts its halvings.
    pub strict_convergence: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: SolverBackend::Cholesky,
            strict_convergence: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecoveryConfig {
    pub support_radius_factor: f64,
    pub min_neighbors: usize,
    /// Quadrature-projected damage threshold that extends the crack polyline.
    pub crack_track_threshold: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            support_radius_factor: 2.5,
            min_neighbors: 6,
            crack_track_threshold: 0.95,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub geometry: GeometryConfig,
    pub material: MaterialConfig,
    #[serde(default)]
    pub gradation: GradationConfig,
    #[serde(default)]
    pub phasefield: PhaseFieldConfig,
    pub schedule: ScheduleConfig,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub recovery: RecoveryConfig,
}

impl SimulationConfig {
    /// Parses and finalizes a config file. TOML errors carry line/column
    /// positions; validation errors name the offending field.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidConfig(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: SimulationConfig = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("{e}")))?;
        cfg.finalize()?;
        Ok(cfg)
    }

    /// Fills defaults that depend on other fields and validates everything.
    pub fn finalize(&mut self) -> Result<()> {
        let g = &self.geometry;
        if g.width <= 0.0 || g.height <= 0.0 {
            return Err(Error::InvalidConfig(
                "geometry.width and geometry.height must be positive".into(),
            ));
        }
        let m = &self.material;
        self.orthotropic_base().validate()?;
        if m.nu12 < 0.0 {
            return Err(Error::InvalidConfig(
                "material.nu12 must be non-negative".into(),
            ));
        }
        if self.mesh.base_level > self.mesh.max_depth {
            return Err(Error::InvalidConfig(format!(
                "mesh.base_level {} exceeds mesh.max_depth {}",
                self.mesh.base_level, self.mesh.max_depth
            )));
        }
        if self.mesh.error_tol <= 0.0 {
            return Err(Error::InvalidConfig("mesh.error_tol must be positive".into()));
        }
        if self.mesh.refine_passes == 0 {
            return Err(Error::InvalidConfig(
                "mesh.refine_passes must be at least 1".into(),
            ));
        }

        // grading reference length defaults to the domain extent
        if self.gradation.reference_length.is_none() {
            self.gradation.reference_length = Some(match self.gradation.direction {
                GradingDirection::X => g.width,
                GradingDirection::Y => g.height,
                GradingDirection::None => 1.0,
            });
        }
        if self.gradation.reference_length.unwrap() <= 0.0 {
            return Err(Error::InvalidConfig(
                "gradation.reference_length must be positive".into(),
            ));
        }

        // length scale defaults to twice the finest admissible element size
        let finest = self.finest_cell_size();
        if self.phasefield.ell0.is_none() {
            self.phasefield.ell0 = Some(2.0 * finest);
        }
        let ell0 = self.phasefield.ell0.unwrap();
        if ell0 <= 0.0 {
            return Err(Error::InvalidConfig("phasefield.ell0 must be positive".into()));
        }
        if self.phasefield.k_p <= 0.0 || self.phasefield.k_p >= 1e-1 {
            return Err(Error::InvalidConfig(
                "phasefield.k_p must be a small positive number".into(),
            ));
        }
        if self.phasefield.beta_penalty < 0.0 {
            return Err(Error::InvalidConfig(
                "phasefield.beta_penalty must be non-negative".into(),
            ));
        }

        if self.schedule.du.is_none() {
            self.schedule.du = Some(1e-4 * g.width.max(g.height));
        }
        if self.schedule.du.unwrap() <= 0.0 {
            return Err(Error::InvalidConfig("schedule.du must be positive".into()));
        }
        if self.schedule.staggered_tol <= 0.0 {
            return Err(Error::InvalidConfig(
                "schedule.staggered_tol must be positive".into(),
            ));
        }
        if self.schedule.max_staggered_iters == 0 {
            return Err(Error::InvalidConfig(
                "schedule.max_staggered_iters must be at least 1".into(),
            ));
        }

        for (i, d) in self.boundary.dirichlet.iter().enumerate() {
            if let BcValue::Tracked(s) = &d.value {
                if s != "load" {
                    return Err(Error::InvalidConfig(format!(
                        "boundary.dirichlet[{i}].value: unknown tracked value '{s}' (only \"load\")"
                    )));
                }
            }
        }
        // Dirichlet and traction selectors must not overlap per component
        for (i, t) in self.boundary.traction.iter().enumerate() {
            for d in &self.boundary.dirichlet {
                let clash = d.edge == t.edge
                    && match d.component {
                        DofComponent::X => t.tx != 0.0,
                        DofComponent::Y => t.ty != 0.0,
                    };
                if clash {
                    return Err(Error::InvalidConfig(format!(
                        "boundary.traction[{i}] overlaps a dirichlet set on edge {:?} in the same component",
                        t.edge
                    )));
                }
            }
        }

        if self.recovery.min_neighbors <= 3 {
            return Err(Error::InvalidConfig(
                "recovery.min_neighbors must exceed 3".into(),
            ));
        }
        if self.recovery.support_radius_factor <= 0.0 {
            return Err(Error::InvalidConfig(
                "recovery.support_radius_factor must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.recovery.crack_track_threshold) {
            return Err(Error::InvalidConfig(
                "recovery.crack_track_threshold must lie in [0, 1]".into(),
            ));
        }
        if self.output.stride == 0 {
            // stride 0 means "fields off"; normalize to usize::MAX internally
            self.output.stride = usize::MAX;
        }
        Ok(())
    }

    /// Edge length of a cell at maximum depth (mm). The root tiling follows
    /// the domain aspect ratio, so the finest size is width-based.
    pub fn finest_cell_size(&self) -> f64 {
        let (tiles_x, _) = crate::mesh::tiling_for(self.geometry.width, self.geometry.height)
            .unwrap_or((1, 1));
        self.geometry.width / tiles_x as f64 / (1u64 << self.mesh.max_depth) as f64
    }

    pub fn orthotropic_base(&self) -> OrthotropicBase {
        OrthotropicBase {
            e1: self.material.e1,
            e2: self.material.e2,
            g12: self.material.g12,
            nu12: self.material.nu12,
            gc: self.material.gc,
            theta: self.material.theta_deg.to_radians(),
        }
    }

    pub fn gradation_spec(&self) -> GradationSpec {
        GradationSpec {
            direction: self.gradation.direction,
            alpha: self.gradation.alpha,
            beta_idx: self.gradation.beta_idx,
            gamma: self.gradation.gamma,
            grade_toughness: self.gradation.grade_toughness,
            reference_length: self.gradation.reference_length.unwrap_or(1.0),
            origin: 0.0,
        }
    }

    pub fn phase_params(&self) -> PhaseFieldParams {
        PhaseFieldParams {
            ell0: self.phasefield.ell0.expect("finalized config"),
            beta_penalty: self.phasefield.beta_penalty,
            k_p: self.phasefield.k_p,
        }
    }

    pub fn du(&self) -> f64 {
        self.schedule.du.expect("finalized config")
    }

    /// Short hash of the finalized config, embedded in every output file.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(canonical.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..12].to_string()
    }

    /// One-line parameter echo for file headers.
    pub fn provenance(&self) -> String {
        format!(
            "config={} ell0={} du={} staggered_tol={} error_tol={} beta={} k_p={} quad=2x2 poly=tri3",
            self.hash(),
            self.phasefield.ell0.unwrap_or(0.0),
            self.schedule.du.unwrap_or(0.0),
            self.schedule.staggered_tol,
            self.mesh.error_tol,
            self.phasefield.beta_penalty,
            self.phasefield.k_p
        )
    }
}
