//! Staggered phase-field solver with adaptive refinement.
//!
//! Each load step alternates the degraded elasticity solve and the
//! phase-field solve at frozen counterparts until the phase field settles,
//! then evaluates the recovery indicator and refines flagged cells; the
//! solution is transferred and the step repeated until no element exceeds
//! the error tolerance (or the pass/depth caps bite).

use crate::assembly::{
    assemble_elasticity, assemble_phasefield, elasticity_dofs, phase_dofs, traction_vector,
    MaterialField,
};
use crate::config::{DofComponent, SimulationConfig};
use crate::elements::{field_at_quadrature, MeshQuadrature};
use crate::error::{Error, Result};
use crate::geometry::{Rect, Vec2};
use crate::mesh::QuadtreeMesh;
use crate::phasefield::{hybrid_constraint, spectral_split, update_history};
use crate::recovery::{compute_error_map, CrackGeometry, MlsConfig, RecoveryContext};
use crate::sparse::{apply_dirichlet, solve_spd, AssemblyPattern, DirichletDof, SparseSym};
use crate::state::SolutionState;
use crate::transfer::transfer_state;
use log::{debug, info, warn};
use std::time::Instant;

/// Wall time spent in each solver phase (seconds).
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimers {
    pub indicator: f64,
    pub remesh: f64,
    pub assemble_phi: f64,
    pub solve_phi: f64,
    pub assemble_u: f64,
    pub solve_u: f64,
}

impl PhaseTimers {
    pub fn total(&self) -> f64 {
        self.indicator
            + self.remesh
            + self.assemble_phi
            + self.solve_phi
            + self.assemble_u
            + self.solve_u
    }
}

/// Outcome of one staggered solve.
#[derive(Debug, Clone, Copy)]
pub struct StaggeredOutcome {
    pub iterations: usize,
    pub converged: bool,
    /// Final max-norm phase-field change.
    pub residual: f64,
    pub reaction: f64,
}

/// Per-step record feeding the load-displacement report.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub applied: f64,
    pub reaction: f64,
    pub dofs: usize,
    pub staggered_iters: usize,
    pub converged: bool,
    pub wall_s: f64,
    pub elements: usize,
    pub nodes: usize,
    pub max_level: u32,
    pub global_error: f64,
    pub refine_passes: usize,
}

pub struct Simulation {
    pub cfg: SimulationConfig,
    pub mesh: QuadtreeMesh,
    pub quad: MeshQuadrature,
    pub material: MaterialField,
    pattern_u: AssemblyPattern,
    pattern_phi: AssemblyPattern,
    pub state: SolutionState,
    pub crack: Option<CrackGeometry>,
    /// (psi_plus, psi_minus) per quadrature point from the last elastic solve.
    pub energies: Vec<(f64, f64)>,
    traction: Vec<f64>,
    pub applied: f64,
    pub step: usize,
    pub du_current: f64,
    steps_since_halving: usize,
    pub timers: PhaseTimers,
    pub records: Vec<StepRecord>,
    /// Tip of the initial notch; damage diagnostics measure beyond it.
    pub notch_tip: Option<Vec2>,
}

impl Simulation {
    pub fn new(cfg: SimulationConfig) -> Result<Self> {
        let domain = Rect::new(
            Vec2::zeros(),
            cfg.geometry.width,
            cfg.geometry.height,
        );
        let mut mesh =
            QuadtreeMesh::build_initial(domain, cfg.mesh.base_level, cfg.mesh.max_depth)?;
        let (crack, notch_tip) = match cfg.geometry.notch {
            Some([a, b]) => {
                let a = Vec2::new(a[0], a[1]);
                let b = Vec2::new(b[0], b[1]);
                mesh.set_slit(a, b)?;
                (Some(CrackGeometry::new(vec![a, b])?), Some(b))
            }
            None => (None, None),
        };
        let quad = MeshQuadrature::build(&mesh, 2, 2)?;
        let material = MaterialField::build(
            &quad,
            &cfg.orthotropic_base(),
            &cfg.gradation_spec(),
            cfg.phasefield.split_moduli,
        )?;
        let pattern_u = AssemblyPattern::build(2 * mesh.nodes().len(), &elasticity_dofs(&mesh));
        let pattern_phi = AssemblyPattern::build(mesh.nodes().len(), &phase_dofs(&mesh));
        let state = SolutionState::zeros(mesh.nodes().len(), quad.total_points());
        let energies = vec![(0.0, 0.0); quad.total_points()];
        let traction = Self::build_traction(&cfg, &mesh);
        let du = cfg.du();
        Ok(Simulation {
            cfg,
            mesh,
            quad,
            material,
            pattern_u,
            pattern_phi,
            state,
            crack,
            energies,
            traction,
            applied: 0.0,
            step: 0,
            du_current: du,
            steps_since_halving: 0,
            timers: PhaseTimers::default(),
            records: Vec::new(),
            notch_tip,
        })
    }

    fn build_traction(cfg: &SimulationConfig, mesh: &QuadtreeMesh) -> Vec<f64> {
        let mut f = vec![0.0; 2 * mesh.nodes().len()];
        for t in &cfg.boundary.traction {
            let part = traction_vector(mesh, t.edge, [t.tx, t.ty]);
            for (fi, pi) in f.iter_mut().zip(part) {
                *fi += pi;
            }
        }
        f
    }

    /// Dirichlet constraints at the given applied load.
    fn dirichlet(&self, load: f64) -> Vec<DirichletDof> {
        let mut out = Vec::new();
        for spec in &self.cfg.boundary.dirichlet {
            let value = spec.value.evaluate(load);
            for node in self.mesh.boundary_nodes(spec.edge) {
                let dof = 2 * node as usize
                    + match spec.component {
                        DofComponent::X => 0,
                        DofComponent::Y => 1,
                    };
                out.push(DirichletDof { dof, value });
            }
        }
        out
    }

    /// Dofs whose prescribed value tracks the load schedule; the reaction is
    /// summed over these.
    fn loaded_dofs(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for spec in &self.cfg.boundary.dirichlet {
            if spec.value.is_load() {
                for node in self.mesh.boundary_nodes(spec.edge) {
                    out.push(
                        2 * node as usize
                            + match spec.component {
                                DofComponent::X => 0,
                                DofComponent::Y => 1,
                            },
                    );
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn mls_config(&self) -> MlsConfig {
        MlsConfig {
            support_radius_factor: self.cfg.recovery.support_radius_factor,
            min_neighbors: self.cfg.recovery.min_neighbors,
            ..MlsConfig::default()
        }
    }

    /// Total unknowns of the coupled problem on the current mesh.
    pub fn dof_count(&self) -> usize {
        3 * self.mesh.nodes().len()
    }

    /// Strain at a cached quadrature point from the current displacements.
    fn strain_at(&self, e: usize, k: usize) -> [f64; 3] {
        let elem = &self.mesh.elements()[e];
        let qp = &self.quad.element_points(e)[k];
        let mut exx = 0.0;
        let mut eyy = 0.0;
        let mut gxy = 0.0;
        for (a, &node) in elem.nodes.iter().enumerate() {
            let ux = self.state.u[2 * node as usize];
            let uy = self.state.u[2 * node as usize + 1];
            let [dx, dy] = qp.shape.dn[a];
            exx += dx * ux;
            eyy += dy * uy;
            gxy += dy * ux + dx * uy;
        }
        [exx, eyy, 0.5 * gxy]
    }

    /// Updates split energies and the history field from the current
    /// displacement solution.
    fn update_energies_and_history(&mut self) {
        for e in 0..self.mesh.elements().len() {
            for k in 0..self.quad.element_points(e).len() {
                let idx = self.quad.offsets[e] + k;
                let [exx, eyy, exy] = self.strain_at(e, k);
                let (lambda, mu) = self.material.lame[idx];
                let (p, m) = spectral_split(exx, eyy, exy, lambda, mu);
                self.energies[idx] = (p, m);
                self.state.history[idx] = update_history(self.state.history[idx], p);
            }
        }
    }

    /// Applies the hybrid constraint node-wise: phi is wiped where every
    /// adjacent quadrature point is compression-dominated.
    fn apply_hybrid_constraint(&self, phi: &mut [f64]) {
        for (node, elems) in self.mesh.node_elements().iter().enumerate() {
            let mut any_qp = false;
            let mut all_compressive = true;
            for &e in elems {
                for idx in self.quad.element_range(e as usize) {
                    any_qp = true;
                    let (p, m) = self.energies[idx];
                    if p >= m {
                        all_compressive = false;
                        break;
                    }
                }
                if !all_compressive {
                    break;
                }
            }
            if any_qp && all_compressive {
                phi[node] = hybrid_constraint(0.0, 1.0, phi[node]);
            }
        }
        for v in phi.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// One staggered solve at the given applied load. Boundary conditions
    /// must already be reflected in `load`.
    pub fn staggered_step(&mut self, load: f64) -> Result<StaggeredOutcome> {
        let bcs = self.dirichlet(load);
        let tol = self.cfg.schedule.staggered_tol;
        let max_iters = self.cfg.schedule.max_staggered_iters;
        let backend = self.cfg.solver.backend;

        let loaded = self.loaded_dofs();
        let mut residual = f64::INFINITY;
        let mut converged = false;
        let mut iterations = 0;
        let mut reaction = 0.0;

        for it in 1..=max_iters {
            iterations = it;
            // elasticity at frozen phi
            let (u, reaction_it) = {
                let t0 = Instant::now();
                let phi_q = field_at_quadrature(&self.mesh, &self.quad, &self.state.phi);
                let mut k_u = assemble_elasticity(
                    &self.mesh,
                    &self.quad,
                    &self.material,
                    &phi_q,
                    self.cfg.phasefield.k_p,
                    &self.pattern_u,
                );
                let k_free = k_u.values.clone();
                let mut f_u = self.traction.clone();
                apply_dirichlet(&mut k_u, &mut f_u, &bcs)?;
                self.timers.assemble_u += t0.elapsed().as_secs_f64();

                let t0 = Instant::now();
                let u = solve_spd(&k_u, &f_u, backend)?;
                self.timers.solve_u += t0.elapsed().as_secs_f64();

                // reaction of the system actually solved
                let k0 = SparseSym {
                    pattern: k_u.pattern,
                    values: k_free,
                };
                let mut r = vec![0.0; f_u.len()];
                k0.mul_vec(&u, &mut r);
                let reaction: f64 = loaded.iter().map(|&d| r[d] - self.traction[d]).sum();
                (u, reaction)
            };
            self.state.u = u;
            reaction = reaction_it;

            // driving force
            self.update_energies_and_history();

            // phase field at frozen history
            let t0 = Instant::now();
            let (k_phi, f_phi) = assemble_phasefield(
                &self.mesh,
                &self.quad,
                &self.material,
                &self.state.history,
                &self.cfg.phase_params(),
                self.cfg.orthotropic_base().theta,
                &self.pattern_phi,
            );
            self.timers.assemble_phi += t0.elapsed().as_secs_f64();

            let t0 = Instant::now();
            let mut phi = solve_spd(&k_phi, &f_phi, backend)?;
            self.timers.solve_phi += t0.elapsed().as_secs_f64();

            self.apply_hybrid_constraint(&mut phi);

            residual = phi
                .iter()
                .zip(&self.state.phi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            self.state.phi = phi;

            if residual < tol {
                converged = true;
                break;
            }
        }
        debug!(
            "staggered: {} iterations, residual {:.3e}, converged {}",
            iterations, residual, converged
        );
        Ok(StaggeredOutcome {
            iterations,
            converged,
            residual,
            reaction,
        })
    }

    /// Refines flagged cells, rebalances and transfers the solution.
    fn refine_and_transfer(&mut self, flags: &std::collections::BTreeSet<usize>) -> Result<()> {
        let t0 = Instant::now();
        let mut new_mesh = self.mesh.clone();
        new_mesh.refine(flags)?;
        new_mesh.balance_2to1()?;
        let new_quad = MeshQuadrature::build(&new_mesh, 2, 2)?;
        let new_state = transfer_state(
            &self.mesh,
            &self.quad,
            &self.state,
            &new_mesh,
            &new_quad,
        )?;
        self.material = MaterialField::build(
            &new_quad,
            &self.cfg.orthotropic_base(),
            &self.cfg.gradation_spec(),
            self.cfg.phasefield.split_moduli,
        )?;
        self.pattern_u = AssemblyPattern::build(2 * new_mesh.nodes().len(), &elasticity_dofs(&new_mesh));
        self.pattern_phi = AssemblyPattern::build(new_mesh.nodes().len(), &phase_dofs(&new_mesh));
        self.traction = Self::build_traction(&self.cfg, &new_mesh);
        self.energies = vec![(0.0, 0.0); new_quad.total_points()];
        self.mesh = new_mesh;
        self.quad = new_quad;
        self.state = new_state;
        self.timers.remesh += t0.elapsed().as_secs_f64();
        Ok(())
    }

    /// Extends the crack polyline with the centroid of freshly damaged
    /// quadrature points (those beyond half a length scale from the current
    /// polyline).
    fn track_crack(&mut self) {
        let Some(crack) = self.crack.as_mut() else {
            return;
        };
        let threshold = self.cfg.recovery.crack_track_threshold;
        let min_dist = 0.5 * self.cfg.phase_params().ell0;
        let phi_q = field_at_quadrature(&self.mesh, &self.quad, &self.state.phi);
        let mut acc = Vec2::zeros();
        let mut count = 0usize;
        for (idx, qp) in self.quad.points.iter().enumerate() {
            if phi_q[idx] > threshold && crack.distance_to(qp.pos) > min_dist {
                acc += qp.pos;
                count += 1;
            }
        }
        if count > 0 {
            let centroid = acc / count as f64;
            crack.extend(centroid);
            debug!("crack extended to {:?} ({count} new damaged points)", centroid);
        }
    }

    /// Runs one load step: increment, staggered solve, error-driven
    /// refinement loop, crack tracking.
    pub fn run_step(&mut self) -> Result<StepRecord> {
        self.step += 1;
        let step_start = Instant::now();
        let base_applied = self.applied;
        let mut halvings = 0;
        // the retry path restores this state; refinement is persistent, so
        // the snapshot keeps its own mesh for the transfer
        let snapshot = (self.mesh.clone(), self.quad.clone(), self.state.clone());

        loop {
            let applied = base_applied + self.du_current;
            let mut outcome = self.staggered_step(applied)?;
            let mut passes = 0usize;
            let global_error;

            loop {
                let t0 = Instant::now();
                let mls = self.mls_config();
                let emap = {
                    let ctx = RecoveryContext::build(&self.mesh, self.crack.as_ref(), mls)?;
                    compute_error_map(&self.mesh, &self.quad, &ctx, &self.state.u)?
                };
                self.timers.indicator += t0.elapsed().as_secs_f64();
                let flags = self.mesh.flag_refinable(&emap, self.cfg.mesh.error_tol);
                if flags.is_empty() || passes >= self.cfg.mesh.refine_passes {
                    global_error = emap.global;
                    if !flags.is_empty() {
                        debug!(
                            "step {}: {} flags carry over after {} passes",
                            self.step,
                            flags.len(),
                            passes
                        );
                    }
                    break;
                }
                passes += 1;
                debug!(
                    "step {}: refinement pass {} splits {} cells (global error {:.3e})",
                    self.step,
                    passes,
                    flags.len(),
                    emap.global
                );
                self.refine_and_transfer(&flags)?;
                outcome = self.staggered_step(applied)?;
            }

            if !outcome.converged && halvings < self.cfg.schedule.max_halvings {
                halvings += 1;
                self.du_current *= 0.5;
                warn!(
                    "step {}: staggered residual {:.3e} after {} iterations; halving du to {:.3e}",
                    self.step, outcome.residual, outcome.iterations, self.du_current
                );
                self.state = transfer_state(
                    &snapshot.0,
                    &snapshot.1,
                    &snapshot.2,
                    &self.mesh,
                    &self.quad,
                )?;
                continue;
            }
            if !outcome.converged {
                if self.cfg.solver.strict_convergence {
                    return Err(Error::Solve(format!(
                        "staggered loop stalled at step {} (residual {:.3e})",
                        self.step, outcome.residual
                    )));
                }
                warn!(
                    "step {}: accepting unconverged staggered state (residual {:.3e})",
                    self.step, outcome.residual
                );
            }

            self.applied = applied;
            if outcome.converged && halvings == 0 {
                self.steps_since_halving += 1;
                // recover the step size after a quiet stretch
                if self.steps_since_halving >= 4 && self.du_current < self.cfg.du() {
                    self.du_current = (2.0 * self.du_current).min(self.cfg.du());
                    self.steps_since_halving = 0;
                }
            } else {
                self.steps_since_halving = 0;
            }
            self.track_crack();
            let record = StepRecord {
                step: self.step,
                applied,
                reaction: outcome.reaction,
                dofs: self.dof_count(),
                staggered_iters: outcome.iterations,
                converged: outcome.converged,
                wall_s: step_start.elapsed().as_secs_f64(),
                elements: self.mesh.elements().len(),
                nodes: self.mesh.nodes().len(),
                max_level: self.mesh.max_leaf_level(),
                global_error,
                refine_passes: passes,
            };
            let phi_max = self.state.phi.iter().fold(0.0f64, |m, &v| m.max(v));
            info!(
                "step {:4}  u = {:.4e} mm  R = {:+.4e} N  dofs = {}  iters = {}  phi_max = {:.3}{}",
                record.step,
                record.applied,
                record.reaction,
                record.dofs,
                record.staggered_iters,
                phi_max,
                if record.converged { "" } else { "  [unconverged]" }
            );
            self.records.push(record.clone());
            return Ok(record);
        }
    }

    /// Phase field interpolated at quadrature points.
    pub fn phi_at_quadrature(&self) -> Vec<f64> {
        field_at_quadrature(&self.mesh, &self.quad, &self.state.phi)
    }

    /// Farthest damaged quadrature point from the initial notch tip (mm);
    /// zero until damage passes the threshold anywhere beyond the tip.
    pub fn damage_extent(&self, threshold: f64) -> f64 {
        let Some(tip) = self.notch_tip else {
            return 0.0;
        };
        let phi_q = self.phi_at_quadrature();
        self.quad
            .points
            .iter()
            .zip(&phi_q)
            .filter(|(_, &p)| p > threshold)
            .map(|(qp, _)| (qp.pos - tip).norm())
            .fold(0.0, f64::max)
    }

    /// Direction of the damage band: total-least-squares line fit through
    /// quadrature points with phi above `threshold`, restricted to points
    /// beyond the initial notch tip. Returns the angle in degrees within
    /// [-90, 90], or None when too few points are damaged.
    pub fn damage_band_angle(&self, threshold: f64) -> Option<f64> {
        let phi_q = self.phi_at_quadrature();
        let ell0 = self.cfg.phase_params().ell0;
        let tip = self.notch_tip?;
        let pts: Vec<Vec2> = self
            .quad
            .points
            .iter()
            .zip(&phi_q)
            .filter(|(qp, &p)| p > threshold && (qp.pos - tip).norm() > 1.5 * ell0)
            .map(|(qp, _)| qp.pos)
            .collect();
        if pts.len() < 8 {
            return None;
        }
        let n = pts.len() as f64;
        let mean = pts.iter().fold(Vec2::zeros(), |a, &p| a + p) / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in &pts {
            let d = p - mean;
            sxx += d.x * d.x;
            sxy += d.x * d.y;
            syy += d.y * d.y;
        }
        // principal direction of the 2x2 covariance
        let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let mut deg = theta.to_degrees();
        if deg > 90.0 {
            deg -= 180.0;
        }
        if deg < -90.0 {
            deg += 180.0;
        }
        Some(deg)
    }
}
