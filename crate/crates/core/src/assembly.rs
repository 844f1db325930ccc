//! Element assembly of the staggered system: degraded elasticity and the
//! anisotropic phase-field equation.
//!
//! Local matrices are computed element-parallel; the scatter into the global
//! value array is serialized in element order, so results do not depend on
//! the thread count.

use crate::elements::MeshQuadrature;
use crate::error::Result;
use crate::material::{
    constitutive_matrix, effective_lame, evaluate_properties, reduced_stiffness, GradationSpec,
    OrthotropicBase, SplitModuli,
};
use crate::mesh::{BoundaryEdge, QuadtreeMesh};
use crate::phasefield::{degradation, structural_tensor, PhaseFieldParams};
use crate::sparse::{AssemblyPattern, SparseSym};
use nalgebra::{Matrix2, Matrix3};

/// Constitutive data cached per quadrature point: rotated stiffness,
/// effective Lamé pair for the split and local toughness. Material grading
/// varies per point; the cache is rebuilt only when the mesh changes.
#[derive(Debug, Clone)]
pub struct MaterialField {
    pub d: Vec<Matrix3<f64>>,
    pub lame: Vec<(f64, f64)>,
    pub gc: Vec<f64>,
}

impl MaterialField {
    pub fn build(
        quad: &MeshQuadrature,
        base: &OrthotropicBase,
        grad: &GradationSpec,
        split: SplitModuli,
    ) -> Result<Self> {
        let n = quad.total_points();
        let mut d = Vec::with_capacity(n);
        let mut lame = Vec::with_capacity(n);
        let mut gc = Vec::with_capacity(n);
        for qp in &quad.points {
            let p = evaluate_properties(base, grad, qp.pos);
            let q = reduced_stiffness(&p)?;
            d.push(constitutive_matrix(&q, base.theta));
            lame.push(effective_lame(&p, split));
            gc.push(p.gc);
        }
        Ok(MaterialField { d, lame, gc })
    }
}

/// Per-element global dof lists for the displacement field (2 dofs/node).
pub fn elasticity_dofs(mesh: &QuadtreeMesh) -> Vec<Vec<usize>> {
    mesh.elements()
        .iter()
        .map(|e| {
            e.nodes
                .iter()
                .flat_map(|&n| [2 * n as usize, 2 * n as usize + 1])
                .collect()
        })
        .collect()
}

/// Per-element global dof lists for the phase field (1 dof/node).
pub fn phase_dofs(mesh: &QuadtreeMesh) -> Vec<Vec<usize>> {
    mesh.elements()
        .iter()
        .map(|e| e.nodes.iter().map(|&n| n as usize).collect())
        .collect()
}

/// K_uu = sum over elements of [(1-phi)^2 + k_p] B^T D B.
///
/// `phi_q` holds the phase field interpolated at quadrature points.
pub fn assemble_elasticity<'a>(
    mesh: &QuadtreeMesh,
    quad: &MeshQuadrature,
    mat: &MaterialField,
    phi_q: &[f64],
    k_p: f64,
    pattern: &'a AssemblyPattern,
) -> SparseSym<'a> {
    let locals = crate::par::map_range(mesh.elements().len(), |e| {
        element_elasticity(mesh, quad, mat, phi_q, k_p, e)
    });
    let mut k = SparseSym::zeros(pattern);
    for (e, local) in locals.iter().enumerate() {
        k.add_local(e, local);
    }
    k
}

fn element_elasticity(
    mesh: &QuadtreeMesh,
    quad: &MeshQuadrature,
    mat: &MaterialField,
    phi_q: &[f64],
    k_p: f64,
    e: usize,
) -> Vec<f64> {
    let elem = &mesh.elements()[e];
    let n = elem.nodes.len();
    let mut ke = vec![0.0; (2 * n) * (2 * n)];
    for (k_local, qp) in quad.element_points(e).iter().enumerate() {
        let idx = quad.offsets[e] + k_local;
        let g = degradation(phi_q[idx], k_p);
        let d = &mat.d[idx];
        let w = g * qp.weight;
        for a in 0..n {
            let [dxa, dya] = qp.shape.dn[a];
            // rows of B_a^T D: dof (a,0) uses [dxa, 0, dya], dof (a,1) [0, dya, dxa]
            let r0 = [
                dxa * d[(0, 0)] + dya * d[(2, 0)],
                dxa * d[(0, 1)] + dya * d[(2, 1)],
                dxa * d[(0, 2)] + dya * d[(2, 2)],
            ];
            let r1 = [
                dya * d[(1, 0)] + dxa * d[(2, 0)],
                dya * d[(1, 1)] + dxa * d[(2, 1)],
                dya * d[(1, 2)] + dxa * d[(2, 2)],
            ];
            for b in 0..n {
                let [dxb, dyb] = qp.shape.dn[b];
                ke[(2 * a) * 2 * n + 2 * b] += w * (r0[0] * dxb + r0[2] * dyb);
                ke[(2 * a) * 2 * n + 2 * b + 1] += w * (r0[1] * dyb + r0[2] * dxb);
                ke[(2 * a + 1) * 2 * n + 2 * b] += w * (r1[0] * dxb + r1[2] * dyb);
                ke[(2 * a + 1) * 2 * n + 2 * b + 1] += w * (r1[1] * dyb + r1[2] * dxb);
            }
        }
    }
    ke
}

/// K_phi and f_phi of the phase-field equation:
/// K = sum of B_phi^T (gc l0 A) B_phi + N^T (gc/l0 + 2H) N, f = N^T 2H.
pub fn assemble_phasefield<'a>(
    mesh: &QuadtreeMesh,
    quad: &MeshQuadrature,
    mat: &MaterialField,
    history: &[f64],
    params: &PhaseFieldParams,
    theta: f64,
    pattern: &'a AssemblyPattern,
) -> (SparseSym<'a>, Vec<f64>) {
    let a_tensor = structural_tensor(theta, params.beta_penalty);
    let locals = crate::par::map_range(mesh.elements().len(), |e| {
        element_phasefield(mesh, quad, mat, history, params, &a_tensor, e)
    });
    let mut k = SparseSym::zeros(pattern);
    let mut f = vec![0.0; mesh.nodes().len()];
    for (e, (ke, fe)) in locals.iter().enumerate() {
        k.add_local(e, ke);
        for (a, &node) in mesh.elements()[e].nodes.iter().enumerate() {
            f[node as usize] += fe[a];
        }
    }
    (k, f)
}

fn element_phasefield(
    mesh: &QuadtreeMesh,
    quad: &MeshQuadrature,
    mat: &MaterialField,
    history: &[f64],
    params: &PhaseFieldParams,
    a_tensor: &Matrix2<f64>,
    e: usize,
) -> (Vec<f64>, Vec<f64>) {
    let elem = &mesh.elements()[e];
    let n = elem.nodes.len();
    let mut ke = vec![0.0; n * n];
    let mut fe = vec![0.0; n];
    for (k_local, qp) in quad.element_points(e).iter().enumerate() {
        let idx = quad.offsets[e] + k_local;
        let gc = mat.gc[idx];
        let h = history[idx];
        let diff = gc * params.ell0;
        let react = gc / params.ell0 + 2.0 * h;
        let w = qp.weight;
        for a in 0..n {
            let [dxa, dya] = qp.shape.dn[a];
            let na = qp.shape.n[a];
            // (A grad Na) pre-multiplied
            let ax = a_tensor[(0, 0)] * dxa + a_tensor[(0, 1)] * dya;
            let ay = a_tensor[(1, 0)] * dxa + a_tensor[(1, 1)] * dya;
            for b in 0..n {
                let [dxb, dyb] = qp.shape.dn[b];
                let nb = qp.shape.n[b];
                ke[a * n + b] += w * (diff * (ax * dxb + ay * dyb) + react * na * nb);
            }
            fe[a] += w * na * 2.0 * h;
        }
    }
    (ke, fe)
}

/// Edge traction resultants: constant traction (N/mm) integrated over the
/// boundary sub-edges lying on the selected domain edge.
pub fn traction_vector(
    mesh: &QuadtreeMesh,
    edge: BoundaryEdge,
    traction: [f64; 2],
) -> Vec<f64> {
    let on_edge = |n: &crate::mesh::Node| match edge {
        BoundaryEdge::Left => n.ix == 0,
        BoundaryEdge::Right => n.ix == mesh.units_x(),
        BoundaryEdge::Bottom => n.iy == 0,
        BoundaryEdge::Top => n.iy == mesh.units_y(),
    };
    let mut f = vec![0.0; 2 * mesh.nodes().len()];
    for elem in mesh.elements() {
        let m = elem.nodes.len();
        for a in 0..m {
            let na = elem.nodes[a] as usize;
            let nb = elem.nodes[(a + 1) % m] as usize;
            let pa = &mesh.nodes()[na];
            let pb = &mesh.nodes()[nb];
            if on_edge(pa) && on_edge(pb) {
                let len = (pb.pos - pa.pos).norm();
                for (node, _) in [(na, pa), (nb, pb)] {
                    f[2 * node] += 0.5 * len * traction[0];
                    f[2 * node + 1] += 0.5 * len * traction[1];
                }
            }
        }
    }
    f
}
