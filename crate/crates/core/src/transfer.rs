//! Solution transfer onto a refined mesh.
//!
//! Nodal fields are interpolated with the old-mesh shape functions at the
//! new node positions. The history field lives on quadrature points, so it
//! is first lumped to old-mesh nodes by weighted least squares and then
//! interpolated at the new quadrature points.

use crate::elements::{polygon_shape_values_closure, MeshQuadrature};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::{MeshElement, NodeSide, QuadtreeMesh};
use crate::state::SolutionState;

/// Shape values of an old element at an arbitrary point of its closure.
fn shape_values_at(mesh: &QuadtreeMesh, elem: &MeshElement, x: Vec2) -> Result<Vec<f64>> {
    let verts = mesh.element_vertices(elem);
    // polygon closure evaluation covers the quad case too: both bases are
    // linear along element edges and interpolatory at vertices
    polygon_shape_values_closure(x, &verts)
}

fn locate_element(mesh: &QuadtreeMesh, x: Vec2, side: NodeSide) -> Result<usize> {
    let cell = mesh
        .find_leaf_at(x, side)
        .ok_or(Error::PointLocation { x: x.x, y: x.y })?;
    mesh.element_of_cell(cell)
        .ok_or(Error::PointLocation { x: x.x, y: x.y })
}

/// Interpolates old nodal fields and projects the history field onto
/// `new_mesh`. The new mesh must refine the old one over the same domain.
pub fn transfer_state(
    old_mesh: &QuadtreeMesh,
    old_quad: &MeshQuadrature,
    old_state: &SolutionState,
    new_mesh: &QuadtreeMesh,
    new_quad: &MeshQuadrature,
) -> Result<SolutionState> {
    let n_new = new_mesh.nodes().len();
    let mut u = vec![0.0; 2 * n_new];
    let mut phi = vec![0.0; n_new];

    for (i, node) in new_mesh.nodes().iter().enumerate() {
        let e = locate_element(old_mesh, node.pos, node.side)?;
        let elem = &old_mesh.elements()[e];
        let n_vals = shape_values_at(old_mesh, elem, node.pos)?;
        let mut ux = 0.0;
        let mut uy = 0.0;
        let mut p = 0.0;
        for (a, &gn) in elem.nodes.iter().enumerate() {
            let gn = gn as usize;
            ux += n_vals[a] * old_state.u[2 * gn];
            uy += n_vals[a] * old_state.u[2 * gn + 1];
            p += n_vals[a] * old_state.phi[gn];
        }
        u[2 * i] = ux;
        u[2 * i + 1] = uy;
        phi[i] = p.clamp(0.0, 1.0);
    }

    // lumped least-squares projection of H to old nodes
    let n_old = old_mesh.nodes().len();
    let mut weight = vec![0.0; n_old];
    let mut accum = vec![0.0; n_old];
    for (e, elem) in old_mesh.elements().iter().enumerate() {
        for (k, qp) in old_quad.element_points(e).iter().enumerate() {
            let h = old_state.history[old_quad.offsets[e] + k];
            for (a, &gn) in elem.nodes.iter().enumerate() {
                let w = qp.shape.n[a] * qp.weight;
                weight[gn as usize] += w;
                accum[gn as usize] += w * h;
            }
        }
    }
    let h_nodal: Vec<f64> = accum
        .iter()
        .zip(&weight)
        .map(|(&a, &w)| if w > 0.0 { (a / w).max(0.0) } else { 0.0 })
        .collect();

    // interpolate nodal H at the new quadrature points
    let mut history = vec![0.0; new_quad.total_points()];
    for (e, elem) in new_mesh.elements().iter().enumerate() {
        let side = new_mesh.cell_slit_side(elem.cell);
        for (k, qp) in new_quad.element_points(e).iter().enumerate() {
            let oe = locate_element(old_mesh, qp.pos, side)?;
            let old_elem = &old_mesh.elements()[oe];
            let n_vals = shape_values_at(old_mesh, old_elem, qp.pos)?;
            let mut h = 0.0;
            for (a, &gn) in old_elem.nodes.iter().enumerate() {
                h += n_vals[a] * h_nodal[gn as usize];
            }
            history[new_quad.offsets[e] + k] = h.max(0.0);
        }
    }

    Ok(SolutionState { u, phi, history })
}
