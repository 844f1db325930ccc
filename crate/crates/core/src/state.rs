//! Solution fields attached to one mesh revision.

/// Nodal displacements (interleaved x, y), nodal phase field and the
/// quadrature-point history field of the current load step.
#[derive(Debug, Clone)]
pub struct SolutionState {
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    pub history: Vec<f64>,
}

impl SolutionState {
    pub fn zeros(num_nodes: usize, num_quadrature_points: usize) -> Self {
        SolutionState {
            u: vec![0.0; 2 * num_nodes],
            phi: vec![0.0; num_nodes],
            history: vec![0.0; num_quadrature_points],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.phi.len()
    }
}
