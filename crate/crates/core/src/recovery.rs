//! Recovered-strain error indicator.
//!
//! A moving-least-squares fit of the nodal displacements gives a smoother
//! strain field; its deviation from the compatible finite-element strain,
//! integrated per element, flags the elements to refine. Node supports are
//! circular and wrap around the crack via the diffraction rule: when the
//! straight segment from node to evaluation point crosses the crack
//! polyline, the distance is rerouted through the crack tip.

use crate::elements::MeshQuadrature;
use crate::error::{Error, Result};
use crate::geometry::{segments_intersect_strict, Vec2};
use crate::mesh::{ErrorMap, NodeSide, QuadtreeMesh, SlitOrientation};
use nalgebra::{Matrix3, Vector3};
use std::collections::HashMap;

/// Quartic spline weight: w = 1 - 6s^2 + 8s^3 - 3s^4 for s <= 1, else 0.
pub fn spline_weight(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        1.0 + s * s * (-6.0 + s * (8.0 - 3.0 * s))
    }
}

/// dw/ds of the quartic spline.
pub fn spline_weight_deriv(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        s * (-12.0 + s * (24.0 - 12.0 * s))
    }
}

/// Polyline description of the discontinuity, ordered mouth to tip.
#[derive(Debug, Clone)]
pub struct CrackGeometry {
    vertices: Vec<Vec2>,
}

impl CrackGeometry {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidGeometry(
                "crack polyline needs at least two vertices".into(),
            ));
        }
        for pair in vertices.windows(2) {
            if (pair[1] - pair[0]).norm() <= 0.0 {
                return Err(Error::InvalidGeometry(
                    "crack polyline contains a degenerate segment".into(),
                ));
            }
        }
        Ok(CrackGeometry { vertices })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn tip(&self) -> Vec2 {
        *self.vertices.last().unwrap()
    }

    /// Grows the crack by one vertex; the new point becomes the tip.
    pub fn extend(&mut self, p: Vec2) {
        if (p - self.tip()).norm() > 0.0 {
            self.vertices.push(p);
        }
    }

    pub fn cuts_segment(&self, a: Vec2, b: Vec2) -> bool {
        self.vertices
            .windows(2)
            .any(|seg| segments_intersect_strict(a, b, seg[0], seg[1]))
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.vertices
            .windows(2)
            .map(|seg| crate::geometry::point_segment_distance(p, seg[0], seg[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Normalized support distance from node `x_k` to evaluation point `x`.
///
/// Returns the plain Euclidean distance over `d_k` unless the straight
/// segment is cut by the crack, in which case the path is rerouted through
/// the crack tip. The intersection test is strict, so a segment grazing the
/// tip keeps the Euclidean branch.
pub fn diffraction_distance(x: Vec2, x_k: Vec2, d_k: f64, crack: &CrackGeometry) -> f64 {
    if crack.cuts_segment(x_k, x) {
        let c = crack.tip();
        ((x - c).norm() + (c - x_k).norm()) / d_k
    } else {
        (x - x_k).norm() / d_k
    }
}

/// Configuration of the moving-least-squares fit.
#[derive(Debug, Clone, Copy)]
pub struct MlsConfig {
    /// Support radius = factor x local element size.
    pub support_radius_factor: f64,
    /// Minimum covering nodes; must exceed the 3 linear basis functions.
    pub min_neighbors: usize,
    /// Moment-matrix condition number triggering support growth.
    pub max_condition: f64,
    /// Support growth factor per retry.
    pub growth: f64,
    /// Retry attempts before reporting insufficient coverage.
    pub attempts: usize,
}

impl Default for MlsConfig {
    fn default() -> Self {
        MlsConfig {
            support_radius_factor: 2.5,
            min_neighbors: 6,
            max_condition: 1e12,
            growth: 1.5,
            attempts: 3,
        }
    }
}

impl MlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_neighbors <= 3 {
            return Err(Error::InvalidConfig(
                "mls min_neighbors must exceed the 3 basis monomials".into(),
            ));
        }
        if self.support_radius_factor <= 0.0 || self.growth <= 1.0 || self.attempts == 0 {
            return Err(Error::InvalidConfig("invalid mls parameters".into()));
        }
        Ok(())
    }
}

struct SizeClass {
    bucket_edge: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

/// Everything the indicator needs about the current mesh: node positions,
/// per-node support radii, a size-classed bucket grid for the inverse
/// range query, and the crack polyline.
pub struct RecoveryContext<'a> {
    pub nodes: Vec<Vec2>,
    /// Test positions: slit-node copies are nudged off the crack line so the
    /// cut test sees which side they belong to.
    test_pos: Vec<Vec2>,
    pub radii: Vec<f64>,
    classes: Vec<SizeClass>,
    origin: Vec2,
    pub crack: Option<&'a CrackGeometry>,
    pub config: MlsConfig,
}

impl<'a> RecoveryContext<'a> {
    pub fn build(
        mesh: &QuadtreeMesh,
        crack: Option<&'a CrackGeometry>,
        config: MlsConfig,
    ) -> Result<Self> {
        config.validate()?;
        let nudge = 0.25 * mesh.unit_length();
        let offset = match mesh.slit().map(|s| s.orientation) {
            Some(SlitOrientation::Horizontal) => Vec2::new(0.0, nudge),
            Some(SlitOrientation::Vertical) => Vec2::new(nudge, 0.0),
            None => Vec2::zeros(),
        };
        let n = mesh.nodes().len();
        let mut nodes = Vec::with_capacity(n);
        let mut test_pos = Vec::with_capacity(n);
        let mut radii = Vec::with_capacity(n);
        for (i, node) in mesh.nodes().iter().enumerate() {
            let local = mesh.node_elements()[i]
                .iter()
                .map(|&e| mesh.cell_size_mm(mesh.elements()[e as usize].cell))
                .fold(0.0f64, f64::max);
            nodes.push(node.pos);
            radii.push(config.support_radius_factor * local);
            test_pos.push(match node.side {
                NodeSide::Plus => node.pos + offset,
                NodeSide::Minus => node.pos - offset,
                NodeSide::Neutral => node.pos,
            });
        }

        // bucket nodes by support radius class so the inverse query scans a
        // bounded neighborhood per class
        let mut class_map: HashMap<u64, SizeClass> = HashMap::new();
        for (i, &r) in radii.iter().enumerate() {
            let key = (r / mesh.unit_length()).round() as u64;
            let class = class_map.entry(key).or_insert_with(|| SizeClass {
                bucket_edge: r.max(mesh.unit_length()),
                buckets: HashMap::new(),
            });
            let bx = ((nodes[i].x - mesh.domain().origin.x) / class.bucket_edge).floor() as i64;
            let by = ((nodes[i].y - mesh.domain().origin.y) / class.bucket_edge).floor() as i64;
            class.buckets.entry((bx, by)).or_default().push(i as u32);
        }
        let mut classes: Vec<SizeClass> = class_map.into_values().collect();
        classes.sort_by(|a, b| a.bucket_edge.total_cmp(&b.bucket_edge));

        Ok(RecoveryContext {
            nodes,
            test_pos,
            radii,
            classes,
            origin: mesh.domain().origin,
            crack,
            config,
        })
    }

    /// Node indices whose (scaled) Euclidean support ball covers `x`.
    fn candidates(&self, x: Vec2, scale: f64) -> Vec<u32> {
        let mut out = Vec::new();
        for class in &self.classes {
            let bx = ((x.x - self.origin.x) / class.bucket_edge).floor() as i64;
            let by = ((x.y - self.origin.y) / class.bucket_edge).floor() as i64;
            let reach = scale.ceil() as i64;
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    if let Some(ids) = class.buckets.get(&(bx + dx, by + dy)) {
                        for &k in ids {
                            let d = (x - self.nodes[k as usize]).norm();
                            if d < self.radii[k as usize] * scale {
                                out.push(k);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Weight and its spatial gradient for node `k` at `x`, supports scaled
    /// by `scale`.
    fn weight(&self, x: Vec2, k: usize, scale: f64) -> (f64, Vec2) {
        let d_k = self.radii[k] * scale;
        let xk = self.nodes[k];
        let (s, ds) = match self.crack {
            Some(crack) if crack.cuts_segment(self.test_pos[k], x) => {
                let c = crack.tip();
                let to_x = x - c;
                let r = to_x.norm();
                let s = (r + (c - xk).norm()) / d_k;
                let ds = if r > 0.0 {
                    to_x / (r * d_k)
                } else {
                    Vec2::zeros()
                };
                (s, ds)
            }
            _ => {
                let to_x = x - xk;
                let r = to_x.norm();
                let s = r / d_k;
                let ds = if r > 0.0 {
                    to_x / (r * d_k)
                } else {
                    Vec2::zeros()
                };
                (s, ds)
            }
        };
        (spline_weight(s), spline_weight_deriv(s) * ds)
    }
}

/// MLS shape functions and gradients at `x`: values `psi` and gradients
/// `dpsi` per covering node, plus the node indices themselves.
pub struct MlsShape {
    pub nodes: Vec<u32>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<[f64; 2]>,
}

/// Evaluates the MLS fit at `x`, growing supports on ill-conditioned moment
/// matrices up to the configured number of attempts.
pub fn mls_shape(ctx: &RecoveryContext, x: Vec2) -> Result<MlsShape> {
    let cfg = &ctx.config;
    let mut last_reason = String::new();
    for attempt in 0..cfg.attempts {
        let scale = cfg.growth.powi(attempt as i32);
        let candidates = ctx.candidates(x, scale);
        // keep only strictly positive weights
        let mut nodes = Vec::with_capacity(candidates.len());
        let mut weights = Vec::with_capacity(candidates.len());
        let mut dweights = Vec::with_capacity(candidates.len());
        for &k in &candidates {
            let (w, dw) = ctx.weight(x, k as usize, scale);
            if w > 0.0 {
                nodes.push(k);
                weights.push(w);
                dweights.push(dw);
            }
        }
        if nodes.len() < cfg.min_neighbors {
            last_reason = format!(
                "{} covering nodes, need {} (attempt {})",
                nodes.len(),
                cfg.min_neighbors,
                attempt + 1
            );
            continue;
        }

        match mls_solve(ctx, x, &nodes, &weights, &dweights) {
            Ok(shape) => return Ok(shape),
            Err(reason) => last_reason = format!("{reason} (attempt {})", attempt + 1),
        }
    }
    Err(Error::MlsCoverage {
        x: x.x,
        y: x.y,
        reason: last_reason,
    })
}

/// Shifted/scaled linear basis solve with analytic derivatives.
fn mls_solve(
    ctx: &RecoveryContext,
    x: Vec2,
    nodes: &[u32],
    weights: &[f64],
    dweights: &[Vec2],
) -> std::result::Result<MlsShape, String> {
    let n = nodes.len();
    // basis p = [1, (xk-x)/c, (yk-y)/c] centered on the evaluation point
    let c = nodes
        .iter()
        .map(|&k| ctx.radii[k as usize])
        .sum::<f64>()
        / n as f64;
    let inv_c = 1.0 / c;

    let p: Vec<Vector3<f64>> = nodes
        .iter()
        .map(|&k| {
            let d = ctx.nodes[k as usize] - x;
            Vector3::new(1.0, d.x * inv_c, d.y * inv_c)
        })
        .collect();
    // dp/dx and dp/dy are constant: the basis shift moves with x
    let dp_dx = Vector3::new(0.0, -inv_c, 0.0);
    let dp_dy = Vector3::new(0.0, 0.0, -inv_c);

    let mut a = Matrix3::zeros();
    let mut a_dx = Matrix3::zeros();
    let mut a_dy = Matrix3::zeros();
    for i in 0..n {
        let ppt = p[i] * p[i].transpose();
        a += weights[i] * ppt;
        let symm_x = dp_dx * p[i].transpose() + p[i] * dp_dx.transpose();
        let symm_y = dp_dy * p[i].transpose() + p[i] * dp_dy.transpose();
        a_dx += dweights[i].x * ppt + weights[i] * symm_x;
        a_dy += dweights[i].y * ppt + weights[i] * symm_y;
    }

    let eig = a.symmetric_eigenvalues();
    let (emin, emax) = (eig.min(), eig.max());
    if emin <= 0.0 || emax / emin > ctx.config.max_condition {
        return Err(format!(
            "moment matrix ill-conditioned (cond ~ {:.3e})",
            emax / emin.max(f64::MIN_POSITIVE)
        ));
    }
    let a_inv = a.try_inverse().ok_or("moment matrix singular")?;

    // gamma = A^{-1} p(0); p(0) = e1 in the shifted basis
    let e1 = Vector3::new(1.0, 0.0, 0.0);
    let gamma = a_inv * e1;
    let gamma_dx = -(a_inv * (a_dx * gamma));
    let gamma_dy = -(a_inv * (a_dy * gamma));

    let mut psi = Vec::with_capacity(n);
    let mut dpsi = Vec::with_capacity(n);
    for i in 0..n {
        let b = weights[i] * p[i];
        psi.push(gamma.dot(&b));
        let b_dx = dweights[i].x * p[i] + weights[i] * dp_dx;
        let b_dy = dweights[i].y * p[i] + weights[i] * dp_dy;
        dpsi.push([
            gamma_dx.dot(&b) + gamma.dot(&b_dx),
            gamma_dy.dot(&b) + gamma.dot(&b_dy),
        ]);
    }
    Ok(MlsShape {
        nodes: nodes.to_vec(),
        psi,
        dpsi,
    })
}

/// Recovered (smoothed) strain at `x` in tensor components
/// (eps_xx, eps_yy, eps_xy).
pub fn recovered_strain(ctx: &RecoveryContext, x: Vec2, u: &[f64]) -> Result<[f64; 3]> {
    let shape = mls_shape(ctx, x)?;
    let mut exx = 0.0;
    let mut eyy = 0.0;
    let mut gxy = 0.0;
    for (i, &k) in shape.nodes.iter().enumerate() {
        let ux = u[2 * k as usize];
        let uy = u[2 * k as usize + 1];
        let [dx, dy] = shape.dpsi[i];
        exx += dx * ux;
        eyy += dy * uy;
        gxy += dy * ux + dx * uy;
    }
    Ok([exx, eyy, 0.5 * gxy])
}

/// Energy-style element error: sqrt of the integrated squared Frobenius
/// mismatch between compatible and recovered strain.
pub fn element_error(
    mesh: &QuadtreeMesh,
    quad: &MeshQuadrature,
    ctx: &RecoveryContext,
    u: &[f64],
    e: usize,
) -> Result<f64> {
    let elem = &mesh.elements()[e];
    let mut acc = 0.0;
    for qp in quad.element_points(e) {
        // compatible strain from the element shape gradients
        let mut exx = 0.0;
        let mut eyy = 0.0;
        let mut gxy = 0.0;
        for (a, &node) in elem.nodes.iter().enumerate() {
            let ux = u[2 * node as usize];
            let uy = u[2 * node as usize + 1];
            let [dx, dy] = qp.shape.dn[a];
            exx += dx * ux;
            eyy += dy * uy;
            gxy += dy * ux + dx * uy;
        }
        let exy = 0.5 * gxy;
        let rec = recovered_strain(ctx, qp.pos, u)?;
        let dxx = exx - rec[0];
        let dyy = eyy - rec[1];
        let dxy = exy - rec[2];
        acc += qp.weight * (dxx * dxx + dyy * dyy + 2.0 * dxy * dxy);
    }
    Ok(acc.sqrt())
}

/// Per-element error norms for the whole mesh, evaluated in parallel.
pub fn compute_error_map(
    mesh: &QuadtreeMesh,
    quad: &MeshQuadrature,
    ctx: &RecoveryContext,
    u: &[f64],
) -> Result<ErrorMap> {
    let n = mesh.elements().len();
    let per_element =
        crate::par::try_map_range(n, |e| element_error(mesh, quad, ctx, u, e))?;
    let global = global_error(&per_element);
    Ok(ErrorMap {
        per_element,
        global,
    })
}

/// Domain error norm: sqrt of the sum of squared element errors.
pub fn global_error(element_errors: &[f64]) -> f64 {
    element_errors.iter().map(|e| e * e).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeSet;

    #[test]
    fn spline_endpoints_and_midpoint() {
        assert_eq!(spline_weight(0.0), 1.0);
        assert_eq!(spline_weight(1.0), 0.0);
        assert_relative_eq!(spline_weight(0.5), 0.3125, epsilon = 1e-15);
        assert_eq!(spline_weight(1.5), 0.0);
    }

    #[test]
    fn spline_c1_at_support_edge() {
        // w(1) = 0 and w'(1) = -12 + 24 - 12 = 0
        assert_eq!(spline_weight_deriv(1.0), 0.0);
        let h = 1e-7;
        let fd = (spline_weight(1.0) - spline_weight(1.0 - h)) / h;
        assert!(fd.abs() < 1e-5);
        // interior derivative matches the closed form
        let fd_mid = (spline_weight(0.5 + h) - spline_weight(0.5 - h)) / (2.0 * h);
        assert_relative_eq!(fd_mid, spline_weight_deriv(0.5), max_relative = 1e-6);
    }

    #[test]
    fn diffraction_branches() {
        let crack =
            CrackGeometry::new(vec![Vec2::new(-2.0, 0.0), Vec2::new(1.0, 0.0)]).unwrap();
        // no intersection: plain Euclidean
        let s = diffraction_distance(Vec2::new(3.0, 1.0), Vec2::new(3.0, 0.0), 2.0, &crack);
        assert_relative_eq!(s, 0.5, epsilon = 1e-14);
        // cut segment: reroute over the tip at (1, 0)
        let s = diffraction_distance(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0), 4.0, &crack);
        assert_relative_eq!(s, (2.0f64.sqrt() + 2.0f64.sqrt()) / 4.0, epsilon = 1e-12);
        assert_relative_eq!(s, 0.707_106_781_186_547_5, epsilon = 1e-12);
        // grazing the tip exactly keeps the Euclidean branch
        let s = diffraction_distance(Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0), 4.0, &crack);
        assert_relative_eq!(s, 0.5, epsilon = 1e-14);
    }

    fn uniform_context(level: u32) -> (QuadtreeMesh, MeshQuadrature) {
        let mesh = QuadtreeMesh::build_initial(
            Rect::new(Vec2::zeros(), 1.0, 1.0),
            level,
            6,
        )
        .unwrap();
        let quad = MeshQuadrature::build(&mesh, 2, 2).unwrap();
        (mesh, quad)
    }

    #[test]
    fn mls_linear_reproduction_and_partition_of_unity() {
        let (mesh, _quad) = uniform_context(3);
        let ctx = RecoveryContext::build(&mesh, None, MlsConfig::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let f = |p: Vec2| 0.4 - 1.7 * p.x + 0.9 * p.y;
        for _ in 0..100 {
            let x = Vec2::new(rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99));
            let shape = mls_shape(&ctx, x).unwrap();
            let sum: f64 = shape.psi.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "partition of unity at {x:?}");
            let mut val = 0.0;
            for (i, &k) in shape.nodes.iter().enumerate() {
                val += shape.psi[i] * f(ctx.nodes[k as usize]);
            }
            assert!(
                (val - f(x)).abs() < 1e-9,
                "linear reproduction at {x:?}: {val} vs {}",
                f(x)
            );
        }
    }

    #[test]
    fn mls_gradients_match_central_differences() {
        let (mesh, _quad) = uniform_context(3);
        let ctx = RecoveryContext::build(&mesh, None, MlsConfig::default()).unwrap();
        let h = 1e-6;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let x = Vec2::new(rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8));
            let s0 = mls_shape(&ctx, x).unwrap();
            let sxp = mls_shape(&ctx, x + Vec2::new(h, 0.0)).unwrap();
            let sxm = mls_shape(&ctx, x - Vec2::new(h, 0.0)).unwrap();
            let syp = mls_shape(&ctx, x + Vec2::new(0.0, h)).unwrap();
            let sym = mls_shape(&ctx, x - Vec2::new(0.0, h)).unwrap();
            // node sets can differ between evaluations; compare via a map
            let lookup = |s: &MlsShape, k: u32| -> f64 {
                s.nodes
                    .iter()
                    .position(|&n| n == k)
                    .map(|i| s.psi[i])
                    .unwrap_or(0.0)
            };
            for (i, &k) in s0.nodes.iter().enumerate() {
                let fd_x = (lookup(&sxp, k) - lookup(&sxm, k)) / (2.0 * h);
                let fd_y = (lookup(&syp, k) - lookup(&sym, k)) / (2.0 * h);
                let scale = fd_x.abs().max(fd_y.abs()).max(1e-2);
                assert!(
                    (s0.dpsi[i][0] - fd_x).abs() <= 1e-5 * scale,
                    "dpsi/dx node {k} at {x:?}: {} vs {}",
                    s0.dpsi[i][0],
                    fd_x
                );
                assert!(
                    (s0.dpsi[i][1] - fd_y).abs() <= 1e-5 * scale,
                    "dpsi/dy node {k} at {x:?}: {} vs {}",
                    s0.dpsi[i][1],
                    fd_y
                );
            }
        }
    }

    #[test]
    fn recovered_strain_exact_for_linear_field() {
        let (mesh, quad) = uniform_context(2);
        let ctx = RecoveryContext::build(&mesh, None, MlsConfig::default()).unwrap();
        // u = (0.002 x + 0.001 y, -0.0005 x + 0.003 y)
        let mut u = vec![0.0; 2 * mesh.nodes().len()];
        for (i, n) in mesh.nodes().iter().enumerate() {
            u[2 * i] = 0.002 * n.pos.x + 0.001 * n.pos.y;
            u[2 * i + 1] = -0.0005 * n.pos.x + 0.003 * n.pos.y;
        }
        let eps = recovered_strain(&ctx, Vec2::new(0.4, 0.6), &u).unwrap();
        assert_relative_eq!(eps[0], 0.002, epsilon = 1e-9);
        assert_relative_eq!(eps[1], 0.003, epsilon = 1e-9);
        assert_relative_eq!(eps[2], 0.5 * (0.001 - 0.0005), epsilon = 1e-9);

        // zero displacement -> zero strain
        let zero = vec![0.0; u.len()];
        let eps = recovered_strain(&ctx, Vec2::new(0.3, 0.3), &zero).unwrap();
        assert!(eps.iter().all(|v| v.abs() < 1e-15));

        // element errors vanish identically for a globally linear field
        let emap = compute_error_map(&mesh, &quad, &ctx, &u).unwrap();
        assert!(emap.global < 1e-10, "global error {}", emap.global);
    }

    #[test]
    fn error_map_on_hanging_mesh_linear_field() {
        let mut mesh = QuadtreeMesh::build_initial(
            Rect::new(Vec2::zeros(), 1.0, 1.0),
            2,
            6,
        )
        .unwrap();
        let first = mesh.leaf_ids()[0];
        mesh.refine(&BTreeSet::from([first])).unwrap();
        mesh.balance_2to1().unwrap();
        let quad = MeshQuadrature::build(&mesh, 2, 2).unwrap();
        let ctx = RecoveryContext::build(&mesh, None, MlsConfig::default()).unwrap();
        let mut u = vec![0.0; 2 * mesh.nodes().len()];
        for (i, n) in mesh.nodes().iter().enumerate() {
            u[2 * i] = 1e-3 * n.pos.x;
            u[2 * i + 1] = -2e-3 * n.pos.y;
        }
        let emap = compute_error_map(&mesh, &quad, &ctx, &u).unwrap();
        assert!(emap.global < 1e-10);
        // error-map norm invariant
        let max_sq = emap
            .per_element
            .iter()
            .map(|e| e * e)
            .fold(0.0f64, f64::max);
        let sum_sq: f64 = emap.per_element.iter().map(|e| e * e).sum();
        assert!(emap.global * emap.global >= max_sq - 1e-30);
        assert!(emap.global * emap.global <= sum_sq + 1e-30 + 1e-10 * sum_sq);
    }

    #[test]
    fn global_error_pythagoras() {
        assert_eq!(global_error(&[]), 0.0);
        assert_eq!(global_error(&[7.0]), 7.0);
        assert_relative_eq!(global_error(&[3.0, 4.0]), 5.0, epsilon = 1e-15);
    }

    #[test]
    fn crack_shrinks_weights_across() {
        // nodes separated from x by the crack get strictly smaller weight
        // than the same geometry without a crack
        let (mesh, _quad) = uniform_context(3);
        let crack =
            CrackGeometry::new(vec![Vec2::new(0.0, 0.5), Vec2::new(0.6, 0.5)]).unwrap();
        let ctx_free = RecoveryContext::build(&mesh, None, MlsConfig::default()).unwrap();
        let ctx_crack =
            RecoveryContext::build(&mesh, Some(&crack), MlsConfig::default()).unwrap();
        let x = Vec2::new(0.3, 0.4);
        // node straight above x, across the crack line
        let k = mesh
            .nodes()
            .iter()
            .position(|n| (n.pos - Vec2::new(0.25, 0.625)).norm() < 1e-9)
            .unwrap();
        let (w_free, _) = ctx_free.weight(x, k, 1.0);
        let (w_crack, _) = ctx_crack.weight(x, k, 1.0);
        assert!(w_free > 0.0);
        assert!(
            w_crack < w_free,
            "diffracted weight {w_crack} must drop below {w_free}"
        );
    }

    #[test]
    fn quadratic_field_recovery_beats_compatible_strain() {
        // on a coarse mesh, the recovered strain of a quadratic displacement
        // field is closer to the exact strain in L2 than the FE strain
        let (mesh, quad) = uniform_context(2);
        let ctx = RecoveryContext::build(&mesh, None, MlsConfig::default()).unwrap();
        let mut u = vec![0.0; 2 * mesh.nodes().len()];
        for (i, n) in mesh.nodes().iter().enumerate() {
            u[2 * i] = 1e-3 * n.pos.x * n.pos.x;
            u[2 * i + 1] = 0.0;
        }
        let exact = |p: Vec2| [2e-3 * p.x, 0.0, 0.0];
        let mut fe_err = 0.0;
        let mut rec_err = 0.0;
        for (e, elem) in mesh.elements().iter().enumerate() {
            for qp in quad.element_points(e) {
                let ex = exact(qp.pos);
                let mut exx = 0.0;
                let mut eyy = 0.0;
                let mut gxy = 0.0;
                for (a, &node) in elem.nodes.iter().enumerate() {
                    let [dx, dy] = qp.shape.dn[a];
                    exx += dx * u[2 * node as usize];
                    eyy += dy * u[2 * node as usize + 1];
                    gxy += dy * u[2 * node as usize] + dx * u[2 * node as usize + 1];
                }
                let rec = recovered_strain(&ctx, qp.pos, &u).unwrap();
                fe_err += qp.weight
                    * ((exx - ex[0]).powi(2)
                        + (eyy - ex[1]).powi(2)
                        + 2.0 * (0.5 * gxy - ex[2]).powi(2));
                rec_err += qp.weight
                    * ((rec[0] - ex[0]).powi(2)
                        + (rec[1] - ex[1]).powi(2)
                        + 2.0 * (rec[2] - ex[2]).powi(2));
            }
        }
        assert!(
            rec_err < fe_err,
            "recovered L2 error {rec_err} should beat compatible {fe_err}"
        );
    }
}
