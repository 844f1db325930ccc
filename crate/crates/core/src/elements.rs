//! Shape functions and quadrature for bilinear quads and hanging-node
//! polygons with mean-value coordinates.

use crate::error::{Error, Result};
use crate::geometry::{cross2, polygon_area, polygon_centroid, Vec2};
use crate::mesh::{ElementKind, QuadtreeMesh};
use nalgebra::DMatrix;

/// Shape function values and physical gradients at one evaluation point.
#[derive(Debug, Clone)]
pub struct ShapeEvaluation {
    pub n: Vec<f64>,
    /// Gradient per node: [d/dx, d/dy] (1/mm).
    pub dn: Vec<[f64; 2]>,
}

/// One quadrature point of an element: position, integration measure
/// (weight times Jacobian, mm^2) and the shape evaluation there.
#[derive(Debug, Clone)]
pub struct QuadraturePoint {
    pub pos: Vec2,
    pub weight: f64,
    pub shape: ShapeEvaluation,
}

/// Standard bilinear shape functions on [-1,1]^2 mapped isoparametrically
/// onto the quad `vertices` (CCW).
pub fn quad_shape(xi: f64, eta: f64, vertices: &[Vec2; 4]) -> Result<ShapeEvaluation> {
    let n = [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ];
    let dn_ref = [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ];
    // Jacobian of the isoparametric map
    let mut j = [[0.0f64; 2]; 2];
    for (a, v) in vertices.iter().enumerate() {
        j[0][0] += dn_ref[a][0] * v.x;
        j[0][1] += dn_ref[a][0] * v.y;
        j[1][0] += dn_ref[a][1] * v.x;
        j[1][1] += dn_ref[a][1] * v.y;
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det.abs() < 1e-14 * (j[0][0].abs() + j[1][1].abs() + 1e-300) || det <= 0.0 {
        return Err(Error::Element(format!(
            "singular or inverted Jacobian (det = {det}) in quad shape evaluation"
        )));
    }
    // [dN/dx; dN/dy] = J^{-1} [dN/dxi; dN/deta]
    let dn = dn_ref
        .iter()
        .map(|g| {
            [
                (j[1][1] * g[0] - j[0][1] * g[1]) / det,
                (-j[1][0] * g[0] + j[0][0] * g[1]) / det,
            ]
        })
        .collect();
    Ok(ShapeEvaluation { n: n.to_vec(), dn })
}

/// Position and integration measure of the isoparametric map at (xi, eta).
fn quad_map(xi: f64, eta: f64, vertices: &[Vec2; 4]) -> (Vec2, f64) {
    let n = [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ];
    let dn_ref = [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ];
    let mut pos = Vec2::zeros();
    let mut j = [[0.0f64; 2]; 2];
    for (a, v) in vertices.iter().enumerate() {
        pos += n[a] * v;
        j[0][0] += dn_ref[a][0] * v.x;
        j[0][1] += dn_ref[a][0] * v.y;
        j[1][0] += dn_ref[a][1] * v.x;
        j[1][1] += dn_ref[a][1] * v.y;
    }
    (pos, j[0][0] * j[1][1] - j[0][1] * j[1][0])
}

/// Mean-value coordinates with analytic gradients at a strictly interior
/// point of a simple CCW polygon.
///
/// tan(alpha/2) is evaluated through the cross/dot half-angle form, which
/// stays finite at the 180-degree vertices of hanging-node polygons. An `x`
/// within `1e-12 * diameter` of a vertex returns the interpolatory limit
/// (Kronecker delta, zero gradient); other boundary or exterior points are
/// an error.
pub fn mean_value_shape(x: Vec2, vertices: &[Vec2]) -> Result<ShapeEvaluation> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::Element("polygon needs at least 3 vertices".into()));
    }
    let diameter = polygon_diameter(vertices);
    let vertex_tol = 1e-12 * diameter;

    // d_i = x_i - x and distances
    let d: Vec<Vec2> = vertices.iter().map(|&v| v - x).collect();
    let r: Vec<f64> = d.iter().map(|v| v.norm()).collect();
    for (i, &ri) in r.iter().enumerate() {
        if ri <= vertex_tol {
            let mut nvals = vec![0.0; n];
            nvals[i] = 1.0;
            return Ok(ShapeEvaluation {
                n: nvals,
                dn: vec![[0.0, 0.0]; n],
            });
        }
    }

    // t_i = tan(alpha_i / 2) = (r_i r_{i+1} - d_i . d_{i+1}) / cross(d_i, d_{i+1})
    let mut t = vec![0.0f64; n];
    let mut dt = vec![[0.0f64; 2]; n];
    for i in 0..n {
        let k = (i + 1) % n;
        let cr = cross2(d[i], d[k]);
        let dot = d[i].dot(&d[k]);
        let u = r[i] * r[k] - dot;
        if cr.abs() <= 1e-14 * r[i] * r[k] {
            if u.abs() <= 1e-12 * r[i] * r[k] {
                // alpha ~ 0: evaluation point far outside the edge fan; treat as 0
                t[i] = 0.0;
                dt[i] = [0.0, 0.0];
                continue;
            }
            return Err(Error::Element(
                "mean-value coordinates evaluated on a polygon edge or outside".into(),
            ));
        }
        t[i] = u / cr;
        // gradients w.r.t. x (note d(d_i)/dx = -I)
        let du = Vec2::new(
            -r[k] * d[i].x / r[i] - r[i] * d[k].x / r[k] + d[i].x + d[k].x,
            -r[k] * d[i].y / r[i] - r[i] * d[k].y / r[k] + d[i].y + d[k].y,
        );
        let dcr = Vec2::new(d[i].y - d[k].y, d[k].x - d[i].x);
        let g = (du * cr - u * dcr) / (cr * cr);
        dt[i] = [g.x, g.y];
    }

    let mut w = vec![0.0f64; n];
    let mut dw = vec![[0.0f64; 2]; n];
    let mut total = 0.0;
    let mut dtotal = [0.0f64; 2];
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let s = t[prev] + t[i];
        w[i] = s / r[i];
        // d(1/r_i)/dx = d_i / r_i^3
        let gx = (dt[prev][0] + dt[i][0]) / r[i] + s * d[i].x / (r[i] * r[i] * r[i]);
        let gy = (dt[prev][1] + dt[i][1]) / r[i] + s * d[i].y / (r[i] * r[i] * r[i]);
        dw[i] = [gx, gy];
        total += w[i];
        dtotal[0] += gx;
        dtotal[1] += gy;
    }
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Element(
            "mean-value weights degenerate; point outside polygon?".into(),
        ));
    }

    let mut nvals = vec![0.0f64; n];
    let mut dn = vec![[0.0f64; 2]; n];
    for i in 0..n {
        nvals[i] = w[i] / total;
        dn[i] = [
            (dw[i][0] - nvals[i] * dtotal[0]) / total,
            (dw[i][1] - nvals[i] * dtotal[1]) / total,
        ];
    }
    Ok(ShapeEvaluation { n: nvals, dn })
}

/// Shape values on the polygon closure: interior points use mean-value
/// coordinates, vertices the Kronecker delta and edge points the linear
/// interpolation between the edge endpoints. Used by the state transfer,
/// where target points routinely sit on old element boundaries.
pub fn polygon_shape_values_closure(x: Vec2, vertices: &[Vec2]) -> Result<Vec<f64>> {
    let n = vertices.len();
    let diameter = polygon_diameter(vertices);
    let tol = 1e-9 * diameter;
    for (i, &v) in vertices.iter().enumerate() {
        if (x - v).norm() <= tol {
            let mut nvals = vec![0.0; n];
            nvals[i] = 1.0;
            return Ok(nvals);
        }
    }
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if crate::geometry::point_segment_distance(x, a, b) <= tol {
            let len = (b - a).norm();
            let s = ((x - a).dot(&(b - a)) / (len * len)).clamp(0.0, 1.0);
            let mut nvals = vec![0.0; n];
            nvals[i] = 1.0 - s;
            nvals[(i + 1) % n] = s;
            return Ok(nvals);
        }
    }
    Ok(mean_value_shape(x, vertices)?.n)
}

fn polygon_diameter(vertices: &[Vec2]) -> f64 {
    let mut lo = vertices[0];
    let mut hi = vertices[0];
    for v in vertices {
        lo.x = lo.x.min(v.x);
        lo.y = lo.y.min(v.y);
        hi.x = hi.x.max(v.x);
        hi.y = hi.y.max(v.y);
    }
    (hi - lo).norm().max(f64::MIN_POSITIVE)
}

/// Fan triangulation from the centroid. Valid for the star-shaped polygons
/// a balanced quadtree produces.
pub fn triangulate_polygon(vertices: &[Vec2]) -> Result<Vec<[Vec2; 3]>> {
    let area = polygon_area(vertices);
    let scale = polygon_diameter(vertices);
    if area <= 1e-12 * scale * scale {
        return Err(Error::Element(format!(
            "degenerate polygon (area {area}, scale {scale})"
        )));
    }
    let c = polygon_centroid(vertices);
    let n = vertices.len();
    Ok((0..n)
        .map(|i| [c, vertices[i], vertices[(i + 1) % n]])
        .collect())
}

/// Gauss-Legendre abscissas and weights on [-1, 1].
fn gauss_1d(order: usize) -> Result<&'static [(f64, f64)]> {
    const G1: [(f64, f64); 1] = [(0.0, 2.0)];
    const G2: [(f64, f64); 2] = [
        (-0.577_350_269_189_625_8, 1.0),
        (0.577_350_269_189_625_8, 1.0),
    ];
    const G3: [(f64, f64); 3] = [
        (-0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
        (0.0, 0.888_888_888_888_888_9),
        (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
    ];
    const G4: [(f64, f64); 4] = [
        (-0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
        (-0.339_981_043_584_856_26, 0.652_145_154_862_546_2),
        (0.339_981_043_584_856_26, 0.652_145_154_862_546_2),
        (0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
    ];
    match order {
        1 => Ok(&G1),
        2 => Ok(&G2),
        3 => Ok(&G3),
        4 => Ok(&G4),
        _ => Err(Error::Element(format!("unsupported quadrature order {order}"))),
    }
}

/// Symmetric triangle rules in barycentric coordinates; weights sum to 1.
/// Order maps to exactness degree 1, 2, 4 and 5. All points are strictly
/// interior, so polygon shape functions stay evaluable.
fn triangle_rule(order: usize) -> Result<Vec<([f64; 3], f64)>> {
    let pts = match order {
        1 => vec![([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)],
        2 => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            vec![
                ([a, b, b], 1.0 / 3.0),
                ([b, a, b], 1.0 / 3.0),
                ([b, b, a], 1.0 / 3.0),
            ]
        }
        3 => {
            let (a1, b1, w1) = (
                0.108_103_018_168_070_2,
                0.445_948_490_915_964_9,
                0.223_381_589_678_011_4,
            );
            let (a2, b2, w2) = (
                0.816_847_572_980_458_5,
                0.091_576_213_509_770_74,
                0.109_951_743_655_321_87,
            );
            vec![
                ([a1, b1, b1], w1),
                ([b1, a1, b1], w1),
                ([b1, b1, a1], w1),
                ([a2, b2, b2], w2),
                ([b2, a2, b2], w2),
                ([b2, b2, a2], w2),
            ]
        }
        4 => {
            let (a1, b1, w1) = (
                0.059_715_871_789_769_82,
                0.470_142_064_105_115_1,
                0.132_394_152_788_506_2,
            );
            let (a2, b2, w2) = (
                0.797_426_985_353_087_3,
                0.101_286_507_323_456_34,
                0.125_939_180_544_827_2,
            );
            vec![
                ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
                ([a1, b1, b1], w1),
                ([b1, a1, b1], w1),
                ([b1, b1, a1], w1),
                ([a2, b2, b2], w2),
                ([b2, a2, b2], w2),
                ([b2, b2, a2], w2),
            ]
        }
        _ => {
            return Err(Error::Element(format!(
                "unsupported polygon quadrature order {order}"
            )))
        }
    };
    Ok(pts)
}

/// Quadrature positions and weights for an element given its CCW vertices.
/// Quads get a tensor Gauss rule of `order` points per axis; polygons a
/// per-triangle rule on the centroid fan.
pub fn quadrature_points(
    vertices: &[Vec2],
    kind: ElementKind,
    order: usize,
) -> Result<Vec<(Vec2, f64)>> {
    match kind {
        ElementKind::Quad => {
            if vertices.len() != 4 {
                return Err(Error::Element("quad must have 4 vertices".into()));
            }
            let quad: &[Vec2; 4] = vertices.try_into().unwrap();
            let rule = gauss_1d(order)?;
            let mut out = Vec::with_capacity(order * order);
            for &(eta, w_eta) in rule {
                for &(xi, w_xi) in rule {
                    let (pos, det) = quad_map(xi, eta, quad);
                    if det <= 0.0 {
                        return Err(Error::Element("inverted quad geometry".into()));
                    }
                    out.push((pos, w_xi * w_eta * det));
                }
            }
            Ok(out)
        }
        ElementKind::Polygon => {
            let tris = triangulate_polygon(vertices)?;
            let rule = triangle_rule(order)?;
            let mut out = Vec::with_capacity(tris.len() * rule.len());
            for tri in &tris {
                let area = 0.5 * cross2(tri[1] - tri[0], tri[2] - tri[0]);
                for &(bary, w) in &rule {
                    let pos = bary[0] * tri[0] + bary[1] * tri[1] + bary[2] * tri[2];
                    out.push((pos, w * area));
                }
            }
            Ok(out)
        }
    }
}

/// Full quadrature with shape evaluations for one element.
pub fn element_quadrature(
    vertices: &[Vec2],
    kind: ElementKind,
    quad_order: usize,
    poly_order: usize,
) -> Result<Vec<QuadraturePoint>> {
    match kind {
        ElementKind::Quad => {
            let quad: &[Vec2; 4] = vertices
                .try_into()
                .map_err(|_| Error::Element("quad must have 4 vertices".into()))?;
            let rule = gauss_1d(quad_order)?;
            let mut out = Vec::with_capacity(quad_order * quad_order);
            for &(eta, w_eta) in rule {
                for &(xi, w_xi) in rule {
                    let (pos, det) = quad_map(xi, eta, quad);
                    let shape = quad_shape(xi, eta, quad)?;
                    out.push(QuadraturePoint {
                        pos,
                        weight: w_xi * w_eta * det,
                        shape,
                    });
                }
            }
            Ok(out)
        }
        ElementKind::Polygon => {
            let pts = quadrature_points(vertices, kind, poly_order)?;
            let mut qps: Vec<QuadraturePoint> = pts
                .into_iter()
                .map(|(pos, weight)| {
                    Ok(QuadraturePoint {
                        pos,
                        weight,
                        shape: mean_value_shape(pos, vertices)?,
                    })
                })
                .collect::<Result<_>>()?;
            correct_polygon_gradients(vertices, &mut qps);
            Ok(qps)
        }
    }
}

/// Restores quadrature-level linear consistency of the polygon gradients.
///
/// Mean-value gradients are rational, so a fixed triangle rule misses the
/// divergence identity `sum_q w_q grad(N_i) = closed-boundary integral of
/// N_i n ds`, which is what the patch test rides on. The boundary integral
/// is exact (traces are linear along edges); distributing the defect as a
/// constant per node makes the identity hold without touching the values.
/// The corrections sum to zero over the nodes, so the gradient-sum-zero
/// property survives.
fn correct_polygon_gradients(vertices: &[Vec2], qps: &mut [QuadraturePoint]) {
    let n = vertices.len();
    let area: f64 = qps.iter().map(|q| q.weight).sum();
    if area <= 0.0 {
        return;
    }
    for i in 0..n {
        // outward edge-normal integrals of the linear trace at vertex i
        let prev = (i + n - 1) % n;
        let mut exact = Vec2::zeros();
        for &(a, b) in &[(prev, i), (i, (i + 1) % n)] {
            let e = vertices[b] - vertices[a];
            // CCW polygon: outward normal is the edge direction rotated -90
            exact += 0.5 * Vec2::new(e.y, -e.x);
        }
        let mut integrated = Vec2::zeros();
        for q in qps.iter() {
            integrated += q.weight * Vec2::new(q.shape.dn[i][0], q.shape.dn[i][1]);
        }
        let c = (exact - integrated) / area;
        for q in qps.iter_mut() {
            q.shape.dn[i][0] += c.x;
            q.shape.dn[i][1] += c.y;
        }
    }
}

/// Strain-displacement matrix B (3 x 2n, rows eps_xx, eps_yy, gamma_xy) and
/// the scalar-gradient matrix (2 x n) from one shape evaluation.
pub fn b_matrices(shape: &ShapeEvaluation) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = shape.n.len();
    let mut b = DMatrix::zeros(3, 2 * n);
    let mut b_phi = DMatrix::zeros(2, n);
    for a in 0..n {
        let [dx, dy] = shape.dn[a];
        b[(0, 2 * a)] = dx;
        b[(1, 2 * a + 1)] = dy;
        b[(2, 2 * a)] = dy;
        b[(2, 2 * a + 1)] = dx;
        b_phi[(0, a)] = dx;
        b_phi[(1, a)] = dy;
    }
    (b, b_phi)
}

/// Cached quadrature for a whole mesh: one flat point list plus per-element
/// offsets. Rebuilt after each refinement and reused across the staggered
/// iterations of a load step.
#[derive(Debug, Clone)]
pub struct MeshQuadrature {
    pub offsets: Vec<usize>,
    pub points: Vec<QuadraturePoint>,
    pub quad_order: usize,
    pub poly_order: usize,
}

impl MeshQuadrature {
    pub fn build(mesh: &QuadtreeMesh, quad_order: usize, poly_order: usize) -> crate::error::Result<Self> {
        let mut offsets = Vec::with_capacity(mesh.elements().len() + 1);
        let mut points = Vec::new();
        offsets.push(0);
        for elem in mesh.elements() {
            let verts = mesh.element_vertices(elem);
            let qps = element_quadrature(&verts, elem.kind, quad_order, poly_order)?;
            points.extend(qps);
            offsets.push(points.len());
        }
        Ok(MeshQuadrature {
            offsets,
            points,
            quad_order,
            poly_order,
        })
    }

    pub fn element_points(&self, e: usize) -> &[QuadraturePoint] {
        &self.points[self.offsets[e]..self.offsets[e + 1]]
    }

    pub fn element_range(&self, e: usize) -> std::ops::Range<usize> {
        self.offsets[e]..self.offsets[e + 1]
    }

    pub fn total_points(&self) -> usize {
        self.points.len()
    }
}

/// Interpolates a nodal field at every quadrature point.
pub fn field_at_quadrature(
    mesh: &QuadtreeMesh,
    quad: &MeshQuadrature,
    nodal: &[f64],
) -> Vec<f64> {
    let mut out = vec![0.0; quad.total_points()];
    for (e, elem) in mesh.elements().iter().enumerate() {
        for (k, qp) in quad.element_points(e).iter().enumerate() {
            let idx = quad.offsets[e] + k;
            out[idx] = qp
                .shape
                .n
                .iter()
                .zip(&elem.nodes)
                .map(|(&ni, &a)| ni * nodal[a as usize])
                .sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn unit_quad() -> [Vec2; 4] {
        [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ]
    }

    /// 5-node hanging polygon: unit square with a mid-edge node on the south edge.
    fn hanging_pentagon() -> Vec<Vec2> {
        vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.5, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn quad_kronecker_and_center() {
        let verts = unit_quad();
        let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        for (k, &(xi, eta)) in corners.iter().enumerate() {
            let s = quad_shape(xi, eta, &verts).unwrap();
            for (a, &na) in s.n.iter().enumerate() {
                assert_relative_eq!(na, if a == k { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
        let c = quad_shape(0.0, 0.0, &verts).unwrap();
        for &na in &c.n {
            assert_relative_eq!(na, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn quad_linear_completeness() {
        let verts = [
            Vec2::new(0.2, 0.1),
            Vec2::new(1.3, 0.3),
            Vec2::new(1.1, 1.2),
            Vec2::new(0.1, 0.9),
        ];
        let f = |p: Vec2| 0.7 + 1.3 * p.x - 2.1 * p.y;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let xi = rng.gen_range(-1.0..1.0);
            let eta = rng.gen_range(-1.0..1.0);
            let s = quad_shape(xi, eta, &verts).unwrap();
            let (pos, _) = quad_map(xi, eta, &verts);
            let interp: f64 = s.n.iter().zip(&verts).map(|(&na, v)| na * f(*v)).sum();
            assert_relative_eq!(interp, f(pos), epsilon = 1e-12);
            // gradient reproduces the linear field's gradient
            let gx: f64 = s.dn.iter().zip(&verts).map(|(g, v)| g[0] * f(*v)).sum();
            let gy: f64 = s.dn.iter().zip(&verts).map(|(g, v)| g[1] * f(*v)).sum();
            assert_relative_eq!(gx, 1.3, epsilon = 1e-11);
            assert_relative_eq!(gy, -2.1, epsilon = 1e-11);
        }
    }

    #[test]
    fn quad_degenerate_geometry_rejected() {
        let verts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(3.0, 0.0),
        ];
        assert!(quad_shape(0.3, -0.2, &verts).is_err());
    }

    #[test]
    fn mvc_square_center_and_vertex_limit() {
        let verts = unit_quad().to_vec();
        let s = mean_value_shape(Vec2::new(0.5, 0.5), &verts).unwrap();
        for &na in &s.n {
            assert_relative_eq!(na, 0.25, epsilon = 1e-13);
        }
        let sv = mean_value_shape(Vec2::new(1.0, 1.0), &verts).unwrap();
        assert_eq!(sv.n, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn mvc_partition_of_unity_and_linear_reproduction() {
        let verts = hanging_pentagon();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = Vec2::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
            let s = mean_value_shape(x, &verts).unwrap();
            let sum: f64 = s.n.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let mut rx = Vec2::zeros();
            for (a, v) in verts.iter().enumerate() {
                rx += s.n[a] * v;
            }
            assert!((rx - x).norm() < 1e-10, "linear reproduction at {x:?}");
            // gradient consistency: sum of gradients vanishes
            let gx: f64 = s.dn.iter().map(|g| g[0]).sum();
            let gy: f64 = s.dn.iter().map(|g| g[1]).sum();
            assert!(gx.abs() < 1e-9 && gy.abs() < 1e-9);
        }
    }

    #[test]
    fn mvc_gradients_match_central_differences() {
        let verts = hanging_pentagon();
        let h = 1e-6;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = Vec2::new(rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
            let s = mean_value_shape(x, &verts).unwrap();
            let xp = mean_value_shape(x + Vec2::new(h, 0.0), &verts).unwrap();
            let xm = mean_value_shape(x - Vec2::new(h, 0.0), &verts).unwrap();
            let yp = mean_value_shape(x + Vec2::new(0.0, h), &verts).unwrap();
            let ym = mean_value_shape(x - Vec2::new(0.0, h), &verts).unwrap();
            for a in 0..verts.len() {
                let fd_x = (xp.n[a] - xm.n[a]) / (2.0 * h);
                let fd_y = (yp.n[a] - ym.n[a]) / (2.0 * h);
                let scale = fd_x.abs().max(fd_y.abs()).max(1e-3);
                assert!(
                    (s.dn[a][0] - fd_x).abs() <= 1e-5 * scale,
                    "d/dx mismatch at {x:?} node {a}: {} vs {}",
                    s.dn[a][0],
                    fd_x
                );
                assert!(
                    (s.dn[a][1] - fd_y).abs() <= 1e-5 * scale,
                    "d/dy mismatch at {x:?} node {a}: {} vs {}",
                    s.dn[a][1],
                    fd_y
                );
            }
        }
    }

    #[test]
    fn triangulation_counts_and_area() {
        let square = unit_quad().to_vec();
        let tris = triangulate_polygon(&square).unwrap();
        assert_eq!(tris.len(), 4);
        let total: f64 = tris
            .iter()
            .map(|t| 0.5 * cross2(t[1] - t[0], t[2] - t[0]))
            .sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);

        let penta = hanging_pentagon();
        let tris = triangulate_polygon(&penta).unwrap();
        assert_eq!(tris.len(), 5);
        let total: f64 = tris
            .iter()
            .map(|t| 0.5 * cross2(t[1] - t[0], t[2] - t[0]))
            .sum();
        assert_relative_eq!(total, polygon_area(&penta), max_relative = 1e-12);
    }

    #[test]
    fn degenerate_polygon_rejected() {
        let line = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
        ];
        assert!(triangulate_polygon(&line).is_err());
    }

    #[test]
    fn gauss_2x2_integrates_x2y2() {
        let verts = unit_quad();
        let pts = quadrature_points(&verts, ElementKind::Quad, 2).unwrap();
        let integral: f64 = pts.iter().map(|&(p, w)| w * p.x * p.x * p.y * p.y).sum();
        assert_relative_eq!(integral, 1.0 / 9.0, epsilon = 1e-14);
        let area: f64 = pts.iter().map(|&(_, w)| w).sum();
        assert_relative_eq!(area, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn polygon_weights_sum_to_area() {
        let penta = hanging_pentagon();
        for order in 1..=4 {
            let pts = quadrature_points(&penta, ElementKind::Polygon, order).unwrap();
            let area: f64 = pts.iter().map(|&(_, w)| w).sum();
            assert_relative_eq!(area, polygon_area(&penta), max_relative = 1e-12);
        }
    }

    #[test]
    fn polygon_cubic_against_refined_reference() {
        // a degree-4 rule integrates the cubic exactly; compare with a
        // subdivision reference built from the degree-5 rule
        let penta = hanging_pentagon();
        let f = |p: Vec2| 1.0 + 0.5 * p.x - p.y + p.x * p.x * p.y + 0.3 * p.y * p.y * p.y;
        let pts = quadrature_points(&penta, ElementKind::Polygon, 3).unwrap();
        let value: f64 = pts.iter().map(|&(p, w)| w * f(p)).sum();

        let tris = triangulate_polygon(&penta).unwrap();
        let rule = triangle_rule(4).unwrap();
        let mut reference = 0.0;
        for tri in &tris {
            // refine each fan triangle 4x4 by midpoint subdivision
            let mut stack = vec![(*tri, 0u32)];
            while let Some((t, depth)) = stack.pop() {
                if depth == 2 {
                    let area = 0.5 * cross2(t[1] - t[0], t[2] - t[0]);
                    for &(b, w) in &rule {
                        let p = b[0] * t[0] + b[1] * t[1] + b[2] * t[2];
                        reference += w * area * f(p);
                    }
                } else {
                    let m01 = 0.5 * (t[0] + t[1]);
                    let m12 = 0.5 * (t[1] + t[2]);
                    let m20 = 0.5 * (t[2] + t[0]);
                    stack.push(([t[0], m01, m20], depth + 1));
                    stack.push(([m01, t[1], m12], depth + 1));
                    stack.push(([m20, m12, t[2]], depth + 1));
                    stack.push(([m01, m12, m20], depth + 1));
                }
            }
        }
        assert_relative_eq!(value, reference, max_relative = 1e-8);
    }

    #[test]
    fn b_matrix_rigid_and_constant_strain() {
        let verts = unit_quad();
        let s = quad_shape(0.3, -0.4, &verts).unwrap();
        let (b, _) = b_matrices(&s);
        // rigid translation
        let mut u = nalgebra::DVector::zeros(8);
        for a in 0..4 {
            u[2 * a] = 0.7;
            u[2 * a + 1] = -0.2;
        }
        let eps = &b * &u;
        assert!(eps.norm() < 1e-13);
        // u = (x, 0) gives eps = (1, 0, 0)
        let mut u = nalgebra::DVector::zeros(8);
        for (a, v) in verts.iter().enumerate() {
            u[2 * a] = v.x;
        }
        let eps = &b * &u;
        assert_relative_eq!(eps[0], 1.0, epsilon = 1e-12);
        assert!(eps[1].abs() < 1e-12 && eps[2].abs() < 1e-12);
    }

    #[test]
    fn b_matrix_against_finite_differences() {
        let verts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.1, 0.1),
            Vec2::new(1.2, 1.3),
            Vec2::new(-0.1, 1.0),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // displacement interpolant as a function of reference coords is awkward;
        // difference the physical interpolant through the inverse map instead,
        // evaluated close to the element center where the map is well-behaved
        let eval = |xi: f64, eta: f64| -> (Vec2, Vec2) {
            let s = quad_shape(xi, eta, &verts).unwrap();
            let (pos, _) = quad_map(xi, eta, &verts);
            let mut disp = Vec2::zeros();
            for a in 0..4 {
                disp += s.n[a] * Vec2::new(u[2 * a], u[2 * a + 1]);
            }
            (pos, disp)
        };
        let s = quad_shape(0.2, -0.1, &verts).unwrap();
        let (b, _) = b_matrices(&s);
        let eps = &b * nalgebra::DVector::from_column_slice(&u);
        // central differences of the interpolated field in physical space via
        // small reference perturbations and the chain rule
        let h = 1e-6;
        let (p0, _) = eval(0.2, -0.1);
        let num_grad = |dir: usize| -> Vec2 {
            // find reference step that moves ~h in physical direction `dir`
            let mut lo = [0.2, -0.1];
            let mut hi = [0.2, -0.1];
            // use the Jacobian to convert: d(phys)/d(ref)
            let (pxi, _) = eval(0.2 + h, -0.1);
            let (peta, _) = eval(0.2, -0.1 + h);
            let j = [
                [(pxi.x - p0.x) / h, (peta.x - p0.x) / h],
                [(pxi.y - p0.y) / h, (peta.y - p0.y) / h],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let inv = [
                [j[1][1] / det, -j[0][1] / det],
                [-j[1][0] / det, j[0][0] / det],
            ];
            // reference direction corresponding to physical unit step
            let rdir = [inv[0][dir], inv[1][dir]];
            lo[0] -= h * rdir[0];
            lo[1] -= h * rdir[1];
            hi[0] += h * rdir[0];
            hi[1] += h * rdir[1];
            let (_, dlo) = eval(lo[0], lo[1]);
            let (_, dhi) = eval(hi[0], hi[1]);
            (dhi - dlo) / (2.0 * h)
        };
        let dudx = num_grad(0);
        let dudy = num_grad(1);
        assert_relative_eq!(eps[0], dudx.x, max_relative = 1e-6, epsilon = 1e-8);
        assert_relative_eq!(eps[1], dudy.y, max_relative = 1e-6, epsilon = 1e-8);
        assert_relative_eq!(eps[2], dudx.y + dudy.x, max_relative = 1e-6, epsilon = 1e-8);
    }

    #[test]
    fn mesh_quadrature_partition_of_unity() {
        use crate::geometry::Rect;
        use std::collections::BTreeSet;
        let mut mesh = crate::mesh::QuadtreeMesh::build_initial(
            Rect::new(Vec2::zeros(), 1.0, 1.0),
            1,
            6,
        )
        .unwrap();
        let first = mesh.leaf_ids()[0];
        mesh.refine(&BTreeSet::from([first])).unwrap();
        mesh.balance_2to1().unwrap();
        let quad = MeshQuadrature::build(&mesh, 2, 2).unwrap();
        for qp in &quad.points {
            let sum: f64 = qp.shape.n.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let gx: f64 = qp.shape.dn.iter().map(|g| g[0]).sum();
            let gy: f64 = qp.shape.dn.iter().map(|g| g[1]).sum();
            assert!(gx.abs() < 1e-9 && gy.abs() < 1e-9);
        }
        let total: f64 = quad.points.iter().map(|q| q.weight).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
    }
}
