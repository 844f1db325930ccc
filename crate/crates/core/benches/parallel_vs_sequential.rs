//! Compares the element-parallel hot loops against their sequential twins:
//! stiffness assembly and the recovery error indicator, on a refined
//! edge-crack mesh.
//!
//! The parallel figures use the global rayon pool (all cores); `seq` runs
//! the identical per-element closures through the sequential mapper. A
//! build with `--no-default-features` removes rayon entirely and makes the
//! default path sequential.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use phasefrac::assembly::{
    assemble_elasticity, elasticity_dofs, phase_dofs, MaterialField,
};
use phasefrac::config::SimulationConfig;
use phasefrac::elements::{field_at_quadrature, MeshQuadrature};
use phasefrac::mesh::QuadtreeMesh;
use phasefrac::recovery::{element_error, RecoveryContext};
use phasefrac::solver::Simulation;
use phasefrac::sparse::{AssemblyPattern, SparseSym};

const CONFIG: &str = r#"
[geometry]
width = 1.0
height = 1.0
notch = [[0.0, 0.5], [0.5, 0.5]]

[material]
e1 = 114800.0
e2 = 11700.0
g12 = 9660.0
nu12 = 0.21
gc = 2.7
theta_deg = 30.0

[schedule]
steps = 12
du = 5e-4

[mesh]
base_level = 3
max_depth = 6
error_tol = 1e-5

[output]
stride = 0

[[boundary.dirichlet]]
edge = "bottom"
component = "x"
value = 0.0

[[boundary.dirichlet]]
edge = "bottom"
component = "y"
value = 0.0

[[boundary.dirichlet]]
edge = "top"
component = "y"
value = "load"
"#;

struct Fixture {
    mesh: QuadtreeMesh,
    quad: MeshQuadrature,
    material: MaterialField,
    pattern_u: AssemblyPattern,
    phi_q: Vec<f64>,
    u: Vec<f64>,
}

/// Drives a few load steps so the mesh is refined around the crack tip and
/// the fields are non-trivial.
fn fixture() -> Fixture {
    let cfg = SimulationConfig::from_toml(CONFIG).unwrap();
    let mut sim = Simulation::new(cfg).unwrap();
    for _ in 0..12 {
        sim.run_step().unwrap();
    }
    let phi_q = field_at_quadrature(&sim.mesh, &sim.quad, &sim.state.phi);
    let pattern_u = AssemblyPattern::build(2 * sim.mesh.nodes().len(), &elasticity_dofs(&sim.mesh));
    // keep the phase pattern alive for parity with solver usage
    let _ = AssemblyPattern::build(sim.mesh.nodes().len(), &phase_dofs(&sim.mesh));
    Fixture {
        phi_q,
        u: sim.state.u.clone(),
        material: sim.material.clone(),
        pattern_u,
        quad: sim.quad.clone(),
        mesh: sim.mesh,
    }
}

fn sequential_elasticity<'a>(fx: &'a Fixture) -> SparseSym<'a> {
    // same local kernels as assemble_elasticity, forced through the
    // sequential mapper
    let n = fx.mesh.elements().len();
    let locals = phasefrac::par::map_range_seq(n, |e| {
        element_local_copy(fx, e)
    });
    let mut k = SparseSym::zeros(&fx.pattern_u);
    for (e, local) in locals.iter().enumerate() {
        k.add_local(e, local);
    }
    k
}

/// Re-derives the elasticity kernel for the sequential baseline without
/// touching the parallel mapper.
fn element_local_copy(fx: &Fixture, e: usize) -> Vec<f64> {
    let elem = &fx.mesh.elements()[e];
    let n = elem.nodes.len();
    let mut ke = vec![0.0; (2 * n) * (2 * n)];
    for (k_local, qp) in fx.quad.element_points(e).iter().enumerate() {
        let idx = fx.quad.offsets[e] + k_local;
        let phi = fx.phi_q[idx];
        let g = (1.0 - phi) * (1.0 - phi) + 1e-6;
        let d = &fx.material.d[idx];
        let w = g * qp.weight;
        for a in 0..n {
            let [dxa, dya] = qp.shape.dn[a];
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

fn bench_assembly(c: &mut Criterion) {
    let fx = fixture();
    let mut group = c.benchmark_group("elasticity_assembly");
    group.bench_with_input(
        BenchmarkId::new("parallel", fx.mesh.elements().len()),
        &fx,
        |b, fx| {
            b.iter(|| {
                assemble_elasticity(
                    &fx.mesh,
                    &fx.quad,
                    &fx.material,
                    &fx.phi_q,
                    1e-6,
                    &fx.pattern_u,
                )
            })
        },
    );
    group.bench_with_input(
        BenchmarkId::new("sequential", fx.mesh.elements().len()),
        &fx,
        |b, fx| b.iter(|| sequential_elasticity(fx)),
    );
    group.finish();
}

fn bench_error_indicator(c: &mut Criterion) {
    let fx = fixture();
    let mls = phasefrac::recovery::MlsConfig::default();
    let ctx = RecoveryContext::build(&fx.mesh, None, mls).unwrap();
    let n = fx.mesh.elements().len();
    let mut group = c.benchmark_group("error_indicator");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("parallel", n), |b| {
        b.iter(|| {
            phasefrac::par::try_map_range(n, |e| {
                element_error(&fx.mesh, &fx.quad, &ctx, &fx.u, e)
            })
            .unwrap()
        })
    });
    group.bench_function(BenchmarkId::new("sequential", n), |b| {
        b.iter(|| {
            phasefrac::par::try_map_range_seq(n, |e| {
                element_error(&fx.mesh, &fx.quad, &ctx, &fx.u, e)
            })
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_assembly, bench_error_indicator);
criterion_main!(benches);
