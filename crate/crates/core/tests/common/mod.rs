//! Oracles shared by the integration tests. Everything here is computed from point
//! evaluations of discrete fields, independently of the assembly loops.

#![allow(dead_code)]

use std::sync::Arc;

use oseen_sv::assembly::{LengthScale, StabConfig, StabVariant};
use oseen_sv::basis::deriv_index;
use oseen_sv::fespace::{VelocityField, VelocitySpace};
use oseen_sv::problem::{ProblemCase, VectorField};
use oseen_sv::quadrature::{EdgeRule, TriangleRule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_field(space: &Arc<VelocitySpace>, seed: u64, interior_only: bool) -> VelocityField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = space.boundary_dof_mask();
    let coeffs = (0..space.num_dofs())
        .map(|i| if interior_only && mask[i] { 0.0 } else { rng.gen_range(-1.0..1.0) })
        .collect();
    VelocityField::new(space.clone(), coeffs).unwrap()
}

/// Largest nodal difference between a discrete velocity and a field.
pub fn nodal_deviation(u: &VelocityField, exact: &VectorField) -> f64 {
    let mut dev: f64 = 0.0;
    for (n, x) in u.space.node_coords().iter().enumerate() {
        let e = exact.value(*x);
        dev = dev.max((u.coeffs[2 * n] - e[0]).abs()).max((u.coeffs[2 * n + 1] - e[1]).abs());
    }
    dev
}

/// `max |∇u|` (Frobenius) over cell quadrature points.
pub fn max_gradient(u: &VelocityField, rule: &TriangleRule) -> f64 {
    let space = &u.space;
    let mut m: f64 = 0.0;
    for c in 0..space.mesh().num_cells() {
        for (xi, _) in rule.iter() {
            let d = u.evaluate(c, *xi, 1).unwrap();
            m = m.max((d[0][1].powi(2) + d[0][2].powi(2) + d[1][1].powi(2) + d[1][2].powi(2)).sqrt());
        }
    }
    m
}

/// `σ‖u‖² + μ‖∇u‖²` by cell quadrature.
pub fn reaction_diffusion_energy(u: &VelocityField, sigma: f64, mu: f64, rule: &TriangleRule) -> f64 {
    let space = &u.space;
    let (mut l2, mut h1) = (0.0, 0.0);
    for c in 0..space.mesh().num_cells() {
        let det = space.map(c).det;
        for (xi, w) in rule.iter() {
            let d = u.evaluate(c, *xi, 1).unwrap();
            l2 += w * det * (d[0][0].powi(2) + d[1][0].powi(2));
            h1 += w * det * (d[0][1].powi(2) + d[0][2].powi(2) + d[1][1].powi(2) + d[1][2].powi(2));
        }
    }
    sigma * l2 + mu * h1
}

/// `S(u,u)` facet by facet from both-side evaluations, with the product rule for
/// `(β·∇)u`, its curl and the gradient of the curl expanded by hand.
pub fn stabilization_energy(field: &VelocityField, case: &ProblemCase, config: &StabConfig, scale: f64, rule: &EdgeRule) -> f64 {
    let space = &field.space;
    let mesh = space.mesh();
    let mesh_h = (0..mesh.num_cells()).map(|c| mesh.cell_diameter(c)).fold(0.0, f64::max);
    let mut total = 0.0;
    for facet in space.facets().facets.iter().filter(|f| f.is_interior()) {
        let cells = [facet.first.cell, facet.second.as_ref().unwrap().cell];
        let (pa, pb) = (mesh.vertices[facet.vertices[0]], mesh.vertices[facet.vertices[1]]);
        let len = facet.diameter;
        let h = match config.length_scale {
            LengthScale::Mesh => mesh_h,
            LengthScale::Facet => len,
        };
        let n = facet.normal;
        for (t, w) in rule.iter() {
            let x = [pa[0] + t[0] * (pb[0] - pa[0]), pa[1] + t[0] * (pb[1] - pa[1])];
            let b = case.beta.jet(x);
            let mut q = [[0.0f64; 6]; 2];
            for (s, &c) in cells.iter().enumerate() {
                let d = field.evaluate(c, space.map(c).to_reference(x), 3).unwrap();
                let g = |comp: usize, e: [usize; 2]| d[comp][deriv_index(e[0], e[1])];
                let unit = |j: usize| if j == 0 { [1, 0] } else { [0, 1] };
                let add = |a: [usize; 2], b: [usize; 2]| [a[0] + b[0], a[1] + b[1]];
                // a_k = β_j ∂_j u_k
                let a: [f64; 2] = std::array::from_fn(|k| (0..2).map(|j| b.value[j] * g(k, unit(j))).sum());
                // ∂_m a_k = ∂_m β_j ∂_j u_k + β_j ∂_j ∂_m u_k
                let da = |k: usize, m: usize| -> f64 {
                    (0..2).map(|j| b.grad[j][m] * g(k, unit(j)) + b.value[j] * g(k, add(unit(j), unit(m)))).sum()
                };
                // ∂_l ∂_m a_k
                let dda = |k: usize, m: usize, l: usize| -> f64 {
                    (0..2)
                        .map(|j| {
                            b.hess[j][m + l] * g(k, unit(j))
                                + b.grad[j][m] * g(k, add(unit(j), unit(l)))
                                + b.grad[j][l] * g(k, add(unit(j), unit(m)))
                                + b.value[j] * g(k, add(add(unit(j), unit(m)), unit(l)))
                        })
                        .sum()
                };
                q[s] = [
                    a[0] * n[1] - a[1] * n[0],
                    da(1, 0) - da(0, 1),
                    dda(1, 0, 0) - dda(0, 1, 0),
                    dda(1, 0, 1) - dda(0, 1, 1),
                    a[0],
                    a[1],
                ];
            }
            let j: Vec<f64> = (0..6).map(|i| q[0][i] - q[1][i]).collect();
            let [d1, d2, d3] = config.delta;
            let value = match config.variant {
                StabVariant::None => 0.0,
                StabVariant::CurlCip => {
                    d1 * h.powi(2) * j[0] * j[0] + d2 * h.powi(4) * j[1] * j[1] + d3 * h.powi(6) * (j[2] * j[2] + j[3] * j[3])
                }
                StabVariant::ClassicalCip => d1 * h.powi(2) * (j[4] * j[4] + j[5] * j[5]),
            };
            total += w * len * scale * value;
        }
    }
    total
}
