use super::*;
use crate::fespace::{build_pressure_space, build_velocity_space, interpolate_pressure, interpolate_velocity, VelocityField};
use crate::mesh::mesh_level;
use crate::problem::{
    case_boundary_layer, case_lattice_flow, case_polynomial_patch, compact_bubble_beta, ScalarField, ScalarJet, VectorField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spaces(level: usize, k: usize) -> (Arc<VelocitySpace>, Arc<PressureSpace>) {
    let mesh = Arc::new(mesh_level(level).unwrap());
    (
        Arc::new(build_velocity_space(mesh.clone(), k).unwrap()),
        Arc::new(build_pressure_space(mesh, k).unwrap()),
    )
}

fn custom_case(mu: f64, sigma: f64, beta: VectorField) -> ProblemCase {
    ProblemCase::new("custom", mu, sigma, beta, VectorField::zero(), VectorField::zero(), ScalarField::zero()).unwrap()
}

fn random_field(space: &Arc<VelocitySpace>, seed: u64, interior_only: bool) -> VelocityField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = space.boundary_dof_mask();
    let coeffs = (0..space.num_dofs())
        .map(|i| if interior_only && mask[i] { 0.0 } else { rng.gen_range(-1.0..1.0) })
        .collect();
    VelocityField::new(space.clone(), coeffs).unwrap()
}

fn global_quadratic() -> VectorField {
    VectorField::new(|x| VectorJet {
        value: [1.0 + x[0] - 2.0 * x[1] + 3.0 * x[0] * x[1] - x[1] * x[1], 0.5 * x[0] * x[0] - x[0] * x[1] + 2.0 * x[1]],
        ..Default::default()
    })
}

/// Stabilization energy from both-side evaluations of a discrete field, written without the
/// assembly loop: exact derivatives from `evaluate`, product rule expanded by hand.
fn oracle_energy(field: &VelocityField, case: &ProblemCase, config: &StabConfig, scale: f64, rule: &EdgeRule) -> f64 {
    let space = &field.space;
    let mesh = space.mesh();
    let mut total = 0.0;
    for (_, facet) in space.facets().interior() {
        let cells = [facet.first.cell, facet.second.unwrap().cell];
        let (pa, pb) = (mesh.vertices[facet.vertices[0]], mesh.vertices[facet.vertices[1]]);
        let len = facet.diameter;
        let h = match config.length_scale {
            LengthScale::Mesh => (0..mesh.num_cells()).map(|c| mesh.cell_diameter(c)).fold(0.0, f64::max),
            LengthScale::Facet => len,
        };
        let n = facet.normal;
        for (t, w) in rule.iter() {
            let x = [pa[0] + t[0] * (pb[0] - pa[0]), pa[1] + t[0] * (pb[1] - pa[1])];
            let b = case.beta.jet(x);
            // per side: a = (β·∇)u (2-vector), B = curl a, ∇B
            let mut q = [[0.0f64; 7]; 2];
            for (s, &c) in cells.iter().enumerate() {
                let d = field.evaluate(c, space.map(c).to_reference(x), 3).unwrap();
                let g = |comp: usize, nx: usize, ny: usize| d[comp][crate::basis::deriv_index(nx, ny)];
                let a: [f64; 2] = std::array::from_fn(|k| b.value[0] * g(k, 1, 0) + b.value[1] * g(k, 0, 1));
                // ∂_m a_k = ∂_m β_j ∂_j u_k + β_j ∂_mj u_k
                let da = |k: usize, m: usize| {
                    let (dx, dy) = if m == 0 { ((2, 0), (1, 1)) } else { ((1, 1), (0, 2)) };
                    b.grad[0][m] * g(k, 1, 0) + b.grad[1][m] * g(k, 0, 1) + b.value[0] * g(k, dx.0, dx.1) + b.value[1] * g(k, dy.0, dy.1)
                };
                // second derivatives of a_k
                let dda = |k: usize, m: usize, l: usize| {
                    let h2 = |c: usize, m: usize, l: usize| b.hess[c][m + l];
                    let third = |j: usize| {
                        let mut idx = [0usize; 2];
                        idx[j] += 1;
                        idx[m] += 1;
                        idx[l] += 1;
                        g(k, idx[0], idx[1])
                    };
                    let second = |j: usize, o: usize| {
                        let mut idx = [0usize; 2];
                        idx[j] += 1;
                        idx[o] += 1;
                        g(k, idx[0], idx[1])
                    };
                    (0..2)
                        .map(|j| {
                            let first = if j == 0 { g(k, 1, 0) } else { g(k, 0, 1) };
                            h2(j, m, l) * first + b.grad[j][m] * second(j, l) + b.grad[j][l] * second(j, m) + b.value[j] * third(j)
                        })
                        .sum::<f64>()
                };
                let cross = a[0] * n[1] - a[1] * n[0];
                let curl = da(1, 0) - da(0, 1);
                let grad_curl = [dda(1, 0, 0) - dda(0, 1, 0), dda(1, 0, 1) - dda(0, 1, 1)];
                q[s] = [cross, curl, grad_curl[0], grad_curl[1], a[0], a[1], 0.0];
            }
            let j: Vec<f64> = (0..6).map(|i| q[0][i] - q[1][i]).collect();
            let contrib = match config.variant {
                StabVariant::None => 0.0,
                StabVariant::CurlCip => {
                    config.delta[0] * h * h * j[0] * j[0]
                        + config.delta[1] * h.powi(4) * j[1] * j[1]
                        + config.delta[2] * h.powi(6) * (j[2] * j[2] + j[3] * j[3])
                }
                StabVariant::ClassicalCip => config.delta[0] * h * h * (j[4] * j[4] + j[5] * j[5]),
            };
            total += w * len * scale * contrib;
        }
    }
    total
}

#[test]
fn mass_matrix_integrates_one() {
    let (v, p) = spaces(1, 2);
    let case = custom_case(1e-300, 1.0, VectorField::zero());
    let g = assemble_galerkin(&v, &p, &case, &AssemblyOptions::default()).unwrap();
    let ones: Vec<f64> = (0..v.num_dofs()).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
    let total: f64 = g.a.mul_vec(&ones).iter().sum();
    assert!((total - 1.0).abs() < 1e-13, "{total}");
    assert!(g.warnings.is_empty());
}

#[test]
fn convection_of_linear_field() {
    let (v, p) = spaces(1, 2);
    let case = custom_case(1e-300, 0.0, VectorField::constant([1.0, 0.0]));
    let g = assemble_galerkin(&v, &p, &case, &AssemblyOptions::default()).unwrap();
    let u = interpolate_velocity(&v, &VectorField::new(|x| VectorJet { value: [x[0], 0.0], ..Default::default() }));
    assert!((g.a.bilinear(&u.coeffs, &u.coeffs) - 0.5).abs() < 1e-12);
}

#[test]
fn divergence_free_field_has_zero_pressure_moments() {
    let (v, p) = spaces(2, 2);
    let case = case_polynomial_patch(1.0, 1.0).unwrap();
    let g = assemble_galerkin(&v, &p, &case, &AssemblyOptions::default()).unwrap();
    // curl of x²y: (x², -2xy) is quadratic and solenoidal
    let u = interpolate_velocity(&v, &VectorField::new(|x| VectorJet { value: [x[0] * x[0], -2.0 * x[0] * x[1]], ..Default::default() }));
    let bu = g.b.mul_vec(&u.coeffs);
    assert!(bu.iter().all(|v| v.abs() <= 1e-12));
    let ue = interpolate_velocity(&v, &case.exact_u);
    assert!(g.b.mul_vec(&ue.coeffs).iter().all(|v| v.abs() <= 1e-12));
}

#[test]
fn galerkin_block_spd_without_convection() {
    let (v, p) = spaces(1, 2);
    let case = custom_case(0.5, 2.0, VectorField::zero());
    let g = assemble_galerkin(&v, &p, &case, &AssemblyOptions::default()).unwrap();
    assert!(g.a.asymmetry() <= 1e-14 * g.a.max_abs());
    for seed in 0..10 {
        let u = random_field(&v, seed, true);
        assert!(g.a.bilinear(&u.coeffs, &u.coeffs) > 0.0);
    }
}

#[test]
fn low_quadrature_warns() {
    let (v, p) = spaces(1, 2);
    let case = case_polynomial_patch(1.0, 1.0).unwrap();
    let opts = AssemblyOptions { tri_degree: Some(1), ..Default::default() };
    let g = assemble_galerkin(&v, &p, &case, &opts).unwrap();
    assert_eq!(g.warnings.len(), 1);
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let (v, p) = spaces(2, 2);
    let case = case_lattice_flow(1e-3, 1.0).unwrap();
    let stab = StabConfig::curl(2.0, 2.0, 2.0);
    let seq = assemble_system(v.clone(), p.clone(), &case, &stab, &AssemblyOptions::default()).unwrap();
    let par = assemble_system(v, p, &case, &stab, &AssemblyOptions { parallel: true, ..Default::default() }).unwrap();
    assert_eq!(seq.a, par.a);
    assert_eq!(seq.s, par.s);
    assert_eq!(seq.b, par.b);
    assert_eq!(seq.rhs_u, par.rhs_u);
}

#[test]
fn stabilization_is_symmetric_and_semidefinite() {
    let (v, _) = spaces(2, 2);
    let case = case_lattice_flow(1e-9, 1.0).unwrap();
    for stab in [StabConfig::curl(2.0, 2.0, 2.0), StabConfig::curl(1.0, 0.5, 0.1), StabConfig::classical(1.0)] {
        let s = assemble_stabilization(&v, v.facets(), &case, &stab, &AssemblyOptions::default()).unwrap();
        assert!(s.max_abs() > 0.0);
        assert!(s.asymmetry() <= 1e-12 * s.max_abs());
        for seed in 0..10 {
            let u = random_field(&v, seed, false);
            assert!(s.bilinear(&u.coeffs, &u.coeffs) >= -1e-12);
        }
    }
}

#[test]
fn stabilization_vanishes_on_global_polynomials() {
    let opts = AssemblyOptions::default();
    for level in [1, 2] {
        let (v, _) = spaces(level, 2);
        let u = interpolate_velocity(&v, &global_quadratic());
        let umax = u.coeffs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for case in [case_polynomial_patch(1.0, 1.0).unwrap(), case_lattice_flow(1e-9, 1.0).unwrap()] {
            let base = [StabConfig::curl(1.0, 1.0, 1.0), StabConfig::classical(1.0)];
            for stab in base.into_iter().chain(base.map(|s| StabConfig { length_scale: LengthScale::Facet, ..s })) {
                let s = assemble_stabilization(&v, v.facets(), &case, &stab, &opts).unwrap();
                let su = s.mul_vec(&u.coeffs);
                let worst = su.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                // the product carries roundoff of order eps times the largest entry, which
                // stays below 1e-12 only for constant β with facet-length weights
                if case.name == "patch" && stab.length_scale == LengthScale::Facet {
                    assert!(worst <= 1e-12, "{worst}");
                }
                assert!(worst <= 1e-14 * s.max_abs() * umax, "{worst}");
                let energy = stabilization_seminorm_sq(&u, &case, &stab, &opts).unwrap();
                assert!((0.0..=1e-20).contains(&energy), "{energy}");
            }
        }
    }
}

#[test]
fn seminorm_matches_quadratic_form() {
    let (v, _) = spaces(1, 3);
    let case = case_lattice_flow(1e-9, 1.0).unwrap();
    let opts = AssemblyOptions::default();
    for stab in [StabConfig::curl(2.0, 2.0, 2.0), StabConfig::classical(1.0), StabConfig::none()] {
        let s = assemble_stabilization(&v, v.facets(), &case, &stab, &opts).unwrap();
        for seed in 0..3 {
            let u = random_field(&v, seed, false);
            let (a, b) = (s.bilinear(&u.coeffs, &u.coeffs), stabilization_seminorm_sq(&u, &case, &stab, &opts).unwrap());
            assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn none_variant_is_zero() {
    let (v, _) = spaces(1, 2);
    let case = case_lattice_flow(1e-9, 1.0).unwrap();
    let s = assemble_stabilization(&v, v.facets(), &case, &StabConfig::none(), &AssemblyOptions::default()).unwrap();
    assert_eq!(s.nnz(), 0);
    let zero_beta = custom_case(1.0, 1.0, VectorField::zero());
    let s = assemble_classical_cip(&v, v.facets(), &zero_beta, 1.0, &AssemblyOptions::default()).unwrap();
    assert_eq!(s.nnz(), 0);
}

#[test]
fn classical_variant_rejects_higher_order_parameters() {
    let (v, _) = spaces(1, 2);
    let case = case_lattice_flow(1e-9, 1.0).unwrap();
    let mut cfg = StabConfig::classical(1.0);
    cfg.delta[1] = 0.5;
    assert!(matches!(
        assemble_stabilization(&v, v.facets(), &case, &cfg, &AssemblyOptions::default()),
        Err(Error::Config(_))
    ));
    assert!(StabConfig::curl(-1.0, 0.0, 0.0).validate().is_err());
}

#[test]
fn sign_convention_does_not_matter() {
    let (v, _) = spaces(1, 2);
    let case = case_lattice_flow(1e-9, 0.0).unwrap();
    let std = StabConfig::curl(1.0, 1.0, 1.0);
    let rev = StabConfig { convention: CurlConvention::Reversed, ..std };
    let a = assemble_stabilization(&v, v.facets(), &case, &std, &AssemblyOptions::default()).unwrap();
    let b = assemble_stabilization(&v, v.facets(), &case, &rev, &AssemblyOptions::default()).unwrap();
    assert!(a.add(&b.scaled(-1.0)).max_abs() <= 1e-15 * a.max_abs());
}

#[test]
fn stabilization_is_linear_in_parameters() {
    let (v, _) = spaces(1, 2);
    let case = case_lattice_flow(1e-9, 0.0).unwrap();
    let opts = AssemblyOptions::default();
    let full = assemble_stabilization(&v, v.facets(), &case, &StabConfig::curl(2.0, 0.5, 0.1), &opts).unwrap();
    let parts: Vec<CsrMatrix> = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]
        .iter()
        .map(|&(a, b, c)| assemble_stabilization(&v, v.facets(), &case, &StabConfig::curl(a, b, c), &opts).unwrap())
        .collect();
    let sum = parts[0].scaled(2.0).add(&parts[1].scaled(0.5)).add(&parts[2].scaled(0.1));
    assert!(full.add(&sum.scaled(-1.0)).max_abs() <= 1e-13 * full.max_abs());
}

#[test]
fn s1_matches_two_cell_oracle_with_constant_beta() {
    // cubic so that third derivatives, and with them the third term, do not vanish
    let (v, _) = spaces(1, 3);
    let case = custom_case(1.0, 0.0, VectorField::constant([1.0, 0.0]));
    // continuous P2 field with kinks across facets
    let u = interpolate_velocity(&v, &VectorField::new(|x| VectorJet { value: [(x[0] - 0.4).abs(), (x[1] - 0.55).abs() * x[0]], ..Default::default() }));
    let opts = AssemblyOptions::default();
    let rule = edge_quadrature(opts.edge_degree_for(3)).unwrap();
    let unit = [StabConfig::curl(1.0, 0.0, 0.0), StabConfig::curl(0.0, 1.0, 0.0), StabConfig::curl(0.0, 0.0, 1.0)];
    let by_facet = unit.map(|s| StabConfig { length_scale: LengthScale::Facet, ..s });
    for stab in unit.into_iter().chain(by_facet) {
        let s = assemble_stabilization(&v, v.facets(), &case, &stab, &opts).unwrap();
        let assembled = s.bilinear(&u.coeffs, &u.coeffs);
        let oracle = oracle_energy(&u, &case, &stab, 1.0, &rule);
        assert!(oracle > 0.0);
        assert!((assembled - oracle).abs() <= 1e-10 * oracle, "{stab:?}: {assembled} vs {oracle}");
    }
}

#[test]
fn curl_terms_match_oracle_with_variable_beta() {
    let (v, _) = spaces(1, 3);
    let case = case_lattice_flow(1e-9, 1.0).unwrap();
    let opts = AssemblyOptions::default();
    let rule = edge_quadrature(opts.edge_degree_for(3)).unwrap();
    let scale = 1.0 / beta_sup(&v, &case, &triangle_quadrature(opts.tri_degree_for(3)).unwrap());
    let u = random_field(&v, 42, false);
    for stab in [StabConfig::curl(1.0, 0.0, 0.0), StabConfig::curl(0.0, 1.0, 0.0), StabConfig::curl(0.0, 0.0, 1.0), StabConfig::classical(1.0)] {
        let s = assemble_stabilization(&v, v.facets(), &case, &stab, &opts).unwrap();
        let assembled = s.bilinear(&u.coeffs, &u.coeffs);
        let oracle = oracle_energy(&u, &case, &stab, scale, &rule);
        assert!((assembled - oracle).abs() <= 1e-10 * oracle, "{stab:?}: {assembled} vs {oracle}");
    }
}

/// The curl of `(β·∇)u` by central differences of first-derivative evaluations: independent
/// of any product-rule expansion.
#[test]
fn curl_jump_matches_finite_differences() {
    let (v, _) = spaces(1, 2);
    let case = case_lattice_flow(1e-9, 1.0).unwrap();
    let u = random_field(&v, 3, false);
    let opts = AssemblyOptions { edge_degree: Some(3), ..Default::default() };
    let rule = edge_quadrature(3).unwrap();
    let scale = 1.0 / beta_sup(&v, &case, &triangle_quadrature(opts.tri_degree_for(2)).unwrap());
    let h = 1e-5;
    let conv = |cell: usize, x: Point| -> [f64; 2] {
        let d = u.evaluate(cell, v.map(cell).to_reference(x), 1).unwrap();
        let b = case.beta.value(x);
        [b[0] * d[0][1] + b[1] * d[0][2], b[0] * d[1][1] + b[1] * d[1][2]]
    };
    let curl = |cell: usize, x: Point| -> f64 {
        let dx = (conv(cell, [x[0] + h, x[1]])[1] - conv(cell, [x[0] - h, x[1]])[1]) / (2.0 * h);
        let dy = (conv(cell, [x[0], x[1] + h])[0] - conv(cell, [x[0], x[1] - h])[0]) / (2.0 * h);
        dx - dy
    };
    let mut oracle = 0.0;
    let mesh = v.mesh();
    for (_, f) in v.facets().interior() {
        let (pa, pb) = (mesh.vertices[f.vertices[0]], mesh.vertices[f.vertices[1]]);
        for (t, w) in rule.iter() {
            let x = [pa[0] + t[0] * (pb[0] - pa[0]), pa[1] + t[0] * (pb[1] - pa[1])];
            let j = curl(f.first.cell, x) - curl(f.second.unwrap().cell, x);
            oracle += w * f.diameter * scale * mesh.max_diameter().powi(4) * j * j;
        }
    }
    let s = assemble_stabilization(&v, v.facets(), &case, &StabConfig::curl(0.0, 1.0, 0.0), &opts).unwrap();
    let assembled = s.bilinear(&u.coeffs, &u.coeffs);
    assert!((assembled - oracle).abs() <= 1e-5 * oracle, "{assembled} vs {oracle}");
}

#[test]
fn classical_equals_s1_plus_normal_jump() {
    let (v, _) = spaces(1, 2);
    let case = case_lattice_flow(1e-9, 1.0).unwrap();
    let opts = AssemblyOptions::default();
    let rule = edge_quadrature(opts.edge_degree_for(2)).unwrap();
    let scale = 1.0 / beta_sup(&v, &case, &triangle_quadrature(opts.tri_degree_for(2)).unwrap());
    let u = random_field(&v, 8, false);
    let classical = assemble_classical_cip(&v, v.facets(), &case, 1.0, &opts).unwrap().bilinear(&u.coeffs, &u.coeffs);
    let s1 = assemble_stabilization(&v, v.facets(), &case, &StabConfig::curl(1.0, 0.0, 0.0), &opts)
        .unwrap()
        .bilinear(&u.coeffs, &u.coeffs);
    // normal-component part of the jump of (β·∇)u
    let mesh = v.mesh();
    let mut normal = 0.0;
    for (_, f) in v.facets().interior() {
        let (pa, pb) = (mesh.vertices[f.vertices[0]], mesh.vertices[f.vertices[1]]);
        for (t, w) in rule.iter() {
            let x = [pa[0] + t[0] * (pb[0] - pa[0]), pa[1] + t[0] * (pb[1] - pa[1])];
            let b = case.beta.value(x);
            let side = |cell: usize| {
                let d = u.evaluate(cell, v.map(cell).to_reference(x), 1).unwrap();
                [b[0] * d[0][1] + b[1] * d[0][2], b[0] * d[1][1] + b[1] * d[1][2]]
            };
            let (a1, a2) = (side(f.first.cell), side(f.second.unwrap().cell));
            let jn = (a1[0] - a2[0]) * f.normal[0] + (a1[1] - a2[1]) * f.normal[1];
            normal += w * f.diameter * scale * mesh.max_diameter().powi(2) * jn * jn;
        }
    }
    assert!((classical - (s1 + normal)).abs() <= 1e-10 * classical);
}

/// `(a + S)(v, v) = σ‖v‖² + μ‖∇v‖² + |v|_S²` for solenoidal β vanishing on the boundary.
#[test]
fn coercivity_identity() {
    let (v, p) = spaces(1, 2);
    let beta = compact_bubble_beta();
    let (mu, sigma) = (0.3, 0.7);
    let case = custom_case(mu, sigma, beta);
    let opts = AssemblyOptions { tri_degree: Some(12), ..Default::default() };
    let stab = StabConfig::curl(1.0, 1.0, 1.0);
    let g = assemble_galerkin(&v, &p, &case, &opts).unwrap();
    let s = assemble_stabilization(&v, v.facets(), &case, &stab, &opts).unwrap();
    let rule = triangle_quadrature(6).unwrap();
    let edge = edge_quadrature(opts.edge_degree_for(2)).unwrap();
    let scale = 1.0 / beta_sup(&v, &case, &triangle_quadrature(12).unwrap());
    for seed in 0..20 {
        let u = random_field(&v, 100 + seed, true);
        let lhs = g.a.bilinear(&u.coeffs, &u.coeffs) + s.bilinear(&u.coeffs, &u.coeffs);
        let (mut l2, mut h1) = (0.0, 0.0);
        for c in 0..v.mesh().num_cells() {
            let det = v.map(c).det;
            for (xi, w) in rule.iter() {
                let d = u.evaluate(c, *xi, 1).unwrap();
                l2 += w * det * (d[0][0].powi(2) + d[1][0].powi(2));
                h1 += w * det * (d[0][1].powi(2) + d[0][2].powi(2) + d[1][1].powi(2) + d[1][2].powi(2));
            }
        }
        let rhs = sigma * l2 + mu * h1 + oracle_energy(&u, &case, &stab, scale, &edge);
        assert!((lhs - rhs).abs() <= 1e-8 * rhs, "seed {seed}: {lhs} vs {rhs}");
    }
}

#[test]
fn mean_constraint_row() {
    let (_, p) = spaces(2, 2);
    let m = assemble_mean_constraint(&p).unwrap();
    assert_eq!(m.len(), p.num_dofs());
    let one = interpolate_pressure(&p, &ScalarField::new(|_| ScalarJet { value: 1.0, grad: [0.0; 2] }));
    let dot = |c: &[f64]| m.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
    // roundoff of a few thousand summed cell integrals
    assert!((dot(&one.coeffs) - 1.0).abs() < 1e-13);
    let lin = interpolate_pressure(&p, &ScalarField::new(|x| ScalarJet { value: x[0] - 0.5, grad: [1.0, 0.0] }));
    assert!(dot(&lin.coeffs).abs() < 1e-12);
}

#[test]
fn zero_data_gives_zero_rhs() {
    let (v, p) = spaces(1, 2);
    let case = custom_case(1.0, 1.0, VectorField::constant([1.0, 0.5]));
    let sys = assemble_system(v, p, &case, &StabConfig::curl(1.0, 1.0, 1.0), &AssemblyOptions::default()).unwrap();
    assert!(sys.rhs_u.iter().chain(&sys.rhs_p).all(|&x| x == 0.0));
}

#[test]
fn layer_boundary_values() {
    let (v, p) = spaces(1, 2);
    let case = case_boundary_layer(1e-5).unwrap();
    let sys = assemble_system(v.clone(), p, &case, &StabConfig::none(), &AssemblyOptions::default()).unwrap();
    let mut checked = 0;
    for (n, x) in v.node_coords().iter().enumerate() {
        if x[0] == 0.0 || x[0] == 1.0 {
            assert!(v.is_boundary_node(n));
            assert!(sys.rhs_u[2 * n + 1].abs() < 1e-15);
            assert_eq!(sys.rhs_u[2 * n], 0.0);
            checked += 1;
        }
    }
    assert!(checked > 0);
    let op = sys.velocity_operator_with_dirichlet();
    for i in (0..v.num_dofs()).filter(|&i| sys.boundary[i]) {
        assert_eq!(op.row(i).collect::<Vec<_>>(), vec![(i, 1.0)]);
    }
}

