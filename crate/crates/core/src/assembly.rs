//! Assembly of the stabilized saddle-point system
//!
//! ```text
//!   a(u,v) + b(p,v) + S(u,v) = (f,v)      a(u,v) = (σu + (β·∇)u, v) + μ(∇u, ∇v)
//!   b(q,u)                   = 0          b(q,v) = −(q, div v)
//! ```
//!
//! `S` lives on interior facets only. With `w = (β·∇)v` and `ℬv = curl w`:
//!
//! ```text
//!   S(u,v) = ‖β‖∞⁻¹ Σ_F [ δ1 h² ⟦w(u)×n⟧⟦w(v)×n⟧ + δ2 h⁴ ⟦ℬu⟧⟦ℬv⟧ + δ3 h⁶ ⟦∇ℬu⟧·⟦∇ℬv⟧ ]
//! ```
//!
//! `h` is the mesh size by default. Facet lengths are available through [`LengthScale`], but
//! on barycentric meshes the interior facets are much shorter than the cells they bound, so
//! the two choices give noticeably different amounts of stabilization.
//!
//! In 2D the curl of a vector and the cross product with the normal are scalars, taken as
//! `∂x v2 − ∂y v1` and `a1 n2 − a2 n1`. Every term is a product of two jumps, so flipping
//! either sign convention leaves `S` unchanged ([`CurlConvention`] exists to check that).
//! Jumps are one-sided differences, first cell minus second cell, against the facet normal
//! stored in [`crate::mesh::Facet`].

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{deriv_index, push_forward, Derivs};
use crate::fespace::{PressureSpace, VelocityField, VelocitySpace};
use crate::mesh::{Facet, FacetTopology};
use crate::problem::{ProblemCase, VectorJet};
use crate::quadrature::{edge_quadrature, triangle_quadrature, EdgeRule, TriangleRule};
use crate::sparse::CsrMatrix;
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabVariant {
    None,
    ClassicalCip,
    CurlCip,
}

/// Sign convention for the scalar 2D curl and cross product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurlConvention {
    /// `curl v = ∂x v2 − ∂y v1`, `a × n = a1 n2 − a2 n1`.
    #[default]
    Standard,
    /// Both signs flipped.
    Reversed,
}

/// Length `h` in the facet weights `h², h⁴, h⁶`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthScale {
    /// Mesh size, the largest cell diameter.
    #[default]
    Mesh,
    /// Length of each facet.
    Facet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabConfig {
    pub variant: StabVariant,
    /// `δ1, δ2, δ3`. The classical variant uses `δ1` only.
    pub delta: [f64; 3],
    /// Apply the `1/‖β‖∞` prefactor.
    pub beta_sup_scaling: bool,
    pub convention: CurlConvention,
    pub length_scale: LengthScale,
}

impl StabConfig {
    pub fn none() -> Self {
        Self { variant: StabVariant::None, delta: [0.0; 3], beta_sup_scaling: true, convention: CurlConvention::Standard, length_scale: LengthScale::Mesh }
    }

    pub fn curl(delta1: f64, delta2: f64, delta3: f64) -> Self {
        Self { variant: StabVariant::CurlCip, delta: [delta1, delta2, delta3], ..Self::none() }
    }

    pub fn classical(delta: f64) -> Self {
        Self { variant: StabVariant::ClassicalCip, delta: [delta, 0.0, 0.0], ..Self::none() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::Config(format!("stabilization parameters must be nonnegative, got {:?}", self.delta)));
        }
        if self.variant == StabVariant::ClassicalCip && (self.delta[1] != 0.0 || self.delta[2] != 0.0) {
            return Err(Error::Config("classical CIP takes a single parameter; delta2 and delta3 must be zero".into()));
        }
        Ok(())
    }
}

impl LengthScale {
    fn pick(self, mesh: f64, facet: f64) -> f64 {
        match self {
            LengthScale::Mesh => mesh,
            LengthScale::Facet => facet,
        }
    }
}

impl Default for StabConfig {
    fn default() -> Self {
        Self::none()
    }
}

/// Quadrature and execution settings. Unset degrees default to `2k+2` (cells) and `2k+4`
/// (facets).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub tri_degree: Option<usize>,
    pub edge_degree: Option<usize>,
    /// Run cell and facet loops on the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl AssemblyOptions {
    pub fn tri_degree_for(&self, k: usize) -> usize {
        self.tri_degree.unwrap_or(2 * k + 2)
    }

    pub fn edge_degree_for(&self, k: usize) -> usize {
        self.edge_degree.unwrap_or(2 * k + 4)
    }

    fn triangle_rule(&self, k: usize) -> Result<TriangleRule> {
        triangle_quadrature(self.tri_degree_for(k))
    }

    fn edge_rule(&self, k: usize) -> Result<EdgeRule> {
        edge_quadrature(self.edge_degree_for(k))
    }
}

type Triplets = Vec<(usize, usize, f64)>;

fn map_collect<T: Send, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
{
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// `max |β|` over all cell quadrature points.
pub fn beta_sup(space: &VelocitySpace, case: &ProblemCase, rule: &TriangleRule) -> f64 {
    let mut sup: f64 = 0.0;
    for c in 0..space.mesh().num_cells() {
        let map = space.map(c);
        for (xi, _) in rule.iter() {
            sup = sup.max(case.beta.jet(map.to_physical(*xi)).norm());
        }
    }
    sup
}

/// Velocity–velocity and pressure–velocity Galerkin blocks.
#[derive(Debug, Clone)]
pub struct GalerkinBlocks {
    /// `σ` mass + `μ` stiffness + convection, `n_u × n_u`.
    pub a: CsrMatrix,
    /// `B[q, v] = −(q, div v)`, `n_p × n_u`.
    pub b: CsrMatrix,
    pub warnings: Vec<String>,
}

pub fn assemble_galerkin(
    velocity: &VelocitySpace,
    pressure: &PressureSpace,
    case: &ProblemCase,
    opts: &AssemblyOptions,
) -> Result<GalerkinBlocks> {
    if !Arc::ptr_eq(velocity.mesh(), pressure.mesh()) && velocity.mesh().cells != pressure.mesh().cells {
        return Err(Error::InvalidArgument("velocity and pressure spaces live on different meshes".into()));
    }
    let k = velocity.degree();
    let rule = opts.triangle_rule(k)?;
    let mut warnings = Vec::new();
    if rule.degree < 2 * k {
        warnings.push(format!(
            "cell quadrature degree {} cannot integrate the degree-{} mass matrix exactly",
            rule.degree,
            2 * k
        ));
    }
    let vref: Vec<Vec<Derivs>> = rule.points.iter().map(|&xi| velocity.basis().eval(xi, 1)).collect::<Result<_>>()?;
    let pref: Vec<Vec<Derivs>> = rule.points.iter().map(|&xi| pressure.basis().eval(xi, 0)).collect::<Result<_>>()?;
    let (mu, sigma) = (case.mu, case.sigma);
    let nv = velocity.basis().dim();
    let np = pressure.per_cell();

    let per_cell = map_collect(velocity.mesh().num_cells(), opts.parallel, |c| {
        let map = velocity.map(c);
        let nodes = velocity.cell_nodes(c);
        let mut a_loc = vec![0.0; nv * nv];
        let mut b_loc = vec![[0.0; 2]; np * nv];
        for (q, (xi, w)) in rule.iter().enumerate() {
            let wd = w * map.det;
            let beta = case.beta.value(map.to_physical(*xi));
            let phi: Vec<Derivs> = vref[q].iter().map(|r| push_forward(r, map, 1)).collect();
            for i in 0..nv {
                for j in 0..nv {
                    let mass = phi[i][0] * phi[j][0];
                    let stiff = phi[i][1] * phi[j][1] + phi[i][2] * phi[j][2];
                    let conv = (beta[0] * phi[j][1] + beta[1] * phi[j][2]) * phi[i][0];
                    a_loc[i * nv + j] += wd * (sigma * mass + mu * stiff + conv);
                }
            }
            for l in 0..np {
                let psi = pref[q][l][0];
                for j in 0..nv {
                    b_loc[l * nv + j][0] -= wd * psi * phi[j][1];
                    b_loc[l * nv + j][1] -= wd * psi * phi[j][2];
                }
            }
        }
        let mut a_trip = Vec::with_capacity(2 * nv * nv);
        for i in 0..nv {
            for j in 0..nv {
                for comp in 0..2 {
                    a_trip.push((2 * nodes[i] + comp, 2 * nodes[j] + comp, a_loc[i * nv + j]));
                }
            }
        }
        let mut b_trip = Vec::with_capacity(2 * np * nv);
        for (l, row) in pressure.cell_dofs(c).enumerate() {
            for j in 0..nv {
                for comp in 0..2 {
                    b_trip.push((row, 2 * nodes[j] + comp, b_loc[l * nv + j][comp]));
                }
            }
        }
        (a_trip, b_trip)
    });
    let (a_trip, b_trip): (Vec<Triplets>, Vec<Triplets>) = per_cell.into_iter().unzip();
    let n_u = velocity.num_dofs();
    Ok(GalerkinBlocks {
        a: CsrMatrix::from_triplets(n_u, n_u, a_trip.concat()),
        b: CsrMatrix::from_triplets(pressure.num_dofs(), n_u, b_trip.concat()),
        warnings,
    })
}

/// Derivatives of `w = β·∇φ` for one scalar basis function: `[w, ∂x w, ∂y w, ∂xx w, ∂xy w, ∂yy w]`.
pub(crate) fn convective_derivs(beta: &VectorJet, phi: &Derivs) -> [f64; 6] {
    let d = |nx, ny| phi[deriv_index(nx, ny)];
    let (b1, b2) = (beta.value[0], beta.value[1]);
    let [[b1x, b1y], [b2x, b2y]] = beta.grad;
    let [b1xx, b1xy, b1yy] = beta.hess[0];
    let [b2xx, b2xy, b2yy] = beta.hess[1];
    let (px, py) = (d(1, 0), d(0, 1));
    let (pxx, pxy, pyy) = (d(2, 0), d(1, 1), d(0, 2));
    let (pxxx, pxxy, pxyy, pyyy) = (d(3, 0), d(2, 1), d(1, 2), d(0, 3));
    [
        b1 * px + b2 * py,
        b1x * px + b1 * pxx + b2x * py + b2 * pxy,
        b1y * px + b1 * pxy + b2y * py + b2 * pyy,
        b1xx * px + 2.0 * b1x * pxx + b1 * pxxx + b2xx * py + 2.0 * b2x * pxy + b2 * pxxy,
        b1xy * px + b1x * pxy + b1y * pxx + b1 * pxxy + b2xy * py + b2x * pyy + b2y * pxy + b2 * pxyy,
        b1yy * px + 2.0 * b1y * pxy + b1 * pxyy + b2yy * py + 2.0 * b2y * pyy + b2 * pyyy,
    ]
}

/// Sorted union of the scalar nodes of both cells adjacent to a facet, with local positions.
struct FacetPatch {
    nodes: Vec<usize>,
    /// For each side, position in `nodes` of every local basis function.
    local: [Vec<usize>; 2],
}

fn facet_patch(space: &VelocitySpace, cells: [usize; 2]) -> FacetPatch {
    let mut nodes: Vec<usize> = cells.iter().flat_map(|&c| space.cell_nodes(c).iter().copied()).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let local = cells.map(|c| {
        space
            .cell_nodes(c)
            .iter()
            .map(|n| nodes.binary_search(n).expect("node in patch"))
            .collect()
    });
    FacetPatch { nodes, local }
}

/// Jumps (side 1 minus side 2) of the convective derivatives of every patch node at the
/// physical points of an edge rule.
fn facet_jumps(
    space: &VelocitySpace,
    case: &ProblemCase,
    facet: &Facet,
    patch: &FacetPatch,
    rule: &EdgeRule,
) -> Result<Vec<Vec<[f64; 6]>>> {
    let second = facet.second.ok_or_else(|| Error::Topology("boundary facet has no jump".into()))?;
    let cells = [facet.first.cell, second.cell];
    let mesh = space.mesh();
    let (pa, pb) = (mesh.vertices[facet.vertices[0]], mesh.vertices[facet.vertices[1]]);
    let mut out = Vec::with_capacity(rule.len());
    for (t, _) in rule.iter() {
        let x: Point = [pa[0] + t[0] * (pb[0] - pa[0]), pa[1] + t[0] * (pb[1] - pa[1])];
        let beta = case.beta.jet(x);
        let mut jumps = vec![[0.0; 6]; patch.nodes.len()];
        for (side, &cell) in cells.iter().enumerate() {
            let map = space.map(cell);
            let table = space.basis().eval(map.to_reference(x), 3)?;
            let sign = if side == 0 { 1.0 } else { -1.0 };
            for (row, &pos) in table.iter().zip(&patch.local[side]) {
                let w = convective_derivs(&beta, &push_forward(row, map, 3));
                for (j, wv) in jumps[pos].iter_mut().zip(w) {
                    *j += sign * wv;
                }
            }
        }
        out.push(jumps);
    }
    Ok(out)
}

/// Curl-based stabilization with prefactor already applied; `scale` is `1/‖β‖∞` or 1.
fn assemble_curl_terms(
    space: &VelocitySpace,
    facets: &FacetTopology,
    case: &ProblemCase,
    config: &StabConfig,
    scale: f64,
    opts: &AssemblyOptions,
) -> Result<CsrMatrix> {
    let rule = opts.edge_rule(space.degree())?;
    let interior: Vec<&Facet> = facets.facets.iter().filter(|f| f.is_interior()).collect();
    let [d1, d2, d3] = config.delta;
    let mesh_h = space.mesh().max_diameter();
    let sgn = match config.convention {
        CurlConvention::Standard => 1.0,
        CurlConvention::Reversed => -1.0,
    };
    let blocks = map_collect(interior.len(), opts.parallel, |fi| -> Result<Triplets> {
        let facet = interior[fi];
        let cells = [facet.first.cell, facet.second.unwrap().cell];
        let patch = facet_patch(space, cells);
        let jumps = facet_jumps(space, case, facet, &patch, &rule)?;
        let n = 2 * patch.nodes.len();
        let len = facet.diameter;
        let h = config.length_scale.pick(mesh_h, len);
        let [n1, n2] = facet.normal;
        let (c1, c2, c3) = (d1 * h * h, d2 * h.powi(4), d3 * h.powi(6));
        let mut local = vec![0.0; n * n];
        let mut q1 = vec![0.0; n];
        let mut q2 = vec![0.0; n];
        let mut q3 = vec![[0.0; 2]; n];
        for (jq, (_, w)) in jumps.iter().zip(rule.iter()) {
            for (j, dw) in jq.iter().enumerate() {
                // v = φ e_1: (β·∇)v = (w, 0)
                q1[2 * j] = sgn * dw[0] * n2;
                q2[2 * j] = -sgn * dw[2];
                q3[2 * j] = [-sgn * dw[4], -sgn * dw[5]];
                // v = φ e_2: (β·∇)v = (0, w)
                q1[2 * j + 1] = -sgn * dw[0] * n1;
                q2[2 * j + 1] = sgn * dw[1];
                q3[2 * j + 1] = [sgn * dw[3], sgn * dw[4]];
            }
            let wf = w * len * scale;
            for i in 0..n {
                for j in 0..n {
                    local[i * n + j] += wf
                        * (c1 * q1[i] * q1[j] + c2 * q2[i] * q2[j] + c3 * (q3[i][0] * q3[j][0] + q3[i][1] * q3[j][1]));
                }
            }
        }
        Ok(patch_triplets(&patch, &local))
    });
    let n_u = space.num_dofs();
    Ok(CsrMatrix::from_triplets(n_u, n_u, blocks.into_iter().collect::<Result<Vec<_>>>()?.concat()))
}

fn patch_triplets(patch: &FacetPatch, local: &[f64]) -> Triplets {
    let n = 2 * patch.nodes.len();
    let dof = |i: usize| 2 * patch.nodes[i / 2] + i % 2;
    let mut t = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = local[i * n + j];
            if v != 0.0 {
                t.push((dof(i), dof(j), v));
            }
        }
    }
    t
}

/// `‖β‖∞⁻¹` (or 1 without scaling); `None` when `β ≡ 0` makes the prefactor singular.
fn stabilization_scale(space: &VelocitySpace, case: &ProblemCase, config: &StabConfig, opts: &AssemblyOptions) -> Result<Option<f64>> {
    let sup = beta_sup(space, case, &opts.triangle_rule(space.degree())?);
    if sup == 0.0 {
        return Ok(None);
    }
    Ok(Some(if config.beta_sup_scaling { 1.0 / sup } else { 1.0 }))
}

/// Stabilization block for any variant.
pub fn assemble_stabilization(
    space: &VelocitySpace,
    facets: &FacetTopology,
    case: &ProblemCase,
    config: &StabConfig,
    opts: &AssemblyOptions,
) -> Result<CsrMatrix> {
    config.validate()?;
    let n_u = space.num_dofs();
    let scale = match config.variant {
        StabVariant::None => return Ok(CsrMatrix::zeros(n_u, n_u)),
        _ => match stabilization_scale(space, case, config, opts)? {
            Some(s) => s,
            None => return Ok(CsrMatrix::zeros(n_u, n_u)),
        },
    };
    match config.variant {
        StabVariant::CurlCip => assemble_curl_terms(space, facets, case, config, scale, opts),
        StabVariant::ClassicalCip => classical_terms(space, facets, case, config, scale, opts),
        StabVariant::None => unreachable!(),
    }
}

/// `‖β‖∞⁻¹ δ Σ_F h² ⟦(β·∇)u⟧·⟦(β·∇)v⟧`, full-vector jumps.
pub fn assemble_classical_cip(
    space: &VelocitySpace,
    facets: &FacetTopology,
    case: &ProblemCase,
    delta: f64,
    opts: &AssemblyOptions,
) -> Result<CsrMatrix> {
    assemble_stabilization(space, facets, case, &StabConfig::classical(delta), opts)
}

fn classical_terms(
    space: &VelocitySpace,
    facets: &FacetTopology,
    case: &ProblemCase,
    config: &StabConfig,
    scale: f64,
    opts: &AssemblyOptions,
) -> Result<CsrMatrix> {
    let rule = opts.edge_rule(space.degree())?;
    let interior: Vec<&Facet> = facets.facets.iter().filter(|f| f.is_interior()).collect();
    let delta = config.delta[0];
    let mesh_h = space.mesh().max_diameter();
    let blocks = map_collect(interior.len(), opts.parallel, |fi| -> Result<Triplets> {
        let facet = interior[fi];
        let patch = facet_patch(space, [facet.first.cell, facet.second.unwrap().cell]);
        let jumps = facet_jumps(space, case, facet, &patch, &rule)?;
        let m = patch.nodes.len();
        let len = facet.diameter;
        let h = config.length_scale.pick(mesh_h, len);
        let mut scalar = vec![0.0; m * m];
        for (jq, (_, w)) in jumps.iter().zip(rule.iter()) {
            let wf = w * len * scale * delta * h * h;
            for i in 0..m {
                for j in 0..m {
                    scalar[i * m + j] += wf * jq[i][0] * jq[j][0];
                }
            }
        }
        // components decouple
        let n = 2 * m;
        let mut local = vec![0.0; n * n];
        for i in 0..m {
            for j in 0..m {
                for c in 0..2 {
                    local[(2 * i + c) * n + 2 * j + c] = scalar[i * m + j];
                }
            }
        }
        Ok(patch_triplets(&patch, &local))
    });
    let n_u = space.num_dofs();
    Ok(CsrMatrix::from_triplets(n_u, n_u, blocks.into_iter().collect::<Result<Vec<_>>>()?.concat()))
}

/// `S(u,u)` of a discrete field, summed facet by facet as weighted squares of its jumps.
/// Agrees with `uᵀSu` from the assembled block but cannot go negative through cancellation.
pub fn stabilization_seminorm_sq(
    field: &VelocityField,
    case: &ProblemCase,
    config: &StabConfig,
    opts: &AssemblyOptions,
) -> Result<f64> {
    config.validate()?;
    let space = &field.space;
    if config.variant == StabVariant::None {
        return Ok(0.0);
    }
    let Some(scale) = stabilization_scale(space, case, config, opts)? else { return Ok(0.0) };
    let rule = opts.edge_rule(space.degree())?;
    let interior: Vec<&Facet> = space.facets().facets.iter().filter(|f| f.is_interior()).collect();
    let [d1, d2, d3] = config.delta;
    let mesh_h = space.mesh().max_diameter();
    let per_facet = map_collect(interior.len(), opts.parallel, |fi| -> Result<f64> {
        let facet = interior[fi];
        let patch = facet_patch(space, [facet.first.cell, facet.second.unwrap().cell]);
        let jumps = facet_jumps(space, case, facet, &patch, &rule)?;
        let len = facet.diameter;
        let h = config.length_scale.pick(mesh_h, len);
        let [n1, n2] = facet.normal;
        let mut sum = 0.0;
        for (jq, (_, w)) in jumps.iter().zip(rule.iter()) {
            // jumps of the derivatives of (β·∇)u, per component
            let mut a = [[0.0; 6]; 2];
            for (dw, &node) in jq.iter().zip(&patch.nodes) {
                for (c, ac) in a.iter_mut().enumerate() {
                    let coef = field.coeffs[VelocitySpace::dof(node, c)];
                    for (x, d) in ac.iter_mut().zip(dw) {
                        *x += coef * d;
                    }
                }
            }
            let value = match config.variant {
                StabVariant::ClassicalCip => d1 * h * h * (a[0][0] * a[0][0] + a[1][0] * a[1][0]),
                _ => {
                    let cross = a[0][0] * n2 - a[1][0] * n1;
                    let curl = a[1][1] - a[0][2];
                    let grad = [a[1][3] - a[0][4], a[1][4] - a[0][5]];
                    d1 * h * h * cross * cross + d2 * h.powi(4) * curl * curl + d3 * h.powi(6) * (grad[0] * grad[0] + grad[1] * grad[1])
                }
            };
            sum += w * len * scale * value;
        }
        Ok(sum)
    });
    Ok(per_facet.into_iter().collect::<Result<Vec<_>>>()?.iter().sum())
}

/// `(f, v)` for every velocity DOF.
pub fn assemble_load(space: &VelocitySpace, case: &ProblemCase, opts: &AssemblyOptions) -> Result<Vec<f64>> {
    let rule = opts.triangle_rule(space.degree())?;
    let vref: Vec<Vec<Derivs>> = rule.points.iter().map(|&xi| space.basis().eval(xi, 0)).collect::<Result<_>>()?;
    let per_cell = map_collect(space.mesh().num_cells(), opts.parallel, |c| {
        let map = space.map(c);
        let mut local = vec![[0.0; 2]; space.basis().dim()];
        for (q, (xi, w)) in rule.iter().enumerate() {
            let f = case.f.value(map.to_physical(*xi));
            for (l, row) in local.iter_mut().zip(&vref[q]) {
                l[0] += w * map.det * f[0] * row[0];
                l[1] += w * map.det * f[1] * row[0];
            }
        }
        local
    });
    let mut load = vec![0.0; space.num_dofs()];
    for (c, local) in per_cell.iter().enumerate() {
        for (&node, l) in space.cell_nodes(c).iter().zip(local) {
            load[2 * node] += l[0];
            load[2 * node + 1] += l[1];
        }
    }
    Ok(load)
}

/// `∫_Ω q_j` for every pressure basis function.
pub fn assemble_mean_constraint(space: &PressureSpace) -> Result<Vec<f64>> {
    let rule = triangle_quadrature(space.degree().max(1))?;
    let pref: Vec<Vec<Derivs>> = rule.points.iter().map(|&xi| space.basis().eval(xi, 0)).collect::<Result<_>>()?;
    let mut m = vec![0.0; space.num_dofs()];
    for c in 0..space.mesh().num_cells() {
        let det = space.map(c).det;
        for (q, (_, w)) in rule.iter().enumerate() {
            for (dof, row) in space.cell_dofs(c).zip(&pref[q]) {
                m[dof] += w * det * row[0];
            }
        }
    }
    Ok(m)
}

/// Complete system with Dirichlet data lifted to the right-hand side.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub velocity: Arc<VelocitySpace>,
    pub pressure: Arc<PressureSpace>,
    pub stab: StabConfig,
    /// Galerkin velocity block (without stabilization).
    pub a: CsrMatrix,
    /// Stabilization block, prefactor included.
    pub s: CsrMatrix,
    pub b: CsrMatrix,
    pub mean: Vec<f64>,
    /// `(f, v)` before lifting.
    pub load: Vec<f64>,
    /// Nodal interpolant of the boundary data on boundary DOFs, zero elsewhere.
    pub lifting: Vec<f64>,
    pub boundary: Vec<bool>,
    /// Velocity right-hand side; boundary rows hold the prescribed values.
    pub rhs_u: Vec<f64>,
    pub rhs_p: Vec<f64>,
    pub beta_sup: f64,
    pub warnings: Vec<String>,
}

impl AssembledSystem {
    pub fn num_velocity_dofs(&self) -> usize {
        self.velocity.num_dofs()
    }

    pub fn num_pressure_dofs(&self) -> usize {
        self.pressure.num_dofs()
    }

    /// `A + S` with boundary rows and columns replaced by the identity.
    pub fn velocity_operator_with_dirichlet(&self) -> CsrMatrix {
        let n = self.num_velocity_dofs();
        let trip = self
            .a
            .iter()
            .chain(self.s.iter())
            .filter(|&(r, c, _)| !self.boundary[r] && !self.boundary[c])
            .chain((0..n).filter(|&i| self.boundary[i]).map(|i| (i, i, 1.0)))
            .collect();
        CsrMatrix::from_triplets(n, n, trip)
    }
}

/// Folds the load and the lifted boundary data into the right-hand side.
pub fn assemble_rhs_and_dirichlet(
    velocity: Arc<VelocitySpace>,
    pressure: Arc<PressureSpace>,
    galerkin: GalerkinBlocks,
    s: CsrMatrix,
    stab: StabConfig,
    case: &ProblemCase,
    opts: &AssemblyOptions,
) -> Result<AssembledSystem> {
    let load = assemble_load(&velocity, case, opts)?;
    let mean = assemble_mean_constraint(&pressure)?;
    let boundary = velocity.boundary_dof_mask();
    let mut lifting = vec![0.0; velocity.num_dofs()];
    for (n, &x) in velocity.node_coords().iter().enumerate() {
        if velocity.is_boundary_node(n) {
            let g = case.dirichlet(x);
            lifting[2 * n] = g[0];
            lifting[2 * n + 1] = g[1];
        }
    }
    let ag = galerkin.a.mul_vec(&lifting);
    let sg = s.mul_vec(&lifting);
    let rhs_u = (0..velocity.num_dofs())
        .map(|i| if boundary[i] { lifting[i] } else { load[i] - ag[i] - sg[i] })
        .collect();
    let rhs_p = galerkin.b.mul_vec(&lifting).into_iter().map(|v| -v).collect();
    let beta_sup = beta_sup(&velocity, case, &opts.triangle_rule(velocity.degree())?);
    Ok(AssembledSystem {
        velocity,
        pressure,
        stab,
        a: galerkin.a,
        s,
        b: galerkin.b,
        mean,
        load,
        lifting,
        boundary,
        rhs_u,
        rhs_p,
        beta_sup,
        warnings: galerkin.warnings,
    })
}

/// Galerkin blocks, stabilization, load, lifting and mean constraint in one call.
pub fn assemble_system(
    velocity: Arc<VelocitySpace>,
    pressure: Arc<PressureSpace>,
    case: &ProblemCase,
    stab: &StabConfig,
    opts: &AssemblyOptions,
) -> Result<AssembledSystem> {
    stab.validate()?;
    let galerkin = assemble_galerkin(&velocity, &pressure, case, opts)?;
    let s = assemble_stabilization(&velocity, velocity.facets(), case, stab, opts)?;
    assemble_rhs_and_dirichlet(velocity, pressure, galerkin, s, *stab, case, opts)
}

#[cfg(test)]
mod tests;
