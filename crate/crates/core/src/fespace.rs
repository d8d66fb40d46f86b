//! The Scott–Vogelius pair: continuous `P_k` vector velocities and discontinuous `P_{k-1}`
//! pressures.
//!
//! Scalar velocity nodes are numbered vertices first, then edge nodes (facet by facet, running
//! from the lower to the higher vertex index), then cell-interior nodes. The two velocity
//! components share this map and are interleaved: `dof = 2 * node + component`.

use std::sync::Arc;

use crate::basis::{push_forward, AffineMap, Derivs, ReferenceBasis, N_DERIVS};
use crate::mesh::{build_facets, FacetTopology, Mesh};
use crate::problem::{ScalarField, VectorField};
use crate::{Error, Point, Result};

#[derive(Debug, Clone)]
pub struct VelocitySpace {
    mesh: Arc<Mesh>,
    facets: Arc<FacetTopology>,
    degree: usize,
    basis: ReferenceBasis,
    maps: Vec<AffineMap>,
    cell_nodes: Vec<Vec<usize>>,
    node_coords: Vec<Point>,
    boundary_node: Vec<bool>,
}

impl VelocitySpace {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn facets(&self) -> &Arc<FacetTopology> {
        &self.facets
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub fn map(&self, cell: usize) -> &AffineMap {
        &self.maps[cell]
    }

    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    /// Both components, boundary included.
    pub fn num_dofs(&self) -> usize {
        2 * self.num_nodes()
    }

    /// Count after removing Dirichlet DOFs.
    pub fn num_free_dofs(&self) -> usize {
        2 * self.boundary_node.iter().filter(|b| !**b).count()
    }

    pub fn dof(node: usize, component: usize) -> usize {
        2 * node + component
    }

    pub fn cell_nodes(&self, cell: usize) -> &[usize] {
        &self.cell_nodes[cell]
    }

    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        self.boundary_node[node]
    }

    /// Per-DOF boundary mask.
    pub fn boundary_dof_mask(&self) -> Vec<bool> {
        self.boundary_node.iter().flat_map(|&b| [b, b]).collect()
    }

    /// Same space with scalar node `i` renamed to `perm[i]`.
    pub fn with_node_permutation(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument("not a permutation of the velocity nodes".into()));
        }
        let mut node_coords = vec![[0.0; 2]; n];
        let mut boundary_node = vec![false; n];
        for i in 0..n {
            node_coords[perm[i]] = self.node_coords[i];
            boundary_node[perm[i]] = self.boundary_node[i];
        }
        Ok(Self {
            cell_nodes: self.cell_nodes.iter().map(|c| c.iter().map(|&i| perm[i]).collect()).collect(),
            node_coords,
            boundary_node,
            ..self.clone()
        })
    }
}

/// Builds the continuous vector `P_k` space (`k ≥ 2`).
pub fn build_velocity_space(mesh: Arc<Mesh>, k: usize) -> Result<VelocitySpace> {
    if k < 2 {
        return Err(Error::UnsupportedDegree(k));
    }
    let facets = Arc::new(build_facets(&mesh)?);
    let basis = ReferenceBasis::new(k)?;
    let maps = (0..mesh.num_cells())
        .map(|c| AffineMap::from_triangle(mesh.cell_coords(c)))
        .collect::<Result<Vec<_>>>()?;

    let nv = mesh.num_vertices();
    let per_edge = k - 1;
    let per_cell = (k - 1) * (k - 2) / 2;
    let edge_base = nv;
    let interior_base = nv + facets.facets.len() * per_edge;
    let n_nodes = interior_base + mesh.num_cells() * per_cell;

    let mut cell_nodes = Vec::with_capacity(mesh.num_cells());
    for (c, cell) in mesh.cells.iter().enumerate() {
        let mut nodes = Vec::with_capacity(basis.dim());
        nodes.extend_from_slice(cell);
        for e in 0..3 {
            let (ga, gb) = (cell[e], cell[(e + 1) % 3]);
            let f = facets.cell_facets[c][e];
            for t in 1..k {
                let along = if ga < gb { t - 1 } else { k - 1 - t };
                nodes.push(edge_base + f * per_edge + along);
            }
        }
        nodes.extend((0..per_cell).map(|i| interior_base + c * per_cell + i));
        cell_nodes.push(nodes);
    }

    let mut node_coords = vec![[0.0; 2]; n_nodes];
    for (c, nodes) in cell_nodes.iter().enumerate() {
        for (&g, &xi) in nodes.iter().zip(basis.nodes()) {
            node_coords[g] = maps[c].to_physical(xi);
        }
    }
    // vertices are copied exactly rather than through the affine map
    node_coords[..nv].copy_from_slice(&mesh.vertices);

    let mut boundary_node = vec![false; n_nodes];
    for (fi, facet) in facets.boundary() {
        for v in facet.vertices {
            boundary_node[v] = true;
        }
        for t in 0..per_edge {
            boundary_node[edge_base + fi * per_edge + t] = true;
        }
    }

    Ok(VelocitySpace { mesh, facets, degree: k, basis, maps, cell_nodes, node_coords, boundary_node })
}

/// Fully discontinuous `P_{k-1}` pressures.
#[derive(Debug, Clone)]
pub struct PressureSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    basis: ReferenceBasis,
    maps: Vec<AffineMap>,
}

impl PressureSpace {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub fn map(&self, cell: usize) -> &AffineMap {
        &self.maps[cell]
    }

    pub fn per_cell(&self) -> usize {
        self.basis.dim()
    }

    pub fn num_dofs(&self) -> usize {
        self.per_cell() * self.mesh.num_cells()
    }

    pub fn cell_dofs(&self, cell: usize) -> std::ops::Range<usize> {
        let n = self.per_cell();
        cell * n..(cell + 1) * n
    }
}

/// Pressure space paired with a degree-`k` velocity space.
pub fn build_pressure_space(mesh: Arc<Mesh>, k: usize) -> Result<PressureSpace> {
    if k < 1 {
        return Err(Error::UnsupportedDegree(k));
    }
    let basis = ReferenceBasis::new(k - 1)?;
    let maps = (0..mesh.num_cells())
        .map(|c| AffineMap::from_triangle(mesh.cell_coords(c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PressureSpace { mesh, degree: k - 1, basis, maps })
}

#[derive(Debug, Clone)]
pub struct VelocityField {
    pub space: Arc<VelocitySpace>,
    pub coeffs: Vec<f64>,
}

impl VelocityField {
    pub fn new(space: Arc<VelocitySpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.num_dofs() {
            return Err(Error::InvalidArgument(format!(
                "velocity coefficient vector has length {}, expected {}",
                coeffs.len(),
                space.num_dofs()
            )));
        }
        Ok(Self { space, coeffs })
    }

    pub fn zero(space: Arc<VelocitySpace>) -> Self {
        let n = space.num_dofs();
        Self { space, coeffs: vec![0.0; n] }
    }

    /// Derivative tables of both components at a reference point of `cell`.
    pub fn evaluate(&self, cell: usize, xi: Point, max_order: usize) -> Result<[Derivs; 2]> {
        let ncells = self.space.mesh.num_cells();
        if cell >= ncells {
            return Err(Error::OutOfRange { index: cell, len: ncells });
        }
        let table = self.space.basis.eval(xi, max_order)?;
        Ok(self.combine(cell, &table, max_order))
    }

    /// Combines a precomputed reference table (at one point) with the coefficients of `cell`.
    pub fn combine(&self, cell: usize, table: &[Derivs], max_order: usize) -> [Derivs; 2] {
        let map = &self.space.maps[cell];
        let mut out = [[0.0; N_DERIVS]; 2];
        for (row, &node) in table.iter().zip(&self.space.cell_nodes[cell]) {
            let phys = push_forward(row, map, max_order);
            for (c, o) in out.iter_mut().enumerate() {
                let coef = self.coeffs[VelocitySpace::dof(node, c)];
                for d in 0..N_DERIVS {
                    o[d] += coef * phys[d];
                }
            }
        }
        out
    }

    /// Value at a physical point.
    pub fn value_at(&self, x: Point) -> Result<[f64; 2]> {
        let cell = self.space.mesh.locate(x).ok_or(Error::Location(x[0], x[1]))?;
        let xi = self.space.maps[cell].to_reference(x);
        let t = self.evaluate(cell, xi, 0)?;
        Ok([t[0][0], t[1][0]])
    }
}

#[derive(Debug, Clone)]
pub struct PressureField {
    pub space: Arc<PressureSpace>,
    pub coeffs: Vec<f64>,
}

impl PressureField {
    pub fn new(space: Arc<PressureSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.num_dofs() {
            return Err(Error::InvalidArgument(format!(
                "pressure coefficient vector has length {}, expected {}",
                coeffs.len(),
                space.num_dofs()
            )));
        }
        Ok(Self { space, coeffs })
    }

    pub fn evaluate(&self, cell: usize, xi: Point, max_order: usize) -> Result<Derivs> {
        let ncells = self.space.mesh.num_cells();
        if cell >= ncells {
            return Err(Error::OutOfRange { index: cell, len: ncells });
        }
        let table = self.space.basis.eval(xi, max_order)?;
        let map = &self.space.maps[cell];
        let mut out = [0.0; N_DERIVS];
        for (row, dof) in table.iter().zip(self.space.cell_dofs(cell)) {
            let phys = push_forward(row, map, max_order);
            for d in 0..N_DERIVS {
                out[d] += self.coeffs[dof] * phys[d];
            }
        }
        Ok(out)
    }

    pub fn value_at(&self, x: Point) -> Result<f64> {
        let cell = self.space.mesh.locate(x).ok_or(Error::Location(x[0], x[1]))?;
        let xi = self.space.maps[cell].to_reference(x);
        Ok(self.evaluate(cell, xi, 0)?[0])
    }
}

/// Nodal interpolant of a vector field.
pub fn interpolate_velocity(space: &Arc<VelocitySpace>, field: &VectorField) -> VelocityField {
    let mut coeffs = vec![0.0; space.num_dofs()];
    for (n, &x) in space.node_coords.iter().enumerate() {
        let v = field.value(x);
        coeffs[2 * n] = v[0];
        coeffs[2 * n + 1] = v[1];
    }
    VelocityField { space: space.clone(), coeffs }
}

/// Cellwise nodal interpolant of a scalar field.
pub fn interpolate_pressure(space: &Arc<PressureSpace>, field: &ScalarField) -> PressureField {
    let mut coeffs = vec![0.0; space.num_dofs()];
    for c in 0..space.mesh.num_cells() {
        for (dof, &xi) in space.cell_dofs(c).zip(space.basis.nodes()) {
            coeffs[dof] = field.value(space.maps[c].to_physical(xi));
        }
    }
    PressureField { space: space.clone(), coeffs }
}
