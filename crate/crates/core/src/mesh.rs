//! Triangulations of the unit square.
//!
//! The generation pipeline is: two triangles split along the (0,0)–(1,1) diagonal, a number of
//! red (midpoint) refinements, then one barycentric refinement that turns every macro triangle
//! into three micro triangles sharing its centroid. Downstream modules accept any valid [`Mesh`].
//!
//! Refinement is purely combinatorial: new vertices are deduplicated by vertex-index pairs,
//! never by comparing floating-point coordinates.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::{Error, Point, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Vertex triples, counterclockwise.
    pub cells: Vec<[usize; 3]>,
    /// Macro-element index of every cell, populated by [`barycentric_refine`].
    pub macro_of_cell: Option<Vec<usize>>,
    pub level: usize,
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_coords(&self, cell: usize) -> [Point; 3] {
        let [a, b, c] = self.cells[cell];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area; positive for counterclockwise cells.
    pub fn signed_area(&self, cell: usize) -> f64 {
        let [p0, p1, p2] = self.cell_coords(cell);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    /// Longest edge of a cell.
    pub fn cell_diameter(&self, cell: usize) -> f64 {
        let p = self.cell_coords(cell);
        (0..3)
            .map(|i| distance(p[i], p[(i + 1) % 3]))
            .fold(0.0, f64::max)
    }

    /// Largest cell diameter in the mesh.
    pub fn max_diameter(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| self.cell_diameter(c))
            .fold(0.0, f64::max)
    }

    /// Checks orientation and index bounds.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (c, cell) in self.cells.iter().enumerate() {
            if cell.iter().any(|&v| v >= nv) {
                return Err(Error::Topology(format!("cell {c} references a missing vertex")));
            }
            if self.signed_area(c) <= 0.0 {
                return Err(Error::Geometry(format!("cell {c} is not counterclockwise")));
            }
        }
        Ok(())
    }

    /// Barycentric coordinates of `x` with respect to a cell.
    pub fn barycentric(&self, cell: usize, x: Point) -> [f64; 3] {
        let [p0, p1, p2] = self.cell_coords(cell);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let l1 = ((x[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (x[1] - p0[1])) / det;
        let l2 = ((p1[0] - p0[0]) * (x[1] - p0[1]) - (x[0] - p0[0]) * (p1[1] - p0[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Lowest-indexed cell containing `x` (closed cells, tolerance `1e-12`).
    pub fn locate(&self, x: Point) -> Option<usize> {
        (0..self.num_cells()).find(|&c| self.barycentric(c, x).iter().all(|&l| l >= -1e-12))
    }

    /// Writes the plain-text node/element format.
    pub fn to_node_element_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "#vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {}", v[0], v[1]);
        }
        let _ = writeln!(s, "#cells {}", self.cells.len());
        for c in &self.cells {
            let _ = writeln!(s, "{} {} {}", c[0], c[1], c[2]);
        }
        s
    }

    pub fn write_node_element(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_node_element_string().as_bytes())?;
        Ok(())
    }
}

pub(crate) fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// The unit square cut along the diagonal from (0,0) to (1,1).
pub fn unit_square_base() -> Mesh {
    Mesh {
        vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        cells: vec![[0, 1, 2], [0, 2, 3]],
        macro_of_cell: None,
        level: 0,
    }
}

/// Splits every triangle into four congruent children through its edge midpoints.
pub fn red_refine(mesh: &Mesh) -> Mesh {
    let mut vertices = mesh.vertices.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            let (pa, pb) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            vertices.len() - 1
        })
    };

    let mut cells = Vec::with_capacity(4 * mesh.cells.len());
    for &[a, b, c] in &mesh.cells {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        cells.push([a, ab, ca]);
        cells.push([ab, b, bc]);
        cells.push([ca, bc, c]);
        cells.push([ab, bc, ca]);
    }
    Mesh {
        vertices,
        cells,
        macro_of_cell: None,
        level: mesh.level + 1,
    }
}

/// Adds the centroid of every triangle and connects it to the three vertices.
///
/// Cells `3i`, `3i+1`, `3i+2` of the result all belong to macro cell `i` and share vertex
/// `n_vertices + i`.
pub fn barycentric_refine(mesh: &Mesh) -> Mesh {
    let nv = mesh.vertices.len();
    let mut vertices = mesh.vertices.clone();
    vertices.reserve(mesh.cells.len());
    let mut cells = Vec::with_capacity(3 * mesh.cells.len());
    let mut macro_of_cell = Vec::with_capacity(3 * mesh.cells.len());
    for (i, &[a, b, c]) in mesh.cells.iter().enumerate() {
        let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        vertices.push([(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]);
        let g = nv + i;
        cells.extend_from_slice(&[[a, b, g], [b, c, g], [c, a, g]]);
        macro_of_cell.extend_from_slice(&[i, i, i]);
    }
    Mesh {
        vertices,
        cells,
        macro_of_cell: Some(macro_of_cell),
        level: mesh.level,
    }
}

/// Level `ℓ ≥ 1` mesh: `ℓ + 1` red refinements of the base square, then one barycentric split.
/// It has `96 · 4^(ℓ-1)` cells.
pub fn mesh_level(level: usize) -> Result<Mesh> {
    if level == 0 {
        return Err(Error::InvalidArgument("mesh level must be at least 1".into()));
    }
    let mut m = unit_square_base();
    for _ in 0..=level {
        m = red_refine(&m);
    }
    let mut m = barycentric_refine(&m);
    m.level = level;
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacetSide {
    pub cell: usize,
    /// Local edge `e` joins local vertices `e` and `(e + 1) % 3`.
    pub local_edge: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    /// Sorted vertex pair.
    pub vertices: [usize; 2],
    /// Lower-indexed adjacent cell.
    pub first: FacetSide,
    pub second: Option<FacetSide>,
    /// Unit normal pointing out of `first.cell`.
    pub normal: Point,
    /// Edge length.
    pub diameter: f64,
}

impl Facet {
    pub fn is_interior(&self) -> bool {
        self.second.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct FacetTopology {
    /// Ordered lexicographically by sorted vertex pair.
    pub facets: Vec<Facet>,
    /// Facet index of every local edge of every cell.
    pub cell_facets: Vec<[usize; 3]>,
}

impl FacetTopology {
    pub fn num_interior(&self) -> usize {
        self.facets.iter().filter(|f| f.is_interior()).count()
    }

    pub fn num_boundary(&self) -> usize {
        self.facets.len() - self.num_interior()
    }

    pub fn interior(&self) -> impl Iterator<Item = (usize, &Facet)> {
        self.facets.iter().enumerate().filter(|(_, f)| f.is_interior())
    }

    pub fn boundary(&self) -> impl Iterator<Item = (usize, &Facet)> {
        self.facets.iter().enumerate().filter(|(_, f)| !f.is_interior())
    }
}

/// Builds the edge table with two-sided adjacency, normals and diameters.
pub fn build_facets(mesh: &Mesh) -> Result<FacetTopology> {
    let mut half_edges: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(3 * mesh.cells.len());
    for (c, cell) in mesh.cells.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (cell[e], cell[(e + 1) % 3]);
            half_edges.push((a.min(b), a.max(b), c, e));
        }
    }
    half_edges.sort_unstable();

    let mut facets = Vec::new();
    let mut cell_facets = vec![[usize::MAX; 3]; mesh.cells.len()];
    let mut i = 0;
    while i < half_edges.len() {
        let (a, b, c0, e0) = half_edges[i];
        let mut j = i + 1;
        while j < half_edges.len() && half_edges[j].0 == a && half_edges[j].1 == b {
            j += 1;
        }
        if j - i > 2 {
            return Err(Error::Topology(format!(
                "edge ({a}, {b}) is shared by {} cells",
                j - i
            )));
        }
        let first = FacetSide { cell: c0, local_edge: e0 };
        let second = (j - i == 2).then(|| FacetSide {
            cell: half_edges[i + 1].2,
            local_edge: half_edges[i + 1].3,
        });
        let cell = mesh.cells[c0];
        let pa = mesh.vertices[cell[e0]];
        let pb = mesh.vertices[cell[(e0 + 1) % 3]];
        let len = distance(pa, pb);
        if len <= 0.0 {
            return Err(Error::Geometry(format!("edge ({a}, {b}) has zero length")));
        }
        let normal = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
        let idx = facets.len();
        cell_facets[c0][e0] = idx;
        if let Some(s) = second {
            cell_facets[s.cell][s.local_edge] = idx;
        }
        facets.push(Facet {
            vertices: [a, b],
            first,
            second,
            normal,
            diameter: len,
        });
        i = j;
    }
    Ok(FacetTopology { facets, cell_facets })
}
