//! Lagrange bases on the reference triangle and their affine push-forward.
//!
//! Derivative tables store, for each basis function, all partial derivatives up to order 3 in
//! the order `1, ∂x, ∂y, ∂xx, ∂xy, ∂yy, ∂xxx, ∂xxy, ∂xyy, ∂yyy` (see [`deriv_index`]).

use nalgebra::DMatrix;

use crate::{Error, Point, Result};

pub const MAX_ORDER: usize = 3;
/// Number of partial derivatives of order `0..=3` in two variables.
pub const N_DERIVS: usize = 10;

/// One row of a derivative table.
pub type Derivs = [f64; N_DERIVS];

/// Position of `∂x^nx ∂y^ny` in a [`Derivs`] row.
#[inline]
pub const fn deriv_index(nx: usize, ny: usize) -> usize {
    let m = nx + ny;
    m * (m + 1) / 2 + ny
}

/// Number of table entries used up to `max_order`.
#[inline]
pub const fn derivs_up_to(max_order: usize) -> usize {
    (max_order + 1) * (max_order + 2) / 2
}

/// Lagrange basis of degree `k` on equispaced nodes.
///
/// Nodes are ordered vertices `(0,0), (1,0), (0,1)`, then the `k-1` interior nodes of edges
/// `v0→v1`, `v1→v2`, `v2→v0` in that direction, then cell-interior nodes row by row.
#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    degree: usize,
    nodes: Vec<Point>,
    monomials: Vec<(usize, usize)>,
    /// `coeffs[i][m]`: coefficient of monomial `m` in basis function `i`.
    coeffs: Vec<Vec<f64>>,
}

impl ReferenceBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > 8 {
            return Err(Error::UnsupportedDegree(degree));
        }
        let lattice = lattice_nodes(degree);
        let k = degree.max(1) as f64;
        let nodes: Vec<Point> = if degree == 0 {
            vec![[1.0 / 3.0, 1.0 / 3.0]]
        } else {
            lattice.iter().map(|&(i, j)| [i as f64 / k, j as f64 / k]).collect()
        };
        let monomials: Vec<(usize, usize)> = (0..=degree)
            .flat_map(|m| (0..=m).map(move |j| (m - j, j)))
            .collect();
        let n = nodes.len();
        let vandermonde = DMatrix::from_fn(n, n, |r, c| {
            let (a, b) = monomials[c];
            nodes[r][0].powi(a as i32) * nodes[r][1].powi(b as i32)
        });
        let inv = vandermonde
            .try_inverse()
            .ok_or_else(|| Error::Geometry("singular Vandermonde matrix".into()))?;
        let coeffs = (0..n).map(|i| (0..n).map(|m| inv[(m, i)]).collect()).collect();
        Ok(Self { degree, nodes, monomials, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// Values and partial derivatives up to `max_order` of every basis function at `point`.
    /// Entries above `max_order` are left at zero.
    pub fn eval(&self, point: Point, max_order: usize) -> Result<Vec<Derivs>> {
        if max_order > MAX_ORDER {
            return Err(Error::UnsupportedOrder(max_order));
        }
        let mono = self.monomial_derivs(point, max_order);
        Ok(self
            .coeffs
            .iter()
            .map(|c| {
                let mut row = [0.0; N_DERIVS];
                for (cm, md) in c.iter().zip(&mono) {
                    for d in 0..derivs_up_to(max_order) {
                        row[d] += cm * md[d];
                    }
                }
                row
            })
            .collect())
    }

    fn monomial_derivs(&self, p: Point, max_order: usize) -> Vec<Derivs> {
        self.monomials
            .iter()
            .map(|&(a, b)| {
                let mut row = [0.0; N_DERIVS];
                for m in 0..=max_order {
                    for ny in 0..=m {
                        let nx = m - ny;
                        row[deriv_index(nx, ny)] = falling(a, nx)
                            * falling(b, ny)
                            * pow_or_zero(p[0], a, nx)
                            * pow_or_zero(p[1], b, ny);
                    }
                }
                row
            })
            .collect()
    }
}

fn falling(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    ((n - k + 1)..=n).map(|i| i as f64).product()
}

fn pow_or_zero(x: f64, n: usize, k: usize) -> f64 {
    if k > n {
        0.0
    } else {
        x.powi((n - k) as i32)
    }
}

/// Lattice coordinates `(i, j)` of the degree-`k` nodes in basis order.
pub fn lattice_nodes(k: usize) -> Vec<(usize, usize)> {
    if k == 0 {
        return vec![(0, 0)];
    }
    let mut v = vec![(0, 0), (k, 0), (0, k)];
    v.extend((1..k).map(|t| (t, 0)));
    v.extend((1..k).map(|t| (k - t, t)));
    v.extend((1..k).map(|t| (0, k - t)));
    for j in 1..k {
        for i in 1..k {
            if i + j < k {
                v.push((i, j));
            }
        }
    }
    v
}

/// `x = J ξ + x0` mapping the reference triangle onto a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    /// `jacobian[r][c] = ∂x_r/∂ξ_c`.
    pub jacobian: [[f64; 2]; 2],
    pub translation: Point,
    pub det: f64,
    /// `inverse[r][c] = ∂ξ_r/∂x_c`.
    pub inverse: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn from_triangle(p: [Point; 3]) -> Result<Self> {
        let jacobian = [
            [p[1][0] - p[0][0], p[2][0] - p[0][0]],
            [p[1][1] - p[0][1], p[2][1] - p[0][1]],
        ];
        Self::new(jacobian, p[0])
    }

    pub fn new(jacobian: [[f64; 2]; 2], translation: Point) -> Result<Self> {
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        if det <= 0.0 || !det.is_finite() {
            return Err(Error::Geometry(format!("affine map has determinant {det}")));
        }
        let inverse = [
            [jacobian[1][1] / det, -jacobian[0][1] / det],
            [-jacobian[1][0] / det, jacobian[0][0] / det],
        ];
        Ok(Self { jacobian, translation, det, inverse })
    }

    pub fn identity() -> Self {
        Self::new([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]).unwrap()
    }

    pub fn to_physical(&self, xi: Point) -> Point {
        let j = &self.jacobian;
        [
            j[0][0] * xi[0] + j[0][1] * xi[1] + self.translation[0],
            j[1][0] * xi[0] + j[1][1] * xi[1] + self.translation[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> Point {
        let d = [x[0] - self.translation[0], x[1] - self.translation[1]];
        let g = &self.inverse;
        [g[0][0] * d[0] + g[0][1] * d[1], g[1][0] * d[0] + g[1][1] * d[1]]
    }

    /// Inverse-transpose Jacobian, the matrix that maps reference to physical gradients.
    pub fn inverse_transpose(&self) -> [[f64; 2]; 2] {
        let g = &self.inverse;
        [[g[0][0], g[1][0]], [g[0][1], g[1][1]]]
    }
}

/// Physical derivatives of a single reference table row.
///
/// For an affine map the chain rule is exact: `∂x_{a1}…∂x_{am} = Σ_b Π G[b_i][a_i] ∂ξ_{b1}…∂ξ_{bm}`
/// with `G = J^{-1}`.
pub fn push_forward(reference: &Derivs, map: &AffineMap, max_order: usize) -> Derivs {
    let g = &map.inverse;
    let mut out = [0.0; N_DERIVS];
    out[0] = reference[0];
    for m in 1..=max_order.min(MAX_ORDER) {
        for ny in 0..=m {
            // physical direction sequence: (m - ny) x's followed by ny y's
            let dirs: [usize; MAX_ORDER] = std::array::from_fn(|i| usize::from(i >= m - ny));
            let mut acc = 0.0;
            for mask in 0..(1usize << m) {
                let mut coef = 1.0;
                let mut ref_ny = 0;
                for (i, &a) in dirs.iter().enumerate().take(m) {
                    let b = (mask >> i) & 1;
                    ref_ny += b;
                    coef *= g[b][a];
                }
                acc += coef * reference[deriv_index(m - ref_ny, ref_ny)];
            }
            out[deriv_index(m - ny, ny)] = acc;
        }
    }
    out
}

/// Pushes forward every row of a table.
pub fn push_forward_table(reference: &[Derivs], map: &AffineMap, max_order: usize) -> Result<Vec<Derivs>> {
    if map.det <= 0.0 {
        return Err(Error::Geometry("degenerate affine map".into()));
    }
    if max_order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(max_order));
    }
    Ok(reference.iter().map(|r| push_forward(r, map, max_order)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ref_point(rng: &mut impl Rng) -> Point {
        loop {
            let p = [rng.gen_range(0.05..0.9), rng.gen_range(0.05..0.9)];
            if p[0] + p[1] < 0.95 {
                return p;
            }
        }
    }

    #[test]
    fn dimensions_and_kronecker() {
        for k in 0..=5 {
            let b = ReferenceBasis::new(k).unwrap();
            assert_eq!(b.dim(), (k + 1) * (k + 2) / 2);
            for (j, &node) in b.nodes().iter().enumerate() {
                let t = b.eval(node, 0).unwrap();
                for (i, row) in t.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((row[0] - expect).abs() < 1e-12, "k={k} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 1..=5 {
            let b = ReferenceBasis::new(k).unwrap();
            for p in std::iter::once([1.0 / 3.0, 1.0 / 3.0]).chain((0..10).map(|_| random_ref_point(&mut rng))) {
                let t = b.eval(p, 3).unwrap();
                for d in 0..N_DERIVS {
                    let s: f64 = t.iter().map(|r| r[d]).sum();
                    let expect = if d == 0 { 1.0 } else { 0.0 };
                    assert!((s - expect).abs() < 1e-11, "k={k} d={d} s={s}");
                }
            }
        }
    }

    #[test]
    fn quadratic_third_derivatives_vanish() {
        let b = ReferenceBasis::new(2).unwrap();
        let t = b.eval([0.2, 0.3], 3).unwrap();
        for row in &t {
            for d in deriv_index(3, 0)..N_DERIVS {
                assert_eq!(row[d], 0.0);
            }
        }
    }

    #[test]
    fn order_four_rejected() {
        let b = ReferenceBasis::new(2).unwrap();
        assert!(matches!(b.eval([0.1, 0.1], 4), Err(Error::UnsupportedOrder(4))));
    }

    #[test]
    fn finite_difference_derivatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for k in 1..=4 {
            let b = ReferenceBasis::new(k).unwrap();
            for _ in 0..5 {
                let p = random_ref_point(&mut rng);
                let t = b.eval(p, 3).unwrap();
                let tx = (b.eval([p[0] + h, p[1]], 3).unwrap(), b.eval([p[0] - h, p[1]], 3).unwrap());
                let ty = (b.eval([p[0], p[1] + h], 3).unwrap(), b.eval([p[0], p[1] - h], 3).unwrap());
                for i in 0..b.dim() {
                    let scale = t[i].iter().fold(1.0f64, |m, v| m.max(v.abs()));
                    // order m+1 entries from central differences of order m entries
                    for m in 0..3 {
                        for ny in 0..=m {
                            let nx = m - ny;
                            let fdx = (tx.0[i][deriv_index(nx, ny)] - tx.1[i][deriv_index(nx, ny)]) / (2.0 * h);
                            let fdy = (ty.0[i][deriv_index(nx, ny)] - ty.1[i][deriv_index(nx, ny)]) / (2.0 * h);
                            let tol = if m == 0 { 1e-6 } else { 1e-5 };
                            assert!((fdx - t[i][deriv_index(nx + 1, ny)]).abs() <= tol * scale);
                            assert!((fdy - t[i][deriv_index(nx, ny + 1)]).abs() <= tol * scale);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn affine_map_round_trip() {
        let m = AffineMap::from_triangle([[0.1, 0.2], [0.7, 0.25], [0.3, 0.9]]).unwrap();
        assert!(m.det > 0.0);
        let x = [0.4, 0.5];
        let back = m.to_physical(m.to_reference(x));
        assert!((back[0] - x[0]).abs() < 1e-13 && (back[1] - x[1]).abs() < 1e-13);
        assert!(AffineMap::from_triangle([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn push_forward_identity_and_scaling() {
        let b = ReferenceBasis::new(3).unwrap();
        let t = b.eval([0.2, 0.3], 3).unwrap();
        let id = push_forward_table(&t, &AffineMap::identity(), 3).unwrap();
        assert_eq!(id, t);
        let s = 0.25;
        let map = AffineMap::new([[s, 0.0], [0.0, s]], [0.3, 0.1]).unwrap();
        let scaled = push_forward_table(&t, &map, 3).unwrap();
        for (r, p) in t.iter().zip(&scaled) {
            for m in 0..=3 {
                for ny in 0..=m {
                    let d = deriv_index(m - ny, ny);
                    assert!((p[d] - r[d] * s.powi(-(m as i32))).abs() <= 1e-12 * (1.0 + p[d].abs()));
                }
            }
        }
    }

    #[test]
    fn linear_gradient_reproduced() {
        // f(x) = a·x + c expanded in the P1 basis of a physical triangle
        let tri = [[0.1, 0.2], [0.7, 0.25], [0.3, 0.9]];
        let map = AffineMap::from_triangle(tri).unwrap();
        let b = ReferenceBasis::new(1).unwrap();
        let a = [1.5, -2.25];
        let t = push_forward_table(&b.eval([0.3, 0.3], 1).unwrap(), &map, 1).unwrap();
        let f = |x: Point| a[0] * x[0] + a[1] * x[1] + 0.7;
        let gx: f64 = (0..3).map(|i| f(tri[i]) * t[i][1]).sum();
        let gy: f64 = (0..3).map(|i| f(tri[i]) * t[i][2]).sum();
        assert!((gx - a[0]).abs() < 1e-13 && (gy - a[1]).abs() < 1e-13);
    }

    /// Physical derivatives of `q(x) = Σ c_ab x^a y^b` computed directly must equal the
    /// push-forward of the reference derivatives of `q ∘ F`.
    #[test]
    fn push_forward_commutes_with_differentiation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = ReferenceBasis::new(3).unwrap();
        for _ in 0..20 {
            let j = [[rng.gen_range(0.5..1.5), rng.gen_range(-0.4..0.4)], [rng.gen_range(-0.4..0.4), rng.gen_range(0.5..1.5)]];
            let map = AffineMap::new(j, [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).unwrap();
            // random cubic in physical coordinates
            let c: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let monos: Vec<(usize, usize)> = (0..=3).flat_map(|m| (0..=m).map(move |j| (m - j, j))).collect();
            let q = |x: Point, nx: usize, ny: usize| -> f64 {
                monos
                    .iter()
                    .zip(&c)
                    .map(|(&(a, bb), ci)| ci * falling(a, nx) * falling(bb, ny) * pow_or_zero(x[0], a, nx) * pow_or_zero(x[1], bb, ny))
                    .sum()
            };
            // interpolate q ∘ F in the reference cubic basis (exact since q ∘ F is cubic)
            let nodal: Vec<f64> = b.nodes().iter().map(|&xi| q(map.to_physical(xi), 0, 0)).collect();
            let xi = random_ref_point(&mut rng);
            let rt = b.eval(xi, 3).unwrap();
            let mut ref_row = [0.0; N_DERIVS];
            for (i, r) in rt.iter().enumerate() {
                for d in 0..N_DERIVS {
                    ref_row[d] += nodal[i] * r[d];
                }
            }
            let phys = push_forward(&ref_row, &map, 3);
            let x = map.to_physical(xi);
            for m in 0..=3 {
                for ny in 0..=m {
                    let exact = q(x, m - ny, ny);
                    let got = phys[deriv_index(m - ny, ny)];
                    assert!((exact - got).abs() <= 1e-11 * (1.0 + exact.abs()), "m={m} ny={ny}: {exact} vs {got}");
                }
            }
        }
    }
}
