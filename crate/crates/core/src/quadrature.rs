//! Quadrature on the reference triangle `{(0,0), (1,0), (0,1)}` and the unit interval.
//!
//! Every rule is checked against exact monomial integrals when it is built.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    /// Polynomials up to this total degree are integrated exactly.
    pub degree: usize,
}

pub type TriangleRule = QuadratureRule<2>;
pub type EdgeRule = QuadratureRule<1>;

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; D], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

pub const MAX_TRIANGLE_DEGREE: usize = 20;
pub const MAX_EDGE_DEGREE: usize = 63;

const VALIDATION_TOL: f64 = 1e-12;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `∫∫ x^p y^q` over the reference triangle.
pub fn triangle_monomial_integral(p: usize, q: usize) -> f64 {
    factorial(p) * factorial(q) / factorial(p + q + 2)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss rule on `[0, 1]` exact to `degree`.
pub fn edge_quadrature(degree: usize) -> Result<EdgeRule> {
    if degree > MAX_EDGE_DEGREE {
        return Err(Error::UnsupportedQuadrature { domain: "unit interval", degree });
    }
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    let rule = EdgeRule {
        points: x.iter().map(|&t| [0.5 * (t + 1.0)]).collect(),
        weights: w.iter().map(|&wi| 0.5 * wi).collect(),
        degree,
    };
    validate_edge(&rule)?;
    Ok(rule)
}

fn validate_edge(rule: &EdgeRule) -> Result<()> {
    for p in 0..=rule.degree {
        let approx: f64 = rule.iter().map(|(t, w)| w * t[0].powi(p as i32)).sum();
        if (approx - 1.0 / (p as f64 + 1.0)).abs() > VALIDATION_TOL {
            return Err(Error::UnsupportedQuadrature { domain: "unit interval", degree: rule.degree });
        }
    }
    Ok(())
}

/// Symmetric positive-weight rule on the reference triangle exact to `degree`.
pub fn triangle_quadrature(degree: usize) -> Result<TriangleRule> {
    let mut rule = match degree {
        0 | 1 => TriangleRule { points: vec![[1.0 / 3.0, 1.0 / 3.0]], weights: vec![0.5], degree: 1 },
        2 => from_orbits(&[], &[(1.0 / 6.0, 1.0 / 3.0)], &[], 2),
        3 | 4 => from_orbits(
            &[],
            &[
                (0.445_948_490_915_965, 0.223_381_589_678_011),
                (0.091_576_213_509_771, 0.109_951_743_655_322),
            ],
            &[],
            4,
        ),
        5 => from_orbits(
            &[0.225],
            &[
                (0.470_142_064_105_115, 0.132_394_152_788_506),
                (0.101_286_507_323_456, 0.125_939_180_544_827),
            ],
            &[],
            5,
        ),
        6 => from_orbits(
            &[],
            &[
                (0.249_286_745_170_910, 0.116_786_275_726_379),
                (0.063_089_014_491_502, 0.050_844_906_370_207),
            ],
            &[(0.053_145_049_844_817, 0.310_352_451_033_784, 0.082_851_075_618_374)],
            6,
        ),
        d if d <= MAX_TRIANGLE_DEGREE => symmetrized_collapsed(d),
        d => return Err(Error::UnsupportedQuadrature { domain: "reference triangle", degree: d }),
    };
    // tabulated rules carry ~15 digits; fall back to the generated rule if validation is marginal
    if validate_triangle(&rule).is_err() {
        rule = symmetrized_collapsed(rule.degree);
        validate_triangle(&rule)?;
    }
    rule.degree = rule.degree.max(degree);
    Ok(rule)
}

/// Builds a rule from symmetry orbits; weights are given normalized to total 1.
fn from_orbits(
    centroid: &[f64],
    three: &[(f64, f64)],
    six: &[(f64, f64, f64)],
    degree: usize,
) -> TriangleRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for &w in centroid {
        points.push([1.0 / 3.0, 1.0 / 3.0]);
        weights.push(0.5 * w);
    }
    for &(a, w) in three {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a], [b, a], [a, b]] {
            points.push(p);
            weights.push(0.5 * w);
        }
    }
    for &(a, b, w) in six {
        let c = 1.0 - a - b;
        for p in [[a, b], [b, a], [b, c], [c, b], [a, c], [c, a]] {
            points.push(p);
            weights.push(0.5 * w);
        }
    }
    TriangleRule { points, weights, degree }
}

/// Collapsed (Duffy) tensor Gauss rule averaged over the six symmetries of the triangle.
fn symmetrized_collapsed(degree: usize) -> TriangleRule {
    let n = (degree + 2).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(6 * n * n);
    let mut weights = Vec::with_capacity(6 * n * n);
    for i in 0..n {
        let u = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let v = 0.5 * (x[j] + 1.0);
            let wt = 0.25 * w[i] * w[j] * u / 6.0;
            let l = [1.0 - u, u * (1.0 - v), u * v];
            for (a, b) in [(1, 2), (2, 1), (0, 1), (1, 0), (0, 2), (2, 0)] {
                points.push([l[a], l[b]]);
                weights.push(wt);
            }
        }
    }
    TriangleRule { points, weights, degree }
}

fn validate_triangle(rule: &TriangleRule) -> Result<()> {
    let bad = || Error::UnsupportedQuadrature { domain: "reference triangle", degree: rule.degree };
    if rule.weights.iter().any(|&w| w <= 0.0) {
        return Err(bad());
    }
    for p in 0..=rule.degree {
        for q in 0..=(rule.degree - p) {
            let approx: f64 = rule
                .iter()
                .map(|(x, w)| w * x[0].powi(p as i32) * x[1].powi(q as i32))
                .sum();
            if (approx - triangle_monomial_integral(p, q)).abs() > VALIDATION_TOL {
                return Err(bad());
            }
        }
    }
    Ok(())
}
