//! Direct solution of the bordered saddle-point system.
//!
//! Unknowns are the free velocity DOFs, all pressure DOFs and one multiplier for the
//! zero-mean pressure constraint:
//!
//! ```text
//!   [ A+S  Bᵀ  0 ] [u]   [f]
//!   [ B    0   m ] [p] = [g]
//!   [ 0    mᵀ  0 ] [λ]   [0]
//! ```
//!
//! The border row is dense, which ruins the fill of a direct factorization. The saddle-point
//! block `K` is singular only through constant pressures, with the same vector spanning its
//! left kernel, so `K + e_j e_jᵀ` for one pressure DOF `j` is regular and sparse. The bordered
//! inverse is applied through it: λ from the left kernel, then the pressure constant from the
//! border row.

use std::sync::Arc;
use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use serde::Serialize;

use crate::assembly::AssembledSystem;
use crate::fespace::{PressureField, VelocityField};
use crate::quadrature::triangle_quadrature;
use crate::{Error, Result};

pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
const REFINEMENT_STEPS: usize = 5;

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SolveStats {
    pub unknowns: usize,
    pub nonzeros: usize,
    pub refinement_steps: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub velocity: VelocityField,
    pub pressure: PressureField,
    /// Multiplier of the mean constraint. Near zero when the boundary data has zero net flux.
    pub multiplier: f64,
    /// `‖b − Mx‖∞ / max(‖b‖∞, 1)` after refinement.
    pub residual: f64,
    pub stats: SolveStats,
}

struct Bordered {
    n: usize,
    free: Vec<usize>,
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

fn bordered(system: &AssembledSystem) -> Bordered {
    let n_u = system.num_velocity_dofs();
    let n_p = system.num_pressure_dofs();
    let mut index = vec![usize::MAX; n_u];
    let free: Vec<usize> = (0..n_u).filter(|&i| !system.boundary[i]).collect();
    for (k, &i) in free.iter().enumerate() {
        index[i] = k;
    }
    let nf = free.len();
    let n = nf + n_p + 1;
    let mut triplets = Vec::with_capacity(system.a.nnz() + system.s.nnz() + 2 * system.b.nnz() + 2 * n_p);
    for (r, c, v) in system.a.iter().chain(system.s.iter()) {
        if index[r] != usize::MAX && index[c] != usize::MAX {
            triplets.push((index[r], index[c], v));
        }
    }
    for (q, c, v) in system.b.iter() {
        if index[c] != usize::MAX {
            triplets.push((nf + q, index[c], v));
            triplets.push((index[c], nf + q, v));
        }
    }
    for (q, &m) in system.mean.iter().enumerate() {
        if m != 0.0 {
            triplets.push((nf + q, n - 1, m));
            triplets.push((n - 1, nf + q, m));
        }
    }
    triplets.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let mut rhs: Vec<f64> = free.iter().map(|&i| system.rhs_u[i]).collect();
    rhs.extend_from_slice(&system.rhs_p);
    rhs.push(0.0);
    Bordered { n, free, triplets, rhs }
}

fn residual(triplets: &[(usize, usize, f64)], x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = b.to_vec();
    for &(i, j, v) in triplets {
        r[i] -= v * x[j];
    }
    r
}

fn backward_error(triplets: &[(usize, usize, f64)], x: &[f64], b: &[f64], r: &[f64]) -> f64 {
    let mut denom: Vec<f64> = b.iter().map(|v| v.abs()).collect();
    for &(i, j, v) in triplets {
        denom[i] += (v * x[j]).abs();
    }
    r.iter().zip(&denom).fold(0.0, |m, (r, d)| if *d > 0.0 { m.max(r.abs() / d) } else if *r != 0.0 { f64::INFINITY } else { m })
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn solve(system: &AssembledSystem) -> Result<SolveResult> {
    let start = Instant::now();
    let Bordered { n, free, triplets, rhs } = bordered(system);
    let nf = free.len();
    let pin = nf;
    let mut reduced: Vec<Triplet<usize, usize, f64>> =
        triplets.iter().filter(|t| t.0 != n - 1 && t.1 != n - 1).map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    reduced.push(Triplet::new(pin, pin, 1.0));
    reduced.push(Triplet::new(n - 1, n - 1, 1.0));
    let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &reduced)
        .map_err(|e| Error::Solver(format!("matrix construction failed: {e:?}")))?;
    let lu = matrix.sp_lu().map_err(|e| Error::Solver(format!("factorization failed: {e:?}")))?;
    let mean = &system.mean;
    let area: f64 = mean.iter().sum();
    let apply = |b: &[f64]| -> Vec<f64> {
        let lambda = b[nf..n - 1].iter().sum::<f64>() / area;
        let mut y = Mat::from_fn(n, 1, |i, _| if i >= nf && i < n - 1 { b[i] - lambda * mean[i - nf] } else if i == n - 1 { 0.0 } else { b[i] });
        y = lu.solve(y);
        let mut x: Vec<f64> = (0..n).map(|i| y[(i, 0)]).collect();
        let shift = (b[n - 1] - mean.iter().zip(&x[nf..n - 1]).map(|(m, p)| m * p).sum::<f64>()) / area;
        x[nf..n - 1].iter_mut().for_each(|p| *p += shift);
        x[n - 1] = lambda;
        x
    };
    let mut x = apply(&rhs);
    let scale = sup(&rhs).max(1.0);
    let mut r = residual(&triplets, &x, &rhs);
    let mut steps = 0;
    // componentwise backward error: the divergence rows are integrals over small cells and
    // would be invisible in a residual measured against the largest load entry
    let mut omega = backward_error(&triplets, &x, &rhs, &r);
    while steps < REFINEMENT_STEPS && omega > f64::EPSILON {
        let dx = apply(&r);
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let r_trial = residual(&triplets, &trial, &rhs);
        let omega_trial = backward_error(&triplets, &trial, &rhs, &r_trial);
        if omega_trial > 0.5 * omega {
            break;
        }
        (x, r, omega) = (trial, r_trial, omega_trial);
        steps += 1;
    }
    let rel = sup(&r) / scale;
    if !rel.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("factorization produced non-finite values".into()));
    }
    if rel > RESIDUAL_TOLERANCE {
        return Err(Error::Accuracy { residual: rel, tolerance: RESIDUAL_TOLERANCE });
    }
    let mut u = system.lifting.clone();
    for (k, &i) in free.iter().enumerate() {
        u[i] = x[k];
    }
    let p = x[nf..n - 1].to_vec();
    Ok(SolveResult {
        velocity: VelocityField::new(Arc::clone(&system.velocity), u)?,
        pressure: PressureField::new(Arc::clone(&system.pressure), p)?,
        multiplier: x[n - 1],
        residual: rel,
        stats: SolveStats { unknowns: n, nonzeros: triplets.len(), refinement_steps: steps, seconds: start.elapsed().as_secs_f64() },
    })
}

/// `max |div u_h|` over cell quadrature points.
pub fn divergence_sup(u: &VelocityField, tri_degree: usize) -> Result<f64> {
    let rule = triangle_quadrature(tri_degree)?;
    let space = &u.space;
    let tables: Vec<_> = rule.points.iter().map(|&xi| space.basis().eval(xi, 1)).collect::<Result<_>>()?;
    let mut m: f64 = 0.0;
    for c in 0..space.mesh().num_cells() {
        for table in &tables {
            let d = u.combine(c, table, 1);
            m = m.max((d[0][1] + d[1][2]).abs());
        }
    }
    Ok(m)
}
