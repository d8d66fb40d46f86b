//! Error norms, convergence rates and cross sections.

use serde::Serialize;

use crate::fespace::{PressureField, VelocityField};
use crate::problem::{ProblemCase, ScalarField, VectorField};
use crate::quadrature::triangle_quadrature;
use crate::{Error, Result};

pub const DEFAULT_SECTION_SAMPLES: usize = 801;

/// One row of a convergence study. Rates are `None` on the first level.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ErrorReport {
    pub level: usize,
    /// Largest cell diameter.
    pub h: f64,
    /// Free velocity DOFs (Dirichlet nodes excluded).
    pub dofs_u: usize,
    pub dofs_p: usize,
    pub dofs_total: usize,
    pub err_l2_u: f64,
    pub rate_l2_u: Option<f64>,
    pub err_l2_p: f64,
    pub rate_l2_p: Option<f64>,
    pub err_energy: f64,
    pub rate_energy: Option<f64>,
    pub div_sup: f64,
    pub seconds: f64,
}

/// Squared `L²` and `H¹`-seminorm of `u − u_h` summed over cells.
fn velocity_error_parts(u_h: &VelocityField, exact: &VectorField, tri_degree: usize) -> Result<(f64, f64)> {
    let rule = triangle_quadrature(tri_degree)?;
    let space = &u_h.space;
    let tables: Vec<_> = rule.points.iter().map(|&xi| space.basis().eval(xi, 1)).collect::<Result<_>>()?;
    let (mut l2, mut h1) = (0.0, 0.0);
    for c in 0..space.mesh().num_cells() {
        let map = space.map(c);
        for ((xi, w), table) in rule.iter().zip(&tables) {
            let d = u_h.combine(c, table, 1);
            let e = exact.jet(map.to_physical(*xi));
            let wd = w * map.det;
            for k in 0..2 {
                l2 += wd * (e.value[k] - d[k][0]).powi(2);
                h1 += wd * ((e.grad[k][0] - d[k][1]).powi(2) + (e.grad[k][1] - d[k][2]).powi(2));
            }
        }
    }
    Ok((l2, h1))
}

/// `‖u − u_h‖` in `L²`.
pub fn error_l2_velocity(u_h: &VelocityField, exact: &VectorField, tri_degree: usize) -> Result<f64> {
    Ok(velocity_error_parts(u_h, exact, tri_degree)?.0.sqrt())
}

/// `‖p − p_h‖` in `L²`, without any mean correction.
pub fn error_l2_pressure(p_h: &PressureField, exact: &ScalarField, tri_degree: usize) -> Result<f64> {
    let rule = triangle_quadrature(tri_degree)?;
    let space = &p_h.space;
    let tables: Vec<_> = rule.points.iter().map(|&xi| space.basis().eval(xi, 0)).collect::<Result<_>>()?;
    let mut sum = 0.0;
    for c in 0..space.mesh().num_cells() {
        let map = space.map(c);
        for ((xi, w), table) in rule.iter().zip(&tables) {
            let ph: f64 = table.iter().zip(space.cell_dofs(c)).map(|(r, dof)| r[0] * p_h.coeffs[dof]).sum();
            sum += w * map.det * (exact.value(map.to_physical(*xi)) - ph).powi(2);
        }
    }
    Ok(sum.sqrt())
}

/// `(σ‖e‖² + μ‖∇e‖² + |u_h|_S²)^{1/2}` with `e = u − u_h`. The exact solution is smooth,
/// so its stabilization jumps vanish and `|e|_S = |u_h|_S`.
pub fn error_energy(u_h: &VelocityField, case: &ProblemCase, stab_sq: f64, tri_degree: usize) -> Result<f64> {
    let (l2, h1) = velocity_error_parts(u_h, &case.exact_u, tri_degree)?;
    Ok((case.sigma * l2 + case.mu * h1 + stab_sq.max(0.0)).sqrt())
}

/// `log₂(e_{ℓ−1} / e_ℓ)`; `None` for the first entry, NaN where undefined.
pub fn convergence_rates(errors: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; errors.len()];
    for i in 1..errors.len() {
        let (a, b) = (errors[i - 1], errors[i]);
        out[i] = Some(if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() { (a / b).log2() } else { f64::NAN });
    }
    out
}

/// Fills the rate columns of consecutive reports.
pub fn annotate_rates(reports: &mut [ErrorReport]) {
    let column = |f: fn(&ErrorReport) -> f64, reports: &[ErrorReport]| convergence_rates(&reports.iter().map(f).collect::<Vec<_>>());
    let ru = column(|r| r.err_l2_u, reports);
    let rp = column(|r| r.err_l2_p, reports);
    let re = column(|r| r.err_energy, reports);
    for (i, r) in reports.iter_mut().enumerate() {
        r.rate_l2_u = ru[i];
        r.rate_l2_p = rp[i];
        r.rate_energy = re[i];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionSample {
    pub x: f64,
    pub u2_h: f64,
    pub u2_exact: f64,
}

/// Second velocity component along the horizontal line at height `y`, `n` equispaced samples.
pub fn cross_section(u_h: &VelocityField, exact: &VectorField, y: f64, n: usize) -> Result<Vec<SectionSample>> {
    if !(y > 0.0 && y < 1.0) || n < 2 {
        return Err(Error::InvalidArgument(format!("cross section needs 0 < y < 1 and n ≥ 2, got y = {y}, n = {n}")));
    }
    (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            Ok(SectionSample { x, u2_h: u_h.value_at([x, y])?[1], u2_exact: exact.value([x, y])[1] })
        })
        .collect()
}

/// `max |u2_h − u2_exact|` over samples with `x ≤ x_max`.
pub fn oscillation_indicator(samples: &[SectionSample], x_max: f64) -> f64 {
    samples.iter().filter(|s| s.x <= x_max).fold(0.0, |m, s| m.max((s.u2_h - s.u2_exact).abs()))
}
