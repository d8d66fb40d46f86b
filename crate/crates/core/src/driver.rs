//! Mesh, spaces, assembly, solve and error report for one level.

use std::sync::Arc;
use std::time::Instant;

use crate::analysis::{annotate_rates, error_energy, error_l2_pressure, error_l2_velocity, ErrorReport};
use crate::assembly::{assemble_system, stabilization_seminorm_sq, AssembledSystem, AssemblyOptions, StabConfig};
use crate::fespace::{build_pressure_space, build_velocity_space};
use crate::mesh::{mesh_level, Mesh};
use crate::problem::ProblemCase;
use crate::solver::{divergence_sup, solve, SolveResult};
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub k: usize,
    pub stab: StabConfig,
    pub assembly: AssemblyOptions,
    /// Quadrature degree for error norms; defaults to `2k+4`.
    pub error_degree: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { k: 2, stab: StabConfig::curl(2.0, 2.0, 2.0), assembly: AssemblyOptions { parallel: true, ..Default::default() }, error_degree: None }
    }
}

impl RunOptions {
    pub fn error_degree(&self) -> usize {
        self.error_degree.unwrap_or(2 * self.k + 4)
    }
}

pub struct LevelRun {
    pub mesh: Arc<Mesh>,
    pub system: AssembledSystem,
    pub solution: SolveResult,
    pub report: ErrorReport,
}

pub fn solve_case(case: &ProblemCase, level: usize, opts: &RunOptions) -> Result<LevelRun> {
    let start = Instant::now();
    let mesh = Arc::new(mesh_level(level)?);
    let velocity = Arc::new(build_velocity_space(mesh.clone(), opts.k)?);
    let pressure = Arc::new(build_pressure_space(mesh.clone(), opts.k)?);
    let system = assemble_system(velocity, pressure, case, &opts.stab, &opts.assembly)?;
    let solution = solve(&system)?;
    let q = opts.error_degree();
    let report = ErrorReport {
        level,
        h: mesh.max_diameter(),
        dofs_u: system.velocity.num_free_dofs(),
        dofs_p: system.num_pressure_dofs(),
        dofs_total: system.velocity.num_free_dofs() + system.num_pressure_dofs(),
        err_l2_u: error_l2_velocity(&solution.velocity, &case.exact_u, q)?,
        err_l2_p: error_l2_pressure(&solution.pressure, &case.exact_p, q)?,
        err_energy: error_energy(&solution.velocity, case, stabilization_seminorm_sq(&solution.velocity, case, &opts.stab, &opts.assembly)?, q)?,
        div_sup: divergence_sup(&solution.velocity, q)?,
        seconds: start.elapsed().as_secs_f64(),
        ..Default::default()
    };
    Ok(LevelRun { mesh, system, solution, report })
}

/// Runs every level in order and fills in the rates. On failure the reports completed so far
/// are returned with the error.
pub fn convergence_study(
    case: &ProblemCase,
    levels: impl IntoIterator<Item = usize>,
    opts: &RunOptions,
    mut on_level: impl FnMut(&ErrorReport),
) -> (Vec<ErrorReport>, Option<crate::Error>) {
    let mut reports = Vec::new();
    for level in levels {
        match solve_case(case, level, opts) {
            Ok(run) => {
                reports.push(run.report);
                annotate_rates(&mut reports);
                on_level(reports.last().unwrap());
            }
            Err(e) => return (reports, Some(e)),
        }
    }
    (reports, None)
}

/// `(velocity, pressure, total)` DOF counts of the `P_k / P_{k−1}` pair on a level. Velocity
/// DOFs fixed by the Dirichlet condition are not counted.
pub fn dof_counts(level: usize, k: usize) -> Result<(usize, usize, usize)> {
    let mesh = Arc::new(mesh_level(level)?);
    let v = build_velocity_space(mesh.clone(), k)?.num_free_dofs();
    let p = build_pressure_space(mesh, k)?.num_dofs();
    Ok((v, p, v + p))
}
