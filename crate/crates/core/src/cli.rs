//! Command-line front end.
//!
//! Every flag can also be given in a JSON file passed with `--config`; flags on the command
//! line take precedence. The resolved configuration is written to `config.json` in the output
//! directory. Exit status is 0 on success, 1 for invalid configuration (nothing is written) and
//! 2 for numerical failures.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{cross_section, oscillation_indicator, ErrorReport, DEFAULT_SECTION_SAMPLES};
use crate::assembly::{AssemblyOptions, LengthScale, StabConfig, StabVariant};
use crate::driver::{convergence_study, dof_counts, solve_case, RunOptions};
use crate::output::{convergence_csv, convergence_table, section_csv, svg_plot, Series};
use crate::problem::ProblemCase;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

pub const MAX_LEVEL: usize = 6;
const PATCH_TOLERANCE: f64 = 1e-8;
const LAYER_X_MAX: f64 = 0.8;

#[derive(Debug, Parser)]
#[command(name = "oseen-sv", version, about = "Scott–Vogelius solver for the 2D Oseen problem")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convergence study on the lattice-flow case.
    Convergence(Flags),
    /// Cross sections of the boundary-layer case for four stabilization presets.
    Layer(Flags),
    /// DOF counts per refinement level.
    Meshinfo(Flags),
    /// Exact reproduction of a quadratic solution.
    Patch(Flags),
}

impl Command {
    fn flags(&self) -> &Flags {
        match self {
            Command::Convergence(f) | Command::Layer(f) | Command::Meshinfo(f) | Command::Patch(f) => f,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Convergence(_) => "convergence",
            Command::Layer(_) => "layer",
            Command::Meshinfo(_) => "meshinfo",
            Command::Patch(_) => "patch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabArg {
    None,
    Classical,
    Curl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthArg {
    Mesh,
    Facet,
}

/// Flags shared by all commands. The same keys (kebab-case) are accepted in a config file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Flags {
    /// Problem case: lattice, layer or patch.
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub delta1: Option<f64>,
    #[arg(long)]
    pub delta2: Option<f64>,
    #[arg(long)]
    pub delta3: Option<f64>,
    #[arg(long, value_enum)]
    pub stab: Option<StabArg>,
    /// Divide the stabilization by `max |β|` (default true).
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_scaling: Option<bool>,
    /// Length in the facet weights: the mesh size or each facet's length.
    #[arg(long, value_enum)]
    pub length_scale: Option<LengthArg>,
    /// Velocity degree.
    #[arg(long)]
    pub k: Option<usize>,
    /// Level range `A..B` (inclusive) or a single level.
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub quad_tri: Option<usize>,
    #[arg(long)]
    pub quad_edge: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sequential execution and zeroed timings, for byte-identical output.
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<bool>,
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot: Option<bool>,
    /// JSON file with default values for any of the flags above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Flags {
    fn merged_over(self, file: Flags) -> Flags {
        Flags {
            case: self.case.or(file.case),
            mu: self.mu.or(file.mu),
            sigma: self.sigma.or(file.sigma),
            delta1: self.delta1.or(file.delta1),
            delta2: self.delta2.or(file.delta2),
            delta3: self.delta3.or(file.delta3),
            stab: self.stab.or(file.stab),
            beta_scaling: self.beta_scaling.or(file.beta_scaling),
            length_scale: self.length_scale.or(file.length_scale),
            k: self.k.or(file.k),
            levels: self.levels.or(file.levels),
            level: self.level.or(file.level),
            quad_tri: self.quad_tri.or(file.quad_tri),
            quad_edge: self.quad_edge.or(file.quad_edge),
            out: self.out.or(file.out),
            deterministic: self.deterministic.or(file.deterministic),
            plot: self.plot.or(file.plot),
            config: self.config,
        }
    }
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub case: String,
    pub mu: f64,
    pub sigma: f64,
    pub stab: StabConfig,
    pub k: usize,
    pub levels: (usize, usize),
    pub quad_tri: Option<usize>,
    pub quad_edge: Option<usize>,
    pub out: Option<PathBuf>,
    pub deterministic: bool,
    pub plot: bool,
}

impl RunConfig {
    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            k: self.k,
            stab: self.stab,
            assembly: AssemblyOptions { tri_degree: self.quad_tri, edge_degree: self.quad_edge, parallel: !self.deterministic },
            error_degree: None,
        }
    }

    pub fn problem(&self) -> Result<ProblemCase> {
        ProblemCase::by_name(&self.case, self.mu, self.sigma)
    }
}

fn parse_levels(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("cannot parse level range '{s}', expected A..B or A"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().trim_start_matches('=').parse().map_err(|_| bad())?),
        None => {
            let a = s.trim().parse().map_err(|_| bad())?;
            (a, a)
        }
    };
    Ok((a, b))
}

struct Defaults {
    case: &'static str,
    mu: f64,
    sigma: f64,
    stab: StabArg,
    delta: [f64; 3],
    levels: (usize, usize),
}

fn defaults(command: &str) -> Defaults {
    match command {
        "convergence" => Defaults { case: "lattice", mu: 1e-9, sigma: 1.0, stab: StabArg::Curl, delta: [2.0; 3], levels: (1, 5) },
        "layer" => Defaults { case: "layer", mu: 1e-5, sigma: 0.0, stab: StabArg::Curl, delta: [1.0, 0.5, 0.1], levels: (4, 4) },
        "patch" => Defaults { case: "patch", mu: 1.0, sigma: 1.0, stab: StabArg::Curl, delta: [1.0; 3], levels: (1, 2) },
        _ => Defaults { case: "lattice", mu: 1e-9, sigma: 1.0, stab: StabArg::Curl, delta: [2.0; 3], levels: (1, 5) },
    }
}

/// Applies per-command defaults to merged flags and validates the result.
pub fn resolve(command: &str, flags: Flags) -> Result<RunConfig> {
    let d = defaults(command);
    let stab_kind = flags.stab.unwrap_or(d.stab);
    let given = [flags.delta1, flags.delta2, flags.delta3];
    let stab = match stab_kind {
        StabArg::None => StabConfig::none(),
        StabArg::Curl => StabConfig::curl(given[0].unwrap_or(d.delta[0]), given[1].unwrap_or(d.delta[1]), given[2].unwrap_or(d.delta[2])),
        StabArg::Classical => {
            StabConfig { delta: [given[0].unwrap_or(1.0), given[1].unwrap_or(0.0), given[2].unwrap_or(0.0)], ..StabConfig::classical(1.0) }
        }
    };
    let stab = StabConfig {
        beta_sup_scaling: flags.beta_scaling.unwrap_or(true),
        length_scale: match flags.length_scale {
            Some(LengthArg::Facet) => LengthScale::Facet,
            _ => LengthScale::Mesh,
        },
        ..stab
    };
    stab.validate()?;
    let levels = match (&flags.levels, flags.level) {
        (Some(_), Some(_)) => return Err(Error::Config("give either --levels or --level, not both".into())),
        (Some(s), None) => parse_levels(s)?,
        (None, Some(l)) => (l, l),
        (None, None) => d.levels,
    };
    if levels.0 < 1 || levels.1 > MAX_LEVEL || levels.0 > levels.1 {
        return Err(Error::Config(format!("level range {}..{} must satisfy 1 ≤ A ≤ B ≤ {MAX_LEVEL}", levels.0, levels.1)));
    }
    let k = flags.k.unwrap_or(2);
    if !(2..=4).contains(&k) {
        return Err(Error::Config(format!("velocity degree k = {k} is not supported (2 ≤ k ≤ 4)")));
    }
    for (name, q) in [("--quad-tri", flags.quad_tri), ("--quad-edge", flags.quad_edge)] {
        if q == Some(0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
    }
    let cfg = RunConfig {
        command: command.to_string(),
        case: flags.case.unwrap_or_else(|| d.case.to_string()),
        mu: flags.mu.unwrap_or(d.mu),
        sigma: flags.sigma.unwrap_or(d.sigma),
        stab,
        k,
        levels,
        quad_tri: flags.quad_tri,
        quad_edge: flags.quad_edge,
        out: flags.out,
        deterministic: flags.deterministic.unwrap_or(false),
        plot: flags.plot.unwrap_or(false),
    };
    // validates the case name, μ and σ
    let case = cfg.problem()?;
    if command == "layer" && case.name != "layer" {
        return Err(Error::Config("the layer command runs the layer case only".into()));
    }
    if let Some(q) = cfg.quad_tri {
        crate::quadrature::triangle_quadrature(q).map_err(|e| Error::Config(e.to_string()))?;
    }
    if let Some(q) = cfg.quad_edge {
        crate::quadrature::edge_quadrature(q).map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(cfg)
}

fn load_flags(flags: Flags) -> Result<Flags> {
    match &flags.config {
        None => Ok(flags),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let file: Flags = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            Ok(flags.merged_over(file))
        }
    }
}

fn prepare_out(cfg: &RunConfig) -> Result<Option<PathBuf>> {
    let Some(dir) = cfg.out.clone() else { return Ok(None) };
    fs::create_dir_all(&dir)?;
    let json = serde_json::to_string_pretty(cfg).expect("config serializes");
    fs::write(dir.join("config.json"), json + "\n")?;
    Ok(Some(dir))
}

fn numerical(e: Error) -> (i32, String) {
    (if e.is_configuration() { EXIT_CONFIG } else { EXIT_NUMERICAL }, e.to_string())
}

/// Parses `args` (including the program name) and runs the command. Progress and tables go
/// to `out`, errors to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    let name = cli.command.name();
    let cfg = match load_flags(cli.command.flags().clone()).and_then(|f| resolve(name, f)) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    if cfg.deterministic {
        faer::set_global_parallelism(faer::Par::Seq);
    }
    let result = match name {
        "convergence" => run_convergence(&cfg, out),
        "layer" => run_layer(&cfg, out),
        "meshinfo" => run_meshinfo(&cfg, out),
        _ => run_patch(&cfg, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err((code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

type CmdResult = std::result::Result<(), (i32, String)>;

fn io_err(e: impl std::fmt::Display) -> (i32, String) {
    (EXIT_NUMERICAL, e.to_string())
}

pub fn run_convergence(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let case = cfg.problem().map_err(numerical)?;
    let dir = prepare_out(cfg).map_err(io_err)?;
    let _ = writeln!(out, "case {} mu={:e} sigma={} stab={:?} delta={:?} k={}", case.name, cfg.mu, cfg.sigma, cfg.stab.variant, cfg.stab.delta, cfg.k);
    let (reports, failure) = convergence_study(&case, cfg.levels.0..=cfg.levels.1, &cfg.run_options(), |r| {
        let _ = writeln!(out, "level {} done: {} dofs, G(u) = {:.3e}, {:.1} s", r.level, r.dofs_total, r.err_energy, r.seconds);
    });
    let _ = write!(out, "{}", convergence_table(&reports));
    if let Some(dir) = &dir {
        fs::write(dir.join("convergence.csv"), convergence_csv(&reports, cfg.deterministic)).map_err(io_err)?;
        if cfg.plot {
            fs::write(dir.join("convergence.svg"), convergence_svg(&reports)).map_err(io_err)?;
        }
    }
    match failure {
        Some(e) => Err(numerical(e)),
        None => Ok(()),
    }
}

fn convergence_svg(reports: &[ErrorReport]) -> String {
    let col = |f: fn(&ErrorReport) -> f64| reports.iter().map(|r| (r.level as f64, f(r))).collect();
    svg_plot(
        "errors by level (log10)",
        &[
            Series { label: "L2(u)", points: col(|r| r.err_l2_u) },
            Series { label: "L2(p)", points: col(|r| r.err_l2_p) },
            Series { label: "G(u)", points: col(|r| r.err_energy) },
        ],
        true,
    )
}

/// Presets of the boundary-layer study: name and configuration. All presets share the
/// scaling and length settings of `full`.
pub fn layer_presets(full: StabConfig) -> Vec<(&'static str, StabConfig)> {
    let like = |s: StabConfig| StabConfig { beta_sup_scaling: full.beta_sup_scaling, length_scale: full.length_scale, ..s };
    vec![
        ("none", like(StabConfig::none())),
        ("s1", like(StabConfig::curl(1.0, 0.0, 0.0))),
        ("classical", like(StabConfig::classical(1.0))),
        ("full", full),
    ]
}

pub fn run_layer(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let case = cfg.problem().map_err(numerical)?;
    let dir = prepare_out(cfg).map_err(io_err)?;
    let full = if cfg.stab.variant == StabVariant::CurlCip { cfg.stab } else { StabConfig { delta: [1.0, 0.5, 0.1], variant: StabVariant::CurlCip, ..cfg.stab } };
    let mut summary = String::from("preset,variant,delta1,delta2,delta3,indicator\n");
    let mut curves = Vec::new();
    for (name, stab) in layer_presets(full) {
        let opts = RunOptions { stab, ..cfg.run_options() };
        let run = solve_case(&case, cfg.levels.0, &opts).map_err(numerical)?;
        let samples = cross_section(&run.solution.velocity, &case.exact_u, 0.5, DEFAULT_SECTION_SAMPLES).map_err(numerical)?;
        let ind = oscillation_indicator(&samples, LAYER_X_MAX);
        let _ = writeln!(out, "{name:>10}: oscillation indicator (x <= {LAYER_X_MAX}) = {ind:.4e}");
        summary.push_str(&format!(
            "{name},{},{},{},{},{ind:.6e}\n",
            serde_json::to_value(stab.variant).unwrap().as_str().unwrap(),
            stab.delta[0],
            stab.delta[1],
            stab.delta[2]
        ));
        if let Some(dir) = &dir {
            fs::write(dir.join(format!("section_{name}.csv")), section_csv(&samples)).map_err(io_err)?;
        }
        if curves.is_empty() {
            curves.push(("exact", samples.iter().map(|s| (s.x, s.u2_exact)).collect::<Vec<_>>()));
        }
        curves.push((name, samples.iter().map(|s| (s.x, s.u2_h)).collect()));
    }
    if let Some(dir) = &dir {
        fs::write(dir.join("oscillation.csv"), summary).map_err(io_err)?;
        if cfg.plot {
            let series: Vec<Series> = curves.into_iter().map(|(label, points)| Series { label, points }).collect();
            fs::write(dir.join("sections.svg"), svg_plot("u2 along y = 0.5", &series, false)).map_err(io_err)?;
        }
    }
    Ok(())
}

pub fn run_meshinfo(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let dir = prepare_out(cfg).map_err(io_err)?;
    let mut csv = String::from("level,dofs_u,dofs_p,dofs_total\n");
    let _ = writeln!(out, "{:>5} {:>10} {:>10} {:>10}", "level", "dofs u_h", "dofs p_h", "total");
    for level in cfg.levels.0..=cfg.levels.1 {
        let (u, p, t) = dof_counts(level, cfg.k).map_err(numerical)?;
        let _ = writeln!(out, "{level:>5} {u:>10} {p:>10} {t:>10}");
        csv.push_str(&format!("{level},{u},{p},{t}\n"));
    }
    if let Some(dir) = dir {
        fs::write(dir.join("meshinfo.csv"), csv).map_err(io_err)?;
    }
    Ok(())
}

/// Largest nodal deviation of the discrete velocity from the exact solution.
pub fn patch_deviation(cfg: &RunConfig, level: usize) -> Result<f64> {
    let case = cfg.problem()?;
    let run = solve_case(&case, level, &cfg.run_options())?;
    let v = &run.solution.velocity;
    let mut dev: f64 = 0.0;
    for (n, x) in v.space.node_coords().iter().enumerate() {
        let e = case.exact_u.value(*x);
        dev = dev.max((v.coeffs[2 * n] - e[0]).abs()).max((v.coeffs[2 * n + 1] - e[1]).abs());
    }
    Ok(dev)
}

pub fn run_patch(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let dir = prepare_out(cfg).map_err(io_err)?;
    let mut failed = Vec::new();
    let mut csv = String::from("level,max_deviation,pass\n");
    for level in cfg.levels.0..=cfg.levels.1 {
        let dev = patch_deviation(cfg, level).map_err(numerical)?;
        let pass = dev <= PATCH_TOLERANCE;
        let _ = writeln!(out, "level {level}: max nodal deviation {dev:.3e} {}", if pass { "PASS" } else { "FAIL" });
        csv.push_str(&format!("{level},{dev:.6e},{pass}\n"));
        if !pass {
            failed.push(format!("level {level}: {dev:.3e}"));
        }
    }
    if let Some(dir) = dir {
        fs::write(dir.join("patch.csv"), csv).map_err(io_err)?;
    }
    if failed.is_empty() {
        let _ = writeln!(out, "PASS");
        Ok(())
    } else {
        Err((EXIT_NUMERICAL, format!("patch test failed (tolerance {PATCH_TOLERANCE:e}): {}", failed.join(", "))))
    }
}
