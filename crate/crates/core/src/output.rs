//! CSV tables and a minimal SVG line plot.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::{ErrorReport, SectionSample};
use crate::Result;

pub const CONVERGENCE_HEADER: &str =
    "level,h,dofs_u,dofs_p,dofs_total,err_l2_u,rate_l2_u,err_l2_p,rate_l2_p,err_energy,rate_energy,div_sup,seconds";
pub const SECTION_HEADER: &str = "x,u2_h,u2_exact";

fn rate(r: Option<f64>) -> String {
    r.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// One row per level; rates are blank on the first row. With `zero_time` the timing column
/// is written as 0 so reruns are byte-identical.
pub fn convergence_csv(reports: &[ErrorReport], zero_time: bool) -> String {
    let mut s = format!("{CONVERGENCE_HEADER}\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{:.6e},{},{},{},{:.6e},{},{:.6e},{},{:.6e},{},{:.3e},{:.3}",
            r.level,
            r.h,
            r.dofs_u,
            r.dofs_p,
            r.dofs_total,
            r.err_l2_u,
            rate(r.rate_l2_u),
            r.err_l2_p,
            rate(r.rate_l2_p),
            r.err_energy,
            rate(r.rate_energy),
            r.div_sup,
            if zero_time { 0.0 } else { r.seconds }
        );
    }
    s
}

pub fn section_csv(samples: &[SectionSample]) -> String {
    let mut s = format!("{SECTION_HEADER}\n");
    for p in samples {
        let _ = writeln!(s, "{:.6},{:.12e},{:.12e}", p.x, p.u2_h, p.u2_exact);
    }
    s
}

/// Text table in the layout of a typical convergence report.
pub fn convergence_table(reports: &[ErrorReport]) -> String {
    let mut s = format!(
        "{:>5} {:>8} {:>10} {:>7} {:>10} {:>7} {:>10} {:>7}\n",
        "level", "dofs", "L2(u)", "rate", "L2(p)", "rate", "G(u)", "rate"
    );
    let r = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
    for e in reports {
        let _ = writeln!(
            s,
            "{:>5} {:>8} {:>10.2e} {:>7} {:>10.2e} {:>7} {:>10.2e} {:>7}",
            e.level,
            e.dofs_total,
            e.err_l2_u,
            r(e.rate_l2_u),
            e.err_l2_p,
            r(e.rate_l2_p),
            e.err_energy,
            r(e.rate_energy)
        );
    }
    s
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Self-contained SVG with one polyline per series. `log_y` plots `log10(y)`.
pub fn svg_plot(title: &str, series: &[Series], log_y: bool) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let ty = |y: f64| if log_y { y.max(1e-300).log10() } else { y };
    let pts = series.iter().flat_map(|s| s.points.iter().map(|&(x, y)| (x, ty(y))));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}">{x0:.3}</text>"#, H - PAD + 15.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{x1:.3}</text>"#, W - PAD, H - PAD + 15.0);
    let ylab = |y: f64| if log_y { format!("1e{y:.1}") } else { format!("{y:.3}") };
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, H - PAD, ylab(y0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 4.0, ylab(y1));
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| (x, ty(y)))
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - PAD - 120.0,
            PAD + 16.0 * (i as f64 + 1.0),
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)?;
    Ok(())
}
