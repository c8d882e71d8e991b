//! Deterministic output artifacts: CSV tables and SVG line charts.
//!
//! Every artifact starts with the same provenance block (tool version plus
//! the FNV-1a hash of the canonical scenario config), and all numeric
//! formatting goes through the shortest-round-trip float formatter, so a
//! rerun with identical inputs produces byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::design_opt::LandscapeCell;
use crate::error::{Error, Result};
use crate::scenario::fnv1a64;
use crate::sweep::{SweepResult, SweepAxis};
use crate::token::TokenSizeReport;

pub use crate::scenario::fnv1a64 as config_fingerprint;

/// Crate version embedded in artifacts.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The two provenance comment lines shared by all artifacts.
pub fn provenance_lines(config_hash: u64) -> [String; 2] {
    [
        format!("# spinmint v{TOOL_VERSION}"),
        format!("# config fnv1a64={config_hash:016x}"),
    ]
}

fn push_provenance(out: &mut String, config_hash: u64) {
    for line in provenance_lines(config_hash) {
        out.push_str(&line);
        out.push('\n');
    }
}

fn sanitize_comment(msg: &str) -> String {
    msg.replace(['\n', '\r'], " ")
}

/// Sweep result as CSV: provenance, header, one row per grid point.  Failed
/// points keep their NaN outputs and are annotated with a trailing comment;
/// peak and threshold-crossing metadata close the file.
pub fn sweep_csv(result: &SweepResult, config_hash: u64) -> String {
    let mut out = String::new();
    push_provenance(&mut out, config_hash);
    let _ = writeln!(out, "# axis={} ({})", result.request.axis, result.request.axis.unit_label());
    out.push_str("axis_value,gamma_a_hz,f_avg,gamma_tok_hz\n");
    for (i, p) in result.points.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.axis_value, p.gamma_a_hz, p.f_avg, p.gamma_tok_hz
        );
        if let Some(msg) = &p.error {
            let _ = writeln!(out, "# point {i} failed: {}", sanitize_comment(msg));
        }
    }
    if let Some(peak) = result.peak {
        let _ = writeln!(
            out,
            "# peak axis_value={} gamma_a_hz={}",
            peak.axis_value, peak.gamma_a_hz
        );
    }
    if result.request.axis == SweepAxis::Storage {
        match result.threshold_crossing_s {
            Some(t) => {
                let _ = writeln!(out, "# threshold_crossing_s={t}");
            }
            None => out.push_str("# threshold_crossing_s=none\n"),
        }
    }
    out
}

/// Fidelity landscape as CSV with columns `kappa_ghz,delta_ghz,infidelity`.
pub fn landscape_csv(cells: &[LandscapeCell], config_hash: u64) -> String {
    let mut out = String::new();
    push_provenance(&mut out, config_hash);
    out.push_str("kappa_ghz,delta_ghz,infidelity\n");
    for c in cells {
        let _ = writeln!(out, "{},{},{}", c.kappa_ghz, c.delta_ghz, c.infidelity);
    }
    out
}

/// Security designs as CSV with columns `p_th,n,t,p_forge`.  An empty row
/// list yields just the provenance and header.
pub fn security_table_csv(rows: &[TokenSizeReport], config_hash: u64) -> String {
    let mut out = String::new();
    push_provenance(&mut out, config_hash);
    out.push_str("p_th,n,t,p_forge\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.design.p_th(),
            r.design.n(),
            r.design.t(),
            r.p_forge
        );
    }
    out
}

/// Write an artifact, creating parent directories as needed.
pub fn write_artifact(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents).map_err(Error::from)
}

// ---------------------------------------------------------------------------
// SVG line charts
// ---------------------------------------------------------------------------

/// A single-series line chart with optional log axes and an optional dashed
/// vertical marker (e.g. the storage-time security threshold).
#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_log: bool,
    pub y_log: bool,
    /// (x, y) pairs in data coordinates, already in plot order.
    pub series: Vec<(f64, f64)>,
    /// Dashed vertical marker position in data coordinates.
    pub marker_x: Option<f64>,
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 420.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 56.0;
const TICKS: usize = 5;

struct AxisScale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl AxisScale {
    /// Fit a scale over finite (log: positive) values with 5% padding.
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Option<AxisScale> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            if !v.is_finite() || (log && v <= 0.0) {
                continue;
            }
            let t = if log { v.log10() } else { v };
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return None;
        }
        let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
        Some(AxisScale {
            lo: lo - pad,
            hi: hi + pad,
            log,
        })
    }

    fn admits(&self, v: f64) -> bool {
        v.is_finite() && (!self.log || v > 0.0)
    }

    /// Map a data value to [0, 1].
    fn unit(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        (t - self.lo) / (self.hi - self.lo)
    }

    /// Tick positions in data coordinates.
    fn ticks(&self) -> Vec<f64> {
        (0..TICKS)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * i as f64 / (TICKS - 1) as f64;
                if self.log {
                    10f64.powf(t)
                } else {
                    t
                }
            })
            .collect()
    }
}

/// Compact deterministic tick label.
fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1.0e-3..1.0e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render the chart to a standalone SVG document.
pub fn render_line_chart(chart: &LineChart, config_hash: u64) -> Result<String> {
    let xs = AxisScale::fit(chart.series.iter().map(|p| p.0), chart.x_log)
        .ok_or_else(|| Error::numerics("no plottable x values in chart series"))?;
    let ys = AxisScale::fit(chart.series.iter().map(|p| p.1), chart.y_log)
        .ok_or_else(|| Error::numerics("no plottable y values in chart series"))?;
    let plot_w = SVG_W - MARGIN_L - MARGIN_R;
    let plot_h = SVG_H - MARGIN_T - MARGIN_B;
    let px = |v: f64| MARGIN_L + plot_w * xs.unit(v);
    let py = |v: f64| MARGIN_T + plot_h * (1.0 - ys.unit(v));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    for line in provenance_lines(config_hash) {
        let _ = writeln!(out, "<!-- {} -->", line.trim_start_matches("# "));
    }
    let _ = writeln!(
        out,
        r#"<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        xml_escape(&chart.title)
    );
    // Frame.
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444" stroke-width="1"/>"##
    );
    // Ticks and grid.
    for t in xs.ticks() {
        let x = px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444" stroke-width="1"/>"##,
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            MARGIN_T + plot_h + 18.0,
            fmt_tick(t)
        );
    }
    for t in ys.ticks() {
        let y = py(t);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_L}" y2="{y:.2}" stroke="#444" stroke-width="1"/>"##,
            MARGIN_L - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_L - 8.0,
            y + 3.5,
            fmt_tick(t)
        );
    }
    // Axis captions.
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        SVG_H - 12.0,
        xml_escape(&chart.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        xml_escape(&chart.y_label)
    );
    // Series polyline over plottable points.
    let pts: Vec<String> = chart
        .series
        .iter()
        .filter(|(x, y)| xs.admits(*x) && ys.admits(*y))
        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    if pts.len() == 1 {
        let xy: Vec<&str> = pts[0].split(',').collect();
        let _ = writeln!(
            out,
            r##"<circle cx="{}" cy="{}" r="3" fill="#1f6feb"/>"##,
            xy[0], xy[1]
        );
    } else if !pts.is_empty() {
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#1f6feb" stroke-width="1.6"/>"##,
            pts.join(" ")
        );
    }
    // Dashed vertical marker.
    if let Some(mx) = chart.marker_x {
        if xs.admits(mx) && xs.unit(mx) >= 0.0 && xs.unit(mx) <= 1.0 {
            let x = px(mx);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{MARGIN_T}" x2="{x:.2}" y2="{:.2}" stroke="#c43b3b" stroke-width="1.4" stroke-dasharray="6,4"/>"##,
                MARGIN_T + plot_h
            );
            let _ = writeln!(
                out,
                r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="#c43b3b">{}</text>"##,
                x + 4.0,
                MARGIN_T + 14.0,
                fmt_tick(mx)
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Standard chart for a sweep result: γ_a against the axis value, log-y
/// when the dynamic range warrants it, with the threshold-crossing marker
/// on storage sweeps.
pub fn sweep_chart(result: &SweepResult, title: &str) -> LineChart {
    let series: Vec<(f64, f64)> = result
        .points
        .iter()
        .filter(|p| p.error.is_none() && p.gamma_a_hz.is_finite())
        .map(|p| (p.axis_value, p.gamma_a_hz))
        .collect();
    let positive: Vec<f64> = series
        .iter()
        .map(|p| p.1)
        .filter(|v| *v > 0.0)
        .collect();
    let y_log = match (
        positive.iter().cloned().fold(f64::INFINITY, f64::min),
        positive.iter().cloned().fold(0.0f64, f64::max),
    ) {
        (lo, hi) if lo.is_finite() && hi > 0.0 => hi / lo > 50.0,
        _ => false,
    };
    LineChart {
        title: title.to_string(),
        x_label: result.request.axis.unit_label().to_string(),
        y_label: "acceptance rate (Hz)".to_string(),
        x_log: result.request.log_scale,
        y_log,
        series,
        marker_x: result.threshold_crossing_s,
    }
}

/// Convenience wrapper: hash the canonical config text directly.
pub fn hash_config_text(text: &str) -> u64 {
    fnv1a64(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{SweepPeak, SweepPoint, SweepRequest};

    fn fake_sweep() -> SweepResult {
        SweepResult {
            request: SweepRequest {
                axis: SweepAxis::Storage,
                min: 0.0,
                max: 2.0,
                points: 3,
                log_scale: false,
            },
            points: vec![
                SweepPoint {
                    axis_value: 0.0,
                    gamma_a_hz: 100.0,
                    f_avg: 0.98,
                    gamma_tok_hz: 300.0,
                    error: None,
                },
                SweepPoint {
                    axis_value: 1.0,
                    gamma_a_hz: f64::NAN,
                    f_avg: f64::NAN,
                    gamma_tok_hz: f64::NAN,
                    error: Some("storage interval\nexploded".to_string()),
                },
                SweepPoint {
                    axis_value: 2.0,
                    gamma_a_hz: 25.0,
                    f_avg: 0.90,
                    gamma_tok_hz: 300.0,
                    error: None,
                },
            ],
            peak: Some(SweepPeak {
                axis_value: 0.0,
                gamma_a_hz: 100.0,
            }),
            threshold_crossing_s: Some(1.5),
        }
    }

    #[test]
    fn sweep_csv_layout_and_flagged_rows() {
        let csv = sweep_csv(&fake_sweep(), 0xdead_beef);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], format!("# spinmint v{TOOL_VERSION}"));
        assert_eq!(lines[1], "# config fnv1a64=00000000deadbeef");
        assert!(lines[2].starts_with("# axis=storage"));
        assert_eq!(lines[3], "axis_value,gamma_a_hz,f_avg,gamma_tok_hz");
        assert_eq!(lines[4], "0,100,0.98,300");
        assert_eq!(lines[5], "1,NaN,NaN,NaN");
        assert_eq!(lines[6], "# point 1 failed: storage interval exploded");
        assert_eq!(lines[7], "2,25,0.9,300");
        assert!(lines[8].starts_with("# peak axis_value=0"));
        assert_eq!(lines[9], "# threshold_crossing_s=1.5");
    }

    #[test]
    fn csv_output_is_byte_deterministic() {
        let a = sweep_csv(&fake_sweep(), 42);
        let b = sweep_csv(&fake_sweep(), 42);
        assert_eq!(a, b);
    }

    #[test]
    fn security_table_handles_empty_row_list() {
        let csv = security_table_csv(&[], 7);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2], "p_th,n,t,p_forge");
    }

    #[test]
    fn landscape_csv_has_contracted_columns() {
        let cells = vec![LandscapeCell {
            kappa_ghz: 34.07,
            delta_ghz: 108.76,
            infidelity: 4.9e-5,
        }];
        let csv = landscape_csv(&cells, 1);
        assert!(csv.contains("kappa_ghz,delta_ghz,infidelity\n"));
        assert!(csv.contains("34.07,108.76,0.000049"));
    }

    #[test]
    fn svg_chart_renders_core_elements() {
        let chart = sweep_chart(&fake_sweep(), "storage sweep");
        let svg = render_line_chart(&chart, 99).unwrap();
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("storage time (s)"));
        assert!(svg.contains("config fnv1a64="));
        // Byte determinism.
        assert_eq!(svg, render_line_chart(&chart, 99).unwrap());
    }

    #[test]
    fn svg_log_axes_skip_nonpositive_values() {
        let chart = LineChart {
            title: "log".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            x_log: true,
            y_log: true,
            series: vec![(0.0, 1.0), (1.0, 10.0), (10.0, 1000.0)],
            marker_x: Some(0.0),
        };
        let svg = render_line_chart(&chart, 0).unwrap();
        assert!(svg.contains("polyline"));
        let empty = LineChart {
            series: vec![(0.0, -1.0)],
            ..chart
        };
        assert!(render_line_chart(&empty, 0).is_err());
    }

    #[test]
    fn tick_formatting_is_compact() {
        assert_eq!(fmt_tick(0.0), "0");
        assert_eq!(fmt_tick(1.5), "1.5");
        assert_eq!(fmt_tick(100.0), "100");
        assert_eq!(fmt_tick(0.25), "0.25");
        assert_eq!(fmt_tick(1.0e-6), "1.00e-6");
        assert_eq!(fmt_tick(3.0e7), "3.00e7");
    }

    #[test]
    fn single_point_series_renders_a_dot() {
        let chart = LineChart {
            title: "one".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            x_log: false,
            y_log: false,
            series: vec![(1.0, 2.0)],
            marker_x: None,
        };
        let svg = render_line_chart(&chart, 0).unwrap();
        assert!(svg.contains("<circle"));
    }
}
