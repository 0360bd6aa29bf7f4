//! Artifact emission: CSV tables, the report JSON envelope, and
//! self-contained SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};

use levy_besov_core::analysis::{MomentSlopeCurve, ReportRow};
use levy_besov_core::besov::ScaleContribution;

/// ISO-8601 UTC timestamp of the current instant, to whole seconds.
pub fn iso8601_now() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0);
    let days = secs.div_euclid(86_400);
    let sod = secs.rem_euclid(86_400);
    // civil-from-days (Gregorian)
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = if m <= 2 { y + 1 } else { y };
    format!(
        "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z",
        y,
        m,
        d,
        sod / 3600,
        (sod % 3600) / 60,
        sod % 60
    )
}

/// per_scale.csv: j,gender_count,term_count,T_j,log2_T_j. An empty list
/// yields a header-only file.
pub fn write_per_scale_csv(path: &Path, rows: &[ScaleContribution]) -> Result<()> {
    let mut out = String::from("j,gender_count,term_count,T_j,log2_T_j\n");
    for r in rows {
        let log2 = if r.t_j > 0.0 {
            r.t_j.log2().to_string()
        } else {
            "-inf".to_string()
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            r.j, r.gender_count, r.count, r.t_j, log2
        )?;
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// moments.csv: j,p,mean_abs_p,log2_mean,stderr across every requested p.
pub fn write_moments_csv(path: &Path, curves: &[MomentSlopeCurve]) -> Result<()> {
    let mut out = String::from("j,p,mean_abs_p,log2_mean,stderr\n");
    for c in curves {
        for s in &c.per_scale {
            writeln!(
                out,
                "{},{},{},{},{}",
                s.j, c.p, s.mean_abs_p, s.log2_mean, s.stderr
            )?;
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Wrap a serializable payload with the timestamp and the exact config echo.
pub fn write_json_with_envelope<T: serde::Serialize, C: serde::Serialize>(
    path: &Path,
    payload_key: &str,
    payload: &T,
    config: &C,
) -> Result<()> {
    let envelope = serde_json::json!({
        "timestamp": iso8601_now(),
        "config": config,
        payload_key: payload,
    });
    fs::write(path, serde_json::to_string_pretty(&envelope)?)
        .with_context(|| format!("writing {}", path.display()))
}

fn svg_header(width: f64, height: f64, title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"24\" font-family=\"monospace\" font-size=\"14\" ",
            "text-anchor=\"middle\">{title}</text>\n"
        ),
        w = width,
        h = height,
        tx = width / 2.0,
        title = title
    )
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.xmin) / (self.xmax - self.xmin) * self.w
    }
    fn y(&self, v: f64) -> f64 {
        self.y0 + self.h - (v - self.ymin) / (self.ymax - self.ymin) * self.h
    }

    fn axes(&self, xlabel: &str, ylabel: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
            self.x0, self.y0, self.w, self.h
        );
        for i in 0..=4 {
            let fx = self.xmin + (self.xmax - self.xmin) * i as f64 / 4.0;
            let fy = self.ymin + (self.ymax - self.ymin) * i as f64 / 4.0;
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"middle\">{:.3}</text>",
                self.x(fx),
                self.y0 + self.h + 14.0,
                fx
            );
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"end\">{:.3}</text>",
                self.x0 - 4.0,
                self.y(fy) + 3.0,
                fy
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            self.x0 + self.w / 2.0,
            self.y0 + self.h + 32.0,
            xlabel
        );
        let _ = writeln!(
            s,
            "<text x=\"14\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>",
            self.y0 + self.h / 2.0,
            self.y0 + self.h / 2.0,
            ylabel
        );
        s
    }
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.08 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Scatter of (j, log₂ T_j) with the fitted slope overlay.
pub fn write_scale_plot_svg(
    path: &Path,
    title: &str,
    points: &[(f64, f64)],
    fit: Option<(f64, f64)>,
) -> Result<()> {
    let (w, h) = (560.0, 400.0);
    let mut svg = svg_header(w, h, title);
    let frame = {
        let (xmin, xmax) = bounds(points.iter().map(|p| p.0));
        let (ymin, ymax) = bounds(points.iter().map(|p| p.1));
        Frame {
            x0: 70.0,
            y0: 44.0,
            w: w - 100.0,
            h: h - 110.0,
            xmin,
            xmax,
            ymin,
            ymax,
        }
    };
    svg.push_str(&frame.axes("scale j", "log2 T_j"));
    if let Some((slope, intercept)) = fit {
        let y1 = slope * frame.xmin + intercept;
        let y2 = slope * frame.xmax + intercept;
        let _ = writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#c33\" stroke-width=\"1.5\"/>",
            frame.x(frame.xmin),
            frame.y(y1),
            frame.x(frame.xmax),
            frame.y(y2)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"40\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\" fill=\"#c33\">slope {:.4}</text>",
            w - 24.0,
            slope
        );
    }
    for &(x, y) in points {
        if y.is_finite() {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"#2266aa\"/>",
                frame.x(x),
                frame.y(y)
            );
        }
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg).with_context(|| format!("writing {}", path.display()))
}

/// (1/p, τ) diagram: estimated points with CI whiskers against the theory
/// band τ ∈ [d/max(p, β∞) − d, d/max(p, β̲∞) − d], drawn with its knees.
pub fn write_triebel_svg(
    path: &Path,
    title: &str,
    d: usize,
    beta_inf: f64,
    beta_inf_lower: f64,
    rows: &[ReportRow],
) -> Result<()> {
    let (w, h) = (560.0, 400.0);
    let mut svg = svg_header(w, h, title);
    let inv_p: Vec<f64> = rows.iter().map(|r| 1.0 / r.p).collect();
    let xmax = inv_p.iter().cloned().fold(1.0f64, f64::max) * 1.2;
    let dd = d as f64;
    let tau_line = |u: f64, beta: f64| -> f64 {
        // τ(1/p) with the knee at 1/p = 1/β
        if beta > 0.0 && u < 1.0 / beta {
            dd / beta - dd
        } else {
            dd * u - dd
        }
    };
    let yvals: Vec<f64> = rows
        .iter()
        .flat_map(|r| {
            [
                r.tau_hat,
                r.tau_ci.0,
                r.tau_ci.1,
                r.tau_theory_lower,
                r.tau_theory_upper,
            ]
        })
        .collect();
    let (ymin, ymax) = bounds(yvals.into_iter().chain([-dd, 0.25]));
    let frame = Frame {
        x0: 70.0,
        y0: 44.0,
        w: w - 100.0,
        h: h - 110.0,
        xmin: 0.0,
        xmax,
        ymin,
        ymax,
    };
    svg.push_str(&frame.axes("1/p", "tau"));
    for (beta, color) in [(beta_inf, "#3a7d44"), (beta_inf_lower, "#8844aa")] {
        let mut pts = Vec::new();
        let mut u = 0.0;
        while u <= xmax {
            pts.push(format!(
                "{:.1},{:.1}",
                frame.x(u),
                frame.y(tau_line(u, beta))
            ));
            u += xmax / 64.0;
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\"/>",
            pts.join(" "),
            color
        );
    }
    for r in rows {
        let x = frame.x(1.0 / r.p);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#2266aa\"/>",
            x,
            frame.y(r.tau_ci.0),
            x,
            frame.y(r.tau_ci.1)
        );
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3.5\" fill=\"{}\"/>",
            x,
            frame.y(r.tau_hat),
            if r.tau_pass { "#2266aa" } else { "#c33" }
        );
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg).with_context(|| format!("writing {}", path.display()))
}
