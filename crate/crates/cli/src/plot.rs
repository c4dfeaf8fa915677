//! Static SVG rendering of profile CSVs: a linear panel, a log-log panel and
//! the fitted growth class. Rows whose value is `inf` are drawn as markers in
//! a band above each panel.

use std::fmt::Write;

use geocontract::asymptotics::{classify_growth, FunctionSamples, GrowthClass};
use geocontract::report::format_number;
use geocontract::sampling::geometric_grid;

use crate::{CliResult, Failure};

const PANEL_W: f64 = 400.0;
const PANEL_H: f64 = 300.0;
const TOP: f64 = 70.0;
const LEFT: [f64; 2] = [70.0, 560.0];

fn malformed(msg: impl Into<String>) -> Failure {
    Failure::usage("malformed-csv", msg)
}

/// `(r, value)` rows with `None` for ∞, in file order.
pub fn parse_rows(text: &str) -> CliResult<Vec<(f64, Option<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if header.len() < 2 || &header[0] != "r" || &header[1] != "value" {
        return Err(malformed("expected a header starting with r,value"));
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let line = k + 2;
        let r: f64 = rec[0].trim().parse().map_err(|_| malformed(format!("line {line}: bad r `{}`", &rec[0])))?;
        let v = match rec[1].trim() {
            "inf" => None,
            t => Some(t.parse::<f64>().map_err(|_| malformed(format!("line {line}: bad value `{t}`")))?),
        };
        if !r.is_finite() || v.is_some_and(|v| !v.is_finite()) {
            return Err(malformed(format!("line {line}: non-finite number")));
        }
        rows.push((r, v));
    }
    if rows.is_empty() {
        return Err(malformed("no data rows"));
    }
    Ok(rows)
}

/// Running-maximum envelope of the finite rows, sorted by r.
fn envelope(rows: &[(f64, Option<f64>)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = rows.iter().filter_map(|&(r, v)| v.map(|v| (r, v))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = f64::NEG_INFINITY;
    for p in &mut pts {
        best = best.max(p.1);
        p.1 = best;
    }
    pts
}

/// Fit on the envelope read as a step function, 4 radii per octave from the
/// first positive r.
pub fn fit_class(rows: &[(f64, Option<f64>)]) -> Option<(GrowthClass, Option<f64>)> {
    let env = envelope(rows);
    let lo = env.iter().map(|p| p.0).find(|&r| r > 0.0)?;
    let hi = env.last()?.0;
    let at = |r: f64| env[..env.partition_point(|p| p.0 <= r * (1.0 + 1e-12))].last().map(|p| p.1);
    let pts: Vec<(f64, f64)> = geometric_grid(lo, hi, 4).into_iter().filter_map(|r| at(r).map(|v| (r, v))).collect();
    let f = FunctionSamples::new(pts).ok()?;
    let fit = classify_growth(&f);
    Some((fit.class, fit.diagnostics.r2_power))
}

fn class_text(fit: Option<(GrowthClass, Option<f64>)>) -> String {
    match fit {
        None => "fitted class: n/a".into(),
        Some((GrowthClass::Power { alpha }, r2)) => {
            format!("fitted class: power, alpha = {alpha:.3}{}", r2.map_or(String::new(), |r2| format!(" (R2 {r2:.3})")))
        }
        Some((c, _)) => format!("fitted class: {}", c.name()),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64) -> Self {
        if hi > lo {
            Axis { lo, hi }
        } else {
            Axis { lo: lo - 0.5, hi: lo + 0.5 }
        }
    }

    fn frac(&self, x: f64) -> f64 {
        (x - self.lo) / (self.hi - self.lo)
    }
}

fn panel(svg: &mut String, left: f64, title: &str, pts: &[(f64, f64)], infs: &[f64], xs: Axis, ys: Axis, log: bool) {
    let px = |x: f64| left + xs.frac(x) * PANEL_W;
    let py = |y: f64| TOP + PANEL_H - ys.frac(y) * PANEL_H;
    let label = |v: f64| if log { format!("1e{}", format_number((v * 100.0).round() / 100.0)) } else { format_number(v) };
    let _ = writeln!(svg, r##"<rect x="{left}" y="{TOP}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#444"/>"##);
    let _ = writeln!(svg, r##"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"##, left + PANEL_W / 2.0, TOP - 28.0, escape(title));
    let band = TOP - 18.0;
    let _ = writeln!(svg, r##"<rect x="{left}" y="{band}" width="{PANEL_W}" height="14" fill="#f3e6e6"/>"##);
    let _ = writeln!(svg, r##"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">inf</text>"##, left - 4.0, band + 11.0);
    for &r in infs {
        if xs.frac(r) >= 0.0 && xs.frac(r) <= 1.0 {
            let x = px(r);
            let _ = writeln!(svg, r##"<path d="M{:.2},{:.2} l-4,10 l8,0 z" fill="#b22"/>"##, x, band + 2.0);
        }
    }
    for (v, anchor, x, y) in [
        (xs.lo, "start", left, TOP + PANEL_H + 16.0),
        (xs.hi, "end", left + PANEL_W, TOP + PANEL_H + 16.0),
    ] {
        let _ = writeln!(svg, r##"<text x="{x:.2}" y="{y:.2}" font-size="11" text-anchor="{anchor}">{}</text>"##, label(v));
    }
    for (v, y) in [(ys.lo, TOP + PANEL_H), (ys.hi, TOP + 10.0)] {
        let _ = writeln!(svg, r##"<text x="{:.2}" y="{y:.2}" font-size="11" text-anchor="end">{}</text>"##, left - 4.0, label(v));
    }
    let _ = writeln!(svg, r##"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">r</text>"##, left + PANEL_W / 2.0, TOP + PANEL_H + 30.0);
    if pts.is_empty() {
        return;
    }
    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(svg, r##"<polyline points="{}" fill="none" stroke="#2a5db0" stroke-width="1.5"/>"##, path.join(" "));
    for &(x, y) in pts {
        let _ = writeln!(svg, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#2a5db0"/>"##, px(x), py(y));
    }
}

fn range(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let lo = v.clone().fold(f64::INFINITY, f64::min);
    let hi = v.fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

/// Renders the CSV text as an SVG document.
pub fn render(text: &str, title: &str) -> CliResult<String> {
    let rows = parse_rows(text)?;
    let finite: Vec<(f64, f64)> = rows.iter().filter_map(|&(r, v)| v.map(|v| (r, v))).collect();
    let infs: Vec<f64> = rows.iter().filter(|p| p.1.is_none()).map(|p| p.0).collect();
    let (r_lo, r_hi) = range(rows.iter().map(|p| p.0));
    let (_, v_hi) = range(finite.iter().map(|p| p.1));
    let logpts: Vec<(f64, f64)> = finite.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.log10(), p.1.log10())).collect();
    let loginf: Vec<f64> = infs.iter().filter(|&&r| r > 0.0).map(|r| r.log10()).collect();
    let (lx_lo, lx_hi) = range(logpts.iter().map(|p| p.0).chain(loginf.iter().copied()));
    let (ly_lo, ly_hi) = range(logpts.iter().map(|p| p.1));

    let width = LEFT[1] + PANEL_W + 40.0;
    let height = TOP + PANEL_H + 50.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="13">"##
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="white"/>"##);
    let note = format!("{} | {} rows, {} infinite | {}", title, rows.len(), infs.len(), class_text(fit_class(&rows)));
    let _ = writeln!(svg, r##"<text x="{}" y="20" font-size="13">{}</text>"##, LEFT[0], escape(&note));
    panel(&mut svg, LEFT[0], "value vs r", &finite, &infs, Axis::new(r_lo.min(0.0), r_hi), Axis::new(0.0, v_hi.max(0.0)), false);
    panel(&mut svg, LEFT[1], "log10 value vs log10 r", &logpts, &loginf, Axis::new(lx_lo, lx_hi), Axis::new(ly_lo, ly_hi), true);
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_malformed() {
        assert!(parse_rows("").is_err());
        assert!(parse_rows("r,value\n").is_err());
        assert!(parse_rows("x,y\n1,2\n").is_err());
        assert!(parse_rows("r,value\n1,abc\n").is_err());
        assert_eq!(parse_rows("r,value,s\n1,2,3\n2,inf,\n").unwrap(), vec![(1.0, Some(2.0)), (2.0, None)]);
    }

    #[test]
    fn square_root_fit() {
        let text: String = std::iter::once("r,value\n".to_string())
            .chain((1..=400).map(|r| format!("{r},{}\n", (r as f64).sqrt().ceil())))
            .collect();
        let (class, _) = fit_class(&parse_rows(&text).unwrap()).unwrap();
        match class {
            GrowthClass::Power { alpha } => assert!((alpha - 0.5).abs() < 0.1, "{alpha}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infinite_rows_go_to_the_band() {
        let svg = render("r,value\n1,2\n2,inf\n4,8\n", "t").unwrap();
        assert_eq!(svg.matches("fill=\"#b22\"").count(), 2);
        assert!(svg.contains("1 infinite"));
    }
}
