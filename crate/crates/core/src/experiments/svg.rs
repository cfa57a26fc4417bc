//! Minimal SVG heatmap of `<sigma_z^n>(t)`.
//!
//! Time runs left to right, site index bottom to top. The colour scale is
//! linear and diverging over `[-1, 1]`: `-1` is blue `#2166ac`, `0` white and
//! `+1` red `#b2182b`. The trap truncation boundary is drawn as two green
//! polylines.

use std::fmt::Write;

const NEG: (f64, f64, f64) = (33.0, 102.0, 172.0);
const POS: (f64, f64, f64) = (178.0, 24.0, 43.0);
const CELL_W: f64 = 2.0;
const CELL_H: f64 = 2.0;
const MARGIN: f64 = 40.0;

/// RGB hex for a magnetisation value, clamped to `[-1, 1]`.
pub fn color(value: f64) -> String {
    let v = value.clamp(-1.0, 1.0);
    let (end, w) = if v < 0.0 { (NEG, -v) } else { (POS, v) };
    let mix = |c: f64| (255.0 + (c - 255.0) * w).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(end.0), mix(end.1), mix(end.2))
}

/// `rows[k]` holds the magnetisation at `times[k]`; `boundary[k]` the
/// truncation window `(lower, upper)` in site units at the same time.
pub fn render_heatmap(times: &[f64], rows: &[Vec<f64>], boundary: &[(f64, f64)]) -> String {
    let n_t = rows.len();
    let n_x = rows.first().map_or(0, |r| r.len());
    let width = n_t as f64 * CELL_W + 2.0 * MARGIN;
    let height = n_x as f64 * CELL_H + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let y_of = |site: f64| MARGIN + (n_x as f64 - 1.0 - site) * CELL_H;
    for (k, row) in rows.iter().enumerate() {
        let x = MARGIN + k as f64 * CELL_W;
        for (n, &v) in row.iter().enumerate() {
            // the background is white, so skip cells that would render white
            let c = color(v);
            if c == "#ffffff" {
                continue;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{}" width="{CELL_W}" height="{CELL_H}" fill="{c}"/>"#,
                y_of(n as f64)
            );
        }
    }
    for pick in [0usize, 1] {
        let mut pts = String::new();
        for (k, &(lo, hi)) in boundary.iter().enumerate().take(n_t) {
            let site = if pick == 0 { lo } else { hi };
            let site = site.clamp(0.0, (n_x as f64 - 1.0).max(0.0));
            let _ = write!(pts, "{},{} ", MARGIN + (k as f64 + 0.5) * CELL_W, y_of(site) + 0.5 * CELL_H);
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="green" stroke-width="1"/>"#,
            pts.trim_end()
        );
    }
    if let (Some(t0), Some(t1)) = (times.first(), times.last()) {
        let _ = writeln!(
            s,
            r#"<text x="{MARGIN}" y="{}" font-size="12">t = {t0} .. {t1}</text>"#,
            height - 12.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="4" y="{}" font-size="12">site</text>"#,
        MARGIN - 8.0
    );
    s.push_str("</svg>\n");
    s
}
