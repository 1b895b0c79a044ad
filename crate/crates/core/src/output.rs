//! CSV tables, JSON-lines dumps and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{ResultRow, ResultTable};
use crate::flow::LagrangianCurve;
use crate::hamiltonian::Hamiltonian;
use crate::torus::Vec2;

pub const TABLE_HEADER: [&str; 5] = ["label", "regularity", "estimate", "stderr", "samples"];

/// Side of the plotted unit square in SVG user units.
const CANVAS: f64 = 500.0;

/// `%g` with 6 significant digits.
pub fn format_g6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    // rounding can carry into the next decade
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    let exp = if rounded.abs() >= 10f64.powi(exp + 1) { exp + 1 } else { exp };
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{rounded:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        let e: i32 = e.parse().expect("integer exponent");
        format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn table_to_csv(t: &ResultTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(TABLE_HEADER).map_err(to_err)?;
    for r in &t.rows {
        w.write_record([
            r.label.clone(),
            format_g6(r.regularity),
            format_g6(r.estimate),
            format_g6(r.stderr),
            r.samples.to_string(),
        ])
        .map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Write `t` as CSV; rows keep the table's (label, regularity) order.
pub fn write_table(t: &ResultTable, path: &Path) -> Result<()> {
    write_file(path, table_to_csv(t)?.as_bytes())
}

pub fn parse_table(text: &str) -> Result<ResultTable> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().ne(TABLE_HEADER) {
        return Err(Error::Parse(format!("unexpected table header {header:?}")));
    }
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::Parse(format!("row {}: missing {}", line + 1, TABLE_HEADER[i])))
        };
        let real = |i: usize| -> Result<f64> {
            field(i)?
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad {}", line + 1, TABLE_HEADER[i])))
        };
        rows.push(ResultRow {
            label: field(0)?.to_string(),
            regularity: real(1)?,
            estimate: real(2)?,
            stderr: real(3)?,
            samples: field(4)?
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad samples", line + 1)))?,
        });
    }
    Ok(ResultTable { rows })
}

pub fn read_table(path: &Path) -> Result<ResultTable> {
    parse_table(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// One JSON object per line.
pub fn write_jsonl<T: Serialize>(records: &[T], path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Parse(e.to_string()))?);
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    write_file(path, s.as_bytes())
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    write_file(path, text.as_bytes())
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{c}" height="{c}" viewBox="0 0 {c} {c}">"#,
        c = CANVAS
    );
    let _ = writeln!(s, "<title>{title}</title>");
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{c}" height="{c}" fill="white" stroke="black"/>"#,
        c = CANVAS
    );
    s
}

/// Unit-square coordinates to canvas coordinates, `y` pointing up.
fn to_canvas(p: Vec2) -> (f64, f64) {
    (p[0] * CANVAS, (1.0 - p[1]) * CANVAS)
}

/// Quiver plot of `X_H(t, ·)` on an `n × n` lattice of cell centres.
///
/// The longest arrow spans one lattice spacing; a vanishing field draws dots.
pub fn field_svg<H: Hamiltonian + ?Sized>(h: &H, t: f64, n: usize) -> Result<String> {
    if n == 0 {
        return Err(Error::validation("arrow_grid", "must be at least 1"));
    }
    let spacing = 1.0 / n as f64;
    let mut points = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            points.push([(i as f64 + 0.5) * spacing, (j as f64 + 0.5) * spacing]);
        }
    }
    let mut field = vec![[0.0, 0.0]; points.len()];
    h.vector_field_batch(t, &points, &mut field)?;
    let longest = field.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
    let mut s = svg_open(&format!("vector field at t = {t}"));
    for (p, v) in points.iter().zip(&field) {
        let (x0, y0) = to_canvas(*p);
        let norm = v[0].hypot(v[1]);
        if longest == 0.0 || norm == 0.0 {
            let _ = writeln!(s, r#"<circle cx="{x0:.3}" cy="{y0:.3}" r="1.5" fill="black"/>"#);
            continue;
        }
        let scale = spacing / longest;
        let (x1, y1) = to_canvas([p[0] + v[0] * scale, p[1] + v[1] * scale]);
        let _ = writeln!(
            s,
            r#"<line x1="{x0:.3}" y1="{y0:.3}" x2="{x1:.3}" y2="{y1:.3}" stroke="black" stroke-width="1"/>"#
        );
        // arrow head
        let (dx, dy) = (x1 - x0, y1 - y0);
        let len = dx.hypot(dy);
        let head = (0.3 * len).min(6.0);
        let (ux, uy) = (dx / len, dy / len);
        let (hx, hy) = (x1 - head * ux, y1 - head * uy);
        let _ = writeln!(
            s,
            r#"<polygon points="{x1:.3},{y1:.3} {:.3},{:.3} {:.3},{:.3}" fill="black"/>"#,
            hx - 0.5 * head * uy,
            hy + 0.5 * head * ux,
            hx + 0.5 * head * uy,
            hy - 0.5 * head * ux,
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_field_svg<H: Hamiltonian + ?Sized>(h: &H, t: f64, path: &Path, arrow_grid: usize) -> Result<()> {
    write_file(path, field_svg(h, t, arrow_grid)?.as_bytes())
}

/// Split a lifted polyline into pieces lying in single fundamental cells,
/// translated into the unit square.
pub fn wrap_split(vertices: &[Vec2]) -> Vec<Vec<Vec2>> {
    let cell = |v: Vec2| [v[0].floor(), v[1].floor()];
    let local = |v: Vec2, c: Vec2| [v[0] - c[0], v[1] - c[1]];
    let mut pieces = Vec::new();
    let Some(&first) = vertices.first() else {
        return pieces;
    };
    let mut c = cell(first);
    let mut piece = vec![local(first, c)];
    for w in vertices.windows(2) {
        let (mut a, b) = (w[0], w[1]);
        // walk across every cell boundary the segment meets
        loop {
            let cb = cell(b);
            if cb == c {
                piece.push(local(b, c));
                break;
            }
            let mut exit = 1.0f64;
            let mut step = [0.0, 0.0];
            for k in 0..2 {
                let d = b[k] - a[k];
                if d > 0.0 && cb[k] > c[k] {
                    let s = (c[k] + 1.0 - a[k]) / d;
                    if s < exit {
                        exit = s;
                        step = [0.0, 0.0];
                    }
                    if s <= exit {
                        step[k] = 1.0;
                    }
                } else if d < 0.0 && cb[k] < c[k] {
                    let s = (c[k] - a[k]) / d;
                    if s < exit {
                        exit = s;
                        step = [0.0, 0.0];
                    }
                    if s <= exit {
                        step[k] = -1.0;
                    }
                }
            }
            let exit = exit.clamp(0.0, 1.0);
            let cross = [a[0] + exit * (b[0] - a[0]), a[1] + exit * (b[1] - a[1])];
            piece.push(local(cross, c));
            pieces.push(std::mem::take(&mut piece));
            c = [c[0] + step[0], c[1] + step[1]];
            piece.push(local(cross, c));
            a = cross;
        }
    }
    pieces.push(piece);
    pieces.retain(|p| p.iter().any(|v| *v != p[0]));
    pieces
}

/// One `<path>` per curve, wrapped into the unit square, in distinct hues.
pub fn curves_svg(curves: &[LagrangianCurve]) -> String {
    let mut s = svg_open("advected curves");
    for (i, c) in curves.iter().enumerate() {
        let hue = 360.0 * i as f64 / curves.len().max(1) as f64;
        let mut d = String::new();
        for piece in wrap_split(&c.vertices) {
            for (j, v) in piece.iter().enumerate() {
                let (x, y) = to_canvas(*v);
                let _ = write!(d, "{}{x:.3},{y:.3} ", if j == 0 { 'M' } else { 'L' });
            }
        }
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="hsl({hue:.1},80%,40%)" stroke-width="1"/>"#,
            d.trim_end()
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_curves_svg(curves: &[LagrangianCurve], path: &Path) -> Result<()> {
    write_file(path, curves_svg(curves).as_bytes())
}

/// Histogram of `values` with `bins` equal bins.
pub fn histogram_svg(values: &[f64], bins: usize, title: &str) -> String {
    let mut s = svg_open(title);
    let bins = bins.max(1);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || !(hi >= lo) {
        s.push_str("</svg>\n");
        return s;
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let top = *counts.iter().max().expect("at least one bin") as f64;
    let bar = CANVAS / bins as f64;
    for (i, &c) in counts.iter().enumerate() {
        let h = CANVAS * c as f64 / top;
        let _ = writeln!(
            s,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{h:.3}" fill="steelblue" stroke="white"/>"#,
            i as f64 * bar,
            CANVAS - h,
            bar
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_histogram_svg(values: &[f64], bins: usize, title: &str, path: &Path) -> Result<()> {
    write_file(path, histogram_svg(values, bins, title).as_bytes())
}
