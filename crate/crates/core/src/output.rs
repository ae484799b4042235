//! Run-directory artifacts: JSON reports, CSV field dumps, and SVG polar
//! heatmaps. CSV columns are node_index, r, phi followed by named values;
//! complex entries appear as _re/_im column pairs.

use std::fs;
use std::path::Path;

use crate::domain::DiskGrid;
use crate::error::Result;
use crate::linalg::{CMatrix, C64};
use crate::solver::MetricField;

pub fn write_string(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    write_string(path, &format!("{}\n", serde_json::to_string_pretty(value)?))
}

/// Full metric field as CSV, every entry of the Hermitian matrix per node.
pub fn metric_field_to_csv(field: &MetricField) -> String {
    let grid = &field.grid;
    let dim = field.dim();
    let mut s = String::from("node_index,r,phi");
    for i in 0..dim {
        for j in 0..dim {
            s.push_str(&format!(",h_{i}_{j}_re,h_{i}_{j}_im"));
        }
    }
    s.push('\n');
    for p in 0..grid.node_count() {
        s.push_str(&format!("{},{:.17e},{:.17e}", p, grid.r(p), grid.phi(p)));
        for i in 0..dim {
            for j in 0..dim {
                let z = field.h[p][(i, j)];
                s.push_str(&format!(",{:.17e},{:.17e}", z.re, z.im));
            }
        }
        s.push('\n');
    }
    s
}

/// Reads a metric field back from the CSV produced by
/// [`metric_field_to_csv`]; the grid must match the one used for writing.
pub fn metric_field_from_csv(
    grid: std::sync::Arc<DiskGrid>,
    dim: usize,
    csv: &str,
) -> Result<MetricField> {
    let bad = |m: String| crate::error::Error::InvalidConfig { violations: vec![m] };
    let mut h = vec![CMatrix::zeros(dim, dim); grid.node_count()];
    let mut seen = 0usize;
    for (ln, line) in csv.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 + 2 * dim * dim {
            return Err(bad(format!("csv line {ln}: expected {} cells", 3 + 2 * dim * dim)));
        }
        let p: usize = cells[0].parse().map_err(|_| bad(format!("csv line {ln}: node index")))?;
        if p >= grid.node_count() {
            return Err(bad(format!("csv line {ln}: node {p} outside grid")));
        }
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let base = 3 + 2 * (i * dim + j);
                let re: f64 = cells[base].parse().map_err(|_| bad(format!("csv line {ln}")))?;
                let im: f64 = cells[base + 1].parse().map_err(|_| bad(format!("csv line {ln}")))?;
                m[(i, j)] = C64::new(re, im);
            }
        }
        h[p] = m;
        seen += 1;
    }
    if seen != grid.node_count() {
        return Err(bad(format!("csv holds {seen} nodes, grid has {}", grid.node_count())));
    }
    Ok(MetricField { grid, h })
}

fn color_map(t: f64) -> (u8, u8, u8) {
    // five-stop dark-blue → teal → green → yellow ramp
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    for w in STOPS.windows(2) {
        let (t0, c0) = w[0];
        let (t1, c1) = w[1];
        if t <= t1 {
            let s = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            return (
                (c0[0] + s * (c1[0] - c0[0])) as u8,
                (c0[1] + s * (c1[1] - c0[1])) as u8,
                (c0[2] + s * (c1[2] - c0[2])) as u8,
            );
        }
    }
    (253, 231, 37)
}

/// Polar heatmap of one scalar sample per node, rendered as annular-sector
/// quads with a simple legend.
pub fn heatmap_svg(grid: &DiskGrid, values: &[f64], title: &str) -> String {
    let size = 640.0_f64;
    let half = size / 2.0;
    let scale = (half - 20.0) / grid.radius;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || hi <= lo {
        hi = lo + 1.0;
    }
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"#101018\"/>\n\
         <text x=\"12\" y=\"24\" fill=\"#e8e8f0\" font-family=\"monospace\" font-size=\"16\">{title}</text>\n",
        w = size as u32,
        h = size as u32 + 40
    );
    let dphi = grid.dphi();
    for p in 0..grid.node_count() {
        let ring = grid.ring_of(p);
        let r0 = if ring == 0 { 0.0 } else { 0.5 * (grid.rings[ring - 1] + grid.rings[ring]) };
        let r1 = if ring + 1 < grid.nr {
            0.5 * (grid.rings[ring] + grid.rings[ring + 1])
        } else {
            grid.radius
        };
        let a0 = grid.phi(p) - 0.5 * dphi;
        let a1 = grid.phi(p) + 0.5 * dphi;
        let pt = |r: f64, a: f64| -> (f64, f64) {
            (half + scale * r * a.cos(), 20.0 + half - scale * r * a.sin())
        };
        let (x0, y0) = pt(r0, a0);
        let (x1, y1) = pt(r1, a0);
        let (x2, y2) = pt(r1, a1);
        let (x3, y3) = pt(r0, a1);
        let t = (values[p] - lo) / (hi - lo);
        let (r, g, b) = color_map(t);
        s.push_str(&format!(
            "<path d=\"M{x0:.1} {y0:.1} L{x1:.1} {y1:.1} L{x2:.1} {y2:.1} L{x3:.1} {y3:.1} Z\" \
             fill=\"rgb({r},{g},{b})\" stroke=\"none\"/>\n"
        ));
    }
    s.push_str(&format!(
        "<text x=\"12\" y=\"{y}\" fill=\"#e8e8f0\" font-family=\"monospace\" font-size=\"13\">min {lo:.6e}   max {hi:.6e}</text>\n</svg>\n",
        y = size as u32 + 28
    ));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{build_bundle, hx_field};
    use crate::domain::build_grid;
    use std::sync::Arc;

    #[test]
    fn metric_csv_round_trip() {
        let spec = build_bundle(2).unwrap();
        let grid = Arc::new(build_grid(0.5, 8, 8).unwrap());
        let field = MetricField { grid: grid.clone(), h: hx_field(&spec, &grid) };
        let csv = metric_field_to_csv(&field);
        let back = metric_field_from_csv(grid, 4, &csv).unwrap();
        for (a, b) in field.h.iter().zip(&back.h) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn heatmap_is_valid_svgish() {
        let grid = build_grid(0.5, 8, 8).unwrap();
        let vals: Vec<f64> = (0..grid.node_count()).map(|p| p as f64).collect();
        let svg = heatmap_svg(&grid, &vals, "test");
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.matches("<path").count() == grid.node_count());
    }
}
