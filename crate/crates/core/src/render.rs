//! SVG pictures of planar boards and geodesics.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geodesic::{traverse, Geodesic};
use crate::grid::Checkerboard;

pub const CANVAS_PX: f64 = 512.0;

fn px(v: f64) -> String {
    format!("{:.3}", v * CANVAS_PX)
}

/// Screen coordinates put `y = 0` at the bottom edge.
fn py(v: f64) -> String {
    format!("{:.3}", (1.0 - v) * CANVAS_PX)
}

/// Board cells in black, grid lines in gray, and each geodesic as one
/// polyline per traversal segment, drawn inside the cell it crosses.
pub fn render_board(board: &Checkerboard, geodesics: &[Geodesic], horizon: f64) -> Result<String> {
    let grid = board.grid();
    if grid.d() != 2 {
        return Err(Error::DimensionUnsupported { d: grid.d() });
    }
    let n = grid.n();
    let h = 1.0 / n as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        CANVAS_PX
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{0}" height="{0}" fill="white"/>"#, CANVAS_PX);
    let side = px(h);
    for flat in 0..grid.cell_count() {
        if board.bit(flat) {
            let cell = grid.cell_at(flat);
            let c = cell.coords();
            let x = (c[0] - 1) as f64 * h;
            let y = c[1] as f64 * h;
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{side}" height="{side}" fill="black"/>"#,
                px(x),
                py(y)
            );
        }
    }
    out.push_str(r#"<g stroke="gray" stroke-width="1">"#);
    out.push('\n');
    for i in 0..=n {
        let v = i as f64 * h;
        let _ = writeln!(out, r#"<line x1="{0}" y1="0.000" x2="{0}" y2="{1}"/>"#, px(v), px(1.0));
        let _ = writeln!(out, r#"<line x1="0.000" y1="{0}" x2="{1}" y2="{0}"/>"#, py(v), px(1.0));
    }
    out.push_str("</g>\n");
    for (k, g) in geodesics.iter().enumerate() {
        let tr = traverse(g, grid, horizon)?;
        let _ = writeln!(out, r#"<g id="geodesic-{}" stroke="red" stroke-width="2" fill="none">"#, k + 1);
        for seg in tr.segments() {
            let unwrapped = |t: f64| -> [f64; 2] {
                let o = g.origin();
                let u = g.direction();
                [o[0] + t * u[0], o[1] + t * u[1]]
            };
            let mid = unwrapped((seg.t_entry + seg.t_exit) / 2.0);
            let shift = [mid[0].floor(), mid[1].floor()];
            let a = unwrapped(seg.t_entry);
            let b = unwrapped(seg.t_exit);
            let _ = writeln!(
                out,
                r#"<polyline points="{},{} {},{}"/>"#,
                px(a[0] - shift[0]),
                py(a[1] - shift[1]),
                px(b[0] - shift[0]),
                py(b[1] - shift[1])
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::f64::consts::SQRT_2;

    #[test]
    fn empty_and_full() {
        let grid = GridSpec::new(2, 3).unwrap();
        let empty = Checkerboard::sample(grid, 0.0, 0).unwrap();
        let svg = render_board(&empty, &[], 0.5).unwrap();
        assert_eq!(svg.matches(r#"fill="black""#).count(), 0);
        assert_eq!(svg.matches("<line").count(), 8);
        let full = Checkerboard::sample(grid, 1.0, 0).unwrap();
        let svg = render_board(&full, &[], 0.5).unwrap();
        assert_eq!(svg.matches(r#"fill="black""#).count(), 9);
    }

    #[test]
    fn diagonal_draws_three_segments() {
        let grid = GridSpec::new(2, 2).unwrap();
        let b = Checkerboard::sample(grid, 0.5, 3).unwrap();
        let g = Geodesic::new(&[0.1, 0.2], &[1.0 / SQRT_2, 1.0 / SQRT_2]).unwrap();
        let svg = render_board(&b, std::slice::from_ref(&g), 0.7).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains(r#"points="51.200,409.600 "#));
        assert_eq!(svg, render_board(&b, &[g], 0.7).unwrap());
    }

    #[test]
    fn needs_the_plane() {
        let grid = GridSpec::new(3, 2).unwrap();
        let b = Checkerboard::sample(grid, 0.5, 0).unwrap();
        assert!(matches!(
            render_board(&b, &[], 0.5),
            Err(Error::DimensionUnsupported { d: 3 })
        ));
    }
}
