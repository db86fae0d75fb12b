//! SVG drawings of planar point sets and trees. Output depends only on the
//! input, so drawings can be diffed.

use std::fmt::Write as _;

use cqric_core::oracle::{tile_keys, TileModel};
use cqric_core::{CanonicalCell, CompressedQuadtree};

use crate::{Error, Result};

/// Canvas side in SVG user units.
pub const CANVAS: f64 = 512.0;
const POINT_RADIUS: f64 = 2.5;

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{c}" height="{c}" viewBox="0 0 {c} {c}">"#,
        c = CANVAS
    );
    let _ = writeln!(
        out,
        r##"<rect x="0" y="0" width="{c}" height="{c}" fill="#ffffff" stroke="#000000" stroke-width="1"/>"##,
        c = CANVAS
    );
}

// the second axis points up
fn to_canvas(x: f64, y: f64) -> (f64, f64) {
    (x * CANVAS, (1.0 - y) * CANVAS)
}

fn circle(out: &mut String, x: f64, y: f64, id: usize) {
    let (cx, cy) = to_canvas(x, y);
    let _ = writeln!(
        out,
        r##"<circle cx="{cx:.3}" cy="{cy:.3}" r="{POINT_RADIUS}" fill="#c0392b"><title>{id}</title></circle>"##
    );
}

pub fn render_points(points: &[Vec<f64>]) -> Result<String> {
    if let Some(p) = points.iter().find(|p| p.len() != 2) {
        return Err(Error::UnsupportedDimension(p.len()));
    }
    let mut out = String::new();
    header(&mut out);
    for (id, p) in points.iter().enumerate() {
        circle(&mut out, p[0], p[1], id);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// `(x, y, side)` of a cell in canvas units, top-left origin.
fn cell_box(cell: &CanonicalCell) -> (f64, f64, f64) {
    // corners count cells of the cell's own level
    let side = 0.5f64.powi(cell.level as i32);
    let x = cell.corner[0] as f64 * side;
    let y = cell.corner[1] as f64 * side;
    let (sx, sy) = to_canvas(x, y + side);
    (sx, sy, side * CANVAS)
}

fn square_path(out: &mut String, (x, y, s): (f64, f64, f64)) {
    let _ = write!(out, "M{x:.3} {y:.3}h{s:.3}v{s:.3}h{:.3}Z", -s);
}

/// Cells as outlines, annulus tiles shaded, stored points as dots.
pub fn render_tree(tree: &CompressedQuadtree) -> Result<String> {
    let dim = tree.geometry().dim();
    if dim != 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let mut out = String::new();
    header(&mut out);
    for key in tile_keys(tree, TileModel::Elementary) {
        if key.holes.is_empty() {
            continue;
        }
        let mut d = String::new();
        square_path(&mut d, cell_box(&key.outer));
        for h in &key.holes {
            square_path(&mut d, cell_box(h));
        }
        let _ = writeln!(
            out,
            r##"<path d="{d}" fill="#3498db" fill-opacity="0.25" fill-rule="evenodd" stroke="none"/>"##
        );
    }
    for v in tree.preorder() {
        let node = tree.node(v);
        let (x, y, s) = cell_box(node.cell());
        let _ = writeln!(
            out,
            r##"<rect x="{x:.3}" y="{y:.3}" width="{s:.3}" height="{s:.3}" fill="none" stroke="#2c3e50" stroke-width="0.5"/>"##
        );
    }
    let full = tree.geometry().side() as f64;
    for v in tree.preorder() {
        if let Some(p) = tree.node(v).point() {
            let c = &tree.point(p).coords;
            // centre of the lattice cell
            circle(&mut out, (c[0] as f64 + 0.5) / full, (c[1] as f64 + 0.5) / full, p);
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
