//! SVG heatmap of a solved value function: exactly one rectangle per
//! grid cell, green (fast to score) through red (slow), with the y
//! axis flipped so +y points up as on the field.

use kickmind_core::{CellId, FieldSpec, ValueFunction};

/// Pixels per grid cell.
const CELL_PX: u32 = 16;

/// Linear two-color ramp, `t` in `[0, 1]`.
fn ramp(t: f64) -> String {
    const LOW: [f64; 3] = [26.0, 152.0, 80.0];
    const HIGH: [f64; 3] = [215.0, 48.0, 39.0];
    let ch = |i: usize| (LOW[i] + (HIGH[i] - LOW[i]) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(0), ch(1), ch(2))
}

/// Renders the heatmap. The output is a standalone SVG document.
pub fn value_heatmap_svg(v: &ValueFunction, field: &FieldSpec) -> String {
    debug_assert!(v.matches_grid(field));
    let cols = v.cols();
    let rows = v.rows();
    let width = cols * CELL_PX;
    let height = rows * CELL_PX;
    let min = v.min_value();
    let max = v.max_value();
    let span = if max > min { max - min } else { 1.0 };

    let mut out = String::with_capacity(80 * (cols as usize * rows as usize) + 256);
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    for row in 0..rows {
        for col in 0..cols {
            let value = v.get(CellId::new(col, row));
            let t = ((value - min) / span).clamp(0.0, 1.0);
            let x = col * CELL_PX;
            // Row 0 is the field's lowest y; SVG y grows downward.
            let y = (rows - 1 - row) * CELL_PX;
            out.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL_PX}\" height=\"{CELL_PX}\" \
                 fill=\"{}\"><title>cell ({col}, {row}): {value:.3} s</title></rect>\n",
                ramp(t)
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}
