//! Procedural stroke shapes for synthetic ink.
//!
//! Coordinates are in em units with y pointing down: the baseline is at
//! y = 1, digits and tall letters reach y = 0, small letters start at 0.4
//! and descenders go to about 1.35.

use crate::ink::Point;

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn line(pts: &[(f64, f64)]) -> Vec<Point> {
    pts.iter().map(|&(x, y)| p(x, y)).collect()
}

/// Elliptical arc from `a0` to `a1` degrees; angles grow clockwise on
/// screen since y points down.
fn arc(cx: f64, cy: f64, rx: f64, ry: f64, a0: f64, a1: f64) -> Vec<Point> {
    let steps = ((a1 - a0).abs() / 30.0).ceil().max(1.0) as usize;
    (0..=steps)
        .map(|i| {
            let a = (a0 + (a1 - a0) * i as f64 / steps as f64).to_radians();
            p(cx + rx * a.cos(), cy + ry * a.sin())
        })
        .collect()
}

fn join(parts: Vec<Vec<Point>>) -> Vec<Point> {
    parts.into_iter().flatten().collect()
}

/// Symbols with a built-in shape.
pub const NAMES: [&str; 27] = [
    "0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "+", "-", "(", ")", "sqrt", "a", "b", "c", "d", "e", "k",
    "n", "p", "x", "y", "z", "=",
];

/// Symbols drawn to fit their operands rather than at a fixed size.
/// Shapes drawn exactly like another glyph, told apart only by context.
pub const LOOKALIKES: [(&str, &str); 1] = [("P", "p")];

pub fn is_stretchy(name: &str) -> bool {
    matches!(name, "(" | ")" | "sqrt")
}

pub fn glyph(name: &str) -> Option<Vec<Vec<Point>>> {
    let g = match name {
        "0" => vec![arc(0.3, 0.5, 0.3, 0.5, -90.0, 270.0)],
        "1" => vec![line(&[(0.05, 0.2), (0.25, 0.0), (0.25, 1.0)])],
        "2" => vec![join(vec![arc(0.25, 0.27, 0.25, 0.25, 190.0, 380.0), line(&[(0.0, 1.0), (0.52, 1.0)])])],
        "3" => vec![join(vec![
            arc(0.22, 0.25, 0.23, 0.25, 200.0, 450.0),
            arc(0.22, 0.73, 0.27, 0.27, -90.0, 160.0),
        ])],
        "4" => vec![line(&[(0.38, 0.0), (0.0, 0.68), (0.52, 0.68)]), line(&[(0.38, 0.3), (0.38, 1.0)])],
        "5" => vec![join(vec![
            line(&[(0.45, 0.0), (0.1, 0.0), (0.07, 0.45)]),
            arc(0.25, 0.7, 0.25, 0.3, -130.0, 160.0),
        ])],
        "6" => vec![join(vec![line(&[(0.42, 0.0)]), arc(0.27, 0.72, 0.23, 0.28, 180.0, 540.0)])],
        "7" => vec![line(&[(0.0, 0.0), (0.5, 0.0), (0.15, 1.0)])],
        "8" => vec![join(vec![
            arc(0.25, 0.25, 0.2, 0.25, 90.0, 450.0),
            arc(0.25, 0.75, 0.25, 0.25, -90.0, 270.0),
        ])],
        "9" => vec![join(vec![arc(0.25, 0.3, 0.22, 0.3, 0.0, -360.0), line(&[(0.4, 1.0)])])],
        "+" => vec![line(&[(0.0, 0.6), (0.6, 0.6)]), line(&[(0.3, 0.3), (0.3, 0.9)])],
        "-" => vec![line(&[(0.0, 0.6), (0.6, 0.6)])],
        "=" => vec![line(&[(0.0, 0.5), (0.6, 0.5)]), line(&[(0.0, 0.72), (0.6, 0.72)])],
        "(" => vec![arc(0.45, 0.5, 0.4, 0.62, 235.0, 125.0)],
        ")" => vec![arc(0.0, 0.5, 0.4, 0.62, -55.0, 55.0)],
        "sqrt" => vec![line(&[(0.0, 0.6), (0.12, 0.52), (0.3, 1.0), (0.55, -0.1), (1.2, -0.1)])],
        "a" => vec![join(vec![arc(0.22, 0.7, 0.22, 0.3, -30.0, -330.0), line(&[(0.44, 0.4), (0.47, 1.0)])])],
        "b" => vec![join(vec![line(&[(0.05, 0.0), (0.05, 1.0), (0.05, 0.7)]), arc(0.25, 0.7, 0.2, 0.3, 180.0, 540.0)])],
        "c" => vec![arc(0.25, 0.7, 0.25, 0.3, -40.0, -320.0)],
        "d" => vec![join(vec![arc(0.22, 0.7, 0.22, 0.3, -30.0, -330.0), line(&[(0.44, 0.0), (0.44, 1.0)])])],
        "e" => vec![join(vec![line(&[(0.02, 0.72)]), arc(0.24, 0.7, 0.23, 0.3, 0.0, -320.0)])],
        "k" => vec![line(&[(0.05, 0.0), (0.05, 1.0)]), line(&[(0.42, 0.45), (0.07, 0.72), (0.45, 1.0)])],
        "n" => vec![join(vec![
            line(&[(0.05, 0.4), (0.05, 1.0), (0.05, 0.62)]),
            arc(0.25, 0.62, 0.2, 0.2, 180.0, 360.0),
            line(&[(0.45, 1.0)]),
        ])],
        "P" => vec![join(vec![line(&[(0.05, 0.0), (0.05, 0.95), (0.05, 0.05)]), arc(0.25, 0.25, 0.2, 0.25, -110.0, 110.0)])],
        "p" => vec![join(vec![line(&[(0.05, 0.4), (0.05, 1.35), (0.05, 0.45)]), arc(0.25, 0.65, 0.2, 0.25, -110.0, 110.0)])],
        "x" => vec![line(&[(0.0, 0.4), (0.45, 1.0)]), line(&[(0.45, 0.4), (0.0, 1.0)])],
        "y" => vec![line(&[(0.0, 0.4), (0.22, 0.85)]), line(&[(0.45, 0.4), (0.1, 1.35)])],
        "z" => vec![line(&[(0.02, 0.42), (0.45, 0.42), (0.0, 1.0), (0.47, 1.0)])],
        _ => return None,
    };
    Some(g)
}
