//! SVG rendering of curve diagrams.
//!
//! Each edge is subdivided twice so the skeleton is a simple graph, the
//! largest face is pinned to a convex polygon, interior nodes take the
//! barycentric (spring) positions, and the curve is drawn as one smooth
//! closed spline through the strand order, crossing itself exactly at the
//! crossings.

use nalgebra::DMatrix;

use crate::planar_map::{trace_faces, CurveDiagram};

#[derive(Debug, Clone, Copy)]
struct Pt {
    x: f64,
    y: f64,
}

/// Node ids: 0..n are crossings (vertex v at v-1); then per edge e two
/// subdivision nodes n + 2e and n + 2e + 1, ordered from edge_darts[e][0].
fn layout(diagram: &CurveDiagram) -> Vec<Pt> {
    let n = diagram.crossings();
    let num_nodes = n + 2 * diagram.num_edges();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
    for (e, &[d1, d2]) in diagram.edge_darts.iter().enumerate() {
        let v1 = (d1 / 4) as usize;
        let v2 = (d2 / 4) as usize;
        let a = n + 2 * e;
        let b = n + 2 * e + 1;
        for (p, q) in [(v1, a), (a, b), (b, v2)] {
            adj[p].push(q);
            adj[q].push(p);
        }
    }
    // Outer face: the largest, ties broken by id.
    let faces = trace_faces(diagram);
    let outer = faces
        .iter()
        .max_by_key(|f| (f.size(), std::cmp::Reverse(f.id)))
        .unwrap();
    // Boundary cycle of the outer face in the subdivided graph.
    let mut boundary = Vec::new();
    for &d in &outer.darts {
        let e = diagram.edge_of(d) as usize;
        let forward = diagram.edge_darts[e][0] == d;
        boundary.push((d / 4) as usize);
        if forward {
            boundary.push(n + 2 * e);
            boundary.push(n + 2 * e + 1);
        } else {
            boundary.push(n + 2 * e + 1);
            boundary.push(n + 2 * e);
        }
    }
    let mut fixed = vec![None; num_nodes];
    let k = boundary.len();
    for (i, &node) in boundary.iter().enumerate() {
        let ang = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
        fixed[node] = Some(Pt { x: ang.cos(), y: ang.sin() });
    }
    // Tutte system for the free nodes.
    let free: Vec<usize> = (0..num_nodes).filter(|&i| fixed[i].is_none()).collect();
    let index: std::collections::HashMap<usize, usize> =
        free.iter().enumerate().map(|(i, &node)| (node, i)).collect();
    let m = free.len();
    let mut pts = vec![Pt { x: 0.0, y: 0.0 }; num_nodes];
    for (i, f) in fixed.iter().enumerate() {
        if let Some(p) = f {
            pts[i] = *p;
        }
    }
    if m > 0 {
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut bx = DMatrix::<f64>::zeros(m, 1);
        let mut by = DMatrix::<f64>::zeros(m, 1);
        for (row, &node) in free.iter().enumerate() {
            let deg = adj[node].len() as f64;
            a[(row, row)] = deg;
            for &nb in &adj[node] {
                match index.get(&nb) {
                    Some(&col) => a[(row, col)] -= 1.0,
                    None => {
                        bx[(row, 0)] += pts[nb].x;
                        by[(row, 0)] += pts[nb].y;
                    }
                }
            }
        }
        let lu = a.lu();
        let sx = lu.solve(&bx).expect("laplacian is nonsingular");
        let sy = lu.solve(&by).expect("laplacian is nonsingular");
        for (row, &node) in free.iter().enumerate() {
            pts[node] = Pt { x: sx[(row, 0)], y: sy[(row, 0)] };
        }
    }
    pts
}

/// The node sequence the curve visits, in strand order.
fn strand_nodes(diagram: &CurveDiagram) -> Vec<usize> {
    let n = diagram.crossings();
    let len = 2 * n;
    let mut nodes = Vec::with_capacity(3 * len);
    for pos in 0..len {
        nodes.push(diagram.code.word[pos] as usize - 1);
        // Edge `pos` runs from exit(pos) = edge_darts[pos][0] to the next entry.
        nodes.push(n + 2 * pos);
        nodes.push(n + 2 * pos + 1);
    }
    nodes
}

fn fmt(v: f64) -> String {
    format!("{:.2}", v)
}

/// Renders the diagram as a closed smooth SVG path. The path visits every
/// crossing point exactly twice; the crossing-free diagram is an oval.
pub fn render_svg(diagram: &CurveDiagram) -> String {
    let size = 400.0;
    let pad = 30.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {size} {size}\">\n"
    ));
    if diagram.crossings() == 0 {
        svg.push_str(&format!(
            "  <ellipse cx=\"{}\" cy=\"{}\" rx=\"{}\" ry=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n",
            size / 2.0,
            size / 2.0,
            size / 2.0 - pad,
            size / 2.5 - pad
        ));
        svg.push_str("</svg>\n");
        return svg;
    }
    let pts = layout(diagram);
    let to_screen = |p: Pt| Pt {
        x: size / 2.0 + p.x * (size / 2.0 - pad),
        y: size / 2.0 + p.y * (size / 2.0 - pad),
    };
    let seq: Vec<Pt> = strand_nodes(diagram)
        .iter()
        .map(|&i| to_screen(pts[i]))
        .collect();
    // Closed Catmull-Rom spline as cubic Bezier segments.
    let k = seq.len();
    let mut d = format!("M {} {}", fmt(seq[0].x), fmt(seq[0].y));
    for i in 0..k {
        let p0 = seq[(i + k - 1) % k];
        let p1 = seq[i];
        let p2 = seq[(i + 1) % k];
        let p3 = seq[(i + 2) % k];
        let c1 = Pt { x: p1.x + (p2.x - p0.x) / 6.0, y: p1.y + (p2.y - p0.y) / 6.0 };
        let c2 = Pt { x: p2.x - (p3.x - p1.x) / 6.0, y: p2.y - (p3.y - p1.y) / 6.0 };
        d.push_str(&format!(
            " C {} {}, {} {}, {} {}",
            fmt(c1.x),
            fmt(c1.y),
            fmt(c2.x),
            fmt(c2.y),
            fmt(p2.x),
            fmt(p2.y)
        ));
    }
    d.push_str(" Z");
    svg.push_str(&format!(
        "  <path d=\"{d}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n"
    ));
    for v in 0..diagram.crossings() {
        let p = to_screen(pts[v]);
        svg.push_str(&format!(
            "  <circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"black\"/>\n",
            fmt(p.x),
            fmt(p.y)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss_code::{enumerate_words, parse_code};
    use crate::planar_map::realize_on_sphere;

    #[test]
    fn figure_eight_visits_crossing_twice() {
        let d = realize_on_sphere(&parse_code("1 1").unwrap(), 8).unwrap().unwrap();
        let nodes = strand_nodes(&d);
        assert_eq!(nodes.iter().filter(|&&v| v == 0).count(), 2);
        let svg = render_svg(&d);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<path"));
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn n3_classes_have_three_crossing_marks() {
        for code in enumerate_words(3, 8).unwrap() {
            if let Some(d) = realize_on_sphere(&code, 8).unwrap() {
                let nodes = strand_nodes(&d);
                for v in 0..3 {
                    assert_eq!(nodes.iter().filter(|&&x| x == v).count(), 2);
                }
                assert_eq!(render_svg(&d).matches("<circle").count(), 3);
            }
        }
    }

    #[test]
    fn empty_circle_is_an_oval() {
        let d = realize_on_sphere(&parse_code("").unwrap(), 8).unwrap().unwrap();
        let svg = render_svg(&d);
        assert!(svg.contains("<ellipse"));
    }
}
