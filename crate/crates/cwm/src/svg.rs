//! Aggregate maps as SVG: one `<g class="aggregate">` per aggregate.

use std::fmt::Write as _;

use cwm_core::coarsening::AggregateSet;

use crate::experiment::Geometry;

const SIZE: f64 = 600.0;
const GOLDEN: f64 = 0.618_033_988_749_895;

/// Color of aggregate `id`; consecutive ids get well separated hues.
pub fn color(id: usize) -> String {
    let hue = (id as f64 * GOLDEN).fract() * 360.0;
    let light = [52, 66, 40][id % 3];
    format!("hsl({hue:.1},70%,{light}%)")
}

/// Renders the map, or `None` when the geometry is unknown.
pub fn aggregate_svg(agg: &AggregateSet, geometry: &Geometry) -> Option<String> {
    match geometry {
        Geometry::Grid { n } => Some(grid_svg(agg, *n)),
        Geometry::Mesh { mesh, dofs } => Some(mesh_svg(agg, mesh, dofs)),
        Geometry::None => None,
    }
}

fn header(s: &mut String) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
}

/// Unknown k = iy n + ix is the cell at column ix, row iy counted from the bottom.
fn grid_svg(agg: &AggregateSet, n: usize) -> String {
    let h = SIZE / n as f64;
    let mut s = String::new();
    header(&mut s);
    for (id, g) in agg.aggregates.iter().enumerate() {
        let _ = writeln!(s, r#"<g class="aggregate" id="agg{id}" fill="{}" stroke="black" stroke-width="0.5">"#, color(id));
        for &k in g {
            let (ix, iy) = (k % n, k / n);
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{h:.3}" height="{h:.3}"/>"#,
                ix as f64 * h,
                (n - 1 - iy) as f64 * h
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

/// Each triangle is split into three median-dual pieces, colored by the aggregate of their vertex.
fn mesh_svg(agg: &AggregateSet, mesh: &cwm_core::problems::TriMesh, dofs: &[usize]) -> String {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &mesh.vertices {
        for c in 0..2 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let scale = SIZE / (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let map = |p: [f64; 2]| ((p[0] - lo[0]) * scale, SIZE - (p[1] - lo[1]) * scale);
    let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];

    let mut dof_of = vec![usize::MAX; mesh.vertices.len()];
    for (k, &v) in dofs.iter().enumerate() {
        dof_of[v] = k;
    }
    let mut pieces = vec![Vec::new(); agg.len()];
    for t in &mesh.triangles {
        let p = t.map(|v| mesh.vertices[v]);
        let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        for i in 0..3 {
            let k = dof_of[t[i]];
            if k == usize::MAX {
                continue;
            }
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            pieces[agg.agg_of[k]].push([p[i], mid(p[i], a), c, mid(p[i], b)]);
        }
    }

    let mut s = String::new();
    header(&mut s);
    s.push_str(r#"<g class="mesh" fill="none" stroke="gray" stroke-width="0.3">"#);
    s.push('\n');
    for t in &mesh.triangles {
        let pts: Vec<String> = t.iter().map(|&v| map(mesh.vertices[v])).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(s, r#"<polygon points="{}"/>"#, pts.join(" "));
    }
    s.push_str("</g>\n");
    for (id, quads) in pieces.iter().enumerate() {
        let _ = writeln!(s, r#"<g class="aggregate" id="agg{id}" fill="{}" stroke="none">"#, color(id));
        for q in quads {
            let pts: Vec<String> = q.iter().map(|&p| map(p)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(s, r#"<polygon points="{}"/>"#, pts.join(" "));
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}
