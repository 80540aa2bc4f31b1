use std::fmt::Write;

use nvdd::models::AnonymizationResult;
use nvdd::{ConvexPolygon, Point};

const SIZE_PX: u32 = 640;

// SVG y grows downward; flip so the picture matches the plane.
fn fmt_point(p: Point) -> String {
    format!("{:.4} {:.4}", p.x, -p.y)
}

fn path_data(poly: &ConvexPolygon) -> String {
    let mut d = String::new();
    for (i, &v) in poly.vertices().iter().enumerate() {
        d.push_str(if i == 0 { "M " } else { " L " });
        d.push_str(&fmt_point(v));
    }
    d.push_str(" Z");
    d
}

/// Scaled Delaunay polygon, concealing (Voronoi) polygon and anonymity zone,
/// outermost first, plus the seed.
pub fn svg(res: &AnonymizationResult) -> String {
    let seed = res.seed();
    let delaunay = res
        .instance
        .delaunay()
        .scale_about(seed, res.lambda)
        .unwrap_or_else(|_| res.instance.delaunay().clone());
    let voronoi = &res.concealing;
    let zone = res.zone_scaled.polygon();

    let (lo_d, hi_d) = delaunay.bounding_box();
    let (lo_v, hi_v) = voronoi.bounding_box();
    let (x0, x1) = (lo_d.x.min(lo_v.x), hi_d.x.max(hi_v.x));
    let (y0, y1) = (lo_d.y.min(lo_v.y), hi_d.y.max(hi_v.y));
    let extent = (x1 - x0).max(y1 - y0);
    let pad = 0.05 * extent;
    let stroke = 0.004 * extent;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE_PX}" height="{SIZE_PX}" viewBox="{:.4} {:.4} {:.4} {:.4}">"#,
        x0 - pad,
        -y1 - pad,
        x1 - x0 + 2.0 * pad,
        y1 - y0 + 2.0 * pad
    );
    let _ = writeln!(
        s,
        "<title>model {} n={} lambda={:.6}</title>",
        res.kind.label(),
        res.n(),
        res.lambda
    );
    for (id, poly, fill, color) in [
        ("delaunay", &delaunay, "none", "#1f77b4"),
        ("voronoi", voronoi, "#ffbb78", "#ff7f0e"),
        ("zone", zone, "#98df8a", "#2ca02c"),
    ] {
        let _ = writeln!(
            s,
            r#"<path id="{id}" d="{}" fill="{fill}" fill-opacity="0.5" stroke="{color}" stroke-width="{stroke:.4}"/>"#,
            path_data(poly)
        );
    }
    let _ = writeln!(
        s,
        r##"<circle id="seed" cx="{:.4}" cy="{:.4}" r="{:.4}" fill="#d62728"/>"##,
        seed.x,
        -seed.y,
        2.5 * stroke
    );
    s.push_str("</svg>\n");
    s
}
