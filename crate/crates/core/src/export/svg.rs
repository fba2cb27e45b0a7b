//! SVG rendering of scene-graph layouts for inspection.

use std::fmt::Write;

use crate::palette::{self, color_for_label};
use crate::scene_graph::SceneGraph;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Rounds to 0.01 px for stable, readable output.
fn px(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// One labeled rectangle per object, colored by a hash of its category.
/// With `arrows`, relations are drawn from subject center to object center.
pub fn render_svg(sg: &SceneGraph, width: u32, height: u32, arrows: bool) -> String {
    let (w, h) = (f64::from(width), f64::from(height));
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    if arrows && !sg.relations().is_empty() {
        let _ = writeln!(
            out,
            r#"<defs><marker id="head" markerWidth="8" markerHeight="8" refX="7" refY="4" orient="auto"><path d="M0,0 L8,4 L0,8 z" fill="black"/></marker></defs>"#
        );
    }
    for obj in sg.objects() {
        let b = &obj.layout;
        let [r, g, bl] = palette::rgb(color_for_label(&obj.category)).expect("palette color");
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="rgb({r},{g},{bl})" fill-opacity="0.35" stroke="rgb({r},{g},{bl})" stroke-width="2"/>"#,
            px(b.x() * w),
            px(b.y() * h),
            px(b.w() * w),
            px(b.h() * h)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{} ({})</text>"#,
            px(b.x() * w + 2.0),
            px(b.y() * h + 14.0),
            escape(&obj.category),
            escape(&obj.id)
        );
    }
    if arrows {
        for t in sg.relations() {
            if let Some((s, o)) = sg.endpoints(t) {
                let (a, c) = (s.layout.center(), o.layout.center());
                let _ = writeln!(
                    out,
                    r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-width="1.5" marker-end="url(#head)"><title>{}</title></line>"#,
                    px(a.x * w),
                    px(a.y * h),
                    px(c.x * w),
                    px(c.y * h),
                    escape(&t.relation)
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
