use std::fmt::Write;

use super::palette::{self, Rgb};
use super::{Fragment, Primitive, RenderError, StyleConfig};
use crate::geometry::Vec2;

/// World-to-pixel mapping: uniform scale, centred, y up.
struct Frame {
    scale: f64,
    ox: f64,
    oy: f64,
}

impl Frame {
    fn new(f: &Fragment, canvas: u32) -> Result<Frame, RenderError> {
        let size = canvas as f64;
        let (w, h) = (f.view_max.x - f.view_min.x, f.view_max.y - f.view_min.y);
        if !(w.is_finite() && h.is_finite()) || w <= 0.0 || h <= 0.0 {
            return Err(RenderError::NonFinite);
        }
        let scale = size / w.max(h);
        Ok(Frame {
            scale,
            ox: (size - w * scale) / 2.0 - f.view_min.x * scale,
            oy: (size - h * scale) / 2.0 + f.view_max.y * scale,
        })
    }

    fn map(&self, p: Vec2) -> Result<(f64, f64), RenderError> {
        if !p.is_finite() {
            return Err(RenderError::NonFinite);
        }
        Ok((self.ox + p.x * self.scale, self.oy - p.y * self.scale))
    }
}

/// Fixed six-place formatting; negative zero is written as zero.
fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn paint_attr(name: &str, c: Option<Rgb>) -> String {
    match c {
        Some(c) => format!(" {name}=\"{}\"", c.hex()),
        None => format!(" {name}=\"none\""),
    }
}

pub fn render_svg(fragment: &Fragment, style: &StyleConfig) -> Result<String, RenderError> {
    style.check()?;
    if fragment.items.is_empty() {
        return Err(RenderError::EmptyFragment);
    }
    let colors = palette::palette(&style.palette)
        .ok_or_else(|| RenderError::UnknownPalette(style.palette.clone()))?
        .colors;
    let frame = Frame::new(fragment, style.canvas)?;
    let sw = num(style.stroke_width);
    let mut out = String::new();
    let px = style.canvas;
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{px}\" height=\"{px}\" viewBox=\"0 0 {px} {px}\">"
    );
    let _ = write!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{px}\" height=\"{px}\" fill=\"{}\"/>",
        style.background.hex()
    );
    out.push_str("<g stroke-linejoin=\"round\" stroke-linecap=\"round\">");
    for item in &fragment.items {
        match item {
            Primitive::Polygon { points, fill, stroke } => {
                let pts = points
                    .iter()
                    .map(|&p| frame.map(p).map(|(x, y)| format!("{},{}", num(x), num(y))))
                    .collect::<Result<Vec<_>, _>>()?
                    .join(" ");
                let _ = write!(
                    out,
                    "<polygon points=\"{pts}\"{}{} stroke-width=\"{sw}\"/>",
                    paint_attr("fill", style.resolve(*fill, &colors)?),
                    paint_attr("stroke", style.resolve(*stroke, &colors)?)
                );
            }
            Primitive::Rect { min, size, fill, stroke } => {
                let (x0, y0) = frame.map(*min)?;
                let (x1, y1) = frame.map(*min + *size)?;
                let _ = write!(
                    out,
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"{}{} stroke-width=\"{sw}\"/>",
                    num(x0.min(x1)),
                    num(y0.min(y1)),
                    num((x1 - x0).abs()),
                    num((y1 - y0).abs()),
                    paint_attr("fill", style.resolve(*fill, &colors)?),
                    paint_attr("stroke", style.resolve(*stroke, &colors)?)
                );
            }
            Primitive::Circle {
                center,
                radius,
                fill,
                stroke,
            } => {
                let (cx, cy) = frame.map(*center)?;
                if !radius.is_finite() {
                    return Err(RenderError::NonFinite);
                }
                let _ = write!(
                    out,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"{}{} stroke-width=\"{sw}\"/>",
                    num(cx),
                    num(cy),
                    num(radius * frame.scale),
                    paint_attr("fill", style.resolve(*fill, &colors)?),
                    paint_attr("stroke", style.resolve(*stroke, &colors)?)
                );
            }
            Primitive::Path {
                points,
                stroke,
                dashed,
                weight,
            } => {
                let mut d = String::new();
                for (i, &p) in points.iter().enumerate() {
                    let (x, y) = frame.map(p)?;
                    let _ = write!(d, "{}{} {}", if i == 0 { "M" } else { " L" }, num(x), num(y));
                }
                let dash = if *dashed {
                    format!(" stroke-dasharray=\"{} {}\"", num(style.stroke_width * 3.0), num(style.stroke_width * 2.0))
                } else {
                    String::new()
                };
                let _ = write!(
                    out,
                    "<path d=\"{d}\" fill=\"none\"{} stroke-width=\"{}\"{dash}/>",
                    paint_attr("stroke", style.resolve(*stroke, &colors)?),
                    num(style.stroke_width * weight)
                );
            }
        }
    }
    out.push_str("</g></svg>");
    Ok(out)
}
