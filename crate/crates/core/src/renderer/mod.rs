//! Deterministic projection of scene fragments into panels.
//!
//! A fragment is a display list in world units. Rendering only sees geometry and
//! paint references, so nothing about answers can reach it.

pub mod palette;
mod raster;
mod svg;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use palette::Rgb;

pub use raster::rasterize;
pub use svg::render_svg;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("fragment has no primitives")]
    EmptyFragment,
    #[error("palette index {index} outside {palette} ({len} colours)")]
    PaletteIndex { palette: String, index: u8, len: usize },
    #[error("accent index {0} out of range")]
    AccentIndex(u8),
    #[error("unknown palette {0:?}")]
    UnknownPalette(String),
    #[error("invalid style: {0}")]
    Style(String),
    #[error("non-finite coordinate in fragment")]
    NonFinite,
    #[error("raster export failed: {0}")]
    Raster(String),
}

/// Where a fill or stroke colour comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Paint {
    None,
    /// Slot of the style's palette.
    Palette(u8),
    /// Fixed marking colour, independent of palette.
    Accent(u8),
    /// Foreground line colour.
    Ink,
    /// Muted tone for cast shadows and hidden faces.
    Shade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Primitive {
    Polygon {
        points: Vec<Vec2>,
        fill: Paint,
        stroke: Paint,
    },
    Rect {
        min: Vec2,
        size: Vec2,
        fill: Paint,
        stroke: Paint,
    },
    Circle {
        center: Vec2,
        radius: f64,
        fill: Paint,
        stroke: Paint,
    },
    /// Open polyline.
    Path {
        points: Vec<Vec2>,
        stroke: Paint,
        dashed: bool,
        /// Multiplier on the style stroke width.
        weight: f64,
    },
}

impl Primitive {
    pub fn fill(&self) -> Paint {
        match self {
            Primitive::Polygon { fill, .. } | Primitive::Rect { fill, .. } | Primitive::Circle { fill, .. } => *fill,
            Primitive::Path { .. } => Paint::None,
        }
    }

    fn points(&self) -> Vec<Vec2> {
        match self {
            Primitive::Polygon { points, .. } | Primitive::Path { points, .. } => points.clone(),
            Primitive::Rect { min, size, .. } => vec![*min, *min + *size],
            Primitive::Circle { center, radius, .. } => {
                vec![*center - Vec2::new(*radius, *radius), *center + Vec2::new(*radius, *radius)]
            }
        }
    }
}

/// A display list with the world-space window it should fill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub view_min: Vec2,
    pub view_max: Vec2,
    pub items: Vec<Primitive>,
}

impl Fragment {
    pub fn new(view_min: Vec2, view_max: Vec2) -> Self {
        Self {
            view_min,
            view_max,
            items: Vec::new(),
        }
    }

    /// Window fitted around the items with a relative margin.
    pub fn fitted(items: Vec<Primitive>, margin: f64) -> Self {
        let pts: Vec<Vec2> = items.iter().flat_map(Primitive::points).collect();
        let (lo, hi) = match pts.split_first() {
            Some((&first, rest)) => rest.iter().fold((first, first), |(lo, hi), p| {
                (Vec2::new(lo.x.min(p.x), lo.y.min(p.y)), Vec2::new(hi.x.max(p.x), hi.y.max(p.y)))
            }),
            None => (Vec2::ZERO, Vec2::new(1.0, 1.0)),
        };
        let pad = ((hi.x - lo.x).max(hi.y - lo.y) * margin).max(1e-6);
        Self {
            view_min: lo - Vec2::new(pad, pad),
            view_max: hi + Vec2::new(pad, pad),
            items,
        }
    }

    pub fn push(&mut self, p: Primitive) {
        self.items.push(p);
    }

    pub fn primitive_count(&self) -> usize {
        self.items.len()
    }

    /// Palette slots used as fills, sorted (a multiset).
    pub fn palette_multiset(&self) -> Vec<u8> {
        let mut v: Vec<u8> = self
            .items
            .iter()
            .filter_map(|p| match p.fill() {
                Paint::Palette(i) => Some(i),
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PanelRole {
    Stimulus,
    Candidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PanelFormat {
    Svg,
    Png,
}

impl PanelFormat {
    pub fn extension(self) -> &'static str {
        match self {
            PanelFormat::Svg => "svg",
            PanelFormat::Png => "png",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Panel {
    pub role: PanelRole,
    pub format: PanelFormat,
    pub width: u32,
    pub height: u32,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleConfig {
    pub canvas: u32,
    pub palette: String,
    pub stroke_width: f64,
    pub background: Rgb,
}

pub const INK: Rgb = Rgb(0xe8, 0xe8, 0xe8);
pub const SHADE: Rgb = Rgb(0x4a, 0x4f, 0x5a);

impl StyleConfig {
    pub fn new(canvas: u32, palette: &str, stroke_width: f64, background: &str) -> Result<Self, RenderError> {
        let background = Rgb::parse_hex(background).ok_or_else(|| RenderError::Style(format!("bad colour {background:?}")))?;
        let s = Self {
            canvas,
            palette: palette.to_owned(),
            stroke_width,
            background,
        };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<(), RenderError> {
        if self.canvas < 64 {
            return Err(RenderError::Style("canvas must be at least 64 px".into()));
        }
        if !(self.stroke_width.is_finite() && self.stroke_width > 0.0) {
            return Err(RenderError::Style("stroke width must be positive".into()));
        }
        palette::palette(&self.palette).ok_or_else(|| RenderError::UnknownPalette(self.palette.clone()))?;
        Ok(())
    }

    pub fn with_palette(&self, name: &str) -> StyleConfig {
        StyleConfig {
            palette: name.to_owned(),
            ..self.clone()
        }
    }

    pub(crate) fn resolve(&self, paint: Paint, colors: &[Rgb]) -> Result<Option<Rgb>, RenderError> {
        match paint {
            Paint::None => Ok(None),
            Paint::Ink => Ok(Some(INK)),
            Paint::Shade => Ok(Some(SHADE)),
            Paint::Accent(i) => palette::accent(i as usize).map(Some).ok_or(RenderError::AccentIndex(i)),
            Paint::Palette(i) => colors.get(i as usize).copied().map(Some).ok_or_else(|| RenderError::PaletteIndex {
                palette: self.palette.clone(),
                index: i,
                len: colors.len(),
            }),
        }
    }
}

/// Render a fragment to an SVG panel.
pub fn render(fragment: &Fragment, role: PanelRole, style: &StyleConfig) -> Result<Panel, RenderError> {
    let bytes = render_svg(fragment, style)?.into_bytes();
    Ok(Panel {
        role,
        format: PanelFormat::Svg,
        width: style.canvas,
        height: style.canvas,
        bytes,
    })
}
