use resvg::{tiny_skia, usvg};

use super::{Panel, PanelFormat, RenderError};

/// Rasterize an SVG panel to 8-bit RGBA PNG at its declared size.
pub fn rasterize(panel: &Panel) -> Result<Panel, RenderError> {
    if panel.format != PanelFormat::Svg {
        return Err(RenderError::Raster("only SVG panels can be rasterized".into()));
    }
    let tree = usvg::Tree::from_data(&panel.bytes, &usvg::Options::default())
        .map_err(|e| RenderError::Raster(e.to_string()))?;
    let mut pixmap = tiny_skia::Pixmap::new(panel.width, panel.height)
        .ok_or_else(|| RenderError::Raster("zero-sized canvas".into()))?;
    resvg::render(&tree, tiny_skia::Transform::identity(), &mut pixmap.as_mut());
    let bytes = pixmap.encode_png().map_err(|e| RenderError::Raster(e.to_string()))?;
    Ok(Panel {
        role: panel.role,
        format: PanelFormat::Png,
        width: panel.width,
        height: panel.height,
        bytes,
    })
}
