//! Deterministic top-down rasterization of scenes.
//!
//! Table point `(x, y)` lands on pixel column `round(x * (width - 1))` and
//! row `round((1 - y) * (height - 1))`, so objects farther from the viewer
//! appear nearer the top of the image.

mod font;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ImageEncoder, Rgb, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Shape;
use crate::scene::{Point, Scene};

const OUTLINE: f64 = 2.0;
const LABEL_COLOR: [u8; 3] = [25, 25, 25];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub width: u32,
    pub height: u32,
    pub background: [u8; 3],
    pub glyph_size: u32,
    pub annotate: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            background: [226, 218, 200],
            glyph_size: 40,
            annotate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("image must be at least 64x64 pixels, got {0}x{1}")]
    TooSmall(u32, u32),
    #[error("glyph size must be positive")]
    EmptyGlyph,
    #[error("png encoding failed: {0}")]
    Encode(String),
    #[error("png decoding failed: {0}")]
    Decode(String),
}

/// Pixel (column, row) of a table point.
pub fn to_pixel(p: Point, width: u32, height: u32) -> (u32, u32) {
    let p = p.clamped();
    let col = (p.x * f64::from(width - 1)).round() as u32;
    let row = ((1.0 - p.y) * f64::from(height - 1)).round() as u32;
    (col, row)
}

pub fn render_scene(scene: &Scene, options: &RenderOptions) -> Result<RgbImage, RenderError> {
    if options.width < 64 || options.height < 64 {
        return Err(RenderError::TooSmall(options.width, options.height));
    }
    if options.glyph_size == 0 {
        return Err(RenderError::EmptyGlyph);
    }
    let mut img = RgbImage::from_pixel(options.width, options.height, Rgb(options.background));
    let radius = f64::from(options.glyph_size) / 2.0;

    for obj in &scene.objects {
        let (col, row) = to_pixel(obj.position, options.width, options.height);
        let fill = obj.color.rgb();
        draw_glyph(&mut img, obj.shape, col, row, radius, fill);
    }
    if options.annotate {
        for obj in &scene.objects {
            let (col, row) = to_pixel(obj.position, options.width, options.height);
            let top = row as i64 + radius.ceil() as i64 + 3;
            draw_label(&mut img, &obj.name, col as i64, top);
        }
    }
    Ok(img)
}

fn darken(c: [u8; 3]) -> [u8; 3] {
    c.map(|v| (u16::from(v) * 9 / 20) as u8)
}

fn put(img: &mut RgbImage, x: i64, y: i64, color: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, Rgb(color));
    }
}

fn draw_glyph(img: &mut RgbImage, shape: Shape, col: u32, row: u32, radius: f64, fill: [u8; 3]) {
    let edge = darken(fill);
    let reach = radius.ceil() as i64 + 1;
    let (cx, cy) = (i64::from(col), i64::from(row));
    for py in cy - reach..=cy + reach {
        for px in cx - reach..=cx + reach {
            let dx = (px - cx) as f64;
            let dy = (py - cy) as f64;
            if shape_contains(shape, dx, dy, radius - OUTLINE) {
                put(img, px, py, fill);
            } else if shape_contains(shape, dx, dy, radius) {
                put(img, px, py, edge);
            }
        }
    }
    if shape == Shape::Cylinder {
        let ring = radius * 0.55;
        for py in cy - reach..=cy + reach {
            for px in cx - reach..=cx + reach {
                let d = ((px - cx) as f64).hypot((py - cy) as f64);
                if (d - ring).abs() <= OUTLINE * 0.75 {
                    put(img, px, py, edge);
                }
            }
        }
    }
}

/// Whether pixel offset `(dx, dy)` (rows grow downward) lies inside `shape`
/// drawn at nominal radius `r`.
fn shape_contains(shape: Shape, dx: f64, dy: f64, r: f64) -> bool {
    if r <= 0.0 {
        return false;
    }
    match shape {
        Shape::Sphere | Shape::Cylinder => dx * dx + dy * dy <= r * r,
        Shape::Cube => {
            let half = r * 0.8;
            dx.abs() <= half && dy.abs() <= half
        }
        Shape::Box => {
            let (hw, hh, rc) = (r, r * 0.7, r * 0.3);
            if dx.abs() > hw || dy.abs() > hh {
                return false;
            }
            let qx = dx.abs() - (hw - rc);
            let qy = dy.abs() - (hh - rc);
            !(qx > 0.0 && qy > 0.0) || qx * qx + qy * qy <= rc * rc
        }
        Shape::Triangle => point_in_polygon(dx, dy, &regular_star(3, r, r)),
        Shape::Star => point_in_polygon(dx, dy, &regular_star(5, r, r * 0.45)),
    }
}

/// Vertices of a star with `points` tips pointing up; equal radii give a
/// regular polygon.
fn regular_star(points: usize, outer: f64, inner: f64) -> Vec<(f64, f64)> {
    let step = std::f64::consts::PI / points as f64;
    let start = -std::f64::consts::FRAC_PI_2;
    if outer == inner {
        return (0..points)
            .map(|k| {
                let a = start + 2.0 * step * k as f64;
                (outer * a.cos(), outer * a.sin())
            })
            .collect();
    }
    (0..2 * points)
        .map(|k| {
            let a = start + step * k as f64;
            let r = if k % 2 == 0 { outer } else { inner };
            (r * a.cos(), r * a.sin())
        })
        .collect()
}

fn point_in_polygon(x: f64, y: f64, poly: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn draw_label(img: &mut RgbImage, text: &str, center_col: i64, top: i64) {
    let left = center_col - i64::from(font::text_width(text, 1)) / 2;
    let mut x = left;
    for ch in text.chars() {
        if let Some(rows) = font::glyph(ch) {
            for (ry, bits) in rows.iter().take(font::GLYPH_HEIGHT as usize).enumerate() {
                for rx in 0..font::GLYPH_WIDTH {
                    if bits & (1 << (font::GLYPH_WIDTH - 1 - rx)) != 0 {
                        put(img, x + i64::from(rx), top + ry as i64, LABEL_COLOR);
                    }
                }
            }
        }
        x += i64::from(font::GLYPH_WIDTH + 1);
    }
}

/// PNG bytes with fixed compression and filter settings.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::new();
    let encoder =
        PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::NoFilter);
    encoder
        .write_image(img.as_raw(), img.width(), img.height(), image::ExtendedColorType::Rgb8)
        .map_err(|e| RenderError::Encode(e.to_string()))?;
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<RgbImage, RenderError> {
    image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map(|img| img.to_rgb8())
        .map_err(|e| RenderError::Decode(e.to_string()))
}

/// Renders and encodes in one step.
pub fn render_png(scene: &Scene, options: &RenderOptions) -> Result<Vec<u8>, RenderError> {
    encode_png(&render_scene(scene, options)?)
}
