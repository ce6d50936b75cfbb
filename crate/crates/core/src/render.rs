//! Plain line plots of a series: 805×124 raster (PNG) or the same geometry as
//! SVG. Anomalies are never marked and nothing is filled.

use crate::error::{Error, Result};

pub const WIDTH: usize = 805;
pub const HEIGHT: usize = 124;

pub const BACKGROUND: [u8; 3] = [255, 255, 255];
pub const LINE: [u8; 3] = [31, 119, 180];
pub const AXIS: [u8; 3] = [96, 96, 96];

const LEFT: usize = 8;
const RIGHT: usize = 4;
const TOP: usize = 4;
const BOTTOM: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB.
    pub pixels: Vec<[u8; 3]>,
}

impl Raster {
    fn new(width: usize, height: usize) -> Self {
        Raster {
            width,
            height,
            pixels: vec![BACKGROUND; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    fn set(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            let i = y as usize * self.width + x as usize;
            self.pixels[i] = c;
        }
    }

    /// Integer Bresenham segment.
    fn line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: [u8; 3]) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.set(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }
}

/// Pixel coordinates of each sample inside the plot area.
fn plot_points(values: &[f64]) -> Vec<(f64, f64)> {
    let (x0, x1) = (LEFT as f64, (WIDTH - 1 - RIGHT) as f64);
    let (y_top, y_bot) = (TOP as f64, (HEIGHT - 1 - BOTTOM) as f64);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = values.len();
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let x = if n > 1 { x0 + (x1 - x0) * i as f64 / (n - 1) as f64 } else { x0 };
            let y = if hi > lo {
                y_bot - (y_bot - y_top) * (v - lo) / (hi - lo)
            } else {
                (y_top + y_bot) / 2.0
            };
            (x, y)
        })
        .collect()
}

fn check(values: &[f64]) -> Result<()> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("rendering needs a non-empty, finite series"));
    }
    Ok(())
}

pub fn rasterize(values: &[f64]) -> Result<Raster> {
    check(values)?;
    let mut r = Raster::new(WIDTH, HEIGHT);
    let axis_y = (HEIGHT - BOTTOM / 2) as i64;
    let axis_x = (LEFT / 2) as i64;
    r.line((axis_x, TOP as i64), (axis_x, axis_y), AXIS);
    r.line((axis_x, axis_y), ((WIDTH - RIGHT) as i64, axis_y), AXIS);
    let pts: Vec<(i64, i64)> = plot_points(values)
        .into_iter()
        .map(|(x, y)| (x.round() as i64, y.round() as i64))
        .collect();
    if pts.len() == 1 {
        r.set(pts[0].0, pts[0].1, LINE);
    }
    for w in pts.windows(2) {
        r.line(w[0], w[1], LINE);
    }
    Ok(r)
}

pub fn encode_png(raster: &Raster) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, raster.width as u32, raster.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| Error::input(format!("png header: {e}")))?;
        let data: Vec<u8> = raster.pixels.iter().flatten().copied().collect();
        w.write_image_data(&data)
            .map_err(|e| Error::input(format!("png data: {e}")))?;
    }
    Ok(out)
}

pub fn render_png(values: &[f64]) -> Result<Vec<u8>> {
    encode_png(&rasterize(values)?)
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

pub fn render_svg(values: &[f64]) -> Result<String> {
    check(values)?;
    let points = plot_points(values)
        .iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ");
    let axis_y = HEIGHT - BOTTOM / 2;
    let axis_x = LEFT / 2;
    Ok(format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" style=\"background:{bg}\">\n",
            "<polyline points=\"{ax},{top} {ax},{ay} {right},{ay}\" fill=\"none\" stroke=\"{axis}\" stroke-width=\"1\"/>\n",
            "<polyline points=\"{pts}\" fill=\"none\" stroke=\"{line}\" stroke-width=\"1\"/>\n",
            "</svg>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        bg = hex(BACKGROUND),
        ax = axis_x,
        top = TOP,
        ay = axis_y,
        right = WIDTH - RIGHT,
        axis = hex(AXIS),
        pts = points,
        line = hex(LINE),
    ))
}
