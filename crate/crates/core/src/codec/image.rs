use std::io::Cursor;

use super::Layout;
use crate::{Error, Result};

/// Native-resolution grayscale grid, one byte per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canvas {
    rows: usize,
    cols: usize,
    cells: Vec<u8>,
}

impl Canvas {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.cells[row * self.cols + col] = value;
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [u8] {
        &mut self.cells
    }
}

/// 8-bit RGB raster holding one (energies, observable) pair.
///
/// The native canvas is replicated into `upscale`×`upscale` blocks and
/// padded with black on the right and bottom up to `width`×`height`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingImage {
    layout: Layout,
    width: usize,
    height: usize,
    upscale: usize,
    rgb: Vec<u8>,
}

impl TrainingImage {
    /// Renders `canvas` with grayscale-in-RGB pixels.
    pub fn render(
        layout: Layout,
        canvas: &Canvas,
        upscale: usize,
        resolution: Option<usize>,
    ) -> Result<Self> {
        if upscale == 0 {
            return Err(Error::Image("upscale factor must be positive".into()));
        }
        let (mut width, mut height) = (canvas.cols * upscale, canvas.rows * upscale);
        if let Some(res) = resolution {
            if res < width || res < height {
                return Err(Error::Image(format!(
                    "resolution {res} cannot hold a {width}x{height} raster"
                )));
            }
            width = res;
            height = res;
        }
        let mut rgb = vec![0u8; width * height * 3];
        for y in 0..canvas.rows * upscale {
            let row = &mut rgb[y * width * 3..];
            for x in 0..canvas.cols * upscale {
                let v = canvas.get(y / upscale, x / upscale);
                row[3 * x..3 * x + 3].fill(v);
            }
        }
        Ok(Self {
            layout,
            width,
            height,
            upscale,
            rgb,
        })
    }

    /// Wraps raw RGB bytes, for example decoded from a PNG.
    pub fn from_rgb(
        layout: Layout,
        width: usize,
        height: usize,
        upscale: usize,
        rgb: Vec<u8>,
    ) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::Image(format!(
                "{} bytes for a {width}x{height} RGB raster",
                rgb.len()
            )));
        }
        if upscale == 0 {
            return Err(Error::Image("upscale factor must be positive".into()));
        }
        Ok(Self {
            layout,
            width,
            height,
            upscale,
            rgb,
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn upscale(&self) -> usize {
        self.upscale
    }

    pub fn rgb(&self) -> &[u8] {
        &self.rgb
    }

    pub fn rgb_mut(&mut self) -> &mut [u8] {
        &mut self.rgb
    }

    /// Recovers the native canvas: each cell is the rounded mean over its
    /// block and the three channels, which inverts block replication exactly
    /// and tolerates images that are not perfectly blocky.
    pub fn canvas(&self, rows: usize, cols: usize) -> Result<Canvas> {
        let f = self.upscale;
        if rows * f > self.height || cols * f > self.width {
            return Err(Error::DimensionMismatch(format!(
                "a {rows}x{cols} canvas at upscale {f} does not fit a {}x{} image",
                self.width, self.height
            )));
        }
        let mut canvas = Canvas::new(rows, cols);
        let block = (f * f * 3) as u32;
        for r in 0..rows {
            for c in 0..cols {
                let mut sum = 0u32;
                for y in r * f..(r + 1) * f {
                    let start = (y * self.width + c * f) * 3;
                    sum += self.rgb[start..start + 3 * f].iter().map(|&v| v as u32).sum::<u32>();
                }
                canvas.set(r, c, ((sum + block / 2) / block) as u8);
            }
        }
        Ok(canvas)
    }

    /// 8-bit RGB, non-interlaced PNG with fixed compression and filter
    /// settings and no ancillary chunks.
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        let mut encoder = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_compression(png::Compression::Balanced);
        encoder.set_filter(png::Filter::Sub);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Image(e.to_string()))?;
        writer
            .write_image_data(&self.rgb)
            .map_err(|e| Error::Image(e.to_string()))?;
        writer.finish().map_err(|e| Error::Image(e.to_string()))?;
        Ok(out)
    }

    /// Reads any 8-bit (or expandable) PNG; gray and alpha variants are
    /// converted to RGB.
    pub fn from_png(bytes: &[u8], layout: Layout, upscale: usize) -> Result<Self> {
        let mut decoder = png::Decoder::new(Cursor::new(bytes));
        decoder.set_transformations(png::Transformations::normalize_to_color8());
        let mut reader = decoder.read_info().map_err(|e| Error::Image(e.to_string()))?;
        let size = reader
            .output_buffer_size()
            .ok_or_else(|| Error::Image("PNG too large".into()))?;
        let mut buf = vec![0u8; size];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| Error::Image(e.to_string()))?;
        buf.truncate(info.buffer_size());
        let (w, h) = (info.width as usize, info.height as usize);
        let channels = match info.color_type {
            png::ColorType::Grayscale => 1,
            png::ColorType::GrayscaleAlpha => 2,
            png::ColorType::Rgb => 3,
            png::ColorType::Rgba => 4,
            png::ColorType::Indexed => {
                return Err(Error::Image("palette PNG was not expanded".into()))
            }
        };
        let rgb = if channels == 3 {
            buf
        } else {
            buf.chunks_exact(channels)
                .flat_map(|px| {
                    if channels <= 2 {
                        [px[0]; 3]
                    } else {
                        [px[0], px[1], px[2]]
                    }
                })
                .collect()
        };
        Self::from_rgb(layout, w, h, upscale, rgb)
    }
}
