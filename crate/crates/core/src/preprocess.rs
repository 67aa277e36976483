//! Auxiliary input channels: HSV planes and an edge-magnitude plane, stacked
//! with the normalized RGB planes for downstream trainers.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

pub use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{IoContext, LofError, Result};

/// A single-channel plane of `f64` values in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Reads with replicate padding.
    fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }
}

/// Hue, saturation and value of one pixel. Hue is in `[0,1)`.
pub fn rgb_pixel_to_hsv(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta == 0.0 {
        return [0.0, s, v];
    }
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let h = sector / 6.0;
    [if h >= 1.0 { 0.0 } else { h }, s, v]
}

/// Inverse hexcone conversion, returning channel values in `[0,1]`.
pub fn hsv_pixel_to_rgb(hsv: [f64; 3]) -> [f64; 3] {
    let [h, s, v] = hsv;
    let c = v * s;
    let hp = (h * 6.0).rem_euclid(6.0);
    let x = c * (1.0 - ((hp % 2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// Decodes any supported image file to 8-bit RGB.
pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path)?.to_rgb8())
}

pub fn rgb_to_hsv(img: &RgbImage) -> [Plane; 3] {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut planes = [Plane::zeros(w, h), Plane::zeros(w, h), Plane::zeros(w, h)];
    for (i, px) in img.pixels().enumerate() {
        let hsv = rgb_pixel_to_hsv(px.0);
        for (plane, v) in planes.iter_mut().zip(hsv) {
            plane.data[i] = v;
        }
    }
    planes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeOperator {
    #[default]
    Sobel,
    Laplacian,
}

impl EdgeOperator {
    /// Largest response magnitude attainable on a `[0,1]` luma plane.
    /// For Sobel the maximum of `sqrt(gx^2 + gy^2)` sits at a vertex of the
    /// unit cube, e.g. gx = 4, gy = 2.
    pub fn max_response(self) -> f64 {
        match self {
            EdgeOperator::Sobel => 20f64.sqrt(),
            EdgeOperator::Laplacian => 4.0,
        }
    }
}

impl FromStr for EdgeOperator {
    type Err = LofError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sobel" => Ok(EdgeOperator::Sobel),
            "laplacian" => Ok(EdgeOperator::Laplacian),
            other => Err(LofError::Invalid(format!("unknown edge operator `{other}`"))),
        }
    }
}

/// BT.601 luma in `[0,1]`. The weights sum to exactly 1000 so white maps to 1.
pub fn luma(img: &RgbImage) -> Plane {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img
        .pixels()
        .map(|p| {
            let [r, g, b] = p.0.map(|c| c as u32);
            (299 * r + 587 * g + 114 * b) as f64 / 255_000.0
        })
        .collect();
    Plane {
        width: w,
        height: h,
        data,
    }
}

pub fn edge_map(img: &RgbImage, operator: EdgeOperator) -> Result<Plane> {
    edge_map_luma(&luma(img), operator)
}

/// Edge magnitude of a luma plane, normalized to `[0,1]`, replicate-padded.
pub fn edge_map_luma(luma: &Plane, operator: EdgeOperator) -> Result<Plane> {
    if luma.width < 3 || luma.height < 3 {
        return Err(LofError::InvalidImage(format!(
            "{}x{} image is smaller than the 3x3 kernel",
            luma.width, luma.height
        )));
    }
    let norm = operator.max_response();
    let mut out = Plane::zeros(luma.width, luma.height);
    for y in 0..luma.height as isize {
        for x in 0..luma.width as isize {
            let p = |dx: isize, dy: isize| luma.get_clamped(x + dx, y + dy);
            let magnitude = match operator {
                EdgeOperator::Sobel => {
                    let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1))
                        - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
                    let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1))
                        - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
                    (gx * gx + gy * gy).sqrt()
                }
                EdgeOperator::Laplacian => {
                    (p(0, -1) + p(-1, 0) + p(1, 0) + p(0, 1) - 4.0 * p(0, 0)).abs()
                }
            };
            out.data[y as usize * luma.width + x as usize] = (magnitude / norm).min(1.0);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelName {
    R,
    G,
    B,
    H,
    S,
    V,
    E,
}

impl ChannelName {
    /// Red, green, blue, the three HSV planes, then edges.
    pub const FULL: [ChannelName; 7] = [
        ChannelName::R,
        ChannelName::G,
        ChannelName::B,
        ChannelName::H,
        ChannelName::S,
        ChannelName::V,
        ChannelName::E,
    ];

    pub fn parse_list(spec: &str) -> Result<Vec<ChannelName>> {
        spec.split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<Vec<_>>>()
    }
}

impl FromStr for ChannelName {
    type Err = LofError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "R" => ChannelName::R,
            "G" => ChannelName::G,
            "B" => ChannelName::B,
            "H" => ChannelName::H,
            "S" => ChannelName::S,
            "V" => ChannelName::V,
            "E" => ChannelName::E,
            other => return Err(LofError::UnknownChannel(other.to_string())),
        })
    }
}

impl fmt::Display for ChannelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStack {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<ChannelName>,
    pub planes: Vec<Plane>,
}

pub fn stack_channels(
    img: &RgbImage,
    spec: &[ChannelName],
    edge: EdgeOperator,
) -> Result<ChannelStack> {
    if spec.is_empty() {
        return Err(LofError::Invalid("empty channel list".into()));
    }
    for (i, name) in spec.iter().enumerate() {
        if spec[..i].contains(name) {
            return Err(LofError::Invalid(format!("channel {name} requested twice")));
        }
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut hsv: Option<[Plane; 3]> = None;
    let mut planes = Vec::with_capacity(spec.len());
    for name in spec {
        let plane = match name {
            ChannelName::R | ChannelName::G | ChannelName::B => {
                let c = *name as usize;
                Plane {
                    width: w,
                    height: h,
                    data: img.pixels().map(|p| p.0[c] as f64 / 255.0).collect(),
                }
            }
            ChannelName::H | ChannelName::S | ChannelName::V => {
                let planes = hsv.get_or_insert_with(|| rgb_to_hsv(img));
                planes[*name as usize - ChannelName::H as usize].clone()
            }
            ChannelName::E => edge_map(img, edge)?,
        };
        planes.push(plane);
    }
    Ok(ChannelStack {
        width: w,
        height: h,
        channels: spec.to_vec(),
        planes,
    })
}

/// Sidecar record written next to exported planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackMetadata {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<ChannelName>,
    pub files: Vec<String>,
    pub encoding: String,
    pub edge_operator: EdgeOperator,
}

pub const STACK_METADATA_FILE: &str = "channels.json";

/// Writes one 16-bit grayscale PNG per plane (`value = round(v * 65535)`)
/// into `dir`, plus a `channels.json` sidecar naming the planes in order.
pub fn export_stack(stack: &ChannelStack, edge: EdgeOperator, dir: &Path) -> Result<StackMetadata> {
    fs::create_dir_all(dir).io_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    for (i, (name, plane)) in stack.channels.iter().zip(&stack.planes).enumerate() {
        let file = format!("{i:02}_{name}.png");
        let mut bytes = Vec::with_capacity(plane.data.len() * 2);
        for v in &plane.data {
            let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
            bytes.extend_from_slice(&q.to_be_bytes());
        }
        write_png(
            &dir.join(&file),
            plane.width as u32,
            plane.height as u32,
            png::ColorType::Grayscale,
            png::BitDepth::Sixteen,
            &bytes,
        )?;
        files.push(file);
    }
    let meta = StackMetadata {
        width: stack.width,
        height: stack.height,
        channels: stack.channels.clone(),
        files,
        encoding: "png16-gray".into(),
        edge_operator: edge,
    };
    let json = serde_json::to_string_pretty(&meta)?;
    fs::write(dir.join(STACK_METADATA_FILE), json + "\n")
        .io_context(|| format!("writing {}", dir.display()))?;
    Ok(meta)
}

/// Reads a stack written by [`export_stack`].
pub fn import_stack(dir: &Path) -> Result<ChannelStack> {
    let meta_path = dir.join(STACK_METADATA_FILE);
    let text = fs::read_to_string(&meta_path)
        .io_context(|| format!("reading {}", meta_path.display()))?;
    let meta: StackMetadata = serde_json::from_str(&text)?;
    let mut planes = Vec::new();
    for file in &meta.files {
        let path = dir.join(file);
        let f = fs::File::open(&path).io_context(|| format!("opening {}", path.display()))?;
        let mut reader = png::Decoder::new(std::io::BufReader::new(f)).read_info()?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader.next_frame(&mut buf)?;
        if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen
        {
            return Err(LofError::InvalidRaster(format!(
                "{} is not a 16-bit grayscale plane",
                path.display()
            )));
        }
        let data = buf[..info.buffer_size()]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 65535.0)
            .collect();
        planes.push(Plane {
            width: info.width as usize,
            height: info.height as usize,
            data,
        });
    }
    Ok(ChannelStack {
        width: meta.width,
        height: meta.height,
        channels: meta.channels,
        planes,
    })
}

pub(crate) fn write_png(
    path: &Path,
    width: u32,
    height: u32,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<()> {
    let file = fs::File::create(path).io_context(|| format!("creating {}", path.display()))?;
    let mut encoder = png::Encoder::new(std::io::BufWriter::new(file), width, height);
    encoder.set_color(color);
    encoder.set_depth(depth);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(data)?;
    writer.finish()?;
    Ok(())
}
