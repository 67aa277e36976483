//! PNG codecs for hard masks and probability rasters.
//!
//! Masks are 8-bit indexed PNGs with a four-entry palette in class order.
//! Truecolor PNGs are also read, as long as every pixel uses a palette color.
//! Probability rasters are 16-bit RGBA PNGs whose four channels hold the
//! Water, Clean, Slime and Macrofouling probabilities as `round(p * 65535)`.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use crate::coverage::{MaskRaster, ProbabilityRaster, SegClass};
use crate::error::{IoContext, LofError, Result};
use crate::preprocess::write_png;

/// Palette colors indexed by `SegClass`.
pub const PALETTE: [[u8; 3]; 4] = [
    [0, 0, 255],   // Water
    [255, 255, 0], // Clean
    [0, 128, 0],   // Slime
    [128, 0, 128], // Macrofouling
];

/// Dequantization slack allowed on a decoded probability vector's sum.
pub const PROB_QUANT_TOLERANCE: f64 = 4.0 / 65535.0;

pub fn class_color(class: SegClass) -> [u8; 3] {
    PALETTE[class.index()]
}

pub fn encode_mask(mask: &MaskRaster) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, mask.width() as u32, mask.height() as u32);
        encoder.set_color(png::ColorType::Indexed);
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_palette(PALETTE.concat());
        let mut writer = encoder.write_header()?;
        let data: Vec<u8> = mask.labels().iter().map(|c| c.index() as u8).collect();
        writer.write_image_data(&data)?;
        writer.finish()?;
    }
    Ok(out)
}

pub fn write_mask(mask: &MaskRaster, path: &Path) -> Result<()> {
    fs::write(path, encode_mask(mask)?).io_context(|| format!("writing {}", path.display()))
}

pub fn decode_mask(bytes: &[u8]) -> Result<MaskRaster> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info()?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf)?;
    let channels = match info.color_type {
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Indexed => {
            return Err(LofError::MaskDecode("palette was not expanded".into()))
        }
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let mut labels = Vec::with_capacity(w * h);
    // color -> (pixel count, first offending pixel)
    let mut unknown: BTreeMap<[u8; 3], (usize, (usize, usize))> = BTreeMap::new();
    for (i, px) in buf[..info.buffer_size()].chunks_exact(channels).enumerate() {
        let rgb = if channels >= 3 {
            [px[0], px[1], px[2]]
        } else {
            [px[0]; 3]
        };
        match PALETTE.iter().position(|c| *c == rgb) {
            Some(idx) => labels.push(SegClass::ALL[idx]),
            None => {
                unknown.entry(rgb).or_insert((0, (i % w, i / w))).0 += 1;
                labels.push(SegClass::Water);
            }
        }
    }
    if !unknown.is_empty() {
        let listed: Vec<String> = unknown
            .iter()
            .map(|(c, (n, (x, y)))| {
                format!("({},{},{}) at {n} pixel(s), first ({x},{y})", c[0], c[1], c[2])
            })
            .collect();
        return Err(LofError::MaskDecode(format!(
            "unregistered colors: {}",
            listed.join("; ")
        )));
    }
    MaskRaster::new(w, h, labels)
}

pub fn read_mask(path: &Path) -> Result<MaskRaster> {
    let bytes = fs::read(path).io_context(|| format!("reading {}", path.display()))?;
    decode_mask(&bytes).map_err(|e| match e {
        LofError::MaskDecode(msg) => LofError::MaskDecode(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Renders a mask as RGB using the palette colors.
pub fn colorize_mask(mask: &MaskRaster) -> image::RgbImage {
    image::RgbImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        image::Rgb(class_color(mask.get(x as usize, y as usize)))
    })
}

pub fn write_probabilities(raster: &ProbabilityRaster, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(raster.probs().len() * 8);
    for p in raster.probs() {
        for v in p {
            let q = (v * 65535.0).round() as u16;
            bytes.extend_from_slice(&q.to_be_bytes());
        }
    }
    write_png(
        path,
        raster.width() as u32,
        raster.height() as u32,
        png::ColorType::Rgba,
        png::BitDepth::Sixteen,
        &bytes,
    )
}

/// Reads a probability raster, checks each pixel sums to one within the
/// quantization bound, then renormalizes.
pub fn read_probabilities(path: &Path) -> Result<ProbabilityRaster> {
    let f = fs::File::open(path).io_context(|| format!("opening {}", path.display()))?;
    let mut reader = png::Decoder::new(BufReader::new(f)).read_info()?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf)?;
    if info.color_type != png::ColorType::Rgba || info.bit_depth != png::BitDepth::Sixteen {
        return Err(LofError::InvalidRaster(format!(
            "{}: expected 16-bit RGBA, found {:?} {:?}",
            path.display(),
            info.color_type,
            info.bit_depth
        )));
    }
    let mut probs = Vec::with_capacity((info.width * info.height) as usize);
    for (i, px) in buf[..info.buffer_size()].chunks_exact(8).enumerate() {
        let mut p = [0.0f64; 4];
        for c in 0..4 {
            p[c] = u16::from_be_bytes([px[2 * c], px[2 * c + 1]]) as f64 / 65535.0;
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROB_QUANT_TOLERANCE {
            return Err(LofError::InvalidRaster(format!(
                "{}: pixel {i} sums to {sum}",
                path.display()
            )));
        }
        probs.push(p.map(|v| v / sum));
    }
    ProbabilityRaster::new(info.width as usize, info.height as usize, probs)
}
