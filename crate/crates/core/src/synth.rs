//! Synthetic masks, probability videos and datasets with known ground truth.
//!
//! Class areas are hit exactly by pixel counting; only the placement is
//! random. Blobs are grown from seeded starting pixels by random frontier
//! expansion.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{CoverageReport, MaskRaster, ProbabilityRaster, SegClass};
use crate::dataset::codec::write_mask;
use crate::dataset::{DatasetManifest, ImageRecord, Media};
use crate::error::{IoContext, LofError, Result};
use crate::rules::{classify_lof, LofRank, ThresholdConfig};
use crate::temporal::FrameSequence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    /// Percent of hull.
    pub slime_pct: f64,
    /// Percent of hull.
    pub macro_pct: f64,
    /// Fraction of the whole frame.
    pub water_fraction: f64,
    pub blob_count: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LofError::Invalid(m));
        if self.width == 0 || self.height == 0 {
            return bad("zero-sized raster".into());
        }
        if !(0.0..=100.0).contains(&self.slime_pct) || !(0.0..=100.0).contains(&self.macro_pct) {
            return bad("coverage targets must lie in [0,100]".into());
        }
        if self.slime_pct + self.macro_pct > 100.0 {
            return bad("slime + macro targets exceed 100".into());
        }
        if !(0.0..1.0).contains(&self.water_fraction) {
            return bad("water_fraction must lie in [0,1)".into());
        }
        Ok(())
    }

    /// Pixel counts (water, clean, slime, macro) realizing the targets.
    pub fn pixel_counts(&self) -> Result<[usize; 4]> {
        self.validate()?;
        let total = self.width * self.height;
        let water = (self.water_fraction * total as f64).round() as usize;
        let hull = total - water.min(total);
        if hull == 0 {
            return Err(LofError::Invalid(format!(
                "water fraction {} leaves no hull pixels at {}x{}",
                self.water_fraction, self.width, self.height
            )));
        }
        let count = |pct: f64, name: &str| -> Result<usize> {
            let n = (pct / 100.0 * hull as f64).round() as usize;
            if pct > 0.0 && n == 0 {
                return Err(LofError::Invalid(format!(
                    "{name} target {pct}% is unsatisfiable on a {hull}-pixel hull"
                )));
            }
            Ok(n)
        };
        let macro_n = count(self.macro_pct, "macro")?;
        let slime_n = count(self.slime_pct, "slime")?;
        if macro_n + slime_n > hull {
            return Err(LofError::Invalid(format!(
                "rounded targets ({slime_n} slime + {macro_n} macro) exceed the {hull}-pixel hull"
            )));
        }
        Ok([water, hull - macro_n - slime_n, slime_n, macro_n])
    }
}

/// Builds a mask realizing the requested percentages exactly, with its coverage report.
pub fn generate_mask(spec: &SynthSpec) -> Result<(MaskRaster, CoverageReport)> {
    let counts = spec.pixel_counts()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width, spec.height);
    let mut cells: Vec<Option<SegClass>> = vec![None; w * h];
    for class in [SegClass::Water, SegClass::Macrofouling, SegClass::Slime] {
        grow_blobs(&mut cells, w, h, class, counts[class.index()], spec.blob_count.max(1), &mut rng);
    }
    let labels = cells
        .into_iter()
        .map(|c| c.unwrap_or(SegClass::Clean))
        .collect();
    let mask = MaskRaster::new(w, h, labels)?;
    let report = CoverageReport::from_areas(counts.map(|c| c as f64))?;
    Ok((mask, report))
}

fn grow_blobs(
    cells: &mut [Option<SegClass>],
    w: usize,
    h: usize,
    class: SegClass,
    mut remaining: usize,
    blobs: usize,
    rng: &mut ChaCha8Rng,
) {
    if remaining == 0 {
        return;
    }
    let mut free: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].is_none()).collect();
    free.shuffle(rng);
    let mut next_seed = 0usize;
    let mut queued = vec![false; cells.len()];
    let mut frontier: Vec<usize> = Vec::new();
    let mut seed_from_free = |frontier: &mut Vec<usize>, queued: &mut Vec<bool>, cells: &[Option<SegClass>]| {
        while next_seed < free.len() {
            let i = free[next_seed];
            next_seed += 1;
            if cells[i].is_none() && !queued[i] {
                queued[i] = true;
                frontier.push(i);
                return true;
            }
        }
        false
    };
    for _ in 0..blobs.min(remaining) {
        seed_from_free(&mut frontier, &mut queued, cells);
    }
    while remaining > 0 {
        if frontier.is_empty() && !seed_from_free(&mut frontier, &mut queued, cells) {
            break;
        }
        let pick = rng.random_range(0..frontier.len());
        let i = frontier.swap_remove(pick);
        if cells[i].is_some() {
            continue;
        }
        cells[i] = Some(class);
        remaining -= 1;
        let (x, y) = (i % w, i / w);
        let mut push = |j: usize| {
            if cells[j].is_none() && !queued[j] {
                queued[j] = true;
                frontier.push(j);
            }
        };
        if x > 0 {
            push(i - 1);
        }
        if x + 1 < w {
            push(i + 1);
        }
        if y > 0 {
            push(i - w);
        }
        if y + 1 < h {
            push(i + w);
        }
    }
}

/// A noisy probability video around a fixed base mask. Each frame's pixel
/// vector is `one_hot + r * e` renormalized, with `e` i.i.d. Exp(1) per class
/// and `r = noise / (1 - noise)`.
pub fn generate_video(
    spec: &SynthSpec,
    frames: usize,
    noise_level: f64,
) -> Result<(FrameSequence, MaskRaster)> {
    if frames < 2 {
        return Err(LofError::Invalid("a video needs at least two frames".into()));
    }
    if !(0.0..1.0).contains(&noise_level) {
        return Err(LofError::Invalid(format!("noise level {noise_level} outside [0,1)")));
    }
    let (base, _) = generate_mask(spec)?;
    let scale = noise_level / (1.0 - noise_level);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5EED_F00D);
    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        let probs = base
            .labels()
            .iter()
            .map(|c| {
                let mut v = [0.0f64; 4];
                v[c.index()] = 1.0;
                if scale > 0.0 {
                    for x in v.iter_mut() {
                        let e: f64 = rng.sample(Exp1);
                        *x += scale * e;
                    }
                }
                let sum: f64 = v.iter().sum();
                v.map(|x| x / sum)
            })
            .collect();
        out.push(ProbabilityRaster::new(base.width(), base.height(), probs)?);
    }
    Ok((FrameSequence::new(out, None)?, base))
}

/// Side length of generated dataset masks.
pub const DATASET_MASK_SIZE: usize = 32;

/// Render colors for the RGB stand-in images (Water, Clean, Slime, Macro).
const RENDER_COLORS: [[u8; 3]; 4] = [[24, 64, 112], [190, 188, 176], [112, 132, 64], [92, 60, 42]];

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub manifest: DatasetManifest,
    pub manifest_path: PathBuf,
    /// Exact coverage of each record's mask, in manifest order.
    pub coverage: Vec<CoverageReport>,
}

fn record_seed(seed: u64, index: usize, attempt: u64) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ attempt.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Chooses coverage targets for a label that sit well inside its interval.
fn spec_for_label(label: LofRank, rng: &mut ChaCha8Rng, seed: u64) -> SynthSpec {
    let macro_pct = match label.value() {
        0 | 1 => 0.0,
        2 => rng.random_range(1.0..4.5),
        3 => rng.random_range(6.0..15.0),
        4 => rng.random_range(17.0..39.0),
        _ => rng.random_range(42.0..95.0),
    };
    let slime_pct = match label.value() {
        0 => 0.0,
        1 => rng.random_range(5.0..95.0),
        _ => rng.random_range(0.0..(100.0 - macro_pct) * 0.8),
    };
    SynthSpec {
        width: DATASET_MASK_SIZE,
        height: DATASET_MASK_SIZE,
        slime_pct,
        macro_pct,
        water_fraction: rng.random_range(0.1..0.5),
        blob_count: rng.random_range(1..=4),
        seed,
    }
}

fn synth_record(label: LofRank, index: usize, seed: u64) -> Result<(MaskRaster, CoverageReport)> {
    let cfg = ThresholdConfig::default();
    for attempt in 0..64 {
        let s = record_seed(seed, index, attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let spec = spec_for_label(label, &mut rng, s);
        // Targets too fine for the hull resolution are redrawn.
        let Ok((mask, report)) = generate_mask(&spec) else {
            continue;
        };
        if classify_lof(report.observation(), &cfg)? == label {
            return Ok((mask, report));
        }
    }
    Err(LofError::Invalid(format!("could not synthesize a LoF {label} mask")))
}

/// Writes `manifest.jsonl`, `masks/<id>.png` and `images/<id>.png` under
/// `out_dir`. Every mask classifies to its label under the default thresholds.
pub fn generate_dataset(class_counts: [usize; 6], seed: u64, out_dir: &Path) -> Result<SyntheticDataset> {
    if class_counts.iter().sum::<usize>() == 0 {
        return Err(LofError::Invalid("class counts sum to zero".into()));
    }
    let masks_dir = out_dir.join("masks");
    let images_dir = out_dir.join("images");
    for d in [&masks_dir, &images_dir] {
        fs::create_dir_all(d).io_context(|| format!("creating {}", d.display()))?;
    }
    let mut plan = Vec::new();
    for (label, &n) in class_counts.iter().enumerate() {
        for k in 0..n {
            plan.push((LofRank::new(label as u8)?, format!("lof{label}-{k:04}")));
        }
    }
    let built = plan
        .par_iter()
        .enumerate()
        .map(|(index, (label, id))| {
            let (mask, report) = synth_record(*label, index, seed)?;
            let mask_rel = PathBuf::from("masks").join(format!("{id}.png"));
            let image_rel = PathBuf::from("images").join(format!("{id}.png"));
            write_mask(&mask, &out_dir.join(&mask_rel))?;
            let render = image::RgbImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
                image::Rgb(RENDER_COLORS[mask.get(x as usize, y as usize).index()])
            });
            render.save_with_format(out_dir.join(&image_rel), image::ImageFormat::Png)?;
            let record = ImageRecord {
                id: id.clone(),
                path: image_rel,
                lof: *label,
                source: "synthetic".into(),
                media: Media::Still,
                mask: Some(mask_rel),
            };
            Ok((record, report))
        })
        .collect::<Result<Vec<_>>>()?;
    let (records, coverage): (Vec<_>, Vec<_>) = built.into_iter().unzip();
    let manifest = DatasetManifest::new(records)?;
    let manifest_path = out_dir.join("manifest.jsonl");
    manifest.write(&manifest_path)?;
    Ok(SyntheticDataset {
        manifest,
        manifest_path,
        coverage,
    })
}
