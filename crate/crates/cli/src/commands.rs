use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use lof_core::coverage::CoverageBasis;
use lof_core::dataset::{
    dataset_stats, load_manifest, load_predictions, make_split, read_mask, read_probabilities,
    write_mask, write_predictions, write_probabilities, DatasetManifest, PredictionRecord,
    SplitSpec,
};
use lof_core::eval::{emit_report, load_report, report::render_markdown, truth_labels};
use lof_core::llm::read_journal;
use lof_core::preprocess::{export_stack, load_rgb, stack_channels, ChannelName};
use lof_core::{
    classify_lof, compute_coverage, compute_coverage_soft, compute_metrics, coverage_distribution,
    flip_rate, generate_dataset, generate_video, smooth_sequence, CoverageReport, FrameSequence,
    LofError, ScoredPrediction, SynthSpec, ThresholdConfig,
};

use crate::args::*;
use crate::run_config::{write_echo, OutputKind};

pub fn stats(a: StatsArgs) -> Result<()> {
    let m = load_manifest(&a.manifest)?;
    let s = dataset_stats(&m);
    for (rank, n) in s.counts.iter().enumerate() {
        println!("LoF {rank}\t{n}");
    }
    println!("total\t{}", s.total);
    if let Some(out) = &a.out {
        fs::write(out, serde_json::to_string_pretty(&s)? + "\n")
            .with_context(|| format!("writing {}", out.display()))?;
        write_echo("stats", &a, out, OutputKind::File)?;
    }
    Ok(())
}

pub fn split(a: SplitArgs) -> Result<()> {
    let m = load_manifest(&a.manifest)?;
    let spec = SplitSpec {
        train_fraction: a.train_fraction,
        seed: a.seed,
        stratified: !a.no_stratify,
    };
    let split = make_split(&m, spec)?;
    split.persist(&a.out)?;
    write_echo("split", &a, &a.out, OutputKind::File)?;
    println!("train {} test {} -> {}", split.train.len(), split.test.len(), a.out.display());
    Ok(())
}

pub fn preprocess(a: PreprocessArgs) -> Result<()> {
    let channels = ChannelName::parse_list(&a.channels)?;
    let m = load_manifest(&a.manifest)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    m.records.par_iter().try_for_each(|r| -> Result<()> {
        let path = DatasetManifest::resolve(&a.manifest, &r.path);
        let img = load_rgb(&path).with_context(|| format!("loading {}", path.display()))?;
        let stack = stack_channels(&img, &channels, a.edge)?;
        export_stack(&stack, a.edge, &a.out.join(&r.id))?;
        Ok(())
    })?;
    write_echo("preprocess", &a, &a.out, OutputKind::Dir)?;
    println!("{} stack(s) -> {}", m.len(), a.out.display());
    Ok(())
}

/// PNG files in `dir`, sorted by name.
fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!(LofError::Empty(format!("no PNG files in {}", dir.display())));
    }
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

/// Coverage per raster file, in file-name order. Rasters with no visible
/// hull come back as `None` with a warning.
fn raster_coverage(input: &RasterInput) -> Result<Vec<(String, Option<CoverageReport>)>> {
    let (dir, soft) = match (&input.masks, &input.probs) {
        (Some(d), None) => (d, false),
        (None, Some(d)) => (d, true),
        _ => bail!(LofError::Config("give exactly one of --masks or --probs".into())),
    };
    png_files(dir)?
        .par_iter()
        .map(|path| {
            let report = if soft {
                compute_coverage_soft(&read_probabilities(path)?, input.mode)
            } else {
                compute_coverage(&read_mask(path)?)
            };
            match report {
                Ok(r) => Ok((stem(path), Some(r))),
                Err(LofError::NoHullVisible) => {
                    log::warn!("{}: no hull visible; skipped", path.display());
                    Ok((stem(path), None))
                }
                Err(e) => Err(anyhow::Error::new(e).context(path.display().to_string())),
            }
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CoverageRow {
    id: String,
    hull_pixels: f64,
    water_pixels: f64,
    clean_pct: f64,
    slime_pct: f64,
    macro_pct: f64,
}

impl From<&CoverageRow> for CoverageReport {
    fn from(r: &CoverageRow) -> Self {
        CoverageReport {
            hull_pixels: r.hull_pixels,
            water_pixels: r.water_pixels,
            clean_pct: r.clean_pct,
            slime_pct: r.slime_pct,
            macro_pct: r.macro_pct,
            basis: CoverageBasis::Hull,
        }
    }
}

pub fn coverage(a: CoverageArgs) -> Result<()> {
    let results = raster_coverage(&a.input)?;
    let mut writer = csv::Writer::from_path(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut reports = Vec::new();
    for (id, report) in &results {
        if let Some(r) = report {
            writer.serialize(CoverageRow {
                id: id.clone(),
                hull_pixels: r.hull_pixels,
                water_pixels: r.water_pixels,
                clean_pct: r.clean_pct,
                slime_pct: r.slime_pct,
                macro_pct: r.macro_pct,
            })?;
            reports.push(*r);
        }
    }
    writer.flush()?;
    if let Some(path) = &a.histogram {
        let h = coverage_distribution(&reports, a.bin_width)?;
        fs::write(path, serde_json::to_string_pretty(&h)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    write_echo("coverage", &a, &a.out, OutputKind::File)?;
    println!(
        "{} of {} raster(s) with visible hull -> {}",
        reports.len(),
        results.len(),
        a.out.display()
    );
    Ok(())
}

pub fn rate(a: RateArgs) -> Result<()> {
    let cfg = ThresholdConfig::resolve(&a.preset)?;
    let source = format!("rules:{}", a.preset);
    let mut preds = Vec::new();
    for (id, report) in raster_coverage(&a.input)? {
        if let Some(r) = report {
            let rank = classify_lof(r.observation(), &cfg)?;
            preds.push(PredictionRecord::one_hot(id, rank, &source));
        }
    }
    write_predictions(&preds, &a.out)?;
    write_echo("rate", &a, &a.out, OutputKind::File)?;
    println!("{} rating(s) -> {}", preds.len(), a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct FlipSummary {
    frames: usize,
    flip_rate_before: f64,
    flip_rate_after: f64,
}

pub fn smooth(a: SmoothArgs) -> Result<()> {
    let files = png_files(&a.frames)?;
    let frames = files
        .par_iter()
        .map(|p| read_probabilities(p).with_context(|| p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    let seq = FrameSequence::new(frames, None)?;
    let out = smooth_sequence(&seq, a.window, a.weighting)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for (path, frame) in files.iter().zip(out.frames()) {
        write_probabilities(frame, &a.out.join(path.file_name().unwrap()))?;
    }
    let summary = FlipSummary {
        frames: seq.len(),
        flip_rate_before: flip_rate(&seq)?,
        flip_rate_after: flip_rate(&out)?,
    };
    fs::write(
        a.out.join("flip_rate.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    write_echo("smooth", &a, &a.out, OutputKind::Dir)?;
    println!(
        "flip rate {:.4} -> {:.4} over {} frame(s)",
        summary.flip_rate_before, summary.flip_rate_after, summary.frames
    );
    Ok(())
}

fn parse_counts(s: &str) -> Result<[usize; 6]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        bail!(LofError::Config(format!("--counts needs 6 values, got {}", parts.len())));
    }
    let mut out = [0usize; 6];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .parse()
            .map_err(|_| LofError::Config(format!("bad count `{p}`")))?;
    }
    Ok(out)
}

pub fn synth(a: SynthArgs) -> Result<()> {
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    if let Some(n) = a.video_frames {
        let spec = SynthSpec {
            width: a.size,
            height: a.size,
            slime_pct: a.slime,
            macro_pct: a.macro_pct,
            water_fraction: a.water,
            blob_count: 3,
            seed: a.seed,
        };
        let (seq, base) = generate_video(&spec, n, a.noise)?;
        let frames_dir = a.out.join("frames");
        fs::create_dir_all(&frames_dir)?;
        for (i, f) in seq.frames().iter().enumerate() {
            write_probabilities(f, &frames_dir.join(format!("frame_{i:04}.png")))?;
        }
        write_mask(&base, &a.out.join("base_mask.png"))?;
        println!("{n} frame(s), flip rate {:.4} -> {}", flip_rate(&seq)?, frames_dir.display());
    } else {
        let counts = parse_counts(&a.counts)?;
        let ds = generate_dataset(counts, a.seed, &a.out)?;
        println!("{} record(s) -> {}", ds.manifest.len(), ds.manifest_path.display());
    }
    write_echo("synth", &a, &a.out, OutputKind::Dir)?;
    Ok(())
}

fn load_coverage_csv(path: &Path) -> Result<Vec<CoverageReport>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for row in reader.deserialize::<CoverageRow>() {
        out.push(CoverageReport::from(&row?));
    }
    Ok(out)
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let manifest = load_manifest(&a.truth)?;
    let truth = truth_labels(&manifest);
    let preds: Vec<ScoredPrediction> = match (&a.preds, &a.journal) {
        (Some(p), None) => {
            let records = load_predictions(p)?;
            let unknown: HashSet<&str> =
                lof_core::dataset::predictions::warn_unknown_ids(&records, |id| truth.contains_key(id))
                    .into_iter()
                    .collect();
            records
                .iter()
                .filter(|r| !unknown.contains(r.image_id.as_str()))
                .map(ScoredPrediction::from)
                .collect()
        }
        (None, Some(j)) => {
            let entries: BTreeMap<String, _> = read_journal(j)?
                .into_iter()
                .map(|e| (e.id, e.result))
                .collect();
            for id in entries.keys().filter(|id| !truth.contains_key(*id)) {
                log::warn!("journal entry for unknown image id `{id}`");
            }
            manifest
                .records
                .iter()
                .map(|r| ScoredPrediction {
                    image_id: r.id.clone(),
                    top1: entries.get(&r.id).and_then(|p| p.rank()),
                    top2: None,
                })
                .collect()
        }
        _ => bail!(LofError::Config("give exactly one of --preds or --journal".into())),
    };
    let (metrics, confusion) = compute_metrics(&truth, &preds)?;
    let histogram = match &a.coverage {
        Some(p) => Some(coverage_distribution(&load_coverage_csv(p)?, lof_core::coverage::DEFAULT_BIN_WIDTH)?),
        None => None,
    };
    let files = emit_report(&metrics, &confusion, histogram.as_ref(), &a.out)?;
    write_echo("eval", &a, &a.out, OutputKind::Dir)?;
    println!(
        "classified {}/{} ({:.2}%), accuracy over classified {:.2}%, over all {:.2}% -> {}",
        metrics.n_classified,
        metrics.n_total,
        metrics.classification_rate * 100.0,
        metrics.accuracy_over_classified * 100.0,
        metrics.accuracy_over_all * 100.0,
        files.json.display()
    );
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<()> {
    let doc = load_report(&a.input)?;
    match &a.out {
        Some(out) => {
            let files = emit_report(&doc.metrics, &doc.confusion, doc.coverage_histogram.as_ref(), out)?;
            write_echo("report", &a, out, OutputKind::Dir)?;
            println!("{}", files.markdown.display());
        }
        None => print!("{}", render_markdown(&doc)),
    }
    Ok(())
}
