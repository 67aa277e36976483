//! Report files: `report.json`, `report.md` and `per_class.svg`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{ConfusionMatrix, MetricsReport};
use crate::coverage::CoverageHistogram;
use crate::error::{IoContext, LofError, Result};

pub const REPORT_SCHEMA: &str = "lof-report/1";

/// Bar colors for predicted ranks 0..=5.
const RANK_COLORS: [&str; 6] = [
    "#4e79a7", "#59a14f", "#edc948", "#f28e2b", "#e15759", "#76448a",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub metrics: MetricsReport,
    pub confusion: ConfusionMatrix,
    #[serde(default)]
    pub coverage_histogram: Option<CoverageHistogram>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub json: PathBuf,
    pub markdown: PathBuf,
    pub svg: PathBuf,
}

pub fn emit_report(
    metrics: &MetricsReport,
    confusion: &ConfusionMatrix,
    histogram: Option<&CoverageHistogram>,
    dest: &Path,
) -> Result<ReportFiles> {
    if confusion.total() == 0 {
        return Err(LofError::Empty("confusion matrix has no scored pairs".into()));
    }
    let doc = ReportDocument {
        schema: REPORT_SCHEMA.into(),
        metrics: metrics.clone(),
        confusion: confusion.clone(),
        coverage_histogram: histogram.cloned(),
    };
    let json = serde_json::to_string_pretty(&doc)? + "\n";
    let markdown = render_markdown(&doc);
    let svg = render_svg(confusion);

    fs::create_dir_all(dest).io_context(|| format!("creating {}", dest.display()))?;
    let files = ReportFiles {
        json: dest.join("report.json"),
        markdown: dest.join("report.md"),
        svg: dest.join("per_class.svg"),
    };
    for (path, contents) in [
        (&files.json, json),
        (&files.markdown, markdown),
        (&files.svg, svg),
    ] {
        fs::write(path, contents).io_context(|| format!("writing {}", path.display()))?;
    }
    Ok(files)
}

pub fn load_report(path: &Path) -> Result<ReportDocument> {
    let text = fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

fn pct(v: f64) -> String {
    format!("{:.2}%", v * 100.0)
}

pub fn render_markdown(doc: &ReportDocument) -> String {
    let m = &doc.metrics;
    let cm = &doc.confusion;
    let mut out = String::new();
    out.push_str("# LoF evaluation report\n\n");
    out.push_str("| Metric | Value |\n|---|---|\n");
    let _ = writeln!(out, "| Images | {} |", m.n_total);
    let _ = writeln!(
        out,
        "| Classified | {} ({}) |",
        m.n_classified,
        pct(m.classification_rate)
    );
    let _ = writeln!(out, "| Correct | {} |", m.n_correct);
    let _ = writeln!(
        out,
        "| Accuracy over classified | {} |",
        pct(m.accuracy_over_classified)
    );
    let _ = writeln!(out, "| Accuracy over all | {} |", pct(m.accuracy_over_all));
    let _ = writeln!(out, "| Top-2 accuracy | {} |", pct(m.top2_accuracy));

    out.push_str("\n## Per-class results\n\n");
    out.push_str("| LoF | Images | Correct | Accuracy | Pred 0 | Pred 1 | Pred 2 | Pred 3 | Pred 4 | Pred 5 |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    for t in 0..6 {
        let acc = m.per_class_accuracy[t].map(pct).unwrap_or_else(|| "n/a".into());
        let _ = write!(
            out,
            "| {t} | {} | {} | {acc} |",
            cm.row_sum(t),
            cm.counts[t][t]
        );
        for p in 0..6 {
            let _ = write!(out, " {} |", cm.counts[t][p]);
        }
        out.push('\n');
    }
    let _ = write!(
        out,
        "| **Total** | {} | {} | {} |",
        cm.total(),
        cm.diagonal(),
        pct(m.accuracy_over_classified)
    );
    for p in 0..6 {
        let col: u64 = (0..6).map(|t| cm.counts[t][p]).sum();
        let _ = write!(out, " {col} |");
    }
    out.push('\n');

    if let Some(h) = &doc.coverage_histogram {
        out.push_str("\n## Coverage distribution\n\n");
        out.push_str("| Bin (%) | Slime | Macrofouling |\n|---|---|---|\n");
        for (i, start) in h.bin_starts.iter().enumerate() {
            let end = (start + h.bin_width).min(100.0);
            let close = if i + 1 == h.bin_starts.len() { "]" } else { ")" };
            let _ = writeln!(
                out,
                "| [{start}, {end}{close} | {} | {} |",
                h.slime_counts[i], h.macro_counts[i]
            );
        }
    }
    out
}

/// Stacked bars: one column per true rank, segments colored by prediction.
pub fn render_svg(cm: &ConfusionMatrix) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const LEFT: f64 = 50.0;
    const BOTTOM: f64 = 40.0;
    const TOP: f64 = 30.0;
    let plot_h = H - BOTTOM - TOP;
    let slot = (W - LEFT - 120.0) / 6.0;
    let bar_w = slot * 0.7;
    let max_row = (0..6).map(|t| cm.row_sum(t)).max().unwrap_or(0).max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">Predictions by true LoF</text>"#,
        W / 2.0
    );
    let baseline = H - BOTTOM;
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{baseline}" x2="{:.2}" y2="{baseline}" stroke="black"/>"#,
        LEFT + 6.0 * slot
    );
    for t in 0..6 {
        let x = LEFT + t as f64 * slot + (slot - bar_w) / 2.0;
        let mut y = baseline;
        for (p, color) in RANK_COLORS.iter().enumerate() {
            let n = cm.counts[t][p];
            if n == 0 {
                continue;
            }
            let h = n as f64 / max_row * plot_h;
            y -= h;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{bar_w:.2}" height="{h:.2}" fill="{}"><title>true {t}, predicted {p}: {n}</title></rect>"#,
                color
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">LoF {t}</text>"#,
            x + bar_w / 2.0,
            baseline + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            x + bar_w / 2.0,
            y - 4.0,
            cm.row_sum(t)
        );
    }
    for (p, color) in RANK_COLORS.iter().enumerate() {
        let ly = TOP + 10.0 + p as f64 * 20.0;
        let lx = W - 100.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{ly}" width="12" height="12" fill="{color}"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">pred {p}</text>"#,
            lx + 18.0,
            ly + 10.0
        );
    }
    s.push_str("</svg>\n");
    s
}
