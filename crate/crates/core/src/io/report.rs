//! CSV and JSON emitters. Floats are written with nine significant digits,
//! columns in a fixed order.

use crate::error::{Error, Result};
use crate::evaluation::{BenchmarkReport, SweepRow};
use crate::matching::CorrespondenceSet;
use crate::semantic::{LabelAlphabet, SaliencyMatrix};

pub const REPORT_COLUMNS: [&str; 9] = [
    "pair_id",
    "matcher",
    "correspondences",
    "inlier_count",
    "inlier_ratio",
    "rotation_error_deg",
    "translation_error",
    "registered",
    "timing_ms",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.8e}")
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    write(&mut w).map_err(|e| Error::Report(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

/// One row per `(pair, matcher)`, in the report's sorted order.
pub fn report_csv(report: &BenchmarkReport) -> Result<String> {
    csv_string(|w| {
        w.write_record(REPORT_COLUMNS)?;
        for r in &report.rows {
            w.write_record([
                r.pair_id.clone(),
                r.matcher.clone(),
                r.correspondences.to_string(),
                r.inlier_count.to_string(),
                fmt_f64(r.inlier_ratio),
                fmt_f64(r.rotation_error_deg),
                fmt_f64(r.translation_error),
                r.registered.to_string(),
                fmt_f64(r.timing_ms),
            ])?;
        }
        Ok(())
    })
}

pub fn report_json(report: &BenchmarkReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Report(e.to_string()))
}

/// Long format: one row per grid value and pair, then a `mean` row.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["param", "value", "pair", "inlier_count", "inlier_ratio"])?;
        for row in rows {
            for (i, (n, ir)) in row.per_pair.iter().enumerate() {
                w.write_record([row.param.clone(), fmt_f64(row.value), i.to_string(), n.to_string(), fmt_f64(*ir)])?;
            }
            w.write_record([
                row.param.clone(),
                fmt_f64(row.value),
                "mean".to_string(),
                fmt_f64(row.mean_inlier_count),
                fmt_f64(row.mean_inlier_ratio),
            ])?;
        }
        Ok(())
    })
}

/// `category, ring_0, …, ring_{N-1}`.
pub fn saliency_csv(w_mat: &SaliencyMatrix, alphabet: &LabelAlphabet) -> Result<String> {
    csv_string(|w| {
        let mut head = vec!["category".to_string()];
        head.extend((0..w_mat.cols()).map(|k| format!("ring_{k}")));
        w.write_record(&head)?;
        for t in 0..w_mat.rows() {
            let mut rec = vec![alphabet.name(t as u16).to_string()];
            rec.extend(w_mat.row(t).iter().map(|&v| fmt_f64(v)));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

/// `src_index, dst_index, score, group`; `group` is empty outside group matching.
pub fn correspondences_csv(corr: &CorrespondenceSet, alphabet: &LabelAlphabet) -> Result<String> {
    csv_string(|w| {
        w.write_record(["src_index", "dst_index", "score", "group"])?;
        for c in corr {
            w.write_record([
                c.src_index.to_string(),
                c.dst_index.to_string(),
                fmt_f64(c.score),
                c.group_label.map(|g| alphabet.name(g).to_string()).unwrap_or_default(),
            ])?;
        }
        Ok(())
    })
}
