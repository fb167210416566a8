//! Writers for predictions, reports, PR curves, ablation grids and 2-D exports.
//! Every file is written through [`write_atomic`].

use std::io::Write;
use std::path::Path;

use zsdd_core::metrics::{PrCurve, PrPoint};
use zsdd_core::pca::Point2d;
use zsdd_core::{MetricsReport, PredictionRow};

use crate::{Error, Result};

/// Writes to a temporary file in the destination directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// JSON Lines, one [`PredictionRow`] per line.
pub fn predictions_jsonl(rows: &[PredictionRow]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).expect("prediction row serializes");
        out.push(b'\n');
    }
    out
}

pub fn report_json(report: &MetricsReport) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
    out.push(b'\n');
    out
}

fn csv_bytes(f: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        f(&mut w).expect("writing CSV to memory");
        w.flush().expect("flushing CSV to memory");
    }
    buf
}

fn pe_cell(pe: Option<bool>) -> String {
    pe.map(|b| b.to_string()).unwrap_or_default()
}

fn report_record(report: &MetricsReport) -> Vec<String> {
    let c = &report.config;
    let mut rec = vec![pe_cell(c.pe), c.dad.to_string(), c.teo.to_string()];
    rec.extend(report.scalars().iter().map(|v| v.to_string()));
    rec
}

fn report_header() -> Vec<&'static str> {
    let mut h = vec!["pe", "dad", "teo"];
    h.extend(MetricsReport::SCALAR_FIELDS);
    h
}

/// Header plus one row of report scalars.
pub fn report_csv(report: &MetricsReport) -> Vec<u8> {
    csv_bytes(|w| {
        w.write_record(report_header())?;
        w.write_record(report_record(report))
    })
}

/// One row per cell; columns are the toggles followed by the report scalars.
pub fn ablation_csv(reports: &[MetricsReport]) -> Vec<u8> {
    csv_bytes(|w| {
        w.write_record(report_header())?;
        reports.iter().try_for_each(|r| w.write_record(report_record(r)))
    })
}

pub fn pr_curve_csv(curve: &PrCurve) -> Vec<u8> {
    csv_bytes(|w| {
        w.write_record(["threshold", "precision", "recall"])?;
        curve.points().iter().try_for_each(|&PrPoint { threshold, precision, recall }| {
            w.write_record([threshold.to_string(), precision.to_string(), recall.to_string()])
        })
    })
}

pub fn points_csv(points: &[Point2d]) -> Vec<u8> {
    csv_bytes(|w| {
        w.write_record(["x", "y", "kind", "subject_id", "class_id"])?;
        points.iter().try_for_each(|p| {
            w.write_record([p.x.to_string(), p.y.to_string(), p.kind.as_str().into(), p.subject_id.clone(), p.class_id.to_string()])
        })
    })
}
