//! Machine-readable outputs: newline-delimited report objects and CSV with
//! fixed 17-significant-digit float rendering (deterministic byte-for-byte
//! under equal seeds).

use serde::Serialize;

use lyapcert::systems::{CertificateReport, WorstPoint};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
pub struct PointJson {
    pub state: Vec<f64>,
    pub t: f64,
    pub aux: Option<f64>,
}

/// One structured object per certificate. Field order is part of the output
/// contract; `worst_margin` is `null` for vacuous passes (no finite margin).
#[derive(Serialize)]
pub struct ReportLine {
    pub artifact_version: &'static str,
    pub bundle: String,
    pub alpha: f64,
    pub check_name: String,
    pub passed: bool,
    pub worst_margin: Option<f64>,
    pub worst_point: Option<PointJson>,
    pub seed: u64,
}

impl ReportLine {
    pub fn from_certificate(
        bundle: &str,
        alpha: f64,
        check_name: &str,
        seed: u64,
        report: &CertificateReport,
    ) -> Self {
        ReportLine {
            artifact_version: ARTIFACT_VERSION,
            bundle: bundle.to_string(),
            alpha,
            check_name: check_name.to_string(),
            passed: report.passed,
            worst_margin: report.worst_margin.is_finite().then_some(report.worst_margin),
            worst_point: report.worst_point.as_ref().map(point_json),
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization")
    }
}

fn point_json(p: &WorstPoint) -> PointJson {
    PointJson { state: p.state.clone(), t: p.time, aux: p.aux }
}

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

/// Comma-separated row with a trailing newline.
pub fn csv_row(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}
