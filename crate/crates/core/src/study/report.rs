use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eigen::Sign;
use crate::homog::{EffectiveTensor, SignCase};
use crate::spectra::Diagnostic;

use super::{Format, StudyError};

pub const REPORT_SCHEMA: &str = "studyreport 1";

pub const CSV_HEADER: [&str; 10] = [
    "case", "k", "sign", "n", "epsilon", "lambda_raw", "diagnostic", "limit", "abs_gap", "rel_gap",
];

/// One eigenvalue at one level against its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub case: SignCase,
    pub k: usize,
    pub sign: Sign,
    pub n: usize,
    pub epsilon: f64,
    pub lambda_raw: f64,
    pub diagnostic: f64,
    pub limit: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
}

/// Relative nodal distances of the first eigenfunction of one sign to the
/// leading term and to the corrected expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorRow {
    pub sign: Sign,
    pub n: usize,
    pub leading_distance: f64,
    pub corrected_distance: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelInfo {
    pub n: usize,
    pub epsilon: f64,
    pub nodes: usize,
    pub mesh_checksum: String,
    pub max_residual: f64,
    pub max_normalization_residual: f64,
    pub orthogonality_defect: f64,
    pub no_negative_spectrum: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitValue {
    pub sign: Sign,
    pub k: usize,
    pub value: f64,
    pub diagnostic: Diagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub schema: String,
    pub config_hash: String,
    pub seed: u64,
    pub case: SignCase,
    pub m_s_rho: f64,
    pub perimeter: f64,
    pub q: EffectiveTensor,
    pub nu_sq: Option<f64>,
    pub lambda1_neg: Option<f64>,
    pub q_tilde: Option<EffectiveTensor>,
    pub m_s_rho_tilde: Option<f64>,
    pub limits: Vec<LimitValue>,
    pub rows: Vec<StudyRow>,
    pub correctors: Vec<CorrectorRow>,
    pub levels: Vec<LevelInfo>,
    pub notes: Vec<String>,
}

impl StudyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, StudyError> {
        let r: Self = serde_json::from_str(text).map_err(|e| StudyError::Report(e.to_string()))?;
        if r.schema != REPORT_SCHEMA {
            return Err(StudyError::Report(format!("unsupported schema {:?}", r.schema)));
        }
        Ok(r)
    }

    /// Rows of one series ordered by level.
    pub fn series(&self, k: usize, sign: Sign) -> Vec<&StudyRow> {
        self.rows.iter().filter(|r| r.k == k && r.sign == sign).collect()
    }
}

fn sign_label(s: Sign) -> &'static str {
    match s {
        Sign::Positive => "+",
        Sign::Negative => "-",
    }
}

pub fn render_csv(report: &StudyReport) -> Result<String, StudyError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| StudyError::Report(e.to_string());
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in &report.rows {
        w.write_record([
            r.case.as_str().to_string(),
            r.k.to_string(),
            sign_label(r.sign).to_string(),
            r.n.to_string(),
            r.epsilon.to_string(),
            r.lambda_raw.to_string(),
            r.diagnostic.to_string(),
            r.limit.to_string(),
            r.abs_gap.to_string(),
            r.rel_gap.to_string(),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| StudyError::Report(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log plot of the absolute gap against epsilon, one polyline per series.
pub fn render_svg(report: &StudyReport) -> String {
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let mut series: BTreeMap<(usize, &'static str), Vec<(f64, f64)>> = BTreeMap::new();
    for r in &report.rows {
        let gap = r.abs_gap.max(1e-300);
        series
            .entry((r.k, sign_label(r.sign)))
            .or_default()
            .push((r.epsilon.log10(), gap.log10()));
    }
    let pts = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{} case: |diagnostic - limit| against epsilon</text>"#,
        w / 2.0,
        report.case
    );
    let _ = writeln!(
        s,
        r#"<path d="M{:.2} {:.2} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        pad,
        pad,
        h - pad,
        w - pad
    );
    for e in (x0 as i64)..=(x1 as i64) {
        let x = sx(e as f64);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#,
            h - pad + 18.0
        );
    }
    for e in (y0 as i64)..=(y1 as i64) {
        let y = sy(e as f64);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
            pad - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">epsilon</text>"#,
        w / 2.0,
        h - 12.0
    );
    for (i, ((k, sign), p)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline data-series="k={k} sign={sign}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        );
        let ly = pad + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" fill="{color}">k={k} {sign}</text>"#,
            w - pad - 50.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `study.csv`, `study.json` and `study.svg` as requested.
pub fn emit_reports(report: &StudyReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, StudyError> {
    fs::create_dir_all(dir).map_err(|e| StudyError::io(dir, e))?;
    let mut written = Vec::new();
    for f in formats {
        let (name, text) = match f {
            Format::Csv => ("study.csv", render_csv(report)?),
            Format::Json => ("study.json", report.to_json()),
            Format::Svg => ("study.svg", render_svg(report)),
        };
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| StudyError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
