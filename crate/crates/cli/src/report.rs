//! Report rows and their CSV / JSON emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lightcone::bounds::BoundCertificate;

use crate::config::ScenarioConfig;

pub const CSV_HEADER: &str = "t,a,kind,measured,certificate,ratio";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: f64,
    pub a: f64,
    pub kind: String,
    pub measured: f64,
    /// Absent for rows that only report a value.
    pub certificate: Option<f64>,
    /// `measured / certificate`; `0` when both vanish, absent when undefined.
    pub ratio: Option<f64>,
    /// `certificate - measured`.
    pub margin: Option<f64>,
    /// Tolerance added to the certificate before flagging a violation.
    pub slack: f64,
    /// Whether the row can fail the run.
    pub gating: bool,
    pub violation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<BoundCertificate>,
}

impl Row {
    /// A row that only reports `value`.
    pub fn value(t: f64, a: f64, kind: impl Into<String>, value: f64) -> Self {
        Row {
            t,
            a,
            kind: kind.into(),
            measured: value,
            certificate: None,
            ratio: None,
            margin: None,
            slack: 0.0,
            gating: false,
            violation: false,
            label: None,
            provenance: None,
        }
    }

    /// A measured value against an upper bound.
    pub fn check(
        t: f64,
        a: f64,
        kind: impl Into<String>,
        measured: f64,
        certificate: f64,
        slack: f64,
        gating: bool,
    ) -> Self {
        let ratio = if certificate > 0.0 {
            Some(measured / certificate)
        } else if measured == 0.0 {
            Some(0.0)
        } else {
            None
        };
        let violation = gating && (measured.is_nan() || certificate.is_nan() || measured > certificate + slack);
        Row {
            t,
            a,
            kind: kind.into(),
            measured,
            certificate: Some(certificate),
            ratio,
            margin: Some(certificate - measured),
            slack,
            gating,
            violation,
            label: None,
            provenance: None,
        }
    }

    pub fn certified(measured: f64, cert: BoundCertificate, slack: f64, gating: bool) -> Self {
        let mut row = Row::check(cert.inputs.t, cert.inputs.a, cert.kind.as_str(), measured, cert.value, slack, gating);
        row.provenance = Some(cert);
        row
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

/// Stable ordering by `(kind, a, t)`.
pub fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(|x, y| x.kind.cmp(&y.kind).then(x.a.total_cmp(&y.a)).then(x.t.total_cmp(&y.t)));
}

/// `%.12g`: twelve significant digits, trailing zeros dropped.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let cert = r.certificate.map(format_number).unwrap_or_default();
        let ratio = match (r.ratio, r.certificate) {
            (Some(q), _) => format_number(q),
            (None, Some(_)) => "inf".into(),
            (None, None) => String::new(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{cert},{ratio}",
            format_number(r.t),
            format_number(r.a),
            r.kind,
            format_number(r.measured)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub subcommand: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub violations: usize,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(subcommand: &str, config: &ScenarioConfig, mut rows: Vec<Row>) -> Self {
        sort_rows(&mut rows);
        let violations = rows.iter().filter(|r| r.violation).count();
        Report { subcommand: subcommand.into(), seed: config.seed, config: config.clone(), violations, rows }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

#[derive(Debug, thiserror::Error)]
#[error("cannot write {path}: {source}")]
pub struct WriteError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

/// Writes `<stem>.csv` and/or `<stem>.json` into `dir`, returning the paths.
pub fn emit_report(report: &Report, dir: &Path, stem: &str, format: Format) -> Result<Vec<PathBuf>, WriteError> {
    std::fs::create_dir_all(dir).map_err(|source| WriteError { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    let mut write = |ext: &str, body: String| {
        let path = dir.join(format!("{stem}.{ext}"));
        std::fs::write(&path, body).map_err(|source| WriteError { path: path.clone(), source })?;
        written.push(path);
        Ok(())
    };
    if matches!(format, Format::Csv | Format::Both) {
        write("csv", to_csv(&report.rows))?;
    }
    if matches!(format, Format::Json | Format::Both) {
        write("json", report.to_json())?;
    }
    Ok(written)
}
