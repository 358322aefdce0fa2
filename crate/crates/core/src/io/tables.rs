//! CSV tables: timeline, labels, per-image scores, PR curves, heatmaps.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::FormatError;
use crate::fit::{FrameLabel, Split};
use crate::metrics::PRCurve;
use crate::model::ClassConfidenceMap;
use crate::video::TimelinePoint;

pub const TIMELINE_COLUMNS: [&str; 8] = [
    "timestamp_s",
    "hull_conf",
    "hull_present",
    "fouling_conf_raw",
    "fouling_conf_smoothed",
    "coverage_raw",
    "coverage_smoothed",
    "fouling_present",
];
pub const LABEL_COLUMNS: [&str; 4] = ["image_id", "presence", "slof", "split"];
pub const SCORE_COLUMNS: [&str; 4] = ["image_id", "fouling_conf", "coverage", "slof_pred"];
pub const PR_COLUMNS: [&str; 3] = ["threshold", "precision", "recall"];
pub const HEATMAP_FIXED_COLUMNS: [&str; 4] = ["image_id", "row", "col", "component"];

/// Shortest `%.9g`-style rendering: nine significant digits, trailing
/// zeros removed, exponent form outside `1e-4 ..= 1e9`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        format!("{}e{exp}", trim_zeros(mant))
    } else {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig9).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn field_err(line: u64, column: &str, detail: impl std::fmt::Display) -> FormatError {
    FormatError::SchemaMismatch {
        line,
        detail: format!("column {column}: {detail}"),
    }
}

/// Rows of a headed CSV file, with 1-based line numbers. The header must
/// match `columns` exactly.
fn rows(bytes: &[u8], columns: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>, FormatError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes);
    let mut out = Vec::new();
    let mut header_seen = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| FormatError::SchemaMismatch {
            line: e.position().map_or(0, |p| p.line()),
            detail: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if !header_seen {
            if rec.iter().ne(columns.iter().copied()) {
                return Err(FormatError::SchemaMismatch {
                    line,
                    detail: format!("expected header {}", columns.join(",")),
                });
            }
            header_seen = true;
            continue;
        }
        if rec.len() != columns.len() {
            return Err(FormatError::SchemaMismatch {
                line,
                detail: format!("expected {} fields, found {}", columns.len(), rec.len()),
            });
        }
        out.push((line, rec));
    }
    if !header_seen {
        return Err(FormatError::SchemaMismatch {
            line: 1,
            detail: "missing header".into(),
        });
    }
    Ok(out)
}

fn parse_f64(s: &str, line: u64, column: &str) -> Result<f64, FormatError> {
    let v: f64 = s.parse().map_err(|e| field_err(line, column, e))?;
    if !v.is_finite() {
        return Err(field_err(line, column, "non-finite value"));
    }
    Ok(v)
}

fn parse_opt(s: &str, line: u64, column: &str) -> Result<Option<f64>, FormatError> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s, line, column).map(Some)
    }
}

fn parse_flag(s: &str, line: u64, column: &str) -> Result<bool, FormatError> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(field_err(line, column, format!("expected 0 or 1, found {other:?}"))),
    }
}

pub fn write_timeline_csv(points: &[TimelinePoint]) -> Vec<u8> {
    let mut s = TIMELINE_COLUMNS.join(",");
    s.push('\n');
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            format_sig9(p.timestamp_s),
            format_sig9(p.hull_confidence),
            flag(p.hull_present),
            opt(p.fouling_confidence_raw),
            opt(p.fouling_confidence_smoothed),
            opt(p.coverage_raw),
            opt(p.coverage_smoothed),
            flag(p.fouling_present),
        );
    }
    s.into_bytes()
}

pub fn read_timeline_csv(bytes: &[u8]) -> Result<Vec<TimelinePoint>, FormatError> {
    let c = &TIMELINE_COLUMNS;
    rows(bytes, c)?
        .into_iter()
        .map(|(line, r)| {
            let p = TimelinePoint {
                timestamp_s: parse_f64(&r[0], line, c[0])?,
                hull_confidence: parse_f64(&r[1], line, c[1])?,
                hull_present: parse_flag(&r[2], line, c[2])?,
                fouling_confidence_raw: parse_opt(&r[3], line, c[3])?,
                fouling_confidence_smoothed: parse_opt(&r[4], line, c[4])?,
                coverage_raw: parse_opt(&r[5], line, c[5])?,
                coverage_smoothed: parse_opt(&r[6], line, c[6])?,
                fouling_present: parse_flag(&r[7], line, c[7])?,
            };
            let fouling = [
                p.fouling_confidence_raw,
                p.fouling_confidence_smoothed,
                p.coverage_raw,
                p.coverage_smoothed,
            ];
            let ok = if p.hull_present {
                fouling.iter().all(Option::is_some)
            } else {
                fouling.iter().all(Option::is_none) && !p.fouling_present
            };
            if !ok {
                return Err(FormatError::SchemaMismatch {
                    line,
                    detail: "fouling columns must be filled exactly on hull-present rows".into(),
                });
            }
            Ok(p)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub image_id: String,
    pub label: FrameLabel,
}

pub fn read_labels_csv(bytes: &[u8]) -> Result<Vec<LabelRow>, FormatError> {
    let c = &LABEL_COLUMNS;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, r) in rows(bytes, c)? {
        let image_id = r[0].to_string();
        if image_id.is_empty() {
            return Err(field_err(line, c[0], "empty id"));
        }
        let presence = parse_flag(&r[1], line, c[1])?;
        let slof = match &r[2] {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            "2" => Some(2),
            other => return Err(field_err(line, c[2], format!("expected 0, 1, 2 or empty, found {other:?}"))),
        };
        let split: Split = r[3].parse().map_err(|e| field_err(line, c[3], e))?;
        let label = FrameLabel { presence, slof, split };
        if !label.is_consistent() {
            return Err(FormatError::LabelInconsistent {
                line,
                id: image_id,
                presence: presence as u8,
                slof: slof.unwrap_or_default(),
            });
        }
        if !seen.insert(image_id.clone()) {
            return Err(FormatError::DuplicateId { line, id: image_id });
        }
        out.push(LabelRow { image_id, label });
    }
    Ok(out)
}

pub fn write_labels_csv(rows: &[LabelRow]) -> Vec<u8> {
    let mut s = LABEL_COLUMNS.join(",");
    s.push('\n');
    for r in rows {
        let slof = r.label.slof.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.image_id,
            flag(r.label.presence),
            slof,
            r.label.split.as_str()
        );
    }
    s.into_bytes()
}

pub fn labels_by_id(rows: Vec<LabelRow>) -> HashMap<String, FrameLabel> {
    rows.into_iter().map(|r| (r.image_id, r.label)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub image_id: String,
    pub fouling_conf: f64,
    pub coverage: f64,
    pub slof_pred: u8,
}

pub fn write_scores_csv(rows: &[ScoreRow]) -> Vec<u8> {
    let mut s = SCORE_COLUMNS.join(",");
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.image_id,
            format_sig9(r.fouling_conf),
            format_sig9(r.coverage),
            r.slof_pred
        );
    }
    s.into_bytes()
}

pub fn read_scores_csv(bytes: &[u8]) -> Result<Vec<ScoreRow>, FormatError> {
    let c = &SCORE_COLUMNS;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, r) in rows(bytes, c)? {
        let image_id = r[0].to_string();
        if !seen.insert(image_id.clone()) {
            return Err(FormatError::DuplicateId { line, id: image_id });
        }
        let slof_pred = match &r[3] {
            "0" => 0,
            "1" => 1,
            "2" => 2,
            other => return Err(field_err(line, c[3], format!("expected 0, 1 or 2, found {other:?}"))),
        };
        out.push(ScoreRow {
            image_id,
            fouling_conf: parse_f64(&r[1], line, c[1])?,
            coverage: parse_f64(&r[2], line, c[2])?,
            slof_pred,
        });
    }
    Ok(out)
}

pub fn write_pr_csv(curve: &PRCurve) -> Vec<u8> {
    let mut s = PR_COLUMNS.join(",");
    s.push('\n');
    for i in 0..curve.len() {
        let _ = writeln!(
            s,
            "{},{},{}",
            format_sig9(curve.thresholds[i]),
            format_sig9(curve.precision[i]),
            format_sig9(curve.recall[i])
        );
    }
    s.into_bytes()
}

/// Append one row per patch: grid position, component label, and the
/// patch's score for every class. Pass `header = true` for the first frame.
pub fn write_heatmap_csv(
    out: &mut Vec<u8>,
    header: bool,
    frame_id: &str,
    grid_w: usize,
    labels: &[usize],
    map: &ClassConfidenceMap,
) {
    let mut s = String::new();
    if header {
        s.push_str(&HEATMAP_FIXED_COLUMNS.join(","));
        for name in &map.class_names {
            let _ = write!(s, ",score_{name}");
        }
        s.push('\n');
    }
    for (i, &label) in labels.iter().enumerate() {
        let _ = write!(s, "{frame_id},{},{},{label}", i / grid_w, i % grid_w);
        for v in map.patch_row(i) {
            let _ = write!(s, ",{}", format_sig9(*v));
        }
        s.push('\n');
    }
    out.extend_from_slice(s.as_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(t: f64, hull: bool) -> TimelinePoint {
        TimelinePoint {
            timestamp_s: t,
            hull_confidence: if hull { 0.912345678123 } else { 0.1 },
            hull_present: hull,
            fouling_confidence_raw: hull.then_some(0.3333333333),
            fouling_confidence_smoothed: hull.then_some(0.25),
            coverage_raw: hull.then_some(1e-7),
            coverage_smoothed: hull.then_some(0.0),
            fouling_present: hull,
        }
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(-0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.25), "0.25");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1234567890.0), "1.23456789e9");
        assert_eq!(format_sig9(0.0001), "0.0001");
        assert_eq!(format_sig9(0.00001234), "1.234e-5");
        assert_eq!(format_sig9(9.9999999999), "10");
        assert_eq!(format_sig9(-2.5), "-2.5");
    }

    #[test]
    fn empty_timeline_is_header_only() {
        let b = write_timeline_csv(&[]);
        assert_eq!(String::from_utf8(b.clone()).unwrap(), format!("{}\n", TIMELINE_COLUMNS.join(",")));
        assert!(read_timeline_csv(&b).unwrap().is_empty());
    }

    #[test]
    fn timeline_round_trip() {
        let pts = vec![point(0.0, true), point(0.1, false), point(0.2, true)];
        let back = read_timeline_csv(&write_timeline_csv(&pts)).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in pts.iter().zip(&back) {
            assert!((a.timestamp_s - b.timestamp_s).abs() <= 1e-9);
            assert!((a.hull_confidence - b.hull_confidence).abs() <= 1e-9);
            assert_eq!(a.hull_present, b.hull_present);
            assert_eq!(a.fouling_present, b.fouling_present);
            match (a.fouling_confidence_raw, b.fouling_confidence_raw) {
                (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-9),
                (None, None) => {}
                _ => panic!("presence differs"),
            }
        }
    }

    #[test]
    fn reordered_columns_rejected() {
        let mut cols = TIMELINE_COLUMNS;
        cols.swap(0, 1);
        let s = format!("{}\n", cols.join(","));
        assert!(matches!(
            read_timeline_csv(s.as_bytes()),
            Err(FormatError::SchemaMismatch { line: 1, .. })
        ));
    }

    #[test]
    fn labels_rows() {
        let rows = read_labels_csv(b"image_id,presence,slof,split\nimg1,1,2,train\nimg3,0,,validation\n").unwrap();
        assert!(rows[0].label.presence);
        assert_eq!(rows[0].label.slof, Some(2));
        assert_eq!(rows[1].label.slof, None);
        assert_eq!(rows[1].label.split, Split::Validation);
        assert_eq!(read_labels_csv(&write_labels_csv(&rows)).unwrap(), rows);

        match read_labels_csv(b"image_id,presence,slof,split\nimg1,1,2,train\nimg2,0,1,test\n") {
            Err(FormatError::LabelInconsistent { line, id, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(id, "img2");
            }
            other => panic!("expected LabelInconsistent, got {other:?}"),
        }
        assert!(matches!(
            read_labels_csv(b"image_id,presence,slof,split\na,1,1,train\na,0,0,train\n"),
            Err(FormatError::DuplicateId { line: 3, .. })
        ));
        assert!(matches!(
            read_labels_csv(b"image_id,presence,split,slof\n"),
            Err(FormatError::SchemaMismatch { .. })
        ));
        assert!(matches!(
            read_labels_csv(b"image_id,presence,slof,split\na,yes,1,train\n"),
            Err(FormatError::SchemaMismatch { line: 2, .. })
        ));
    }

    #[test]
    fn scores_round_trip() {
        let rows = vec![ScoreRow {
            image_id: "a".into(),
            fouling_conf: 0.75,
            coverage: 0.1,
            slof_pred: 1,
        }];
        assert_eq!(read_scores_csv(&write_scores_csv(&rows)).unwrap(), rows);
    }
}
