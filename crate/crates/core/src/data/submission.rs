use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{LabelSet, PredictionSet};

pub const SUBMISSION_HEADER: [&str; 2] = ["img_pair", "is_related"];

/// Separator between the two image names of a pair id.
pub const PAIR_SEPARATOR: char = '-';

/// One `img_pair,is_related` row.
#[derive(Clone, Debug, PartialEq)]
pub struct SubmissionRecord {
    pub pair_id: String,
    pub is_related: f64,
}

/// Joins two image names into a pair id.
pub fn pair_id(image_a: &str, image_b: &str) -> String {
    format!("{image_a}{PAIR_SEPARATOR}{image_b}")
}

/// Splits a pair id into its two image names; exactly one separator is
/// allowed.
pub fn split_pair_id(id: &str) -> Result<(&str, &str)> {
    let mut parts = id.split(PAIR_SEPARATOR);
    match (parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => Ok((a, b)),
        _ => Err(Error::Contract(format!(
            "pair id '{id}' must be two image names joined by a single '{PAIR_SEPARATOR}'"
        ))),
    }
}

fn check_records(records: &[SubmissionRecord]) -> Result<()> {
    let mut seen = HashSet::new();
    for r in records {
        split_pair_id(&r.pair_id)?;
        if !(0.0..=1.0).contains(&r.is_related) {
            return Err(Error::Range {
                id: r.pair_id.clone(),
                value: r.is_related,
            });
        }
        if !seen.insert(r.pair_id.as_str()) {
            return Err(Error::Duplicate(r.pair_id.clone()));
        }
    }
    Ok(())
}

/// Submission CSV text with six-decimal scores.
pub fn submission_csv(records: &[SubmissionRecord]) -> Result<String> {
    check_records(records)?;
    let mut out = String::from("img_pair,is_related\n");
    for r in records {
        writeln!(out, "{},{:.6}", r.pair_id, r.is_related).unwrap();
    }
    Ok(out)
}

pub fn write_submission_csv(path: &Path, records: &[SubmissionRecord]) -> Result<()> {
    let text = submission_csv(records)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn parse_submission_str(text: &str, path: &Path) -> Result<Vec<SubmissionRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();
    match rows.next() {
        Some(Ok(h)) if h.iter().map(str::trim).eq(SUBMISSION_HEADER) => {}
        Some(Err(e)) => return Err(err(1, e.to_string())),
        _ => return Err(err(1, "missing header row 'img_pair,is_related'".into())),
    }
    let mut out = Vec::new();
    for rec in rows {
        let rec =
            rec.map_err(|e| err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(err(line, format!("expected 2 fields, found {}", rec.len())));
        }
        let id = rec[0].trim().to_string();
        let value: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| err(line, format!("score '{}' is not a number", rec[1].trim())))?;
        out.push(SubmissionRecord {
            pair_id: id,
            is_related: value,
        });
    }
    check_records(&out)?;
    Ok(out)
}

pub fn parse_submission_csv(path: &Path) -> Result<Vec<SubmissionRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_submission_str(&text, path)
}

pub fn to_prediction_set(
    name: impl Into<String>,
    records: &[SubmissionRecord],
) -> Result<PredictionSet> {
    PredictionSet::new(
        name,
        records.iter().map(|r| (r.pair_id.clone(), r.is_related)),
    )
}

pub fn from_prediction_set(set: &PredictionSet) -> Vec<SubmissionRecord> {
    set.iter()
        .map(|(id, s)| SubmissionRecord {
            pair_id: id.to_string(),
            is_related: s,
        })
        .collect()
}

/// `(pair_id, label)` rows of a submission-format file whose scores are
/// exactly 0 or 1, in file order.
pub fn to_labels(records: &[SubmissionRecord]) -> Result<Vec<(String, u8)>> {
    records
        .iter()
        .map(|r| match r.is_related {
            0.0 => Ok((r.pair_id.clone(), 0)),
            1.0 => Ok((r.pair_id.clone(), 1)),
            v => Err(Error::Contract(format!(
                "label for '{}' must be 0 or 1, got {v}",
                r.pair_id
            ))),
        })
        .collect()
}

pub fn to_label_set(records: &[SubmissionRecord]) -> Result<LabelSet> {
    LabelSet::new(to_labels(records)?)
}

pub fn read_prediction_set(path: &Path) -> Result<PredictionSet> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    to_prediction_set(name, &parse_submission_csv(path)?)
}

pub fn read_label_set(path: &Path) -> Result<LabelSet> {
    to_label_set(&parse_submission_csv(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, v: f64) -> SubmissionRecord {
        SubmissionRecord {
            pair_id: id.into(),
            is_related: v,
        }
    }

    #[test]
    fn format_and_parse() {
        let text =
            submission_csv(&[rec("a.jpg-b.jpg", 0.25), rec("c.jpg-d.jpg", 1.0 / 3.0)]).unwrap();
        assert_eq!(
            text,
            "img_pair,is_related\na.jpg-b.jpg,0.250000\nc.jpg-d.jpg,0.333333\n"
        );
        let back = parse_submission_str(&text, Path::new("s.csv")).unwrap();
        assert_eq!(back[1].is_related, 0.333333);
    }

    #[test]
    fn errors() {
        assert_eq!(
            submission_csv(&[rec("a-b", 1.5)]).unwrap_err().kind(),
            "range"
        );
        let err = submission_csv(&[rec("a-b", 0.1), rec("a-b", 0.2)]).unwrap_err();
        assert_eq!(err.kind(), "duplicate");
        assert!(err.to_string().contains("a-b"));
        assert!(submission_csv(&[rec("a-b-c", 0.1)]).is_err());
        let err =
            parse_submission_str("img_pair,is_related\na-b,x\n", Path::new("s.csv")).unwrap_err();
        assert!(err.to_string().contains(":2:"));
        let err = parse_submission_str("img_pair,is_related\na-b,-0.5\n", Path::new("s.csv"))
            .unwrap_err();
        assert_eq!(err.kind(), "range");
    }

    #[test]
    fn labels_must_be_binary() {
        assert!(to_label_set(&[rec("a-b", 0.5)]).is_err());
        let l = to_label_set(&[rec("a-b", 1.0), rec("c-d", 0.0)]).unwrap();
        assert_eq!(l.get("a-b"), Some(1));
    }
}
