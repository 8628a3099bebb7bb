use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// An unordered kin relation between two persons, e.g. `F0002/MID1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationshipRecord {
    pub person_a: String,
    pub person_b: String,
}

impl RelationshipRecord {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Result<Self> {
        let (person_a, person_b) = (a.into(), b.into());
        if person_a.is_empty() || person_b.is_empty() {
            return Err(Error::Contract("person id is empty".into()));
        }
        if person_a == person_b {
            return Err(Error::Contract(format!("self-pair '{person_a}'")));
        }
        Ok(RelationshipRecord { person_a, person_b })
    }
}

/// Family part of a person id: everything before the first `/`.
pub fn family_of(person: &str) -> &str {
    person.split('/').next().unwrap_or(person)
}

pub const RELATIONSHIP_HEADER: [&str; 2] = ["p1", "p2"];

/// Parses relationship CSV text; `path` only labels error messages.
pub fn parse_relationship_str(text: &str, path: &Path) -> Result<Vec<RelationshipRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    match records.next() {
        Some(Ok(h)) if h.iter().map(str::trim).eq(RELATIONSHIP_HEADER) => {}
        Some(Err(e)) => return Err(err(1, e.to_string())),
        _ => return Err(err(1, "missing header row 'p1,p2'".into())),
    }
    let mut out = Vec::new();
    for rec in records {
        let rec =
            rec.map_err(|e| err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(err(line, format!("expected 2 fields, found {}", rec.len())));
        }
        let (a, b) = (rec[0].trim(), rec[1].trim());
        if a.is_empty() || b.is_empty() {
            return Err(err(line, "empty person id".into()));
        }
        if a == b {
            return Err(err(line, format!("self-pair '{a}'")));
        }
        out.push(RelationshipRecord {
            person_a: a.to_string(),
            person_b: b.to_string(),
        });
    }
    Ok(out)
}

pub fn parse_relationship_csv(path: &Path) -> Result<Vec<RelationshipRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_relationship_str(&text, path)
}

pub fn write_relationship_csv(path: &Path, records: &[RelationshipRecord]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "p1,p2").unwrap();
    for r in records {
        writeln!(out, "{},{}", r.person_a, r.person_b).unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
