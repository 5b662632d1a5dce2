//! Loading, validation, normalization, and persistence of the three input
//! corpora: patents, bibliographic records, and paper-to-paper citation
//! edges.
//!
//! Storage is a directory of key-sorted JSONL files plus an in-memory
//! [`BibIndex`]; there is no database dependency. Records that violate
//! invariants are rejected with line-numbered diagnostics and tallied in a
//! [`LoadReport`]; structural corruption (unreadable files, malformed JSON,
//! duplicate keys) aborts the load.

mod index;
mod resolver;

pub use index::{BibIndex, CompositeKey, DropField};
pub use resolver::{FixtureResolver, NullResolver, Resolver, ResolverError};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::Author;
use crate::{MIN_GRANT_YEAR, MIN_YEAR};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed line: {message}")]
    MalformedLine {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate key \"{key}\"")]
    DuplicateKey {
        path: String,
        line: usize,
        key: String,
    },
    #[error("horizon year {horizon} below minimum {min}")]
    HorizonTooEarly { horizon: i32, min: i32 },
}

/// Document type assigned to a bibliographic record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DocType {
    Article,
    Review,
    Note,
    Editorial,
    Letter,
    Other,
}

impl std::fmt::Display for DocType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DocType::Article => "Article",
            DocType::Review => "Review",
            DocType::Note => "Note",
            DocType::Editorial => "Editorial",
            DocType::Letter => "Letter",
            DocType::Other => "Other",
        };
        f.write_str(s)
    }
}

/// One bibliographic record. Partial records are allowed: only `record_id`,
/// `year`, and `doc_type` are mandatory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BibRecord {
    pub record_id: String,
    #[serde(default)]
    pub authors: Vec<Author>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub journal_full: String,
    #[serde(default)]
    pub journal_abbrev: String,
    #[serde(default)]
    pub volume: String,
    #[serde(default)]
    pub issue: Option<String>,
    #[serde(default)]
    pub first_page: String,
    pub year: i32,
    pub doc_type: DocType,
    #[serde(default)]
    pub fields: Vec<String>,
}

impl BibRecord {
    /// Display key used for per-journal grouping: the abbreviation when
    /// present, the full name otherwise.
    pub fn journal_key(&self) -> &str {
        if self.journal_abbrev.is_empty() {
            &self.journal_full
        } else {
            &self.journal_abbrev
        }
    }
}

/// A granted patent with its raw non-patent reference strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatentRecord {
    pub patent_id: String,
    pub grant_year: i32,
    #[serde(default)]
    pub nprs: Vec<String>,
}

/// A paper-to-paper citation event. `year` is the calendar year the citing
/// paper was published.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CitationEdge {
    pub citing: String,
    pub cited: String,
    pub year: i32,
}

/// Why a record was rejected during load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum RejectReason {
    MissingYear,
    YearOutOfRange { year: i32 },
    GrantYearOutOfRange { year: i32 },
    UnresolvedEdgeEndpoint { key: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub file: String,
    pub line: usize,
    pub key: String,
    #[serde(flatten)]
    pub reason: RejectReason,
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}:{}: rejected \"{}\": {:?}",
            self.file, self.line, self.key, self.reason
        )
    }
}

/// Counts of loaded and rejected items for one [`load_corpus`] call.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    pub patents_loaded: usize,
    pub bib_loaded: usize,
    pub edges_loaded: usize,
    /// Patents kept but flagged for having no reference strings.
    pub patents_without_nprs: usize,
    pub rejections: Vec<Rejection>,
}

impl LoadReport {
    pub fn rejected(&self) -> usize {
        self.rejections.len()
    }
}

/// The validated in-memory corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub bib: BTreeMap<String, BibRecord>,
    pub patents: BTreeMap<String, PatentRecord>,
    /// Sorted by (citing, cited, year).
    pub edges: Vec<CitationEdge>,
    pub horizon_year: i32,
    field_published: BTreeMap<String, u64>,
    journal_published: BTreeMap<String, u64>,
}

impl Corpus {
    /// Number of published papers per field (multi-field records counted
    /// once per field); the denominator of "% Published".
    pub fn field_published(&self) -> &BTreeMap<String, u64> {
        &self.field_published
    }

    /// Number of published papers per journal key.
    pub fn journal_published(&self) -> &BTreeMap<String, u64> {
        &self.journal_published
    }

    fn finalize(&mut self) {
        for rec in self.bib.values() {
            for field in &rec.fields {
                *self.field_published.entry(field.clone()).or_default() += 1;
            }
            let jkey = rec.journal_key();
            if !jkey.is_empty() {
                *self.journal_published.entry(jkey.to_string()).or_default() += 1;
            }
        }
        self.edges.sort_unstable();
    }
}

// Raw wire form of a bib record: `year` stays optional so that a missing
// year is a per-record rejection, not a parse failure.
#[derive(Deserialize)]
struct RawBibRecord {
    record_id: String,
    #[serde(default)]
    authors: Vec<Author>,
    #[serde(default)]
    title: String,
    #[serde(default)]
    journal_full: String,
    #[serde(default)]
    journal_abbrev: String,
    #[serde(default)]
    volume: String,
    #[serde(default)]
    issue: Option<String>,
    #[serde(default)]
    first_page: String,
    #[serde(default)]
    year: Option<i32>,
    doc_type: DocType,
    #[serde(default)]
    fields: Vec<String>,
}

fn for_each_jsonl<T, F>(path: &Path, mut f: F) -> Result<(), IngestError>
where
    T: DeserializeOwned,
    F: FnMut(usize, T) -> Result<(), IngestError>,
{
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: display.clone(),
        source,
    })?;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| IngestError::Io {
            path: display.clone(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: T =
            serde_json::from_str(trimmed).map_err(|e| IngestError::MalformedLine {
                path: display.clone(),
                line: line_no,
                message: e.to_string(),
            })?;
        f(line_no, value)?;
    }
    Ok(())
}

/// Loads and validates the three corpora. Invariant violations are rejected
/// per record and tallied; malformed JSON and duplicate keys abort.
pub fn load_corpus(
    patents_path: &Path,
    bib_path: &Path,
    edges_path: &Path,
    horizon_year: i32,
) -> Result<(Corpus, LoadReport), IngestError> {
    if horizon_year < MIN_YEAR {
        return Err(IngestError::HorizonTooEarly {
            horizon: horizon_year,
            min: MIN_YEAR,
        });
    }
    let mut corpus = Corpus {
        bib: BTreeMap::new(),
        patents: BTreeMap::new(),
        edges: Vec::new(),
        horizon_year,
        field_published: BTreeMap::new(),
        journal_published: BTreeMap::new(),
    };
    let mut report = LoadReport::default();

    let bib_file = bib_path.display().to_string();
    for_each_jsonl::<RawBibRecord, _>(bib_path, |line, raw| {
        let Some(year) = raw.year else {
            report.rejections.push(Rejection {
                file: bib_file.clone(),
                line,
                key: raw.record_id,
                reason: RejectReason::MissingYear,
            });
            return Ok(());
        };
        if !(MIN_YEAR..=horizon_year).contains(&year) {
            report.rejections.push(Rejection {
                file: bib_file.clone(),
                line,
                key: raw.record_id,
                reason: RejectReason::YearOutOfRange { year },
            });
            return Ok(());
        }
        if corpus.bib.contains_key(&raw.record_id) {
            return Err(IngestError::DuplicateKey {
                path: bib_file.clone(),
                line,
                key: raw.record_id,
            });
        }
        report.bib_loaded += 1;
        corpus.bib.insert(
            raw.record_id.clone(),
            BibRecord {
                record_id: raw.record_id,
                authors: raw.authors,
                title: raw.title,
                journal_full: raw.journal_full,
                journal_abbrev: raw.journal_abbrev,
                volume: raw.volume,
                issue: raw.issue,
                first_page: raw.first_page,
                year,
                doc_type: raw.doc_type,
                fields: raw.fields,
            },
        );
        Ok(())
    })?;

    let patents_file = patents_path.display().to_string();
    for_each_jsonl::<PatentRecord, _>(patents_path, |line, patent| {
        if !(MIN_GRANT_YEAR..=horizon_year).contains(&patent.grant_year) {
            report.rejections.push(Rejection {
                file: patents_file.clone(),
                line,
                key: patent.patent_id,
                reason: RejectReason::GrantYearOutOfRange {
                    year: patent.grant_year,
                },
            });
            return Ok(());
        }
        if corpus.patents.contains_key(&patent.patent_id) {
            return Err(IngestError::DuplicateKey {
                path: patents_file.clone(),
                line,
                key: patent.patent_id,
            });
        }
        if patent.nprs.is_empty() {
            report.patents_without_nprs += 1;
        }
        report.patents_loaded += 1;
        corpus.patents.insert(patent.patent_id.clone(), patent);
        Ok(())
    })?;

    let edges_file = edges_path.display().to_string();
    for_each_jsonl::<CitationEdge, _>(edges_path, |line, edge| {
        let missing = [&edge.citing, &edge.cited]
            .into_iter()
            .find(|k| !corpus.bib.contains_key(*k));
        if let Some(key) = missing {
            report.rejections.push(Rejection {
                file: edges_file.clone(),
                line,
                key: format!("{}->{}", edge.citing, edge.cited),
                reason: RejectReason::UnresolvedEdgeEndpoint { key: key.clone() },
            });
            return Ok(());
        }
        report.edges_loaded += 1;
        corpus.edges.push(edge);
        Ok(())
    })?;

    corpus.finalize();
    Ok((corpus, report))
}

/// Loads a corpus previously persisted by [`dump_corpus`].
pub fn load_corpus_dir(dir: &Path, horizon_year: i32) -> Result<(Corpus, LoadReport), IngestError> {
    load_corpus(
        &dir.join("patents.jsonl"),
        &dir.join("bib.jsonl"),
        &dir.join("citations.jsonl"),
        horizon_year,
    )
}

fn write_jsonl<T: Serialize>(
    path: &Path,
    rows: impl Iterator<Item = T>,
) -> Result<(), IngestError> {
    let display = path.display().to_string();
    let io_err = |source| IngestError::Io {
        path: display.clone(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    for row in rows {
        let json = serde_json::to_string(&row).expect("jsonl rows serialize infallibly");
        out.write_all(json.as_bytes()).map_err(io_err)?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Persists the corpus as key-sorted JSONL files (`bib.jsonl`,
/// `patents.jsonl`, `citations.jsonl`) under `dir`.
pub fn dump_corpus(corpus: &Corpus, dir: &Path) -> Result<(), IngestError> {
    std::fs::create_dir_all(dir).map_err(|source| IngestError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_jsonl(&dir.join("bib.jsonl"), corpus.bib.values())?;
    write_jsonl(&dir.join("patents.jsonl"), corpus.patents.values())?;
    write_jsonl(&dir.join("citations.jsonl"), corpus.edges.iter())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &Path, name: &str, lines: &[&str]) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        for line in lines {
            writeln!(f, "{line}").unwrap();
        }
        path
    }

    fn bib_line(id: &str, year: i32) -> String {
        format!(
            r#"{{"record_id":"{id}","authors":[{{"surname":"Smith","initials":"J"}}],"title":"T","journal_full":"Journal of Testing","journal_abbrev":"J Test","volume":"1","issue":null,"first_page":"10","year":{year},"doc_type":"Article","fields":["Biochemistry"]}}"#
        )
    }

    fn tiny_corpus(dir: &Path) -> (Corpus, LoadReport) {
        let bib: Vec<String> = (1..=5).map(|i| bib_line(&format!("PMID:{i}"), 1990 + i)).collect();
        let bib_refs: Vec<&str> = bib.iter().map(|s| s.as_str()).collect();
        let bib_path = write_file(dir, "bib.jsonl", &bib_refs);
        let patents_path = write_file(
            dir,
            "patents.jsonl",
            &[
                r#"{"patent_id":"US1","grant_year":1999,"nprs":["some ref"]}"#,
                r#"{"patent_id":"US2","grant_year":2000,"nprs":[]}"#,
                r#"{"patent_id":"US3","grant_year":2001,"nprs":["a","b"]}"#,
            ],
        );
        let edges_path = write_file(
            dir,
            "citations.jsonl",
            &[
                r#"{"citing":"PMID:2","cited":"PMID:1","year":1992}"#,
                r#"{"citing":"PMID:3","cited":"PMID:1","year":1993}"#,
                r#"{"citing":"PMID:4","cited":"PMID:2","year":1994}"#,
                r#"{"citing":"PMID:5","cited":"PMID:3","year":1995}"#,
            ],
        );
        load_corpus(&patents_path, &bib_path, &edges_path, 2013).unwrap()
    }

    #[test]
    fn identity_load_counts() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus, report) = tiny_corpus(dir.path());
        assert_eq!(corpus.patents.len(), 3);
        assert_eq!(corpus.bib.len(), 5);
        assert_eq!(corpus.edges.len(), 4);
        assert_eq!(report.patents_loaded, 3);
        assert_eq!(report.bib_loaded, 5);
        assert_eq!(report.edges_loaded, 4);
        assert_eq!(report.rejected(), 0);
        assert_eq!(report.patents_without_nprs, 1);
    }

    #[test]
    fn duplicate_record_id_aborts() {
        let dir = tempfile::tempdir().unwrap();
        let a = bib_line("PMID:1", 1990);
        let bib_path = write_file(dir.path(), "bib.jsonl", &[&a, &a]);
        let patents_path = write_file(dir.path(), "patents.jsonl", &[]);
        let edges_path = write_file(dir.path(), "citations.jsonl", &[]);
        let err = load_corpus(&patents_path, &bib_path, &edges_path, 2013).unwrap_err();
        match err {
            IngestError::DuplicateKey { key, line, .. } => {
                assert_eq!(key, "PMID:1");
                assert_eq!(line, 2);
            }
            other => panic!("expected DuplicateKey, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_aborts_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let a = bib_line("PMID:1", 1990);
        let bib_path = write_file(dir.path(), "bib.jsonl", &[&a, "{not json"]);
        let patents_path = write_file(dir.path(), "patents.jsonl", &[]);
        let edges_path = write_file(dir.path(), "citations.jsonl", &[]);
        let err = load_corpus(&patents_path, &bib_path, &edges_path, 2013).unwrap_err();
        assert!(matches!(err, IngestError::MalformedLine { line: 2, .. }));
    }

    #[test]
    fn invariant_violations_are_rejected_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let good = bib_line("PMID:1", 1990);
        let early = bib_line("PMID:2", 1750);
        let late = bib_line("PMID:3", 2014);
        let no_year = r#"{"record_id":"PMID:4","doc_type":"Article"}"#.to_string();
        let bib_path =
            write_file(dir.path(), "bib.jsonl", &[&good, &early, &late, &no_year]);
        let patents_path = write_file(
            dir.path(),
            "patents.jsonl",
            &[r#"{"patent_id":"US1","grant_year":1975,"nprs":[]}"#],
        );
        let edges_path = write_file(
            dir.path(),
            "citations.jsonl",
            &[r#"{"citing":"PMID:1","cited":"PMID:99","year":1991}"#],
        );
        let (corpus, report) = load_corpus(&patents_path, &bib_path, &edges_path, 2013).unwrap();
        assert_eq!(corpus.bib.len(), 1);
        assert_eq!(corpus.patents.len(), 0);
        assert_eq!(corpus.edges.len(), 0);
        assert_eq!(report.rejected(), 5);
        let reasons: Vec<_> = report.rejections.iter().map(|r| &r.reason).collect();
        assert!(reasons.contains(&&RejectReason::YearOutOfRange { year: 1750 }));
        assert!(reasons.contains(&&RejectReason::YearOutOfRange { year: 2014 }));
        assert!(reasons.contains(&&RejectReason::MissingYear));
        assert!(reasons.contains(&&RejectReason::UnresolvedEdgeEndpoint {
            key: "PMID:99".into()
        }));
    }

    #[test]
    fn dump_then_reload_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus, _) = tiny_corpus(dir.path());
        let out = dir.path().join("dump");
        dump_corpus(&corpus, &out).unwrap();
        let (again, report) = load_corpus_dir(&out, 2013).unwrap();
        assert_eq!(report.rejected(), 0);
        assert_eq!(corpus.bib, again.bib);
        assert_eq!(corpus.patents, again.patents);
        assert_eq!(corpus.edges, again.edges);

        // Dumping the reloaded corpus is byte-identical.
        let out2 = dir.path().join("dump2");
        dump_corpus(&again, &out2).unwrap();
        for name in ["bib.jsonl", "patents.jsonl", "citations.jsonl"] {
            let a = std::fs::read(out.join(name)).unwrap();
            let b = std::fs::read(out2.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs");
        }
    }

    #[test]
    fn published_totals_cover_all_records() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus, _) = tiny_corpus(dir.path());
        let total: u64 = corpus.field_published().values().sum();
        assert!(total >= corpus.bib.len() as u64);
        assert_eq!(corpus.journal_published().get("J Test"), Some(&5));
    }
}
