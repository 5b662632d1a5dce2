//! Cohort filters and the group-by statistics behind the descriptive
//! reports: document-type distribution, per-field and per-journal citation
//! shares, and the prospective "% Published" rate.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Corpus, DocType};
use crate::metrics::MetricsRow;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReportError {
    #[error("empty cohort")]
    EmptyCohort,
    #[error("unknown field \"{0}\"")]
    UnknownField(String),
}

/// Filter criteria selecting a paper cohort.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    /// Keep only papers with at least one patent citation (`C_P >= 1`).
    #[serde(default)]
    pub require_patent_cited: bool,
    #[serde(default)]
    pub min_pub_year: Option<i32>,
    /// Keep only papers with at least one paper citation (`C_A > 0`).
    #[serde(default)]
    pub require_paper_cited: bool,
    #[serde(default)]
    pub doc_types: Option<BTreeSet<DocType>>,
    #[serde(default)]
    pub fields: Option<BTreeSet<String>>,
}

impl CohortSpec {
    /// Whether at least one criterion is set.
    pub fn is_constraining(&self) -> bool {
        self.require_patent_cited
            || self.require_paper_cited
            || self.min_pub_year.is_some()
            || self.doc_types.is_some()
            || self.fields.is_some()
    }
}

/// Ids of the papers satisfying every criterion, sorted.
pub fn filter_cohort(
    corpus: &Corpus,
    metrics: &BTreeMap<String, MetricsRow>,
    spec: &CohortSpec,
) -> BTreeSet<String> {
    corpus
        .bib
        .values()
        .filter(|record| {
            let row = metrics.get(&record.record_id);
            let c_p = row.map(|r| r.c_p).unwrap_or(0);
            let c_a = row.map(|r| r.c_a).unwrap_or(0);
            if spec.require_patent_cited && c_p == 0 {
                return false;
            }
            if spec.require_paper_cited && c_a == 0 {
                return false;
            }
            if let Some(min) = spec.min_pub_year {
                if record.year < min {
                    return false;
                }
            }
            if let Some(types) = &spec.doc_types {
                if !types.contains(&record.doc_type) {
                    return false;
                }
            }
            if let Some(fields) = &spec.fields {
                if !record.fields.iter().any(|f| fields.contains(f)) {
                    return false;
                }
            }
            true
        })
        .map(|record| record.record_id.clone())
        .collect()
}

/// Per-field (or per-journal) citation share statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldStats {
    pub field: String,
    /// Total patent citations of cohort papers in the field.
    pub n_cites: u64,
    /// Share of the whole cohort's patent citations, in percent.
    pub pct_cites: f64,
    /// Distinct cohort papers in the field.
    pub n_papers: u64,
    /// Share of the whole cohort's papers, in percent.
    pub pct_papers: f64,
    /// Cohort papers as a share of all corpus papers in the field.
    pub pct_published: f64,
}

fn pct(num: u64, denom: u64) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64 * 100.0
    }
}

/// Group-by over fields. Papers designated to multiple fields count once
/// per field; the share denominators are the whole-cohort totals. Fields
/// with no cohort papers still get a row, so prospective rates cover the
/// entire corpus. Sorted by citations descending, then field name.
pub fn field_stats(
    corpus: &Corpus,
    metrics: &BTreeMap<String, MetricsRow>,
    cohort: &BTreeSet<String>,
) -> Vec<FieldStats> {
    let mut cites: BTreeMap<&str, u64> = BTreeMap::new();
    let mut papers: BTreeMap<&str, u64> = BTreeMap::new();
    let mut total_cites = 0u64;
    for id in cohort {
        let Some(record) = corpus.bib.get(id) else {
            continue;
        };
        let c_p = metrics.get(id).map(|r| r.c_p).unwrap_or(0);
        total_cites += c_p;
        for field in &record.fields {
            *cites.entry(field).or_default() += c_p;
            *papers.entry(field).or_default() += 1;
        }
    }
    let total_papers = cohort.len() as u64;
    let mut rows: Vec<FieldStats> = corpus
        .field_published()
        .iter()
        .map(|(field, &published)| {
            let n_cites = cites.get(field.as_str()).copied().unwrap_or(0);
            let n_papers = papers.get(field.as_str()).copied().unwrap_or(0);
            FieldStats {
                field: field.clone(),
                n_cites,
                pct_cites: pct(n_cites, total_cites),
                n_papers,
                pct_papers: pct(n_papers, total_papers),
                pct_published: pct(n_papers, published),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.n_cites.cmp(&a.n_cites).then_with(|| a.field.cmp(&b.field)));
    rows
}

/// One document type's count and share within a cohort.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocTypeStat {
    pub doc_type: DocType,
    pub count: u64,
    pub pct: f64,
}

/// Document-type distribution of a cohort. Shares sum to 100% up to
/// rounding. Sorted by count descending, then type.
pub fn doc_type_distribution(
    cohort: &BTreeSet<String>,
    corpus: &Corpus,
) -> Result<Vec<DocTypeStat>, ReportError> {
    if cohort.is_empty() {
        return Err(ReportError::EmptyCohort);
    }
    let mut counts: BTreeMap<DocType, u64> = BTreeMap::new();
    let mut total = 0u64;
    for id in cohort {
        if let Some(record) = corpus.bib.get(id) {
            *counts.entry(record.doc_type).or_default() += 1;
            total += 1;
        }
    }
    let mut rows: Vec<DocTypeStat> = counts
        .into_iter()
        .map(|(doc_type, count)| DocTypeStat {
            doc_type,
            count,
            pct: pct(count, total),
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.doc_type.cmp(&b.doc_type)));
    Ok(rows)
}

/// [`FieldStats`] analog for the journals of one field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JournalStats {
    pub field: String,
    pub journal: String,
    pub n_cites: u64,
    /// Share of the field's patent citations, in percent.
    pub pct_cites: f64,
    pub n_papers: u64,
    /// Share of the field's cohort papers, in percent.
    pub pct_papers: f64,
    /// Cohort papers as a share of everything the journal published.
    pub pct_published: f64,
}

/// Group-by over the journals of one field, with field-level share
/// denominators. Journals publishing in the field but absent from the
/// cohort still get a zero row.
pub fn journal_stats(
    corpus: &Corpus,
    metrics: &BTreeMap<String, MetricsRow>,
    cohort: &BTreeSet<String>,
    field: &str,
) -> Result<Vec<JournalStats>, ReportError> {
    if !corpus.field_published().contains_key(field) {
        return Err(ReportError::UnknownField(field.to_string()));
    }
    // Every journal with at least one corpus paper in this field.
    let mut journals: BTreeSet<&str> = BTreeSet::new();
    for record in corpus.bib.values() {
        if record.fields.iter().any(|f| f == field) {
            journals.insert(record.journal_key());
        }
    }
    let mut cites: BTreeMap<&str, u64> = BTreeMap::new();
    let mut papers: BTreeMap<&str, u64> = BTreeMap::new();
    let mut field_cites = 0u64;
    let mut field_papers = 0u64;
    for id in cohort {
        let Some(record) = corpus.bib.get(id) else {
            continue;
        };
        if !record.fields.iter().any(|f| f == field) {
            continue;
        }
        let c_p = metrics.get(id).map(|r| r.c_p).unwrap_or(0);
        field_cites += c_p;
        field_papers += 1;
        *cites.entry(record.journal_key()).or_default() += c_p;
        *papers.entry(record.journal_key()).or_default() += 1;
    }
    let mut rows: Vec<JournalStats> = journals
        .into_iter()
        .map(|journal| {
            let n_cites = cites.get(journal).copied().unwrap_or(0);
            let n_papers = papers.get(journal).copied().unwrap_or(0);
            let published = corpus.journal_published().get(journal).copied().unwrap_or(0);
            JournalStats {
                field: field.to_string(),
                journal: journal.to_string(),
                n_cites,
                pct_cites: pct(n_cites, field_cites),
                n_papers,
                pct_papers: pct(n_papers, field_papers),
                pct_published: pct(n_papers, published),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.n_cites.cmp(&a.n_cites).then_with(|| a.journal.cmp(&b.journal)));
    Ok(rows)
}
