//! Read-only lookup index over the bibliographic corpus.
//!
//! Three access paths back the matching cascade:
//!
//! * a normalized bag-of-tokens lookup over each record's full text,
//! * an exact composite key on the normalized 5-tuple
//!   (journal, year, volume, first page, lead-author key),
//! * composite keys for each of the five 4-field subsets.
//!
//! The index is immutable after construction and safe to share across
//! threads.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{BibRecord, Corpus};
use crate::normalize;

/// Which of the five match fields a 4-field subset key omits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropField {
    Author,
    FirstPage,
    Volume,
    Year,
    Journal,
}

impl DropField {
    /// The documented fallback order: author first (the noisiest field in
    /// reference text), journal last.
    pub const DEFAULT_ORDER: [DropField; 5] = [
        DropField::Author,
        DropField::FirstPage,
        DropField::Volume,
        DropField::Year,
        DropField::Journal,
    ];

    fn ordinal(self) -> usize {
        match self {
            DropField::Author => 0,
            DropField::FirstPage => 1,
            DropField::Volume => 2,
            DropField::Year => 3,
            DropField::Journal => 4,
        }
    }
}

impl std::fmt::Display for DropField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DropField::Author => "drop_author",
            DropField::FirstPage => "drop_first_page",
            DropField::Volume => "drop_volume",
            DropField::Year => "drop_year",
            DropField::Journal => "drop_journal",
        };
        f.write_str(s)
    }
}

/// Normalized components of a composite lookup. Empty strings mean "field
/// not available"; keys containing an empty required component are never
/// indexed, so such lookups return nothing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CompositeKey {
    pub journal: String,
    pub year: Option<i32>,
    pub volume: String,
    pub first_page: String,
    pub author: String,
}

impl CompositeKey {
    fn component(&self, ordinal: usize) -> Option<String> {
        match ordinal {
            0 => (!self.author.is_empty()).then(|| self.author.clone()),
            1 => (!self.first_page.is_empty()).then(|| self.first_page.clone()),
            2 => (!self.volume.is_empty()).then(|| self.volume.clone()),
            3 => self.year.map(|y| y.to_string()),
            4 => (!self.journal.is_empty()).then(|| self.journal.clone()),
            _ => unreachable!(),
        }
    }

    /// Joins all five components, or `None` when one is missing.
    fn key5(&self) -> Option<String> {
        let parts: Option<Vec<String>> = (0..5).map(|i| self.component(i)).collect();
        parts.map(|p| p.join("\u{1f}"))
    }

    /// Joins the four components other than `drop`, or `None` when one of
    /// them is missing.
    fn key4(&self, drop: DropField) -> Option<String> {
        let parts: Option<Vec<String>> = (0..5)
            .filter(|&i| i != drop.ordinal())
            .map(|i| self.component(i))
            .collect();
        parts.map(|p| p.join("\u{1f}"))
    }
}

/// Immutable lookup index; see the module docs for the access paths.
#[derive(Debug, Clone)]
pub struct BibIndex {
    token_postings: BTreeMap<String, Vec<usize>>,
    /// Per-record distinct token count, parallel to `record_ids`.
    token_counts: Vec<usize>,
    record_ids: Vec<String>,
    five: BTreeMap<String, Vec<String>>,
    four: [BTreeMap<String, Vec<String>>; 5],
}

/// All normalized journal keys a record can be looked up under.
fn journal_keys(record: &BibRecord) -> BTreeSet<String> {
    [&record.journal_full, &record.journal_abbrev]
        .into_iter()
        .map(|j| normalize::fold(j))
        .filter(|j| !j.is_empty())
        .collect()
}

fn record_composite_keys(record: &BibRecord) -> Vec<CompositeKey> {
    let author = record
        .authors
        .first()
        .map(|a| normalize::author_key(&a.surname, &a.initials))
        .unwrap_or_default();
    let volume = if record.volume.is_empty() {
        String::new()
    } else {
        normalize::fold_numeric(&record.volume)
    };
    let first_page = if record.first_page.is_empty() {
        String::new()
    } else {
        normalize::fold_numeric(&record.first_page)
    };
    let journals = journal_keys(record);
    if journals.is_empty() {
        vec![CompositeKey {
            journal: String::new(),
            year: Some(record.year),
            volume,
            first_page,
            author,
        }]
    } else {
        journals
            .into_iter()
            .map(|journal| CompositeKey {
                journal,
                year: Some(record.year),
                volume: volume.clone(),
                first_page: first_page.clone(),
                author: author.clone(),
            })
            .collect()
    }
}

/// The record's full-text token bag: authors, title, journal names, volume,
/// first page, and year.
fn record_tokens(record: &BibRecord) -> BTreeSet<String> {
    let mut bag = BTreeSet::new();
    for author in &record.authors {
        bag.extend(normalize::tokens(&author.surname));
        bag.extend(normalize::tokens(&author.initials));
    }
    bag.extend(normalize::tokens(&record.title));
    bag.extend(normalize::tokens(&record.journal_full));
    bag.extend(normalize::tokens(&record.journal_abbrev));
    bag.extend(normalize::tokens(&record.volume));
    bag.extend(normalize::tokens(&record.first_page));
    bag.insert(record.year.to_string());
    bag
}

impl BibIndex {
    /// Builds the index. Deterministic: the corpus maps are ordered, so the
    /// same corpus yields the same index regardless of input file order.
    pub fn build(corpus: &Corpus) -> Self {
        let mut token_postings: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut token_counts = Vec::with_capacity(corpus.bib.len());
        let mut record_ids = Vec::with_capacity(corpus.bib.len());
        let mut five: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut four: [BTreeMap<String, Vec<String>>; 5] = Default::default();

        for (ordinal, (id, record)) in corpus.bib.iter().enumerate() {
            let bag = record_tokens(record);
            token_counts.push(bag.len());
            record_ids.push(id.clone());
            for token in bag {
                token_postings.entry(token).or_default().push(ordinal);
            }
            for key in record_composite_keys(record) {
                if let Some(k5) = key.key5() {
                    five.entry(k5).or_default().push(id.clone());
                }
                for drop in DropField::DEFAULT_ORDER {
                    if let Some(k4) = key.key4(drop) {
                        four[drop.ordinal()].entry(k4).or_default().push(id.clone());
                    }
                }
            }
        }
        for postings in five.values_mut().chain(four.iter_mut().flat_map(|m| m.values_mut())) {
            postings.sort_unstable();
            postings.dedup();
        }
        BibIndex {
            token_postings,
            token_counts,
            record_ids,
            five,
            four,
        }
    }

    pub fn len(&self) -> usize {
        self.record_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.record_ids.is_empty()
    }

    /// Records whose entire token bag is contained in the query's token
    /// bag. Sorted by record id.
    pub fn lookup_fulltext(&self, query: &str) -> Vec<&str> {
        let query_tokens: BTreeSet<String> = normalize::tokens(query).into_iter().collect();
        let mut hits: BTreeMap<usize, usize> = BTreeMap::new();
        for token in &query_tokens {
            if let Some(postings) = self.token_postings.get(token) {
                for &ordinal in postings {
                    *hits.entry(ordinal).or_default() += 1;
                }
            }
        }
        hits.into_iter()
            .filter(|&(ordinal, n)| n == self.token_counts[ordinal] && n > 0)
            .map(|(ordinal, _)| self.record_ids[ordinal].as_str())
            .collect()
    }

    /// Exact lookup on the normalized 5-tuple. Sorted record ids.
    pub fn lookup_five(&self, key: &CompositeKey) -> &[String] {
        key.key5()
            .and_then(|k| self.five.get(&k))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Exact lookup on the 4-field subset omitting `drop`. Sorted record ids.
    pub fn lookup_four(&self, drop: DropField, key: &CompositeKey) -> &[String] {
        key.key4(drop)
            .and_then(|k| self.four[drop.ordinal()].get(&k))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}
