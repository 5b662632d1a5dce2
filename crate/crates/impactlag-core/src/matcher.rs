//! Three-stage reference matching cascade and its evaluator.
//!
//! Stage order is fixed: whole-string resolution, exact 5-field lookup
//! (journal, year, volume, first page, author), then the five 4-of-5-field
//! fallbacks in a documented drop order. The first stage yielding exactly
//! one candidate wins; a stage yielding two or more candidates terminates
//! the cascade as ambiguous, which downstream consumers treat as no match.
//! Matching is precision-first.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ingest::{BibIndex, CompositeKey, DropField, Resolver};
use crate::normalize;
use crate::parser::{LabeledReference, ParseError, ParsedReference, ReferenceParser};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatcherError {
    #[error("insufficient fields for matching; missing: {}", .0.join(", "))]
    InsufficientFields(Vec<String>),
    #[error("predictions and gold corpora are misaligned at position {position}")]
    MisalignedCorpora { position: usize },
    #[error("{path}:{line}: malformed alias line (expected <abbrev>\\t<canonical>)")]
    MalformedAlias { path: String, line: usize },
    #[error("{path}: {message}")]
    AliasIo { path: String, message: String },
}

/// Journal alias table: folded abbreviation variants mapped to the folded
/// canonical key the index natively contains. Unknown journals fall back to
/// folded full-string equality.
#[derive(Debug, Clone, Default)]
pub struct JournalAliases {
    map: BTreeMap<String, String>,
}

impl JournalAliases {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Loads a tab-separated alias file: `<abbrev>\t<canonical_key>` per
    /// line. Blank lines and `#` comments are skipped; both columns are
    /// fold-normalized on load.
    pub fn from_tsv_path(path: &Path) -> Result<Self, MatcherError> {
        let display = path.display().to_string();
        let file = File::open(path).map_err(|e| MatcherError::AliasIo {
            path: display.clone(),
            message: e.to_string(),
        })?;
        let mut map = BTreeMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| MatcherError::AliasIo {
                path: display.clone(),
                message: e.to_string(),
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut parts = trimmed.splitn(2, '\t');
            let (Some(abbrev), Some(canonical)) = (parts.next(), parts.next()) else {
                return Err(MatcherError::MalformedAlias {
                    path: display,
                    line: idx + 1,
                });
            };
            map.insert(normalize::fold(abbrev), normalize::fold(canonical));
        }
        Ok(Self { map })
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        Self {
            map: pairs
                .into_iter()
                .map(|(a, c)| (normalize::fold(a.as_ref()), normalize::fold(c.as_ref())))
                .collect(),
        }
    }

    /// Canonical journal key for an already-folded journal string.
    pub fn canonical<'a>(&'a self, folded: &'a str) -> &'a str {
        self.map.get(folded).map(String::as_str).unwrap_or(folded)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Normalized 5-field match query. Normalization is idempotent; at least
/// four of the five fields are present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchQuery {
    pub journal: Option<String>,
    pub year: Option<i32>,
    pub volume: Option<String>,
    pub first_page: Option<String>,
    pub author: Option<String>,
}

const FIELD_NAMES: [&str; 5] = ["journal", "year", "volume", "first_page", "author"];

impl MatchQuery {
    fn has(&self, field: usize) -> bool {
        match field {
            0 => self.journal.is_some(),
            1 => self.year.is_some(),
            2 => self.volume.is_some(),
            3 => self.first_page.is_some(),
            4 => self.author.is_some(),
            _ => unreachable!(),
        }
    }

    pub fn present(&self) -> usize {
        (0..5).filter(|&i| self.has(i)).count()
    }

    fn dropped_ordinal(drop: DropField) -> usize {
        match drop {
            DropField::Journal => 0,
            DropField::Year => 1,
            DropField::Volume => 2,
            DropField::FirstPage => 3,
            DropField::Author => 4,
        }
    }

    fn has_all_except(&self, drop: DropField) -> bool {
        let skip = Self::dropped_ordinal(drop);
        (0..5).filter(|&i| i != skip).all(|i| self.has(i))
    }

    fn composite(&self) -> CompositeKey {
        CompositeKey {
            journal: self.journal.clone().unwrap_or_default(),
            year: self.year,
            volume: self.volume.clone().unwrap_or_default(),
            first_page: self.first_page.clone().unwrap_or_default(),
            author: self.author.clone().unwrap_or_default(),
        }
    }
}

/// Builds a normalized [`MatchQuery`] from parsed fields: the journal is
/// case-folded, punctuation-stripped, and alias-canonicalized; the author is
/// reduced to surname plus first initial; numeric volume/page values lose
/// leading zeros.
pub fn normalize_query(
    parsed: &ParsedReference,
    aliases: &JournalAliases,
) -> Result<MatchQuery, MatcherError> {
    let journal = parsed
        .journal
        .as_deref()
        .map(normalize::fold)
        .filter(|j| !j.is_empty())
        .map(|j| aliases.canonical(&j).to_string());
    let author = parsed
        .authors
        .first()
        .map(|a| normalize::author_key(&a.surname, &a.initials))
        .filter(|a| !a.is_empty());
    let volume = parsed
        .volume
        .as_deref()
        .map(normalize::fold_numeric)
        .filter(|v| !v.is_empty());
    let first_page = parsed
        .first_page
        .as_deref()
        .map(normalize::fold_numeric)
        .filter(|p| !p.is_empty());
    let query = MatchQuery {
        journal,
        year: parsed.year,
        volume,
        first_page,
        author,
    };
    if query.present() < 4 {
        let missing = (0..5)
            .filter(|&i| !query.has(i))
            .map(|i| FIELD_NAMES[i].to_string())
            .collect();
        return Err(MatcherError::InsufficientFields(missing));
    }
    Ok(query)
}

/// Which cascade stage produced an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MatchStage {
    FullText,
    Fields5,
    Fields4(DropField),
}

impl std::fmt::Display for MatchStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatchStage::FullText => f.write_str("fulltext"),
            MatchStage::Fields5 => f.write_str("fields5"),
            MatchStage::Fields4(drop) => write!(f, "fields4:{drop}"),
        }
    }
}

/// Why a reference produced no match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NoMatchReason {
    /// The parser rejected the reference string.
    Unparseable(ParseError),
    /// Fewer than four of the five match fields were extracted.
    InsufficientFields(Vec<String>),
    /// Every stage ran and none produced a candidate.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchOutcome {
    Matched {
        record_id: String,
        stage: MatchStage,
    },
    NoMatch {
        reason: NoMatchReason,
    },
    Ambiguous {
        candidates: Vec<String>,
        stage: MatchStage,
    },
}

impl MatchOutcome {
    pub fn matched_id(&self) -> Option<&str> {
        match self {
            MatchOutcome::Matched { record_id, .. } => Some(record_id),
            _ => None,
        }
    }
}

/// One consulted stage and how many candidates it returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageAttempt {
    pub stage: MatchStage,
    pub candidates: usize,
}

/// Cascade outcome plus the audit trail of consulted stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub outcome: MatchOutcome,
    pub trace: Vec<StageAttempt>,
    /// True when the resolver failed with a transport error and stage one
    /// was skipped.
    pub resolver_failed: bool,
}

/// The matching cascade over an immutable index, a resolver, and a parser.
pub struct Matcher<'a> {
    index: &'a BibIndex,
    resolver: &'a dyn Resolver,
    parser: &'a dyn ReferenceParser,
    aliases: &'a JournalAliases,
    drop_order: [DropField; 5],
}

impl<'a> Matcher<'a> {
    pub fn new(
        index: &'a BibIndex,
        resolver: &'a dyn Resolver,
        parser: &'a dyn ReferenceParser,
        aliases: &'a JournalAliases,
    ) -> Self {
        Self {
            index,
            resolver,
            parser,
            aliases,
            drop_order: DropField::DEFAULT_ORDER,
        }
    }

    /// Overrides the 4-field fallback order.
    pub fn with_drop_order(mut self, order: [DropField; 5]) -> Self {
        self.drop_order = order;
        self
    }

    pub fn match_reference(&self, raw: &str) -> MatchResult {
        let mut trace = Vec::new();
        let mut resolver_failed = false;

        match self.resolver.resolve(raw) {
            Ok(Some(record_id)) => {
                trace.push(StageAttempt {
                    stage: MatchStage::FullText,
                    candidates: 1,
                });
                return MatchResult {
                    outcome: MatchOutcome::Matched {
                        record_id,
                        stage: MatchStage::FullText,
                    },
                    trace,
                    resolver_failed,
                };
            }
            Ok(None) => trace.push(StageAttempt {
                stage: MatchStage::FullText,
                candidates: 0,
            }),
            Err(_) => resolver_failed = true,
        }

        let parsed = match self.parser.parse(raw) {
            Ok(parsed) => parsed,
            Err(e) => {
                return MatchResult {
                    outcome: MatchOutcome::NoMatch {
                        reason: NoMatchReason::Unparseable(e),
                    },
                    trace,
                    resolver_failed,
                }
            }
        };
        let query = match normalize_query(&parsed, self.aliases) {
            Ok(query) => query,
            Err(MatcherError::InsufficientFields(missing)) => {
                return MatchResult {
                    outcome: MatchOutcome::NoMatch {
                        reason: NoMatchReason::InsufficientFields(missing),
                    },
                    trace,
                    resolver_failed,
                }
            }
            Err(_) => unreachable!("normalize_query only fails with InsufficientFields"),
        };
        let key = query.composite();

        if query.present() == 5 {
            let ids = self.index.lookup_five(&key);
            trace.push(StageAttempt {
                stage: MatchStage::Fields5,
                candidates: ids.len(),
            });
            if let Some(outcome) = decide(ids, MatchStage::Fields5) {
                return MatchResult {
                    outcome,
                    trace,
                    resolver_failed,
                };
            }
        }

        for drop in self.drop_order {
            if !query.has_all_except(drop) {
                continue;
            }
            let stage = MatchStage::Fields4(drop);
            let ids = self.index.lookup_four(drop, &key);
            trace.push(StageAttempt {
                stage,
                candidates: ids.len(),
            });
            if let Some(outcome) = decide(ids, stage) {
                return MatchResult {
                    outcome,
                    trace,
                    resolver_failed,
                };
            }
        }

        MatchResult {
            outcome: MatchOutcome::NoMatch {
                reason: NoMatchReason::Exhausted,
            },
            trace,
            resolver_failed,
        }
    }

    /// Matches a batch in parallel; output order follows input order.
    pub fn match_batch<S: AsRef<str> + Sync>(&self, raws: &[S]) -> Vec<MatchResult> {
        raws.par_iter()
            .map(|raw| self.match_reference(raw.as_ref()))
            .collect()
    }
}

fn decide(ids: &[String], stage: MatchStage) -> Option<MatchOutcome> {
    match ids.len() {
        0 => None,
        1 => Some(MatchOutcome::Matched {
            record_id: ids[0].clone(),
            stage,
        }),
        _ => Some(MatchOutcome::Ambiguous {
            candidates: ids.to_vec(),
            stage,
        }),
    }
}

/// Confusion matrix over a labeled evaluation corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    pub fn precision(&self) -> Option<f64> {
        let denom = self.true_pos + self.false_pos;
        (denom > 0).then(|| self.true_pos as f64 / denom as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let denom = self.true_pos + self.false_neg;
        (denom > 0).then(|| self.true_pos as f64 / denom as f64)
    }
}

/// Scores predictions against gold labels aligned by raw string. Ambiguous
/// outcomes count as unmatched; a match to the wrong record, or a match
/// where gold says there is no record, is a false positive.
pub fn evaluate_matcher(
    predictions: &[(String, MatchResult)],
    gold: &[LabeledReference],
) -> Result<ConfusionMatrix, MatcherError> {
    if predictions.len() != gold.len() {
        return Err(MatcherError::MisalignedCorpora {
            position: predictions.len().min(gold.len()),
        });
    }
    let mut matrix = ConfusionMatrix::default();
    for (position, ((raw, result), labeled)) in predictions.iter().zip(gold).enumerate() {
        if *raw != labeled.raw {
            return Err(MatcherError::MisalignedCorpora { position });
        }
        match (result.outcome.matched_id(), labeled.gold_record_id.as_deref()) {
            (Some(predicted), Some(expected)) if predicted == expected => matrix.true_pos += 1,
            (Some(_), _) => matrix.false_pos += 1,
            (None, Some(_)) => matrix.false_neg += 1,
            (None, None) => matrix.true_neg += 1,
        }
    }
    Ok(matrix)
}
