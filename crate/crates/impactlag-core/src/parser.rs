//! Deterministic heuristic segmentation of raw non-patent reference strings
//! into bibliographic fields.
//!
//! The parser is a sequence of ordered pattern passes over the input:
//! pagination/volume blocks first, then the year, then an author run at the
//! head of the string, and finally the title/journal region between the
//! author run and the first numeric block. Every emitted field value is a
//! span of the input (no field is ever fabricated), and the unconsumed text
//! is retained in `residue` so that consumed spans plus residue reconstruct
//! the input exactly.
//!
//! [`ReferenceParser`] is the pluggable seam: a different implementation
//! (e.g. a learned model) can be swapped in without touching the matcher.

use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::normalize;

pub use crate::{DEFAULT_HORIZON_YEAR, MIN_YEAR};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("no bibliographic content (no year, no volume/page pattern, no author-like token)")]
    NoBibliographicContent,
    #[error("empty labeled corpus")]
    EmptyCorpus,
}

/// One author name as it appears in references and bibliographic records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Author {
    pub surname: String,
    /// Uppercase initials without periods, e.g. `"JU"`.
    pub initials: String,
}

/// Whether a field was produced by the heuristic passes or is absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Heuristic,
    #[default]
    Absent,
}

/// Per-field provenance flags for a parse result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct FieldConfidence {
    pub authors: Confidence,
    pub title: Confidence,
    pub journal: Confidence,
    pub volume: Confidence,
    pub issue: Confidence,
    pub first_page: Confidence,
    pub year: Confidence,
}

/// Which field a consumed span was attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpanField {
    AuthorSurname,
    AuthorInitials,
    Title,
    Journal,
    Volume,
    Issue,
    FirstPage,
    Year,
    /// Structural text (labels like `vol.`, delimiters, `et al.`) consumed
    /// during parsing but not part of any field value.
    Structure,
}

/// A byte span of the input attributed to a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FieldSpan {
    pub field: SpanField,
    pub start: usize,
    pub end: usize,
}

/// Structured fields extracted from one reference string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ParsedReference {
    #[serde(default)]
    pub authors: Vec<Author>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub journal: Option<String>,
    #[serde(default)]
    pub volume: Option<String>,
    #[serde(default)]
    pub issue: Option<String>,
    #[serde(default)]
    pub first_page: Option<String>,
    #[serde(default)]
    pub year: Option<i32>,
    /// Unconsumed input text, in original order.
    #[serde(default)]
    pub residue: String,
    #[serde(default)]
    pub confidence: FieldConfidence,
    /// Consumed spans, sorted and non-overlapping. Not serialized.
    #[serde(skip)]
    pub spans: Vec<FieldSpan>,
}

/// A hand-labeled reference: the raw string, its gold fields, and the gold
/// record id when the reference resolves to a record in the evaluation
/// corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledReference {
    pub raw: String,
    pub gold: GoldReference,
    #[serde(default)]
    pub gold_record_id: Option<String>,
}

/// Gold bibliographic fields of a labeled reference.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct GoldReference {
    #[serde(default)]
    pub authors: Vec<Author>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub journal: Option<String>,
    #[serde(default)]
    pub volume: Option<String>,
    #[serde(default)]
    pub issue: Option<String>,
    #[serde(default)]
    pub first_page: Option<String>,
    #[serde(default)]
    pub year: Option<i32>,
}

/// Pluggable reference-string parser.
pub trait ReferenceParser: Send + Sync {
    fn parse(&self, raw: &str) -> Result<ParsedReference, ParseError>;
}

/// The bundled deterministic parser.
#[derive(Debug, Clone, Copy)]
pub struct HeuristicParser {
    horizon_year: i32,
}

impl Default for HeuristicParser {
    fn default() -> Self {
        Self {
            horizon_year: DEFAULT_HORIZON_YEAR,
        }
    }
}

impl HeuristicParser {
    pub fn new(horizon_year: i32) -> Self {
        Self { horizon_year }
    }
}

impl ReferenceParser for HeuristicParser {
    fn parse(&self, raw: &str) -> Result<ParsedReference, ParseError> {
        parse_reference(raw, self.horizon_year)
    }
}

// Pagination / volume block patterns, tried in order. All offsets are byte
// offsets into the original string.
static RE_VOL_YEAR_PAGES: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?P<vol>\d{1,4})\s*\(\s*(?P<yr>1[89]\d{2}|20\d{2})\s*\)\s*,?\s*(?:[Pp]p?\.\s*)?(?P<p1>\d{1,6})(?:\s*[-–—]\s*(?P<p2>\d{1,6}))?",
    )
    .unwrap()
});
static RE_VOL_ISS_PAGES: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?P<vol>\d{1,4})\s*\(\s*(?P<iss>\d{1,4}[0-9A-Za-z/ -]{0,6})\s*\)\s*:\s*(?P<p1>[A-Za-z]?\d{1,6})(?:\s*[-–—]\s*(?P<p2>[A-Za-z]?\d{1,6}))?",
    )
    .unwrap()
});
static RE_VOL_PAGES: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?P<vol>\d{1,4})\s*:\s*(?P<p1>[A-Za-z]?\d{1,6})(?:\s*[-–—]\s*(?P<p2>[A-Za-z]?\d{1,6}))?",
    )
    .unwrap()
});
static RE_VOL_LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b[Vv]ol\.?\s*(?P<vol>\d{1,4})").unwrap());
static RE_ISSUE_LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b[Nn]o\.?\s*(?P<iss>\d{1,4})").unwrap());
static RE_PAGES_LABEL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b[Pp]p?\.\s*(?P<p1>[A-Za-z]?\d{1,6})(?:\s*[-–—]\s*(?P<p2>[A-Za-z]?\d{1,6}))?")
        .unwrap()
});
static RE_BARE_RANGE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?P<p1>\d{1,6})\s*[-–—]\s*(?P<p2>\d{1,6})").unwrap());
static RE_PAREN_YEAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\(\s*(?P<yr>\d{4})\s*\)").unwrap());
static RE_YEAR_TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d{4}").unwrap());

/// Extracts the publication year from a reference string.
///
/// Precedence: a parenthesized year, then a year adjacent to a volume/page
/// pattern, then the last plausible four-digit token outside any pagination
/// span. Returns `None` when no token falls within
/// `[MIN_YEAR, horizon_year + 1]`.
pub fn extract_year(raw: &str, horizon_year: i32) -> Option<i32> {
    let mut pag = Pagination::default();
    pag.scan(raw);
    year_with_span(raw, &pag.spans(), horizon_year).map(|(y, _)| y)
}

fn year_in_range(y: i32, horizon_year: i32) -> bool {
    (MIN_YEAR..=horizon_year + 1).contains(&y)
}

fn inside(spans: &[(usize, usize)], start: usize, end: usize) -> bool {
    spans.iter().any(|&(s, e)| start < e && end > s)
}

/// Shared year search over the unconsumed parts of the input. `blocked`
/// holds spans already attributed to pagination.
fn year_with_span(
    raw: &str,
    blocked: &[(usize, usize)],
    horizon_year: i32,
) -> Option<(i32, (usize, usize))> {
    // 1. Parenthesized year. Last one wins.
    let mut best = None;
    for cap in RE_PAREN_YEAR.captures_iter(raw) {
        let m = cap.name("yr").unwrap();
        let y: i32 = m.as_str().parse().unwrap();
        if year_in_range(y, horizon_year) && !inside(blocked, m.start(), m.end()) {
            best = Some((y, (m.start(), m.end())));
        }
    }
    if best.is_some() {
        return best;
    }

    // Standalone 4-digit tokens outside pagination spans.
    let bytes = raw.as_bytes();
    let mut candidates = Vec::new();
    for m in RE_YEAR_TOKEN.find_iter(raw) {
        if m.start() > 0 && bytes[m.start() - 1].is_ascii_digit() {
            continue;
        }
        if m.end() < bytes.len() && bytes[m.end()].is_ascii_digit() {
            continue;
        }
        let y: i32 = m.as_str().parse().unwrap();
        if year_in_range(y, horizon_year) && !inside(blocked, m.start(), m.end()) {
            candidates.push((y, (m.start(), m.end())));
        }
    }

    // 2. Adjacent to a pagination span: separated by at most three
    //    punctuation/space bytes. Last adjacent token wins.
    let adjacent = |tok: &(usize, usize)| {
        blocked.iter().any(|&(s, e)| {
            let gap = if tok.1 <= s {
                &raw[tok.1..s]
            } else if e <= tok.0 {
                &raw[e..tok.0]
            } else {
                return false;
            };
            gap.len() <= 3 && gap.chars().all(|c| c.is_whitespace() || ";,.:()/-".contains(c))
        })
    };
    if let Some(&(y, span)) = candidates.iter().rfind(|(_, s)| adjacent(s)) {
        return Some((y, span));
    }

    // 3. Last plausible token anywhere else.
    candidates.last().copied()
}

/// Pagination pass state: volume/issue/page spans found so far.
#[derive(Default)]
struct Pagination {
    volume: Option<(usize, usize)>,
    issue: Option<(usize, usize)>,
    first_page: Option<(usize, usize)>,
    year: Option<(usize, usize)>,
    /// Whole-block structural spans (the full regex matches).
    blocks: Vec<(usize, usize)>,
}

impl Pagination {
    fn spans(&self) -> Vec<(usize, usize)> {
        self.blocks.clone()
    }

    /// True when `p1-p2` is a plausible page range: either `p1 <= p2` or the
    /// right side is a truncated suffix of the left (`680-5` for 680–685).
    fn valid_range(p1: &str, p2: Option<&str>) -> bool {
        let Some(p2) = p2 else { return true };
        if !p1.chars().all(|c| c.is_ascii_digit()) || !p2.chars().all(|c| c.is_ascii_digit()) {
            return true;
        }
        if p2.len() < p1.len() {
            let expanded = format!("{}{}", &p1[..p1.len() - p2.len()], p2);
            return expanded.parse::<u64>().unwrap() >= p1.parse::<u64>().unwrap();
        }
        p1.parse::<u64>().unwrap() <= p2.parse::<u64>().unwrap()
    }

    fn digit_bounded(raw: &str, start: usize, end: usize) -> bool {
        let bytes = raw.as_bytes();
        (start > 0 && bytes[start - 1].is_ascii_digit())
            || (end < bytes.len() && bytes[end].is_ascii_digit())
    }

    fn scan(&mut self, raw: &str) {
        // Composite vol (year) pages — "247 (1990) 1306-1310".
        for cap in RE_VOL_YEAR_PAGES.captures_iter(raw) {
            let whole = cap.get(0).unwrap();
            if inside(&self.blocks, whole.start(), whole.end())
                || Self::digit_bounded(raw, whole.start(), whole.end())
            {
                continue;
            }
            let p1 = cap.name("p1").unwrap();
            if !Self::valid_range(p1.as_str(), cap.name("p2").map(|m| m.as_str())) {
                continue;
            }
            let vol = cap.name("vol").unwrap();
            let yr = cap.name("yr").unwrap();
            self.volume = Some((vol.start(), vol.end()));
            self.year = Some((yr.start(), yr.end()));
            self.first_page = Some((p1.start(), p1.end()));
            self.blocks.push((whole.start(), whole.end()));
            return;
        }
        // Composite vol(issue):pages — "266(13):8183-8189".
        for cap in RE_VOL_ISS_PAGES.captures_iter(raw) {
            let whole = cap.get(0).unwrap();
            if inside(&self.blocks, whole.start(), whole.end())
                || Self::digit_bounded(raw, whole.start(), whole.end())
            {
                continue;
            }
            let p1 = cap.name("p1").unwrap();
            if !Self::valid_range(p1.as_str(), cap.name("p2").map(|m| m.as_str())) {
                continue;
            }
            let vol = cap.name("vol").unwrap();
            let iss = cap.name("iss").unwrap();
            self.volume = Some((vol.start(), vol.end()));
            self.issue = Some((iss.start(), iss.end()));
            self.first_page = Some((p1.start(), p1.end()));
            self.blocks.push((whole.start(), whole.end()));
            return;
        }
        // Composite vol:pages — "193:265-275".
        for cap in RE_VOL_PAGES.captures_iter(raw) {
            let whole = cap.get(0).unwrap();
            if inside(&self.blocks, whole.start(), whole.end())
                || Self::digit_bounded(raw, whole.start(), whole.end())
            {
                continue;
            }
            let p1 = cap.name("p1").unwrap();
            if !Self::valid_range(p1.as_str(), cap.name("p2").map(|m| m.as_str())) {
                continue;
            }
            let vol = cap.name("vol").unwrap();
            self.volume = Some((vol.start(), vol.end()));
            self.first_page = Some((p1.start(), p1.end()));
            self.blocks.push((whole.start(), whole.end()));
            return;
        }
        // Labeled components — "vol. 247", "no. 4950", "pp. 1306-1310".
        if let Some(cap) = RE_VOL_LABEL.captures(raw) {
            let whole = cap.get(0).unwrap();
            let vol = cap.name("vol").unwrap();
            self.volume = Some((vol.start(), vol.end()));
            self.blocks.push((whole.start(), whole.end()));
        }
        if let Some(cap) = RE_ISSUE_LABEL.captures(raw) {
            let whole = cap.get(0).unwrap();
            if !inside(&self.blocks, whole.start(), whole.end()) {
                let iss = cap.name("iss").unwrap();
                self.issue = Some((iss.start(), iss.end()));
                self.blocks.push((whole.start(), whole.end()));
            }
        }
        if let Some(cap) = RE_PAGES_LABEL.captures(raw) {
            let whole = cap.get(0).unwrap();
            let p1 = cap.name("p1").unwrap();
            if !inside(&self.blocks, whole.start(), whole.end())
                && Self::valid_range(p1.as_str(), cap.name("p2").map(|m| m.as_str()))
            {
                self.first_page = Some((p1.start(), p1.end()));
                self.blocks.push((whole.start(), whole.end()));
            }
        }
        if self.first_page.is_none() {
            // Bare page range — "495-497".
            for cap in RE_BARE_RANGE.captures_iter(raw) {
                let whole = cap.get(0).unwrap();
                if inside(&self.blocks, whole.start(), whole.end())
                    || Self::digit_bounded(raw, whole.start(), whole.end())
                {
                    continue;
                }
                let p1 = cap.name("p1").unwrap();
                let p2 = cap.name("p2").unwrap();
                if !Self::valid_range(p1.as_str(), Some(p2.as_str())) {
                    continue;
                }
                self.first_page = Some((p1.start(), p1.end()));
                self.blocks.push((whole.start(), whole.end()));
                break;
            }
        }
        if self.volume.is_none() {
            if let Some((ps, _)) = self.first_page {
                // Standalone volume number just before the page block:
                // "Nature 256, 495-497".
                static RE_TRAILING_INT: LazyLock<Regex> =
                    LazyLock::new(|| Regex::new(r"(?P<vol>\d{1,4})\s*[,;]?\s*$").unwrap());
                if let Some(cap) = RE_TRAILING_INT.captures(&raw[..ps]) {
                    let vol = cap.name("vol").unwrap();
                    if !Self::digit_bounded(raw, vol.start(), vol.end())
                        && !inside(&self.blocks, vol.start(), vol.end())
                    {
                        self.volume = Some((vol.start(), vol.end()));
                        self.blocks.push((vol.start(), cap.get(0).unwrap().end()));
                    }
                }
            }
        }
        self.blocks.sort_unstable();
    }
}

/// Byte range of a whitespace-delimited word.
#[derive(Debug, Clone, Copy)]
struct Word {
    start: usize,
    end: usize,
}

impl Word {
    fn text<'a>(&self, raw: &'a str) -> &'a str {
        &raw[self.start..self.end]
    }
}

fn split_words(raw: &str, end: usize) -> Vec<Word> {
    let mut words = Vec::new();
    let mut start = None;
    for (i, c) in raw[..end].char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                words.push(Word { start: s, end: i });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        words.push(Word { start: s, end });
    }
    words
}

const PARTICLES: &[&str] = &["van", "von", "de", "der", "den", "da", "del", "la", "le", "ter"];

fn strip_trailing_punct(s: &str) -> (&str, &str) {
    let core_end = s
        .char_indices()
        .rev()
        .take_while(|(_, c)| matches!(c, ',' | ';' | '.' | ':'))
        .last()
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    (&s[..core_end], &s[core_end..])
}

fn is_surname(core: &str) -> bool {
    let mut chars = core.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    if !first.is_uppercase() {
        return false;
    }
    core.chars().count() >= 2
        && core
            .chars()
            .all(|c| c.is_alphabetic() || c == '-' || c == '\'' || c == '’')
}

/// Initials in surname-first style: 1–4 letters, all uppercase, dots allowed.
fn is_initials(core: &str) -> bool {
    let letters: Vec<char> = core.chars().filter(|c| *c != '.').collect();
    !letters.is_empty()
        && letters.len() <= 4
        && letters.iter().all(|c| c.is_alphabetic() && c.is_uppercase())
}

/// Initials in initials-first style must be dotted ("J.U.", "G."). The
/// dot test looks at the raw word because the trailing dot may have been
/// stripped from the core ("W." -> "W").
fn is_dotted_initials(word: &str, core: &str) -> bool {
    word.contains('.') && is_initials(core)
}

struct AuthorRun {
    authors: Vec<Author>,
    spans: Vec<FieldSpan>,
    /// Byte offset just past the last consumed author token.
    end: usize,
}

fn parse_authors(raw: &str, head_end: usize) -> AuthorRun {
    let words = split_words(raw, head_end);
    let mut run = AuthorRun {
        authors: Vec::new(),
        spans: Vec::new(),
        end: 0,
    };
    let mut i = 0;

    // Leading list marker: "12.", "[3]", "(2)".
    static RE_MARKER: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r"^(?:\[\d{1,3}\]|\(\d{1,3}\)|\d{1,3}[.)])$").unwrap());
    if let Some(w) = words.first() {
        if RE_MARKER.is_match(w.text(raw)) {
            run.spans.push(FieldSpan {
                field: SpanField::Structure,
                start: w.start,
                end: w.end,
            });
            run.end = w.end;
            i = 1;
        }
    }

    while let Some((author, spans, next_i, end, hard_stop)) = try_author_atom(raw, &words, i) {
        run.authors.push(author);
        run.spans.extend(spans);
        run.end = end;
        i = next_i;
        if hard_stop {
            return run;
        }
        // Delimiters between atoms.
        while i < words.len() {
            let t = words[i].text(raw);
            if t == "," || t == ";" || t.eq_ignore_ascii_case("and") || t == "&" {
                run.spans.push(FieldSpan {
                    field: SpanField::Structure,
                    start: words[i].start,
                    end: words[i].end,
                });
                run.end = words[i].end;
                i += 1;
            } else if t.eq_ignore_ascii_case("et")
                && i + 1 < words.len()
                && words[i + 1]
                    .text(raw)
                    .trim_end_matches([',', ';', '.'])
                    .eq_ignore_ascii_case("al")
            {
                run.spans.push(FieldSpan {
                    field: SpanField::Structure,
                    start: words[i].start,
                    end: words[i + 1].end,
                });
                run.end = words[i + 1].end;
                return run;
            } else {
                break;
            }
        }
    }
    run
}

type Atom = (Author, Vec<FieldSpan>, usize, usize, bool);

/// Tries to read one author at `words[i..]`. Returns the author, its spans,
/// the next word index, the end offset, and whether the run terminates here
/// (initials ended with a bare period, as in "Smith J. Title…").
fn try_author_atom(raw: &str, words: &[Word], i: usize) -> Option<Atom> {
    let w = words.get(i)?;
    let (core, _) = strip_trailing_punct(w.text(raw));

    // Optional lowercase particle before the surname ("van Leeuwen T").
    if PARTICLES.contains(&core) {
        if let Some((author, mut spans, next_i, end, stop)) = try_author_atom(raw, words, i + 1) {
            let author = Author {
                surname: format!("{core} {}", author.surname),
                initials: author.initials,
            };
            spans.insert(
                0,
                FieldSpan {
                    field: SpanField::AuthorSurname,
                    start: w.start,
                    end: w.start + core.len(),
                },
            );
            return Some((author, spans, next_i, end, stop));
        }
        return None;
    }

    if is_surname(core) {
        // Surname-first: "Bowie JU," / "Lowry, O.H.,"
        let w2 = words.get(i + 1)?;
        let (core2, rest2) = strip_trailing_punct(w2.text(raw));
        if is_initials(core2) {
            let author = Author {
                surname: core.to_string(),
                initials: normalize::fold_initials(core2),
            };
            let spans = vec![
                FieldSpan {
                    field: SpanField::AuthorSurname,
                    start: w.start,
                    end: w.start + core.len(),
                },
                FieldSpan {
                    field: SpanField::AuthorInitials,
                    start: w2.start,
                    end: w2.end,
                },
            ];
            let hard_stop = rest2 == ".";
            return Some((author, spans, i + 2, w2.end, hard_stop));
        }
        return None;
    }

    if is_dotted_initials(w.text(raw), core) {
        // Initials-first: "J.U. Bowie," — only accepted when followed by a
        // delimiter, "et al", or the end of the head region.
        let w2 = words.get(i + 1)?;
        let (core2, rest2) = strip_trailing_punct(w2.text(raw));
        if !is_surname(core2) {
            return None;
        }
        let terminated = rest2.starts_with([',', ';'])
            || i + 2 >= words.len()
            || matches!(
                words[i + 2].text(raw),
                t if t == "&" || t.eq_ignore_ascii_case("and") || t.eq_ignore_ascii_case("et")
            );
        if !terminated {
            return None;
        }
        let author = Author {
            surname: core2.to_string(),
            initials: normalize::fold_initials(core),
        };
        let spans = vec![
            FieldSpan {
                field: SpanField::AuthorInitials,
                start: w.start,
                end: w.start + core.len(),
            },
            FieldSpan {
                field: SpanField::AuthorSurname,
                start: w2.start,
                end: w2.start + core2.len(),
            },
        ];
        let hard_stop = rest2 == ".";
        return Some((author, spans, i + 2, w2.end, hard_stop));
    }

    None
}

fn trim_span(raw: &str, mut start: usize, mut end: usize, trim: &[char]) -> (usize, usize) {
    while start < end {
        let c = raw[start..].chars().next().unwrap();
        if c.is_whitespace() || trim.contains(&c) {
            start += c.len_utf8();
        } else {
            break;
        }
    }
    while end > start {
        let c = raw[..end].chars().next_back().unwrap();
        if c.is_whitespace() || trim.contains(&c) {
            end -= c.len_utf8();
        } else {
            break;
        }
    }
    (start, end)
}

/// If the region starts with a quote character, returns the span inside the
/// quotes and the offset just past the closing quote.
fn quoted_span(raw: &str, start: usize, end: usize) -> Option<(usize, usize, usize)> {
    let open = raw[start..end].chars().next()?;
    let close = match open {
        '\'' => '\'',
        '"' => '"',
        '\u{2018}' => '\u{2019}',
        '\u{201c}' => '\u{201d}',
        _ => return None,
    };
    let inner_start = start + open.len_utf8();
    let rel = raw[inner_start..end].find(close)?;
    let inner_end = inner_start + rel;
    Some((inner_start, inner_end, inner_end + close.len_utf8()))
}

/// Splits `raw[start..end]` into chunks at sentence boundaries. A period is
/// a boundary only when followed by whitespace/end and the preceding word is
/// not abbreviation-like; `loose` additionally treats any word of five or
/// more letters as boundary-eligible (used when no journal is expected).
fn chunk_region(raw: &str, start: usize, end: usize, loose: bool) -> Vec<(usize, usize)> {
    let region = &raw[start..end];
    let mut chunks = Vec::new();
    let mut chunk_start = 0;
    let chars: Vec<(usize, char)> = region.char_indices().collect();
    for (k, &(i, c)) in chars.iter().enumerate() {
        let boundary = match c {
            ';' => true,
            '.' => {
                let followed = chars
                    .get(k + 1)
                    .map(|&(_, nc)| nc.is_whitespace())
                    .unwrap_or(true);
                followed && {
                    let word: String = region[..i]
                        .chars()
                        .rev()
                        .take_while(|c| c.is_alphanumeric())
                        .collect::<Vec<_>>()
                        .into_iter()
                        .rev()
                        .collect();
                    let len = word.chars().count();
                    let lower = len >= 2 && word.chars().all(|c| c.is_lowercase());
                    let digit = word.chars().any(|c| c.is_ascii_digit());
                    lower || digit || (loose && len >= 5)
                }
            }
            _ => false,
        };
        if boundary {
            chunks.push((start + chunk_start, start + i));
            chunk_start = i + c.len_utf8();
        }
    }
    chunks.push((start + chunk_start, end));
    chunks
        .into_iter()
        .map(|(s, e)| trim_span(raw, s, e, &[',', '.', ';', ':', '"', '\u{201c}', '\u{201d}']))
        .filter(|(s, e)| s < e)
        .collect()
}

/// Parses one raw reference string. See the module docs for the pass order.
pub fn parse_reference(raw: &str, horizon_year: i32) -> Result<ParsedReference, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::EmptyInput);
    }

    let mut pag = Pagination::default();
    pag.scan(raw);

    let mut spans: Vec<FieldSpan> = Vec::new();
    for &(s, e) in &pag.blocks {
        spans.push(FieldSpan {
            field: SpanField::Structure,
            start: s,
            end: e,
        });
    }
    let mut mark = |field, sp: Option<(usize, usize)>| {
        if let Some((s, e)) = sp {
            spans.push(FieldSpan {
                field,
                start: s,
                end: e,
            });
        }
    };
    mark(SpanField::Volume, pag.volume);
    mark(SpanField::Issue, pag.issue);
    mark(SpanField::FirstPage, pag.first_page);
    mark(SpanField::Year, pag.year);

    // Year pass (skipped when the composite vol-(year)-pages pattern already
    // produced one).
    let mut year_span = pag.year;
    let mut year_val = pag
        .year
        .map(|(s, e)| raw[s..e].parse::<i32>().unwrap())
        .filter(|&y| year_in_range(y, horizon_year));
    if year_val.is_none() {
        year_span = None;
        if let Some((y, sp)) = year_with_span(raw, &pag.spans(), horizon_year) {
            year_val = Some(y);
            year_span = Some(sp);
            spans.push(FieldSpan {
                field: SpanField::Year,
                start: sp.0,
                end: sp.1,
            });
        }
    }

    // Head region ends at the first numeric evidence.
    let numeric_start = pag
        .blocks
        .iter()
        .map(|&(s, _)| s)
        .chain(year_span.map(|(s, _)| s))
        .min()
        .unwrap_or(raw.len());

    let run = parse_authors(raw, numeric_start);
    let volume = pag.volume.map(|(s, e)| raw[s..e].to_string());
    let issue = pag.issue.map(|(s, e)| raw[s..e].to_string());
    let first_page = pag.first_page.map(|(s, e)| raw[s..e].to_string());

    if year_val.is_none() && volume.is_none() && first_page.is_none() && run.authors.is_empty() {
        return Err(ParseError::NoBibliographicContent);
    }
    spans.extend(run.spans.iter().copied());

    // Title / journal region between the author run and the numeric block.
    let mut title = None;
    let mut journal = None;
    let region_start = run.end;
    let (mut rs, re) = trim_span(raw, region_start, numeric_start, &[',', ';', ':']);
    // Quoted title at the head of the region: "'Title', Journal, …".
    if rs < re {
        if let Some((ts, te, after)) = quoted_span(raw, rs, re) {
            if ts < te {
                title = Some(raw[ts..te].to_string());
                spans.push(FieldSpan {
                    field: SpanField::Title,
                    start: ts,
                    end: te,
                });
            }
            rs = trim_span(raw, after, re, &[',', ';', ':']).0;
        }
    }
    if rs < re {
        let has_pagination = pag.volume.is_some() || pag.first_page.is_some();
        let chunks = chunk_region(raw, rs, re, !has_pagination);
        if title.is_some() {
            // The quoted title already consumed the head; the remainder is
            // the journal when pagination follows, residue otherwise.
            if has_pagination {
                if let Some(&(js, je)) = chunks.last() {
                    journal = Some(raw[js..je].to_string());
                    spans.push(FieldSpan {
                        field: SpanField::Journal,
                        start: js,
                        end: je,
                    });
                }
            }
        } else if has_pagination {
            if let Some(&(js, je)) = chunks.last() {
                journal = Some(raw[js..je].to_string());
                spans.push(FieldSpan {
                    field: SpanField::Journal,
                    start: js,
                    end: je,
                });
                if chunks.len() > 1 {
                    let ts = chunks[0].0;
                    let te = chunks[chunks.len() - 2].1;
                    title = Some(raw[ts..te].to_string());
                    spans.push(FieldSpan {
                        field: SpanField::Title,
                        start: ts,
                        end: te,
                    });
                }
            }
        } else if let Some(&(ts, te)) = chunks.first() {
            // No journal to look for; the first sentence is the title and
            // later chunks (edition, publisher) stay in the residue.
            title = Some(raw[ts..te].to_string());
            spans.push(FieldSpan {
                field: SpanField::Title,
                start: ts,
                end: te,
            });
        }
    }

    spans.sort_by_key(|s| (s.start, s.end));
    // Structural block spans may cover field spans; merge to a disjoint
    // cover for the residue computation.
    let mut consumed: Vec<(usize, usize)> = Vec::new();
    for sp in &spans {
        match consumed.last_mut() {
            Some(last) if sp.start <= last.1 => last.1 = last.1.max(sp.end),
            _ => consumed.push((sp.start, sp.end)),
        }
    }
    let mut residue = String::new();
    let mut cursor = 0;
    for &(s, e) in &consumed {
        residue.push_str(&raw[cursor..s]);
        cursor = e;
    }
    residue.push_str(&raw[cursor..]);

    let confidence = FieldConfidence {
        authors: flag(!run.authors.is_empty()),
        title: flag(title.is_some()),
        journal: flag(journal.is_some()),
        volume: flag(volume.is_some()),
        issue: flag(issue.is_some()),
        first_page: flag(first_page.is_some()),
        year: flag(year_val.is_some()),
    };

    Ok(ParsedReference {
        authors: run.authors,
        title,
        journal,
        volume,
        issue,
        first_page,
        year: year_val,
        residue,
        confidence,
        spans,
    })
}

fn flag(present: bool) -> Confidence {
    if present {
        Confidence::Heuristic
    } else {
        Confidence::Absent
    }
}

/// Field-level accuracy of a parser against a labeled corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParserReport {
    pub n: usize,
    pub authors: f64,
    pub title: f64,
    pub journal: f64,
    pub volume: f64,
    pub issue: f64,
    pub first_page: f64,
    pub year: f64,
    pub macro_avg: f64,
}

fn text_eq(a: &Option<String>, b: &Option<String>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => normalize::fold(a) == normalize::fold(b),
        _ => false,
    }
}

fn numeric_eq(a: &Option<String>, b: &Option<String>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => normalize::fold_numeric(a) == normalize::fold_numeric(b),
        _ => false,
    }
}

fn authors_eq(a: &[Author], b: &[Author]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            normalize::fold(&x.surname) == normalize::fold(&y.surname)
                && normalize::fold_initials(&x.initials) == normalize::fold_initials(&y.initials)
        })
}

/// Per-field exact-match accuracy (after normalization) and the macro
/// average over the seven fields. Parse failures score as an all-absent
/// parse, so junk entries with all-absent gold count as correct.
pub fn evaluate_parser(
    parser: &dyn ReferenceParser,
    labeled: &[LabeledReference],
) -> Result<ParserReport, ParseError> {
    if labeled.is_empty() {
        return Err(ParseError::EmptyCorpus);
    }
    let mut hits = [0usize; 7];
    for item in labeled {
        let parsed = parser.parse(&item.raw).unwrap_or_default();
        let g = &item.gold;
        hits[0] += usize::from(authors_eq(&parsed.authors, &g.authors));
        hits[1] += usize::from(text_eq(&parsed.title, &g.title));
        hits[2] += usize::from(text_eq(&parsed.journal, &g.journal));
        hits[3] += usize::from(numeric_eq(&parsed.volume, &g.volume));
        hits[4] += usize::from(numeric_eq(&parsed.issue, &g.issue));
        hits[5] += usize::from(numeric_eq(&parsed.first_page, &g.first_page));
        hits[6] += usize::from(parsed.year == g.year);
    }
    let n = labeled.len();
    let acc = |h: usize| h as f64 / n as f64;
    let fields: Vec<f64> = hits.iter().map(|&h| acc(h)).collect();
    Ok(ParserReport {
        n,
        authors: fields[0],
        title: fields[1],
        journal: fields[2],
        volume: fields[3],
        issue: fields[4],
        first_page: fields[5],
        year: fields[6],
        macro_avg: fields.iter().sum::<f64>() / 7.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(raw: &str) -> ParsedReference {
        parse_reference(raw, DEFAULT_HORIZON_YEAR).unwrap()
    }

    #[test]
    fn bowie_style() {
        let p = parse("Bowie JU, et al. Science 247 (1990) 1306-1310.");
        assert_eq!(
            p.authors,
            vec![Author {
                surname: "Bowie".into(),
                initials: "JU".into()
            }]
        );
        assert_eq!(p.journal.as_deref(), Some("Science"));
        assert_eq!(p.volume.as_deref(), Some("247"));
        assert_eq!(p.year, Some(1990));
        assert_eq!(p.first_page.as_deref(), Some("1306"));
        assert_eq!(p.title, None);
    }

    #[test]
    fn medline_semicolon_style() {
        let p = parse("Lazar E, et al. Transforming growth factor alpha: mutation of aspartic acid 47. Mol Cell Biol 1988;8(3):1247-1252.");
        assert_eq!(p.authors.len(), 1);
        assert_eq!(
            p.title.as_deref(),
            Some("Transforming growth factor alpha: mutation of aspartic acid 47")
        );
        assert_eq!(p.journal.as_deref(), Some("Mol Cell Biol"));
        assert_eq!(p.volume.as_deref(), Some("8"));
        assert_eq!(p.issue.as_deref(), Some("3"));
        assert_eq!(p.first_page.as_deref(), Some("1247"));
        assert_eq!(p.year, Some(1988));
    }

    #[test]
    fn colon_pages_with_paren_year() {
        let p = parse("Lowry OH, Rosebrough NJ, Farr AL, Randall RJ. Protein measurement with the Folin phenol reagent. J. Biol. Chem. 193:265-275 (1951).");
        assert_eq!(p.authors.len(), 4);
        assert_eq!(p.journal.as_deref(), Some("J. Biol. Chem"));
        assert_eq!(p.volume.as_deref(), Some("193"));
        assert_eq!(p.first_page.as_deref(), Some("265"));
        assert_eq!(p.year, Some(1951));
    }

    #[test]
    fn labeled_vol_pp_style() {
        let p = parse("Smith, J.A., 'Receptor binding kinetics', Science, vol. 247, no. 4950, pp. 1306-1310, 1990.");
        assert_eq!(p.volume.as_deref(), Some("247"));
        assert_eq!(p.issue.as_deref(), Some("4950"));
        assert_eq!(p.first_page.as_deref(), Some("1306"));
        assert_eq!(p.year, Some(1990));
        assert_eq!(p.authors.len(), 1);
        assert_eq!(p.authors[0].initials, "JA");
        assert_eq!(p.title.as_deref(), Some("Receptor binding kinetics"));
        assert_eq!(p.journal.as_deref(), Some("Science"));
    }

    #[test]
    fn bare_volume_before_range() {
        let p = parse("Köhler G, Milstein C. Continuous cultures of fused cells secreting antibody of predefined specificity. Nature 256, 495-497 (1975).");
        assert_eq!(p.authors.len(), 2);
        assert_eq!(p.authors[0].surname, "Köhler");
        assert_eq!(p.journal.as_deref(), Some("Nature"));
        assert_eq!(p.volume.as_deref(), Some("256"));
        assert_eq!(p.first_page.as_deref(), Some("495"));
        assert_eq!(p.year, Some(1975));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(
            parse_reference("", DEFAULT_HORIZON_YEAR),
            Err(ParseError::EmptyInput)
        );
        assert_eq!(
            parse_reference("   \t ", DEFAULT_HORIZON_YEAR),
            Err(ParseError::EmptyInput)
        );
    }

    #[test]
    fn bare_url_has_no_content() {
        assert_eq!(
            parse_reference("http://example.com/manual.pdf", DEFAULT_HORIZON_YEAR),
            Err(ParseError::NoBibliographicContent)
        );
    }

    #[test]
    fn year_precedence_paren_first() {
        assert_eq!(extract_year("(1990) 1306-1310", DEFAULT_HORIZON_YEAR), Some(1990));
    }

    #[test]
    fn year_outranks_page_range() {
        assert_eq!(
            extract_year("pp. 1976-1981, 1994", DEFAULT_HORIZON_YEAR),
            Some(1994)
        );
    }

    #[test]
    fn year_absent() {
        assert_eq!(extract_year("no date here", DEFAULT_HORIZON_YEAR), None);
    }

    #[test]
    fn year_bounds_respected() {
        assert_eq!(extract_year("published 1799", DEFAULT_HORIZON_YEAR), None);
        assert_eq!(extract_year("published 2015", 2013), None);
        assert_eq!(extract_year("published 2014", 2013), Some(2014)); // horizon + 1
    }

    #[test]
    fn truncated_page_range() {
        let p = parse("Laemmli UK. Cleavage of structural proteins during the assembly of the head of bacteriophage T4. Nature. 1970;227(5259):680-5.");
        assert_eq!(p.first_page.as_deref(), Some("680"));
        assert_eq!(p.volume.as_deref(), Some("227"));
        assert_eq!(p.issue.as_deref(), Some("5259"));
        assert_eq!(p.journal.as_deref(), Some("Nature"));
        assert_eq!(p.year, Some(1970));
    }

    #[test]
    fn residue_and_spans_reconstruct_input() {
        let raw = "Bowie JU, et al. Science 247 (1990) 1306-1310. doi:xx";
        let p = parse(raw);
        let consumed: usize = merged_consumed(&p).iter().map(|(s, e)| e - s).sum();
        assert_eq!(consumed + p.residue.len(), raw.len());
        for sp in &p.spans {
            assert!(raw.get(sp.start..sp.end).is_some());
        }
        assert!(p.residue.contains("doi:xx"));
    }

    fn merged_consumed(p: &ParsedReference) -> Vec<(usize, usize)> {
        let mut merged: Vec<(usize, usize)> = Vec::new();
        for sp in &p.spans {
            match merged.last_mut() {
                Some(last) if sp.start <= last.1 => last.1 = last.1.max(sp.end),
                _ => merged.push((sp.start, sp.end)),
            }
        }
        merged
    }

    #[test]
    fn determinism() {
        let raw = "Mosmann T. Rapid colorimetric assay for cellular growth and survival. J Immunol Methods 65:55-63, 1983.";
        assert_eq!(parse(raw), parse(raw));
    }

    #[test]
    fn serde_round_trip_is_stable() {
        let p = parse("Bowie JU, et al. Science 247 (1990) 1306-1310.");
        let json = serde_json::to_string(&p).unwrap();
        let back: ParsedReference = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn year_deletion_leaves_other_fields() {
        let with = parse("Mosmann T. Rapid colorimetric assay. J Immunol Methods 65:55-63, 1983.");
        let without = parse("Mosmann T. Rapid colorimetric assay. J Immunol Methods 65:55-63.");
        assert_eq!(without.year, None);
        assert_eq!(with.authors, without.authors);
        assert_eq!(with.title, without.title);
        assert_eq!(with.journal, without.journal);
        assert_eq!(with.volume, without.volume);
        assert_eq!(with.first_page, without.first_page);
    }

    #[test]
    fn book_without_pagination_takes_first_sentence_as_title() {
        let p = parse(
            "Sambrook J, Fritsch EF, Maniatis T. Molecular Cloning: A Laboratory Manual. Cold Spring Harbor Laboratory Press, 1989.",
        );
        assert_eq!(p.authors.len(), 3);
        assert_eq!(p.title.as_deref(), Some("Molecular Cloning: A Laboratory Manual"));
        assert_eq!(p.journal, None);
        assert_eq!(p.year, Some(1989));
        assert!(p.residue.contains("Cold Spring Harbor"));
    }

    #[test]
    fn initials_first_authors() {
        let p = parse("J.U. Bowie and R.T. Sauer, Science 247 (1990) 1306.");
        assert_eq!(p.authors.len(), 2);
        assert_eq!(p.authors[0].surname, "Bowie");
        assert_eq!(p.authors[0].initials, "JU");
        assert_eq!(p.authors[1].surname, "Sauer");
        assert_eq!(p.journal.as_deref(), Some("Science"));
    }

    #[test]
    fn journal_abbreviation_not_mistaken_for_authors() {
        let p = parse("J. Biol. Chem. 193:265-275 (1951).");
        assert!(p.authors.is_empty());
        assert_eq!(p.journal.as_deref(), Some("J. Biol. Chem"));
    }

    #[test]
    fn evaluate_perfect_stub() {
        struct Gold(Vec<LabeledReference>);
        impl ReferenceParser for Gold {
            fn parse(&self, raw: &str) -> Result<ParsedReference, ParseError> {
                let item = self.0.iter().find(|l| l.raw == raw).unwrap();
                let g = item.gold.clone();
                Ok(ParsedReference {
                    authors: g.authors,
                    title: g.title,
                    journal: g.journal,
                    volume: g.volume,
                    issue: g.issue,
                    first_page: g.first_page,
                    year: g.year,
                    ..Default::default()
                })
            }
        }
        let labeled = vec![LabeledReference {
            raw: "x".into(),
            gold: GoldReference {
                journal: Some("Science".into()),
                year: Some(1990),
                ..Default::default()
            },
            gold_record_id: None,
        }];
        let report = evaluate_parser(&Gold(labeled.clone()), &labeled).unwrap();
        assert_eq!(report.macro_avg, 1.0);
    }

    #[test]
    fn evaluate_empty_parser_scores_absent_fields() {
        struct Nothing;
        impl ReferenceParser for Nothing {
            fn parse(&self, _raw: &str) -> Result<ParsedReference, ParseError> {
                Err(ParseError::NoBibliographicContent)
            }
        }
        // Gold has journal+year present, five fields absent: 5/7 correct.
        let labeled = vec![LabeledReference {
            raw: "x".into(),
            gold: GoldReference {
                journal: Some("Science".into()),
                year: Some(1990),
                ..Default::default()
            },
            gold_record_id: None,
        }];
        let report = evaluate_parser(&Nothing, &labeled).unwrap();
        assert_eq!(report.journal, 0.0);
        assert_eq!(report.year, 0.0);
        assert_eq!(report.title, 1.0);
        assert!((report.macro_avg - 5.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_rejects_empty_corpus() {
        assert_eq!(
            evaluate_parser(&HeuristicParser::default(), &[]),
            Err(ParseError::EmptyCorpus)
        );
    }
}
