//! Shared fixtures and independent naive oracles for the acceptance suite.
//! Every oracle here re-derives its answer from first principles (scans,
//! exhaustive set construction, nested-loop group-bys) so the library
//! implementations are checked against a separate code path.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use impactlag_core::ingest::{self, Corpus};
use impactlag_core::metrics::{CitationCurve, MetricsRow};
use impactlag_core::parser::LabeledReference;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../testdata/mini")
}

pub fn load_fixture_corpus() -> (Corpus, ingest::LoadReport) {
    ingest::load_corpus_dir(&fixture_dir(), 2013).expect("fixture corpus loads")
}

pub fn load_labeled() -> Vec<LabeledReference> {
    let raw = std::fs::read_to_string(fixture_dir().join("labeled_refs.jsonl")).unwrap();
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Scan-based temporal profile: each parameter from its own pass over the
/// definitions, no shared scaffolding with the library implementation.
pub struct NaiveProfile {
    pub t_f: Option<usize>,
    pub t_m: Option<usize>,
    pub half_decayed: Option<bool>,
    pub t_h: Option<usize>,
    pub tau: Option<usize>,
}

pub fn naive_profile(counts: &[u32]) -> NaiveProfile {
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total == 0 {
        return NaiveProfile {
            t_f: None,
            t_m: None,
            half_decayed: None,
            t_h: None,
            tau: None,
        };
    }
    let mut t_f = 0;
    let mut cumulative = 0u64;
    for (t, &c) in counts.iter().enumerate() {
        cumulative += u64::from(c);
        if cumulative > 0 {
            t_f = t;
            break;
        }
    }
    let mut t_m = 0;
    for (t, &c) in counts.iter().enumerate() {
        if c > counts[t_m] {
            t_m = t;
        }
    }
    let c_max = f64::from(counts[t_m]);
    let last = counts.len() - 1;
    let mut t_h = None;
    for t in t_m + 1..=last {
        if f64::from(counts[t]) < c_max / 2.0 {
            t_h = Some(t);
            break;
        }
    }
    let tau = match t_h {
        Some(h) => h - t_m,
        None => last - t_m,
    };
    NaiveProfile {
        t_f: Some(t_f),
        t_m: Some(t_m),
        half_decayed: Some(t_h.is_some()),
        t_h,
        tau: Some(tau),
    }
}

/// Index-loop Beauty Coefficient straight from the formula.
pub fn naive_beauty(counts: &[u32]) -> f64 {
    let mut t_m = 0;
    for (t, &c) in counts.iter().enumerate() {
        if c > counts[t_m] {
            t_m = t;
        }
    }
    if t_m == 0 {
        return 0.0;
    }
    let c0 = f64::from(counts[0]);
    let cm = f64::from(counts[t_m]);
    let mut b = 0.0;
    for t in 0..=t_m {
        let line = (cm - c0) / (t_m as f64) * (t as f64) + c0;
        let ct = f64::from(counts[t]);
        let denom = if ct > 1.0 { ct } else { 1.0 };
        b += (line - ct) / denom;
    }
    b
}

/// Exhaustive-set top-percentile overlap.
pub fn naive_topk(
    metric_p: &BTreeMap<String, f64>,
    metric_a: &BTreeMap<String, f64>,
    percentile: f64,
) -> f64 {
    let n = metric_p.len();
    let k = ((percentile / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    let top = |m: &BTreeMap<String, f64>| -> BTreeSet<String> {
        let mut vals: Vec<f64> = m.values().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        let threshold = vals[k - 1];
        m.iter()
            .filter(|(_, &v)| v >= threshold)
            .map(|(id, _)| id.clone())
            .collect()
    };
    let set_p = top(metric_p);
    let set_a = top(metric_a);
    set_p.intersection(&set_a).count() as f64 / set_p.len() as f64
}

/// O(n^2) rank-then-Pearson Spearman.
pub fn naive_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let smaller = v.iter().filter(|&&b| b < a).count();
                let equal = v.iter().filter(|&&b| b == a).count();
                1.0 + smaller as f64 + (equal - 1) as f64 / 2.0
            })
            .collect()
    };
    let rx = rank(x);
    let ry = rank(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// Brute-force survival values by counting.
pub fn naive_survival(values: &[u64]) -> Vec<(u64, f64)> {
    let distinct: BTreeSet<u64> = values.iter().copied().collect();
    distinct
        .into_iter()
        .map(|v| {
            let count = values.iter().filter(|&&x| x >= v).count();
            (v, count as f64 / values.len() as f64)
        })
        .collect()
}

/// Brute-force CDF values by counting.
pub fn naive_ecdf(values: &[i64]) -> Vec<(i64, f64)> {
    let distinct: BTreeSet<i64> = values.iter().copied().collect();
    distinct
        .into_iter()
        .map(|v| {
            let count = values.iter().filter(|&&x| x <= v).count();
            (v, count as f64 / values.len() as f64)
        })
        .collect()
}

/// Nested-loop per-field group-by over a cohort.
pub struct NaiveFieldRow {
    pub field: String,
    pub n_cites: u64,
    pub pct_cites: f64,
    pub n_papers: u64,
    pub pct_papers: f64,
    pub pct_published: f64,
}

pub fn naive_field_stats(
    corpus: &Corpus,
    metrics: &BTreeMap<String, MetricsRow>,
    cohort: &BTreeSet<String>,
) -> Vec<NaiveFieldRow> {
    let all_fields: BTreeSet<String> = corpus
        .bib
        .values()
        .flat_map(|r| r.fields.iter().cloned())
        .collect();
    let total_cites: u64 = cohort
        .iter()
        .map(|id| metrics.get(id).map(|m| m.c_p).unwrap_or(0))
        .sum();
    let total_papers = cohort.len() as u64;
    let mut rows = Vec::new();
    for field in all_fields {
        let mut n_cites = 0u64;
        let mut n_papers = 0u64;
        let mut published = 0u64;
        for record in corpus.bib.values() {
            let in_field = record.fields.iter().any(|f| *f == field);
            if !in_field {
                continue;
            }
            published += 1;
            if cohort.contains(&record.record_id) {
                n_papers += 1;
                n_cites += metrics.get(&record.record_id).map(|m| m.c_p).unwrap_or(0);
            }
        }
        let pct = |num: u64, denom: u64| {
            if denom == 0 {
                0.0
            } else {
                num as f64 / denom as f64 * 100.0
            }
        };
        rows.push(NaiveFieldRow {
            field,
            n_cites,
            pct_cites: pct(n_cites, total_cites),
            n_papers,
            pct_papers: pct(n_papers, total_papers),
            pct_published: pct(n_papers, published),
        });
    }
    rows.sort_by(|a, b| b.n_cites.cmp(&a.n_cites).then_with(|| a.field.cmp(&b.field)));
    rows
}

pub fn curve_of(counts: &[u32]) -> CitationCurve {
    CitationCurve {
        record_id: "test".into(),
        channel: impactlag_core::metrics::Channel::Patent,
        pub_year: 1990,
        horizon: 1990 + counts.len() as i32 - 1,
        counts: counts.to_vec(),
    }
}
