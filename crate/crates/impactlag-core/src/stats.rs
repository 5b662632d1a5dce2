//! Corpus-level statistics over per-paper metrics: survival distributions,
//! discrete power-law fits, rank correlation, top-percentile overlap,
//! log-binned 2-D histograms, and empirical CDFs.
//!
//! Everything here is a pure function over immutable inputs with
//! deterministic output ordering.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {min} observations, got {n}")]
    InsufficientData { n: usize, min: usize },
    #[error("degenerate variance: one argument is constant under ranking")]
    DegenerateVariance,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("empty id universe")]
    EmptyUniverse,
    #[error("metric maps disagree on id \"{key}\"")]
    UniverseMismatch { key: String },
    #[error("percentile {p} outside (0, 100)")]
    InvalidPercentile { p: f64 },
    #[error("no x_min candidate leaves a tail of at least {floor} points with spread")]
    InsufficientTail { floor: usize },
    #[error("power-law fitting requires strictly positive values")]
    NonPositiveValue,
    #[error("heat map requires C_P >= 1 for every pair")]
    NonPositiveCP,
}

/// Survival function P(X >= x) over the distinct values of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    /// (value, P(X >= value)), ascending in value; starts at 1.0.
    pub points: Vec<(u64, f64)>,
}

/// Survival distribution of a sample of positive integers.
pub fn survival_function(values: &[u64]) -> Result<SurvivalCurve, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        // Count of values >= v is everything from the first occurrence on.
        points.push((v, (sorted.len() - i) as f64 / n));
        while i < sorted.len() && sorted[i] == v {
            i += 1;
        }
    }
    Ok(SurvivalCurve { points })
}

/// Empirical CDF table P(X <= x) over the distinct values of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfTable {
    /// (value, P(X <= value)), ascending in value; ends at 1.0.
    pub points: Vec<(i64, f64)>,
}

/// Empirical cumulative distribution of a sample.
pub fn ecdf(values: &[i64]) -> Result<CdfTable, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        while i < sorted.len() && sorted[i] == v {
            i += 1;
        }
        points.push((v, i as f64 / n));
    }
    Ok(CdfTable { points })
}

/// A discrete power-law fit `p(x) ∝ (x / x_min)^(-alpha)` for `x >= x_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub x_min: u64,
    /// Kolmogorov–Smirnov distance at the chosen `x_min`.
    pub ks: f64,
    /// Tail sample size at the chosen `x_min`.
    pub n_tail: usize,
}

/// Options for [`fit_power_law`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawOptions {
    /// Inclusive candidate range for `x_min`. `None` scans all distinct
    /// sample values up to the 90th percentile.
    pub x_min_range: Option<(u64, u64)>,
    /// Minimum tail size required at the selected `x_min`.
    pub tail_floor: usize,
    /// Cap on the number of scanned candidates (evenly subsampled).
    pub max_candidates: usize,
}

impl Default for PowerLawOptions {
    fn default() -> Self {
        Self {
            x_min_range: None,
            tail_floor: 50,
            max_candidates: 200,
        }
    }
}

/// Model survival P(X >= x) under the continuous approximation of the
/// discrete power law (the -0.5 offset).
fn model_survival(x: f64, x_min: u64, alpha: f64) -> f64 {
    ((x - 0.5) / (x_min as f64 - 0.5)).powf(-(alpha - 1.0))
}

fn mle_alpha(tail: &[u64], x_min: u64) -> f64 {
    let shift = x_min as f64 - 0.5;
    let log_sum: f64 = tail.iter().map(|&x| (x as f64 / shift).ln()).sum();
    1.0 + tail.len() as f64 / log_sum
}

fn ks_distance(tail: &[u64], x_min: u64, alpha: f64) -> f64 {
    // `tail` is sorted ascending. Evaluate at the distinct values using the
    // right-continuous CDF convention on both sides.
    let n = tail.len() as f64;
    let mut max_d = 0.0f64;
    let mut i = 0;
    while i < tail.len() {
        let v = tail[i];
        while i < tail.len() && tail[i] == v {
            i += 1;
        }
        let empirical = i as f64 / n; // P(X <= v)
        let fitted = 1.0 - model_survival(v as f64 + 1.0, x_min, alpha);
        max_d = max_d.max((empirical - fitted).abs());
    }
    max_d
}

/// Fits a discrete power law by maximum likelihood with a KS scan over
/// candidate `x_min` values: for each candidate,
/// `alpha = 1 + n / sum(ln(x_i / (x_min - 0.5)))` over the tail, and the
/// candidate minimizing the KS distance wins (ties break to the smaller
/// `x_min`). Candidates whose tail is smaller than the floor or has no
/// spread are skipped.
pub fn fit_power_law(values: &[u64], opts: &PowerLawOptions) -> Result<PowerLawFit, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if values.contains(&0) {
        return Err(StatsError::NonPositiveValue);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();

    let mut distinct: Vec<u64> = Vec::new();
    for &v in &sorted {
        if distinct.last() != Some(&v) {
            distinct.push(v);
        }
    }

    let candidates: Vec<u64> = match opts.x_min_range {
        Some((lo, hi)) => distinct.iter().copied().filter(|&v| v >= lo && v <= hi).collect(),
        None => {
            // Nearest-rank 90th percentile.
            let p90 = sorted[((sorted.len() as f64 * 0.9).ceil() as usize).max(1) - 1];
            distinct.iter().copied().filter(|&v| v <= p90).collect()
        }
    };
    let candidates: Vec<u64> = if candidates.len() > opts.max_candidates {
        (0..opts.max_candidates)
            .map(|i| candidates[i * candidates.len() / opts.max_candidates])
            .collect()
    } else {
        candidates
    };

    let best = candidates
        .par_iter()
        .filter_map(|&x_min| {
            let start = sorted.partition_point(|&v| v < x_min);
            let tail = &sorted[start..];
            if tail.len() < opts.tail_floor.max(2) {
                return None;
            }
            if tail.first() == tail.last() {
                return None; // no spread
            }
            let alpha = mle_alpha(tail, x_min);
            let ks = ks_distance(tail, x_min, alpha);
            Some(PowerLawFit {
                alpha,
                x_min,
                ks,
                n_tail: tail.len(),
            })
        })
        .reduce_with(|a, b| {
            // Deterministic: min KS, then min x_min.
            if (b.ks, b.x_min) < (a.ks, a.x_min) {
                b
            } else {
                a
            }
        });
    best.ok_or(StatsError::InsufficientTail {
        floor: opts.tail_floor,
    })
}

/// Draws `n` samples from a discrete power law with the given exponent and
/// lower cutoff, by inverse-transform sampling of the continuous
/// approximation. Deterministic for a fixed seed.
pub fn sample_power_law(alpha: f64, x_min: u64, n: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = x_min as f64 - 0.5;
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            (shift * (1.0 - u).powf(-1.0 / (alpha - 1.0)) + 0.5).floor() as u64
        })
        .collect()
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 averaged over the tie group.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of average ranks, with
/// ties sharing their average rank.
pub fn spearman_rank(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(StatsError::InsufficientData { n: x.len(), min: 3 });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = rx.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        let da = a - mean;
        let db = b - mean;
        cov += da * db;
        var_x += da * da;
        var_y += db * db;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    Ok(cov / (var_x * var_y).sqrt())
}

/// One point of the top-percentile overlap curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapPoint {
    /// Top share in percent: `p = 1` compares the top 1% by each metric.
    pub percentile: f64,
    pub threshold_p: f64,
    pub threshold_a: f64,
    /// `|M_P ∩ M_A| / |M_P|`.
    pub s: f64,
}

fn top_set(metric: &BTreeMap<String, f64>, k: usize) -> (BTreeSet<&str>, f64) {
    let mut values: Vec<f64> = metric.values().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let threshold = values[k - 1];
    let set = metric
        .iter()
        .filter(|(_, &v)| v >= threshold)
        .map(|(id, _)| id.as_str())
        .collect();
    (set, threshold)
}

/// Overlap similarity between the top-`p`-percent sets of two metrics over
/// the same id universe. The threshold is the nearest-rank top-k value and
/// ties at the threshold are included, so the sets may exceed `k` ids.
pub fn topk_overlap(
    metric_p: &BTreeMap<String, f64>,
    metric_a: &BTreeMap<String, f64>,
    percentile: f64,
) -> Result<OverlapPoint, StatsError> {
    if metric_p.is_empty() {
        return Err(StatsError::EmptyUniverse);
    }
    if !(0.0..100.0).contains(&percentile) || percentile <= 0.0 {
        return Err(StatsError::InvalidPercentile { p: percentile });
    }
    if metric_p.len() != metric_a.len() {
        return Err(StatsError::LengthMismatch {
            left: metric_p.len(),
            right: metric_a.len(),
        });
    }
    for key in metric_p.keys() {
        if !metric_a.contains_key(key) {
            return Err(StatsError::UniverseMismatch { key: key.clone() });
        }
    }
    if metric_p.values().chain(metric_a.values()).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = metric_p.len();
    let k = ((percentile / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    let (set_p, threshold_p) = top_set(metric_p, k);
    let (set_a, threshold_a) = top_set(metric_a, k);
    let overlap = set_p.intersection(&set_a).count();
    Ok(OverlapPoint {
        percentile,
        threshold_p,
        threshold_a,
        s: overlap as f64 / set_p.len() as f64,
    })
}

/// 2-D histogram in log10 space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2D {
    /// Strictly increasing x bin edges (log10(C_A + 1)).
    pub x_edges: Vec<f64>,
    /// Strictly increasing y bin edges (log10(C_P)).
    pub y_edges: Vec<f64>,
    /// `counts[xi][yi]`.
    pub counts: Vec<Vec<u64>>,
}

impl Histogram2D {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

fn edges_over(min: f64, max: f64, bins: usize) -> Vec<f64> {
    let hi = if max > min { max } else { min + 1.0 };
    (0..=bins)
        .map(|i| min + (hi - min) * i as f64 / bins as f64)
        .collect()
}

fn bin_of(v: f64, edges: &[f64]) -> usize {
    let bins = edges.len() - 1;
    let lo = edges[0];
    let hi = edges[bins];
    let idx = ((v - lo) / (hi - lo) * bins as f64).floor() as usize;
    idx.min(bins - 1) // right-open bins, last bin closed
}

/// Bins (C_A, C_P) pairs over (log10(C_A + 1), log10(C_P)). Every pair must
/// have `C_P >= 1` (the cohort is patent-cited).
pub fn heatmap_log(
    pairs: &[(u64, u64)],
    x_bins: usize,
    y_bins: usize,
) -> Result<Histogram2D, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if pairs.iter().any(|&(_, c_p)| c_p == 0) {
        return Err(StatsError::NonPositiveCP);
    }
    let xs: Vec<f64> = pairs.iter().map(|&(c_a, _)| ((c_a + 1) as f64).log10()).collect();
    let ys: Vec<f64> = pairs.iter().map(|&(_, c_p)| (c_p as f64).log10()).collect();
    let (x_min, x_max) = bounds(&xs);
    let (y_min, y_max) = bounds(&ys);
    let x_edges = edges_over(x_min, x_max, x_bins);
    let y_edges = edges_over(y_min, y_max, y_bins);
    let mut counts = vec![vec![0u64; y_bins]; x_bins];
    for (x, y) in xs.iter().zip(&ys) {
        counts[bin_of(*x, &x_edges)][bin_of(*y, &y_edges)] += 1;
    }
    Ok(Histogram2D {
        x_edges,
        y_edges,
        counts,
    })
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}
