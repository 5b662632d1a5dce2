//! Per-paper yearly citation curves and the per-paper dynamics metrics
//! computed from them: totals, temporal profile, cross-channel lags, and the
//! Beauty Coefficient.
//!
//! A paper published in calendar year `t_p` observed until horizon `T` has a
//! curve `c_t` for `t = 0..=L`, `L = T - t_p`, one per channel: citations
//! from patents (grant-year dated) and citations from other papers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("publication year {pub_year} is after horizon {horizon}")]
    PubYearAfterHorizon { pub_year: i32, horizon: i32 },
    #[error("lag profile undefined: the {0:?} channel has no citations")]
    UndefinedChannel(Channel),
}

/// Citation source channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    /// Citations from patents (`P`).
    Patent,
    /// Citations from other papers (`A`).
    Paper,
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Channel::Patent => f.write_str("P"),
            Channel::Paper => f.write_str("A"),
        }
    }
}

/// Yearly citation counts for one paper and one channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationCurve {
    pub record_id: String,
    pub channel: Channel,
    pub pub_year: i32,
    pub horizon: i32,
    /// `counts[t]` is the number of citations in the `t`-th year after
    /// publication; length `L + 1`.
    pub counts: Vec<u32>,
}

impl CitationCurve {
    /// `L = T - t_p`, the last observable year offset.
    pub fn last_offset(&self) -> usize {
        self.counts.len() - 1
    }
}

/// A built curve plus the count of events outside the observation window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveBuild {
    pub curve: CitationCurve,
    /// Events dated before publication or after the horizon.
    pub dropped: usize,
}

/// Buckets citation events (calendar years) into a yearly curve. Events
/// before publication or after the horizon are dropped and tallied, so
/// `sum(counts) + dropped == events.len()`.
pub fn build_curve(
    record_id: &str,
    channel: Channel,
    events: &[i32],
    pub_year: i32,
    horizon: i32,
) -> Result<CurveBuild, MetricsError> {
    if pub_year > horizon {
        return Err(MetricsError::PubYearAfterHorizon { pub_year, horizon });
    }
    let len = (horizon - pub_year) as usize + 1;
    let mut counts = vec![0u32; len];
    let mut dropped = 0usize;
    for &year in events {
        if year < pub_year || year > horizon {
            dropped += 1;
        } else {
            counts[(year - pub_year) as usize] += 1;
        }
    }
    Ok(CurveBuild {
        curve: CitationCurve {
            record_id: record_id.to_string(),
            channel,
            pub_year,
            horizon,
            counts,
        },
        dropped,
    })
}

/// Total citations over the observation window.
pub fn total_citations(curve: &CitationCurve) -> u64 {
    curve.counts.iter().map(|&c| u64::from(c)).sum()
}

/// Temporal parameters of one citation curve. All fields are `None` when
/// the curve has no citations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalProfile {
    /// Years to the first citation.
    pub t_f: Option<u32>,
    /// Years to the maximum yearly citations (earliest argmax).
    pub t_m: Option<u32>,
    /// The maximum yearly count `c_{t_m}`.
    pub c_max: Option<u32>,
    /// Whether yearly citations dropped strictly below `c_{t_m} / 2` after
    /// the peak.
    pub half_decayed: Option<bool>,
    /// First year offset with `c_t < c_{t_m} / 2`, defined iff
    /// `half_decayed`.
    pub t_h: Option<u32>,
    /// Years above half-maximum after the peak (`L - t_m` when the curve
    /// never decayed, `t_h - t_m` otherwise).
    pub tau: Option<u32>,
}

impl TemporalProfile {
    pub fn has_citations(&self) -> bool {
        self.t_f.is_some()
    }
}

/// Computes the temporal profile. The half-maximum comparison is strict and
/// exact: `c_t < c_max / 2` is evaluated as `2 * c_t < c_max` in integers.
pub fn temporal_profile(curve: &CitationCurve) -> TemporalProfile {
    let counts = &curve.counts;
    let Some(t_f) = counts.iter().position(|&c| c > 0) else {
        return TemporalProfile {
            t_f: None,
            t_m: None,
            c_max: None,
            half_decayed: None,
            t_h: None,
            tau: None,
        };
    };
    let (t_m, &c_max) = counts
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.cmp(b).then(j.cmp(i)))
        .expect("curve is non-empty");
    let last = counts.len() - 1;
    let t_h = (t_m + 1..=last).find(|&t| 2 * u64::from(counts[t]) < u64::from(c_max));
    let tau = match t_h {
        Some(t_h) => t_h - t_m,
        None => last - t_m,
    };
    TemporalProfile {
        t_f: Some(t_f as u32),
        t_m: Some(t_m as u32),
        c_max: Some(c_max),
        half_decayed: Some(t_h.is_some()),
        t_h: t_h.map(|t| t as u32),
        tau: Some(tau as u32),
    }
}

/// Cross-channel lags: how many years the first and the peak patent
/// citation trail the paper-citation events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagProfile {
    /// `t_f^P - t_f^A`.
    pub delta_t_f: i64,
    /// `t_m^P - t_m^A`.
    pub delta_t_m: i64,
}

/// Componentwise profile differences; errors when either channel has no
/// citations.
pub fn lag_profile(
    patent: &TemporalProfile,
    paper: &TemporalProfile,
) -> Result<LagProfile, MetricsError> {
    let (Some(tf_p), Some(tm_p)) = (patent.t_f, patent.t_m) else {
        return Err(MetricsError::UndefinedChannel(Channel::Patent));
    };
    let (Some(tf_a), Some(tm_a)) = (paper.t_f, paper.t_m) else {
        return Err(MetricsError::UndefinedChannel(Channel::Paper));
    };
    Ok(LagProfile {
        delta_t_f: i64::from(tf_p) - i64::from(tf_a),
        delta_t_m: i64::from(tm_p) - i64::from(tm_a),
    })
}

/// Beauty Coefficient of one curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeautyScore {
    pub value: f64,
    pub channel: Channel,
}

/// Computes the Beauty Coefficient: with `l_t` the line from `(0, c_0)` to
/// `(t_m, c_max)`, `B = sum_{t=0}^{t_m} (l_t - c_t) / max(1, c_t)`. By
/// convention `B = 0` when the peak is at `t = 0`; `t_m` uses the earliest
/// argmax.
pub fn beauty_coefficient(curve: &CitationCurve) -> BeautyScore {
    let counts = &curve.counts;
    let (t_m, &c_max) = counts
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.cmp(b).then(j.cmp(i)))
        .expect("curve is non-empty");
    if t_m == 0 {
        return BeautyScore {
            value: 0.0,
            channel: curve.channel,
        };
    }
    let c0 = f64::from(counts[0]);
    let slope = (f64::from(c_max) - c0) / t_m as f64;
    let value = (0..=t_m)
        .map(|t| {
            let line = slope * t as f64 + c0;
            let c_t = f64::from(counts[t]);
            (line - c_t) / c_t.max(1.0)
        })
        .sum();
    BeautyScore {
        value,
        channel: curve.channel,
    }
}

/// One row of the per-paper metrics artifact (`metrics.jsonl`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub record_id: String,
    #[serde(rename = "C_P")]
    pub c_p: u64,
    #[serde(rename = "C_A")]
    pub c_a: u64,
    #[serde(rename = "B_P")]
    pub b_p: Option<f64>,
    #[serde(rename = "B_A")]
    pub b_a: Option<f64>,
    #[serde(rename = "t_f_P")]
    pub t_f_p: Option<u32>,
    #[serde(rename = "t_f_A")]
    pub t_f_a: Option<u32>,
    #[serde(rename = "t_m_P")]
    pub t_m_p: Option<u32>,
    #[serde(rename = "t_m_A")]
    pub t_m_a: Option<u32>,
    #[serde(rename = "I_P")]
    pub i_p: Option<u8>,
    #[serde(rename = "I_A")]
    pub i_a: Option<u8>,
    #[serde(rename = "tau_P")]
    pub tau_p: Option<u32>,
    #[serde(rename = "tau_A")]
    pub tau_a: Option<u32>,
    pub dt_f: Option<i64>,
    pub dt_m: Option<i64>,
}

/// Rolls one paper's two curves into a metrics row. Profile and Beauty
/// columns are null for a channel without citations; the lag columns are
/// null unless both channels have citations.
pub fn metrics_row(patent_curve: &CitationCurve, paper_curve: &CitationCurve) -> MetricsRow {
    let profile_p = temporal_profile(patent_curve);
    let profile_a = temporal_profile(paper_curve);
    let lag = lag_profile(&profile_p, &profile_a).ok();
    let beauty = |curve: &CitationCurve, profile: &TemporalProfile| {
        profile
            .has_citations()
            .then(|| beauty_coefficient(curve).value)
    };
    MetricsRow {
        record_id: patent_curve.record_id.clone(),
        c_p: total_citations(patent_curve),
        c_a: total_citations(paper_curve),
        b_p: beauty(patent_curve, &profile_p),
        b_a: beauty(paper_curve, &profile_a),
        t_f_p: profile_p.t_f,
        t_f_a: profile_a.t_f,
        t_m_p: profile_p.t_m,
        t_m_a: profile_a.t_m,
        i_p: profile_p.half_decayed.map(u8::from),
        i_a: profile_a.half_decayed.map(u8::from),
        tau_p: profile_p.tau,
        tau_a: profile_a.tau,
        dt_f: lag.map(|l| l.delta_t_f),
        dt_m: lag.map(|l| l.delta_t_m),
    }
}
