//! Whole-string reference resolution behind a pluggable trait.
//!
//! The default shipped implementation is file-backed: a fixture map from
//! query strings to record ids, so the pipeline and its tests stay hermetic.
//! A network adapter can implement [`Resolver`] without touching the
//! cascade.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::IngestError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResolverError {
    /// Transport failure. Distinguished from "no match": the cascade skips
    /// the resolution stage and falls through to local matching.
    #[error("resolver unavailable: {0}")]
    Unavailable(String),
}

/// Resolves an entire reference string to at most one record id.
pub trait Resolver: Send + Sync {
    fn resolve(&self, raw_npr: &str) -> Result<Option<String>, ResolverError>;
}

/// Resolver that never matches; the hermetic default.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullResolver;

impl Resolver for NullResolver {
    fn resolve(&self, _raw_npr: &str) -> Result<Option<String>, ResolverError> {
        Ok(None)
    }
}

/// File-backed resolver over exact (whitespace-trimmed) reference strings.
#[derive(Debug, Clone, Default)]
pub struct FixtureResolver {
    map: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct FixtureRow {
    term: String,
    record_id: String,
}

impl FixtureResolver {
    /// Loads a `resolver.jsonl` fixture: `{"term": str, "record_id": str}`
    /// per line.
    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        let mut map = BTreeMap::new();
        let display = path.display().to_string();
        super::for_each_jsonl::<FixtureRow, _>(path, |line, row| {
            let term = row.term.trim().to_string();
            if map.insert(term.clone(), row.record_id).is_some() {
                return Err(IngestError::DuplicateKey {
                    path: display.clone(),
                    line,
                    key: term,
                });
            }
            Ok(())
        })?;
        Ok(Self { map })
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        Self {
            map: pairs
                .into_iter()
                .map(|(t, r)| (t.into().trim().to_string(), r.into()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl Resolver for FixtureResolver {
    fn resolve(&self, raw_npr: &str) -> Result<Option<String>, ResolverError> {
        Ok(self.map.get(raw_npr.trim()).cloned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_hit_and_miss() {
        let r = FixtureResolver::from_pairs([("Bowie JU, et al. Science 247", "PMID:2315699")]);
        assert_eq!(
            r.resolve("  Bowie JU, et al. Science 247 ").unwrap(),
            Some("PMID:2315699".to_string())
        );
        assert_eq!(r.resolve("unknown reference").unwrap(), None);
    }

    #[test]
    fn fixture_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("resolver.jsonl");
        std::fs::write(
            &path,
            "{\"term\":\"a ref\",\"record_id\":\"PMID:1\"}\n{\"term\":\"b ref\",\"record_id\":\"PMID:2\"}\n",
        )
        .unwrap();
        let r = FixtureResolver::from_path(&path).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.resolve("a ref").unwrap(), Some("PMID:1".to_string()));
    }

    #[test]
    fn duplicate_terms_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("resolver.jsonl");
        std::fs::write(
            &path,
            "{\"term\":\"a\",\"record_id\":\"PMID:1\"}\n{\"term\":\"a\",\"record_id\":\"PMID:2\"}\n",
        )
        .unwrap();
        assert!(matches!(
            FixtureResolver::from_path(&path),
            Err(IngestError::DuplicateKey { .. })
        ));
    }
}
