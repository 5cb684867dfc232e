//! News corpus data model: documents, frame taxonomy, ingestion and
//! stratified sampling.

mod io;
mod sampling;
mod taxonomy;

use std::cmp::Ordering;
use std::collections::HashSet;

use chrono::{DateTime, Utc};
use thiserror::Error;

pub use io::{export_corpus, parse_corpus, parse_timestamp, format_timestamp, CorpusFormat};
pub use sampling::{largest_remainder_quotas, stratified_sample};
pub use taxonomy::{Frame, FrameTaxonomy};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("row {row}: invalid date {value:?}")]
    InvalidDate { row: usize, value: String },
    #[error("row {row}: frame {frame} outside 1..=9")]
    FrameOutOfRange { row: usize, frame: i64 },
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("row {row}: empty document id")]
    EmptyId { row: usize },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("document {id:?}: frame {frame} invalid for a {state} corpus")]
    InconsistentFrame {
        id: String,
        frame: u8,
        state: &'static str,
    },
    #[error("corpus is already grouped")]
    AlreadyGrouped,
    #[error("sample size must be positive")]
    EmptySample,
    #[error("sample size {requested} exceeds corpus size {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("input is not valid UTF-8")]
    Utf8,
}

/// One news event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub headline: String,
    pub timestamp: DateTime<Utc>,
    pub source: String,
    /// Raw frame (1..=9) or grouped frame (1..=3).
    pub frame: u8,
    /// Key into the embedding store when it differs from `id`.
    pub embedding_ref: Option<String>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        headline: impl Into<String>,
        timestamp: DateTime<Utc>,
        source: impl Into<String>,
        frame: u8,
    ) -> Self {
        Self {
            id: id.into(),
            headline: headline.into(),
            timestamp,
            source: source.into(),
            frame,
            embedding_ref: None,
        }
    }

    pub fn embedding_key(&self) -> &str {
        self.embedding_ref.as_deref().unwrap_or(&self.id)
    }

    /// Chronological order: timestamp first, id as tie-breaker.
    pub fn chrono_cmp(&self, other: &Self) -> Ordering {
        self.timestamp
            .cmp(&other.timestamp)
            .then_with(|| self.id.cmp(&other.id))
    }
}

/// Documents in strict (timestamp, id) order plus the frame taxonomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    taxonomy: FrameTaxonomy,
    grouped: bool,
}

impl Corpus {
    /// Builds a corpus, sorting documents chronologically. The grouped flag is
    /// inferred: a corpus is raw as soon as any frame exceeds 3.
    pub fn new(documents: Vec<Document>) -> Result<Self, CorpusError> {
        let grouped = documents.iter().all(|d| d.frame <= 3);
        Self::with_state(documents, grouped)
    }

    /// Builds a corpus with an explicit grouped flag.
    pub fn with_state(mut documents: Vec<Document>, grouped: bool) -> Result<Self, CorpusError> {
        let taxonomy = FrameTaxonomy::gvfc();
        let limit = taxonomy.frame_count(grouped);
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if doc.id.is_empty() {
                return Err(CorpusError::EmptyId { row: 0 });
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.id.clone()));
            }
            if doc.frame == 0 || doc.frame > limit {
                return Err(CorpusError::InconsistentFrame {
                    id: doc.id.clone(),
                    frame: doc.frame,
                    state: if grouped { "grouped" } else { "raw" },
                });
            }
        }
        documents.sort_by(Document::chrono_cmp);
        Ok(Self {
            documents,
            taxonomy,
            grouped,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn taxonomy(&self) -> &FrameTaxonomy {
        &self.taxonomy
    }

    pub fn is_grouped(&self) -> bool {
        self.grouped
    }

    /// Number of frames in this corpus's label space (3 or 9).
    pub fn frame_count(&self) -> u8 {
        self.taxonomy.frame_count(self.grouped)
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.documents.iter().position(|d| d.id == id)
    }

    pub fn frames(&self) -> impl Iterator<Item = u8> + '_ {
        self.documents.iter().map(|d| d.frame)
    }

    /// Replaces every raw frame with its grouped frame. Order is unchanged.
    pub fn apply_frame_grouping(&self) -> Result<Self, CorpusError> {
        if self.grouped {
            return Err(CorpusError::AlreadyGrouped);
        }
        let documents = self
            .documents
            .iter()
            .map(|d| Document {
                frame: self
                    .taxonomy
                    .group_of(d.frame)
                    .expect("raw frames validated at construction"),
                ..d.clone()
            })
            .collect();
        Ok(Self {
            documents,
            taxonomy: self.taxonomy.clone(),
            grouped: true,
        })
    }
}

/// Free-function form of [`Corpus::apply_frame_grouping`].
pub fn apply_frame_grouping(corpus: &Corpus) -> Result<Corpus, CorpusError> {
    corpus.apply_frame_grouping()
}
