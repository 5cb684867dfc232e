//! Narrative map extraction: endpoint selection, the flow linear program,
//! and decoding of its solution into a DAG with a main storyline.

mod decode;
mod model;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coherence::CoherenceMatrix;
use crate::corpus::Corpus;
use crate::scalar::Scalar;
use crate::simplex::LpError;
use crate::topics::TopicModel;

pub use decode::{decode_map, MapEdge, MapNode, NarrativeMap};
pub use model::{build_lp, solve_lp, ExtractionSolution, LpModel, RowClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionParams {
    /// Expected main-storyline length in events.
    pub k: usize,
    /// Fraction of topics the map must cover.
    pub coverage_threshold: f64,
    /// Minimum flow for an edge to survive decoding.
    pub edge_keep_epsilon: f64,
    /// Weight of the total-coherence tie-break term (divided by the number
    /// of candidate pairs).
    pub tie_break_lambda: f64,
    pub solver_tolerance: f64,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        Self {
            k: 6,
            coverage_threshold: 0.5,
            edge_keep_epsilon: 1e-3,
            tie_break_lambda: 1e-3,
            solver_tolerance: 1e-6,
        }
    }
}

impl ExtractionParams {
    pub fn validate(&self) -> Result<(), ExtractionError> {
        let bad = |m: &str| Err(ExtractionError::InvalidParams(m.to_string()));
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if !(self.coverage_threshold > 0.0 && self.coverage_threshold <= 1.0) {
            return bad("coverage_threshold must be in (0, 1]");
        }
        if !(self.edge_keep_epsilon > 0.0 && self.edge_keep_epsilon < 1.0) {
            return bad("edge_keep_epsilon must be in (0, 1)");
        }
        if !(self.tie_break_lambda >= 0.0 && self.tie_break_lambda.is_finite()) {
            return bad("tie_break_lambda must be finite and nonnegative");
        }
        if !(self.solver_tolerance > 0.0 && self.solver_tolerance < 1.0) {
            return bad("solver_tolerance must be in (0, 1)");
        }
        Ok(())
    }

    /// Number of topics that must be covered out of `topic_count`.
    pub fn required_topics(&self, topic_count: usize) -> usize {
        // guard against products like 0.5 * 3 landing a hair above 1.5
        (self.coverage_threshold * topic_count as f64 - 1e-9).ceil().max(0.0) as usize
    }
}

/// Constraint family blamed for an infeasible program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingClass {
    Coverage,
    Length,
    Structure,
}

impl fmt::Display for BindingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BindingClass::Coverage => "coverage",
            BindingClass::Length => "length",
            BindingClass::Structure => "structural",
        })
    }
}

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("invalid extraction parameters: {0}")]
    InvalidParams(String),
    #[error("unknown document id {0:?}")]
    UnknownDocument(String),
    #[error("no document has frame {0}")]
    NoDocumentWithFrame(u8),
    #[error("invalid endpoint spec {0:?} (expected an id or frame:N)")]
    BadEndpointSpec(String),
    #[error("start {start:?} is not before end {end:?}")]
    EndpointOrder { start: String, end: String },
    #[error("document {0:?} has no topic membership")]
    MissingTopic(String),
    #[error("linear program is infeasible; binding constraints: {binding}")]
    Infeasible { binding: BindingClass },
    #[error("solver failed: {0}")]
    Solver(LpError),
    #[error("no source-to-sink path survives an edge threshold of {epsilon}; try a smaller edge_keep_epsilon")]
    NoPath { epsilon: f64 },
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Endpoint given either as a document id or as `frame:F`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EndpointSpec {
    Id(String),
    Frame(u8),
}

impl FromStr for EndpointSpec {
    type Err = ExtractionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_prefix("frame:") {
            Some(f) => f
                .trim()
                .parse()
                .map(EndpointSpec::Frame)
                .map_err(|_| ExtractionError::BadEndpointSpec(s.to_string())),
            None if s.is_empty() => Err(ExtractionError::BadEndpointSpec(s.to_string())),
            None => Ok(EndpointSpec::Id(s.to_string())),
        }
    }
}

impl fmt::Display for EndpointSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndpointSpec::Id(id) => f.write_str(id),
            EndpointSpec::Frame(frame) => write!(f, "frame:{frame}"),
        }
    }
}

/// Resolves the start and end specs to document ids. A frame start picks the
/// earliest document with that frame, a frame end the latest.
pub fn select_endpoints(
    corpus: &Corpus,
    start: &EndpointSpec,
    end: &EndpointSpec,
) -> Result<(String, String), ExtractionError> {
    let resolve = |spec: &EndpointSpec, earliest: bool| -> Result<usize, ExtractionError> {
        match spec {
            EndpointSpec::Id(id) => corpus
                .position(id)
                .ok_or_else(|| ExtractionError::UnknownDocument(id.clone())),
            EndpointSpec::Frame(frame) => {
                let mut hits = corpus
                    .documents()
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| d.frame == *frame)
                    .map(|(i, _)| i);
                let hit = if earliest { hits.next() } else { hits.next_back() };
                hit.ok_or(ExtractionError::NoDocumentWithFrame(*frame))
            }
        }
    };
    let s = resolve(start, true)?;
    let e = resolve(end, false)?;
    let docs = corpus.documents();
    if s >= e {
        return Err(ExtractionError::EndpointOrder {
            start: docs[s].id.clone(),
            end: docs[e].id.clone(),
        });
    }
    Ok((docs[s].id.clone(), docs[e].id.clone()))
}

/// Runs the whole extraction for one pair of endpoints.
pub fn extract<T: Scalar>(
    corpus: &Corpus,
    matrix: &CoherenceMatrix<T>,
    topics: &TopicModel<T>,
    start: &EndpointSpec,
    end: &EndpointSpec,
    params: &ExtractionParams,
) -> Result<NarrativeMap<T>, ExtractionError> {
    let (source, sink) = select_endpoints(corpus, start, end)?;
    let model = build_lp(matrix, topics, &source, &sink, params)?;
    let solution = solve_lp(&model)?;
    decode_map(&solution, &model, corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use chrono::{TimeZone, Utc};

    fn corpus(frames: &[u8]) -> Corpus {
        Corpus::new(
            frames
                .iter()
                .enumerate()
                .map(|(i, &f)| {
                    Document::new(
                        format!("d{i}"),
                        "h",
                        Utc.with_ymd_and_hms(2018, 1, 1 + i as u32, 0, 0, 0).unwrap(),
                        "src",
                        f,
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ExtractionParams::default().validate().is_ok());
        for p in [
            ExtractionParams { k: 1, ..Default::default() },
            ExtractionParams { coverage_threshold: 0.0, ..Default::default() },
            ExtractionParams { coverage_threshold: 1.5, ..Default::default() },
            ExtractionParams { edge_keep_epsilon: 1.0, ..Default::default() },
        ] {
            assert!(matches!(p.validate(), Err(ExtractionError::InvalidParams(_))));
        }
        let p = ExtractionParams::default();
        assert_eq!(p.required_topics(3), 2);
        assert_eq!(p.required_topics(4), 2);
        assert_eq!(ExtractionParams { coverage_threshold: 1.0, ..p }.required_topics(5), 5);
    }

    #[test]
    fn endpoint_specs_parse() {
        assert_eq!("frame:2".parse::<EndpointSpec>().unwrap(), EndpointSpec::Frame(2));
        assert_eq!("a12".parse::<EndpointSpec>().unwrap(), EndpointSpec::Id("a12".into()));
        assert!("frame:x".parse::<EndpointSpec>().is_err());
    }

    #[test]
    fn frame_endpoints_are_earliest_and_latest() {
        let c = corpus(&[2, 1, 3, 1, 2, 1, 3]);
        let (s, e) = select_endpoints(&c, &EndpointSpec::Frame(1), &EndpointSpec::Frame(1)).unwrap();
        assert_eq!((s.as_str(), e.as_str()), ("d1", "d5"));
        let (s, e) = select_endpoints(&c, &EndpointSpec::Id("d0".into()), &EndpointSpec::Id("d4".into())).unwrap();
        assert_eq!((s.as_str(), e.as_str()), ("d0", "d4"));
    }

    #[test]
    fn endpoint_errors() {
        // frame 2 appears only after the last frame 3 document
        let c = corpus(&[3, 1, 3, 2, 2]);
        assert!(matches!(
            select_endpoints(&c, &EndpointSpec::Frame(2), &EndpointSpec::Frame(3)),
            Err(ExtractionError::EndpointOrder { .. })
        ));
        assert!(matches!(
            select_endpoints(&c, &EndpointSpec::Frame(1), &EndpointSpec::Frame(7)),
            Err(ExtractionError::NoDocumentWithFrame(7))
        ));
        assert!(matches!(
            select_endpoints(&c, &EndpointSpec::Id("zz".into()), &EndpointSpec::Frame(3)),
            Err(ExtractionError::UnknownDocument(_))
        ));
    }
}
