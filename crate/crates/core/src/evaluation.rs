//! Framing distributions, Jensen-Shannon divergence, per-map consistency
//! metrics and the start-frame x end-frame experiment grid.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::coherence::{build_coherence, CoherenceError, CoherenceMatrix, Combiner};
use crate::corpus::Corpus;
use crate::embeddings::EmbeddingStore;
use crate::extraction::{extract, EndpointSpec, ExtractionError, ExtractionParams, NarrativeMap};
use crate::json::to_canonical_string;
use crate::scalar::Scalar;
use crate::topics::TopicModel;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("cannot build a distribution from no frames")]
    EmptyFrames,
    #[error("frame {frame} outside 1..={frame_count}")]
    FrameOutOfRange { frame: u8, frame_count: u8 },
    #[error("grid needs a grouped corpus")]
    NotGrouped,
    #[error("grid needs every grouped frame; frame {0} has no documents")]
    MissingFrame(u8),
    #[error("map node {0:?} has no frame")]
    UnknownNode(String),
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
}

/// Relative frame frequencies; index `f - 1` holds frame `f`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FramingDistribution {
    pub probabilities: Vec<f64>,
}

impl FramingDistribution {
    pub fn get(&self, frame: u8) -> f64 {
        self.probabilities[frame as usize - 1]
    }

    pub fn js_divergence(&self, other: &Self) -> f64 {
        js_divergence(&self.probabilities, &other.probabilities)
    }
}

pub fn framing_distribution(
    frames: impl IntoIterator<Item = u8>,
    frame_count: u8,
) -> Result<FramingDistribution, EvaluationError> {
    let mut counts = vec![0usize; frame_count as usize];
    let mut total = 0usize;
    for frame in frames {
        if frame == 0 || frame > frame_count {
            return Err(EvaluationError::FrameOutOfRange { frame, frame_count });
        }
        counts[frame as usize - 1] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(EvaluationError::EmptyFrames);
    }
    Ok(FramingDistribution {
        probabilities: counts.iter().map(|&c| c as f64 / total as f64).collect(),
    })
}

/// Jensen-Shannon divergence in bits, so the result lies in [0, 1].
pub fn js_divergence<T: Scalar>(p: &[T], q: &[T]) -> T {
    assert_eq!(p.len(), q.len(), "distributions over different supports");
    let half = T::half();
    let ln2 = T::of(std::f64::consts::LN_2);
    // 0 log 0 = 0; m > 0 wherever a > 0
    let kl_to_mid = |a: T, m: T| if a > T::zero() { a * (a / m).ln() } else { T::zero() };
    let mut total = T::zero();
    for (&a, &b) in p.iter().zip(q) {
        let m = (a + b) * half;
        total += half * (kl_to_mid(a, m) + kl_to_mid(b, m));
    }
    (total / ln2).max(T::zero()).min(T::one())
}

/// Share of map nodes in the endpoint frame(s).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndpointMatch {
    /// Source and sink share `frame`.
    Shared { frame: u8, rate: f64 },
    PerEndpoint {
        source_frame: u8,
        source_rate: f64,
        sink_frame: u8,
        sink_rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyMetrics {
    /// Fraction of edges whose two events share a frame.
    pub edge_agreement: f64,
    pub endpoint_match: EndpointMatch,
    /// Consecutive main-storyline pairs whose frames differ.
    pub storyline_transitions: usize,
}

pub fn frame_consistency<T: Scalar>(map: &NarrativeMap<T>) -> Result<ConsistencyMetrics, EvaluationError> {
    let frame = |id: &str| map.frame_of(id).ok_or_else(|| EvaluationError::UnknownNode(id.to_string()));
    let mut agree = 0usize;
    for e in &map.edges {
        if frame(&e.from)? == frame(&e.to)? {
            agree += 1;
        }
    }
    let edge_agreement = if map.edges.is_empty() {
        1.0
    } else {
        agree as f64 / map.edges.len() as f64
    };
    let share = |f: u8| {
        map.nodes.iter().filter(|n| n.frame == f).count() as f64 / map.nodes.len().max(1) as f64
    };
    let (sf, ef) = (frame(&map.source)?, frame(&map.sink)?);
    let endpoint_match = if sf == ef {
        EndpointMatch::Shared { frame: sf, rate: share(sf) }
    } else {
        EndpointMatch::PerEndpoint {
            source_frame: sf,
            source_rate: share(sf),
            sink_frame: ef,
            sink_rate: share(ef),
        }
    };
    let mut storyline_transitions = 0;
    for w in map.main_storyline.windows(2) {
        if frame(&w[0])? != frame(&w[1])? {
            storyline_transitions += 1;
        }
    }
    Ok(ConsistencyMetrics {
        edge_agreement,
        endpoint_match,
        storyline_transitions,
    })
}

/// Mean, median and sample standard deviation (divisor N - 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

pub fn summary_stats(values: &[f64]) -> Option<SummaryStats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some(SummaryStats { mean, median, std })
}

/// Framing metrics of one map against its corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapReport {
    pub source: String,
    pub sink: String,
    pub nodes: usize,
    pub main_storyline_length: usize,
    pub distribution: FramingDistribution,
    pub jsd: f64,
    #[serde(flatten)]
    pub consistency: ConsistencyMetrics,
}

pub fn evaluate_map<T: Scalar>(
    map: &NarrativeMap<T>,
    corpus_distribution: &FramingDistribution,
) -> Result<MapReport, EvaluationError> {
    let frame_count = corpus_distribution.probabilities.len() as u8;
    let distribution = framing_distribution(map.nodes.iter().map(|n| n.frame), frame_count)?;
    Ok(MapReport {
        source: map.source.clone(),
        sink: map.sink.clone(),
        nodes: map.nodes.len(),
        main_storyline_length: map.main_storyline.len(),
        jsd: distribution.js_divergence(corpus_distribution),
        distribution,
        consistency: frame_consistency(map)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok(MapReport),
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub start_frame: u8,
    pub end_frame: u8,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

/// One metric laid out as a frame x frame table with marginal averages over
/// the cells that succeeded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridTable {
    /// `table[start - 1][end - 1]`; `None` for failed cells.
    pub table: Vec<Vec<Option<f64>>>,
    pub row_means: Vec<Option<f64>>,
    pub column_means: Vec<Option<f64>>,
    pub mean: Option<f64>,
}

impl GridTable {
    fn new(table: Vec<Vec<Option<f64>>>) -> Self {
        let mean_of = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        let f = table.len();
        let row_means = (0..f)
            .map(|r| mean_of(table[r].iter().flatten().copied().collect()))
            .collect();
        let column_means = (0..f)
            .map(|c| mean_of(table.iter().filter_map(|row| row[c]).collect()))
            .collect();
        let mean = mean_of(table.iter().flatten().flatten().copied().collect());
        Self {
            table,
            row_means,
            column_means,
            mean,
        }
    }

    fn values(&self) -> Vec<f64> {
        self.table.iter().flatten().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub documents: usize,
    pub distribution: FramingDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FramingReport {
    pub params: ExtractionParams,
    pub corpus: CorpusSummary,
    /// Row-major over (start frame, end frame).
    pub cells: Vec<GridCell>,
    pub sizes: GridTable,
    pub size_stats: Option<SummaryStats>,
    pub jsd: GridTable,
}

impl FramingReport {
    pub fn to_json(&self) -> String {
        to_canonical_string(self).expect("report serializes")
    }

    /// Both grids as `grid,start_frame,end_frame,value` rows; failed cells
    /// have an empty value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("grid,start_frame,end_frame,value\n");
        for (name, grid) in [("size", &self.sizes), ("jsd", &self.jsd)] {
            for (r, row) in grid.table.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    let value = match (name, v) {
                        (_, None) => String::new(),
                        ("size", Some(v)) => format!("{v:.0}"),
                        (_, Some(v)) => format!("{v:.9}"),
                    };
                    out.push_str(&format!("{name},{},{},{value}\n", r + 1, c + 1));
                }
            }
        }
        out
    }
}

/// Report plus the maps behind each successful cell.
#[derive(Debug, Clone)]
pub struct GridRun<T: Scalar = f64> {
    pub report: FramingReport,
    pub maps: Vec<Option<NarrativeMap<T>>>,
}

/// Extracts one map per (start frame, end frame) pair and evaluates it.
/// Cell failures are recorded in the report rather than aborting the run.
pub fn run_grid<T: Scalar>(
    corpus: &Corpus,
    store: &EmbeddingStore<T>,
    topics: &TopicModel<T>,
    params: &ExtractionParams,
    combiner: Combiner,
) -> Result<GridRun<T>, EvaluationError> {
    let matrix = build_coherence(corpus, store, topics, combiner)?;
    run_grid_with_matrix(corpus, &matrix, topics, params)
}

pub fn run_grid_with_matrix<T: Scalar>(
    corpus: &Corpus,
    matrix: &CoherenceMatrix<T>,
    topics: &TopicModel<T>,
    params: &ExtractionParams,
) -> Result<GridRun<T>, EvaluationError> {
    if !corpus.is_grouped() {
        return Err(EvaluationError::NotGrouped);
    }
    let frame_count = corpus.frame_count();
    for f in 1..=frame_count {
        if !corpus.frames().any(|x| x == f) {
            return Err(EvaluationError::MissingFrame(f));
        }
    }
    let corpus_distribution = framing_distribution(corpus.frames(), frame_count)?;

    let pairs: Vec<(u8, u8)> = (1..=frame_count)
        .flat_map(|s| (1..=frame_count).map(move |e| (s, e)))
        .collect();
    let results: Vec<Result<NarrativeMap<T>, ExtractionError>> = pairs
        .par_iter()
        .map(|&(s, e)| extract(corpus, matrix, topics, &EndpointSpec::Frame(s), &EndpointSpec::Frame(e), params))
        .collect();

    let f = frame_count as usize;
    let mut sizes = vec![vec![None; f]; f];
    let mut jsds = vec![vec![None; f]; f];
    let mut cells = Vec::with_capacity(pairs.len());
    let mut maps = Vec::with_capacity(pairs.len());
    for (&(s, e), result) in pairs.iter().zip(results) {
        let outcome = match result {
            Ok(map) => {
                let report = evaluate_map(&map, &corpus_distribution)?;
                sizes[s as usize - 1][e as usize - 1] = Some(report.nodes as f64);
                jsds[s as usize - 1][e as usize - 1] = Some(report.jsd);
                maps.push(Some(map));
                CellOutcome::Ok(report)
            }
            Err(err) => {
                maps.push(None);
                CellOutcome::Failed { error: err.to_string() }
            }
        };
        cells.push(GridCell {
            start_frame: s,
            end_frame: e,
            outcome,
        });
    }
    let sizes = GridTable::new(sizes);
    let size_stats = summary_stats(&sizes.values());
    Ok(GridRun {
        report: FramingReport {
            params: *params,
            corpus: CorpusSummary {
                documents: corpus.len(),
                distribution: corpus_distribution,
            },
            cells,
            sizes,
            size_stats,
            jsd: GridTable::new(jsds),
        },
        maps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distribution_examples() {
        let d = framing_distribution([1, 1, 2, 3], 3).unwrap();
        assert_eq!(d.probabilities, vec![0.5, 0.25, 0.25]);
        assert_eq!(framing_distribution([2], 3).unwrap().probabilities, vec![0.0, 1.0, 0.0]);
        assert!(matches!(framing_distribution([], 3), Err(EvaluationError::EmptyFrames)));
        assert!(framing_distribution([4], 3).is_err());

        let grouped = std::iter::repeat_n(1, 626)
            .chain(std::iter::repeat_n(2, 202))
            .chain(std::iter::repeat_n(3, 472));
        let d = framing_distribution(grouped, 3).unwrap();
        for (got, want) in d.probabilities.iter().zip([0.4815, 0.1554, 0.3631]) {
            assert!((got - want).abs() < 1e-4);
        }
    }

    #[test]
    fn jsd_examples() {
        assert_eq!(js_divergence(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
        assert_eq!(js_divergence(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert!((js_divergence(&[0.5, 0.5], &[0.25, 0.75]) - 0.04879f64).abs() < 1e-4);
        assert!((js_divergence(&[0.5f32, 0.5], &[0.25, 0.75]) - 0.04879).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn jsd_symmetric_and_bounded(raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..6)) {
            let sp: f64 = raw.iter().map(|r| r.0).sum();
            let sq: f64 = raw.iter().map(|r| r.1).sum();
            prop_assume!(sp > 0.0 && sq > 0.0);
            let p: Vec<f64> = raw.iter().map(|r| r.0 / sp).collect();
            let q: Vec<f64> = raw.iter().map(|r| r.1 / sq).collect();
            let d = js_divergence(&p, &q);
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, js_divergence(&q, &p));
        }

        #[test]
        fn distribution_sums_to_one(frames in prop::collection::vec(1u8..=3, 1..200)) {
            let d = framing_distribution(frames, 3).unwrap();
            prop_assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stats_of_printed_sizes() {
        let s = summary_stats(&[24.0, 21.0, 19.0, 16.0, 17.0, 22.0, 22.0, 22.0, 15.0]).unwrap();
        assert!((s.mean - 19.777_777_8).abs() < 1e-6);
        assert_eq!(s.median, 21.0);
        assert!((s.std - 3.15).abs() < 0.005);
        assert_eq!(summary_stats(&[2.0, 4.0]).unwrap().median, 3.0);
        assert!(summary_stats(&[]).is_none());
    }

    /// Chain map over the given frames, in order.
    fn chain_map(frames: &[u8]) -> NarrativeMap<f64> {
        use crate::extraction::{MapEdge, MapNode};
        use chrono::{Duration, TimeZone, Utc};
        let t0 = Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap();
        let ids: Vec<String> = (0..frames.len()).map(|i| format!("e{i:02}")).collect();
        NarrativeMap {
            params: ExtractionParams::default(),
            source: ids[0].clone(),
            sink: ids[ids.len() - 1].clone(),
            objective: 1.0,
            nodes: frames
                .iter()
                .enumerate()
                .map(|(i, &frame)| MapNode {
                    id: ids[i].clone(),
                    headline: String::new(),
                    timestamp: t0 + Duration::days(i as i64),
                    source: String::new(),
                    frame,
                    on_main: true,
                })
                .collect(),
            edges: ids
                .windows(2)
                .map(|w| MapEdge { from: w[0].clone(), to: w[1].clone(), flow: 1.0, coherence: 1.0 })
                .collect(),
            main_storyline: ids,
        }
    }

    #[test]
    fn consistency_examples() {
        let uniform = frame_consistency(&chain_map(&[2; 5])).unwrap();
        assert_eq!(uniform.edge_agreement, 1.0);
        assert_eq!(uniform.storyline_transitions, 0);

        let alternating = frame_consistency(&chain_map(&[1, 2, 1, 2])).unwrap();
        assert_eq!(alternating.edge_agreement, 0.0);
        assert_eq!(alternating.storyline_transitions, 3);
        assert!(matches!(alternating.endpoint_match, EndpointMatch::PerEndpoint { source_rate: 0.5, sink_rate: 0.5, .. }));

        let mut frames = vec![1u8; 24];
        for f in frames.iter_mut().skip(5).step_by(4).take(5) {
            *f = 3;
        }
        assert_eq!(frames.iter().filter(|&&f| f == 1).count(), 19);
        let m = frame_consistency(&chain_map(&frames)).unwrap();
        let EndpointMatch::Shared { frame: 1, rate } = m.endpoint_match else {
            panic!("endpoints share frame 1");
        };
        assert!((rate - 0.792).abs() < 0.001);
    }

    #[test]
    fn grid_table_averages() {
        let g = GridTable::new(vec![
            vec![Some(1.0), Some(2.0), None],
            vec![Some(3.0), None, None],
            vec![None, None, None],
        ]);
        assert_eq!(g.row_means, vec![Some(1.5), Some(3.0), None]);
        assert_eq!(g.column_means, vec![Some(2.0), Some(2.0), None]);
        assert_eq!(g.mean, Some(2.0));
    }
}
