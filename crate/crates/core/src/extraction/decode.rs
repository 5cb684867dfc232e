use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{ExtractionError, ExtractionParams, ExtractionSolution, LpModel};
use crate::corpus::{format_timestamp, parse_timestamp, Corpus};
use crate::json::to_canonical_string;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapNode {
    pub id: String,
    pub headline: String,
    pub timestamp: DateTime<Utc>,
    pub source: String,
    pub frame: u8,
    pub on_main: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapEdge<T: Scalar = f64> {
    pub from: String,
    pub to: String,
    pub flow: T,
    pub coherence: T,
}

/// Decoded narrative map: a DAG with a single source and sink, flow-weighted
/// edges and a highlighted main storyline.
#[derive(Debug, Clone, PartialEq)]
pub struct NarrativeMap<T: Scalar = f64> {
    pub params: ExtractionParams,
    pub source: String,
    pub sink: String,
    /// Optimal bottleneck coherence of the program.
    pub objective: T,
    /// Chronological order.
    pub nodes: Vec<MapNode>,
    /// Ordered by (from, to) chronological position.
    pub edges: Vec<MapEdge<T>>,
    pub main_storyline: Vec<String>,
}

/// Turns a program solution into a map: keep edges carrying at least
/// `edge_keep_epsilon` flow, prune dangling intermediates until stable,
/// then pick the main storyline as the widest source-to-sink path (largest
/// minimum flow). Among widest paths the one with the highest total
/// coherence wins, then the lexicographically smallest id sequence.
pub fn decode_map<T: Scalar>(
    solution: &ExtractionSolution<T>,
    model: &LpModel<T>,
    corpus: &Corpus,
) -> Result<NarrativeMap<T>, ExtractionError> {
    let n = model.ids.len();
    let sink = n - 1;
    let eps = T::of(model.params.edge_keep_epsilon);
    let mut kept: Vec<usize> = (0..model.edges.len())
        .filter(|&k| solution.flows[k] >= eps)
        .collect();

    loop {
        let mut indeg = vec![0usize; n];
        let mut outdeg = vec![0usize; n];
        for &k in &kept {
            let (i, j) = model.edges[k];
            outdeg[i] += 1;
            indeg[j] += 1;
        }
        let dangling: Vec<bool> = (0..n)
            .map(|v| v != 0 && v != sink && (indeg[v] == 0 || outdeg[v] == 0))
            .collect();
        let before = kept.len();
        kept.retain(|&k| {
            let (i, j) = model.edges[k];
            !dangling[i] && !dangling[j]
        });
        if kept.len() == before {
            break;
        }
    }
    if !kept.iter().any(|&k| model.edges[k].0 == 0) {
        return Err(ExtractionError::NoPath {
            epsilon: model.params.edge_keep_epsilon,
        });
    }

    let storyline = main_storyline(model, &solution.flows, &kept);

    let on_main: BTreeSet<usize> = storyline.iter().copied().collect();
    let mut present = BTreeSet::new();
    for &k in &kept {
        let (i, j) = model.edges[k];
        present.insert(i);
        present.insert(j);
    }
    let mut nodes = Vec::with_capacity(present.len());
    for &v in &present {
        let id = &model.ids[v];
        let doc = corpus
            .get(id)
            .ok_or_else(|| ExtractionError::UnknownDocument(id.clone()))?;
        nodes.push(MapNode {
            id: doc.id.clone(),
            headline: doc.headline.clone(),
            timestamp: doc.timestamp,
            source: doc.source.clone(),
            frame: doc.frame,
            on_main: on_main.contains(&v),
        });
    }
    let edges = kept
        .iter()
        .map(|&k| {
            let (i, j) = model.edges[k];
            MapEdge {
                from: model.ids[i].clone(),
                to: model.ids[j].clone(),
                flow: solution.flows[k],
                coherence: model.coherence[k],
            }
        })
        .collect();

    Ok(NarrativeMap {
        params: model.params,
        source: model.ids[0].clone(),
        sink: model.ids[sink].clone(),
        objective: solution.bottleneck,
        nodes,
        edges,
        main_storyline: storyline.iter().map(|&v| model.ids[v].clone()).collect(),
    })
}

/// Window positions along the main storyline. `kept` must describe a graph
/// where every surviving intermediate lies on some source-to-sink path.
fn main_storyline<T: Scalar>(model: &LpModel<T>, flows: &[T], kept: &[usize]) -> Vec<usize> {
    let n = model.ids.len();
    let sink = n - 1;

    // widest-path width into each node; edges are sorted by tail position so
    // a single pass in that order is topological
    let mut width: Vec<Option<T>> = vec![None; n];
    width[0] = Some(T::infinity());
    for &k in kept {
        let (i, j) = model.edges[k];
        if let Some(w) = width[i] {
            let through = w.min(flows[k]);
            if width[j].is_none_or(|cur| through > cur) {
                width[j] = Some(through);
            }
        }
    }
    let bottleneck = width[sink].expect("source reaches sink after pruning");

    // best total coherence to the sink using only edges at least as wide
    let wide: Vec<usize> = kept.iter().copied().filter(|&k| flows[k] >= bottleneck).collect();
    let mut best: Vec<Option<T>> = vec![None; n];
    best[sink] = Some(T::zero());
    for &k in wide.iter().rev() {
        let (i, j) = model.edges[k];
        if let Some(b) = best[j] {
            let total = b + model.coherence[k];
            if best[i].is_none_or(|cur| total > cur) {
                best[i] = Some(total);
            }
        }
    }

    let mut path = vec![0];
    let mut at = 0;
    while at != sink {
        let next = wide
            .iter()
            .filter(|&&k| model.edges[k].0 == at)
            .filter_map(|&k| {
                let j = model.edges[k].1;
                best[j].map(|b| (j, b + model.coherence[k]))
            })
            .max_by(|a, b| {
                a.1.partial_cmp(&b.1)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| model.ids[b.0].cmp(&model.ids[a.0]))
            })
            .expect("wide edges reach the sink")
            .0;
        path.push(next);
        at = next;
    }
    path
}

impl<T: Scalar> NarrativeMap<T> {
    pub fn node(&self, id: &str) -> Option<&MapNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn frame_of(&self, id: &str) -> Option<u8> {
        self.node(id).map(|n| n.frame)
    }

    /// Node activation: inflow, or outflow for the source.
    pub fn activation(&self, id: &str) -> T {
        let incident = |e: &&MapEdge<T>| {
            if id == self.source {
                e.from == id
            } else {
                e.to == id
            }
        };
        self.edges.iter().filter(incident).map(|e| e.flow).sum()
    }

    /// Checks the structural invariants: chronological edges between known
    /// nodes, the source as the only node without inflow, the sink as the
    /// only node without outflow, and a main storyline that runs from source
    /// to sink along existing edges.
    pub fn validate(&self) -> Result<(), String> {
        let position: BTreeMap<&str, usize> =
            self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        if position.len() != self.nodes.len() {
            return Err("duplicate node id".into());
        }
        for w in self.nodes.windows(2) {
            if (w[0].timestamp, &w[0].id) >= (w[1].timestamp, &w[1].id) {
                return Err(format!("nodes {} and {} out of chronological order", w[0].id, w[1].id));
            }
        }
        let mut indeg = vec![0usize; self.nodes.len()];
        let mut outdeg = vec![0usize; self.nodes.len()];
        let mut edge_set = BTreeSet::new();
        for e in &self.edges {
            let (Some(&a), Some(&b)) = (position.get(e.from.as_str()), position.get(e.to.as_str())) else {
                return Err(format!("edge {} -> {} references a missing node", e.from, e.to));
            };
            if a >= b {
                return Err(format!("edge {} -> {} is not chronological", e.from, e.to));
            }
            outdeg[a] += 1;
            indeg[b] += 1;
            edge_set.insert((e.from.as_str(), e.to.as_str()));
        }
        let roots: Vec<&str> = (0..self.nodes.len())
            .filter(|&i| indeg[i] == 0)
            .map(|i| self.nodes[i].id.as_str())
            .collect();
        let leaves: Vec<&str> = (0..self.nodes.len())
            .filter(|&i| outdeg[i] == 0)
            .map(|i| self.nodes[i].id.as_str())
            .collect();
        if roots != [self.source.as_str()] {
            return Err(format!("nodes without inflow: {roots:?}"));
        }
        if leaves != [self.sink.as_str()] {
            return Err(format!("nodes without outflow: {leaves:?}"));
        }
        let main = &self.main_storyline;
        if main.first() != Some(&self.source) || main.last() != Some(&self.sink) {
            return Err("main storyline does not run from source to sink".into());
        }
        for w in main.windows(2) {
            if !edge_set.contains(&(w[0].as_str(), w[1].as_str())) {
                return Err(format!("main storyline step {} -> {} is not an edge", w[0], w[1]));
            }
        }
        for n in &self.nodes {
            if n.on_main != main.contains(&n.id) {
                return Err(format!("on_main flag of {} disagrees with the storyline", n.id));
            }
        }
        Ok(())
    }

    /// Canonical JSON: fixed key order and nine-decimal floats.
    pub fn to_json(&self) -> String {
        to_canonical_string(&MapRecord::from_map(self)).expect("map serializes")
    }

    pub fn from_json(raw: &str) -> Result<Self, ExtractionError> {
        let record: MapRecord = serde_json::from_str(raw)?;
        let map = record.into_map()?;
        map.validate().map_err(ExtractionError::InvalidMap)?;
        Ok(map)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapRecord {
    params: ExtractionParams,
    source: String,
    sink: String,
    objective: f64,
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    main_storyline: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: String,
    headline: String,
    date: String,
    source: String,
    frame: u8,
    on_main: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    from: String,
    to: String,
    flow: f64,
    coherence: f64,
}

impl MapRecord {
    fn from_map<T: Scalar>(map: &NarrativeMap<T>) -> Self {
        Self {
            params: map.params,
            source: map.source.clone(),
            sink: map.sink.clone(),
            objective: map.objective.as_f64(),
            nodes: map
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    id: n.id.clone(),
                    headline: n.headline.clone(),
                    date: format_timestamp(&n.timestamp),
                    source: n.source.clone(),
                    frame: n.frame,
                    on_main: n.on_main,
                })
                .collect(),
            edges: map
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    flow: e.flow.as_f64(),
                    coherence: e.coherence.as_f64(),
                })
                .collect(),
            main_storyline: map.main_storyline.clone(),
        }
    }

    fn into_map<T: Scalar>(self) -> Result<NarrativeMap<T>, ExtractionError> {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for n in self.nodes {
            let timestamp = parse_timestamp(&n.date)
                .ok_or_else(|| ExtractionError::InvalidMap(format!("bad date {:?} for {}", n.date, n.id)))?;
            nodes.push(MapNode {
                id: n.id,
                headline: n.headline,
                timestamp,
                source: n.source,
                frame: n.frame,
                on_main: n.on_main,
            });
        }
        Ok(NarrativeMap {
            params: self.params,
            source: self.source,
            sink: self.sink,
            objective: T::of(self.objective),
            nodes,
            edges: self
                .edges
                .into_iter()
                .map(|e| MapEdge {
                    from: e.from,
                    to: e.to,
                    flow: T::of(e.flow),
                    coherence: T::of(e.coherence),
                })
                .collect(),
            main_storyline: self.main_storyline,
        })
    }
}
