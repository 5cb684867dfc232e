//! Topical structure of a corpus: planar projection, density clustering and
//! soft topic memberships.

mod dbscan;
mod pca;

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{cosine_similarity, EmbeddingStore};
use crate::scalar::Scalar;

pub use dbscan::{cluster_points, Clustering, DensityParams, NOISE};
pub use pca::{project_2d, Projection};

pub type Point2<T> = [T; 2];

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("no documents to project")]
    Empty,
    #[error("PCA needs at least 3 documents, got {0}; supply precomputed coordinates instead")]
    TooFewForPca(usize),
    #[error("no precomputed point for {0:?}")]
    MissingPoint(String),
    #[error("unknown document id {0:?}")]
    UnknownId(String),
    #[error("topic sidecar line {line}: {message}")]
    Sidecar { line: usize, message: String },
    #[error("duplicate id {0:?} in topic sidecar")]
    DuplicateId(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Projection, clustering and smoothing settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicConfig<T: Scalar = f64> {
    pub projection: Projection<T>,
    pub density: DensityParams,
    pub alpha: T,
}

impl<T: Scalar> Default for TopicConfig<T> {
    fn default() -> Self {
        Self {
            projection: Projection::Pca,
            density: DensityParams::default(),
            alpha: T::of(0.01),
        }
    }
}

/// Per-document planar position, cluster label and topic membership.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel<T: Scalar = f64> {
    pub points2d: BTreeMap<String, Point2<T>>,
    pub cluster_of: BTreeMap<String, i32>,
    pub topic_count: usize,
    pub membership: BTreeMap<String, Vec<T>>,
}

/// One-hot rows for cluster members, uniform rows for noise, then additive
/// smoothing by `alpha` and renormalization.
pub fn topic_membership<T: Scalar>(
    cluster_of: &BTreeMap<String, i32>,
    topic_count: usize,
    alpha: T,
) -> BTreeMap<String, Vec<T>> {
    let t = topic_count.max(1);
    let uniform = T::one() / T::of_usize(t);
    cluster_of
        .iter()
        .map(|(id, &label)| {
            let mut row = if label >= 0 && (label as usize) < t {
                let mut r = vec![T::zero(); t];
                r[label as usize] = T::one();
                r
            } else {
                vec![uniform; t]
            };
            let total = row.iter().fold(T::zero(), |acc, &x| acc + x + alpha);
            row.iter_mut().for_each(|x| *x = (*x + alpha) / total);
            (id.clone(), row)
        })
        .collect()
}

#[derive(Debug, Deserialize, Serialize)]
struct SidecarRecord {
    id: String,
    x: f64,
    y: f64,
    cluster: i64,
}

impl<T: Scalar> TopicModel<T> {
    /// Assembles a model from planar points and raw cluster labels (negative
    /// means noise). Labels are renumbered by ascending smallest member id;
    /// an all-noise input collapses to one catch-all topic.
    pub fn from_assignments(
        points2d: BTreeMap<String, Point2<T>>,
        labels: &BTreeMap<String, i64>,
        alpha: T,
    ) -> Result<Self, TopicError> {
        let ids: Vec<&String> = points2d.keys().collect();
        let mut raw: Vec<i32> = Vec::with_capacity(ids.len());
        for id in &ids {
            let l = *labels
                .get(*id)
                .ok_or_else(|| TopicError::UnknownId((*id).clone()))?;
            raw.push(if l < 0 { NOISE } else { l.min(i32::MAX as i64) as i32 });
        }
        let mut topic_count = dbscan::renumber_by_first_member(&mut raw);
        if topic_count == 0 {
            raw.iter_mut().for_each(|l| *l = 0);
            topic_count = 1;
        }
        let cluster_of: BTreeMap<String, i32> = ids.into_iter().cloned().zip(raw).collect();
        let membership = topic_membership(&cluster_of, topic_count, alpha);
        Ok(Self {
            points2d,
            cluster_of,
            topic_count,
            membership,
        })
    }

    /// Projects the embeddings, clusters the plane and derives memberships.
    pub fn from_embeddings(
        store: &EmbeddingStore<T>,
        config: &TopicConfig<T>,
        seed: u64,
    ) -> Result<Self, TopicError> {
        let points2d = project_2d(store, &config.projection, seed)?;
        let Clustering {
            cluster_of,
            topic_count,
        } = cluster_points(&points2d, config.density);
        let membership = topic_membership(&cluster_of, topic_count, config.alpha);
        Ok(Self {
            points2d,
            cluster_of,
            topic_count,
            membership,
        })
    }

    /// Reads precomputed coordinates and clusters from JSONL lines of the
    /// form `{"id": .., "x": .., "y": .., "cluster": ..}`.
    pub fn from_sidecar(raw: &[u8], alpha: T) -> Result<Self, TopicError> {
        let mut points = BTreeMap::new();
        let mut labels = BTreeMap::new();
        for (i, line) in raw.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SidecarRecord =
                serde_json::from_str(&line).map_err(|e| TopicError::Sidecar {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if points.contains_key(&rec.id) {
                return Err(TopicError::DuplicateId(rec.id));
            }
            points.insert(rec.id.clone(), [T::of(rec.x), T::of(rec.y)]);
            labels.insert(rec.id, rec.cluster);
        }
        if points.is_empty() {
            return Err(TopicError::Empty);
        }
        Self::from_assignments(points, &labels, alpha)
    }

    /// Writes the sidecar JSONL form of this model.
    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        for (id, p) in &self.points2d {
            let rec = SidecarRecord {
                id: id.clone(),
                x: p[0].as_f64(),
                y: p[1].as_f64(),
                cluster: i64::from(self.cluster_of[id]),
            };
            out.push_str(&serde_json::to_string(&rec).expect("sidecar record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn contains(&self, id: &str) -> bool {
        self.membership.contains_key(id)
    }

    pub fn membership_of(&self, id: &str) -> Result<&[T], TopicError> {
        self.membership
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| TopicError::UnknownId(id.to_string()))
    }

    /// Cosine similarity of the two documents' membership vectors.
    pub fn topic_similarity(&self, i: &str, j: &str) -> Result<T, TopicError> {
        let a = self.membership_of(i)?;
        let b = self.membership_of(j)?;
        let s = cosine_similarity(a, b).expect("membership rows are nonzero and equal length");
        Ok(s.max(T::zero()))
    }
}

/// Free-function form of [`TopicModel::topic_similarity`].
pub fn topic_similarity<T: Scalar>(model: &TopicModel<T>, i: &str, j: &str) -> Result<T, TopicError> {
    model.topic_similarity(i, j)
}
