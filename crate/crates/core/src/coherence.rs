//! Pairwise coherence between chronologically ordered events, combining
//! embedding similarity with topical similarity.

use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::Corpus;
use crate::embeddings::{cosine_similarity, EmbeddingStore};
use crate::scalar::Scalar;
use crate::topics::TopicModel;

#[derive(Debug, Error)]
pub enum CoherenceError {
    #[error("text similarity {0} outside [-1, 1]")]
    TextOutOfRange(f64),
    #[error("topic similarity {0} outside [0, 1]")]
    TopicOutOfRange(f64),
    #[error("document {0:?} has no embedding")]
    MissingEmbedding(String),
    #[error("document {0:?} has no topic membership")]
    MissingTopic(String),
}

/// How rescaled text similarity and topic similarity are merged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Combiner {
    /// `sqrt(s' * t)`
    #[default]
    GeometricMean,
    /// `s' * t`
    Product,
}

impl Combiner {
    /// Combines a raw cosine text similarity in [-1, 1] with a topic
    /// similarity in [0, 1]. The cosine is first rescaled to [0, 1].
    pub fn combine<T: Scalar>(self, text_sim: T, topic_sim: T) -> Result<T, CoherenceError> {
        if !(text_sim >= -T::one() && text_sim <= T::one()) {
            return Err(CoherenceError::TextOutOfRange(text_sim.as_f64()));
        }
        if !(topic_sim >= T::zero() && topic_sim <= T::one()) {
            return Err(CoherenceError::TopicOutOfRange(topic_sim.as_f64()));
        }
        let rescaled = (text_sim + T::one()) * T::half();
        Ok(match self {
            Combiner::GeometricMean => (rescaled * topic_sim).sqrt(),
            Combiner::Product => rescaled * topic_sim,
        })
    }
}

/// Default (geometric-mean) coherence of one edge.
pub fn edge_coherence<T: Scalar>(text_sim: T, topic_sim: T) -> Result<T, CoherenceError> {
    Combiner::GeometricMean.combine(text_sim, topic_sim)
}

/// Scores for every pair `(i, j)` with `i` strictly before `j` in
/// (timestamp, id) order, stored as a packed upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMatrix<T: Scalar = f64> {
    ids: Vec<String>,
    scores: Vec<T>,
    /// (rescaled text similarity, topic similarity) per pair, for audit.
    components: Vec<(T, T)>,
    combiner: Combiner,
}

impl<T: Scalar> CoherenceMatrix<T> {
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.ids.len());
        let n = self.ids.len();
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn pair_count(&self) -> usize {
        self.scores.len()
    }

    pub fn combiner(&self) -> Combiner {
        self.combiner
    }

    /// Coherence of the pair at chronological positions `i < j`.
    pub fn score(&self, i: usize, j: usize) -> Option<T> {
        (i < j && j < self.ids.len()).then(|| self.scores[self.index(i, j)])
    }

    pub fn components(&self, i: usize, j: usize) -> Option<(T, T)> {
        (i < j && j < self.ids.len()).then(|| self.components[self.index(i, j)])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// All scored pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let n = self.ids.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j, self.scores[self.index(i, j)])))
    }

    /// Audit dump with header `i,j,text_sim,topic_sim,coherence`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,text_sim,topic_sim,coherence\n");
        for (i, j, score) in self.pairs() {
            let (text, topic) = self.components[self.index(i, j)];
            let _ = writeln!(
                out,
                "{},{},{:.9},{:.9},{:.9}",
                self.ids[i],
                self.ids[j],
                text.as_f64(),
                topic.as_f64(),
                score.as_f64()
            );
        }
        out
    }

    /// Builds a matrix from explicit pair scores, bypassing embeddings.
    /// `score(i, j)` is queried for every chronological pair.
    pub fn from_fn(ids: Vec<String>, mut score: impl FnMut(usize, usize) -> T) -> Self {
        let n = ids.len();
        let mut scores = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                scores.push(score(i, j));
            }
        }
        let components = scores.iter().map(|&s| (s, s)).collect();
        Self {
            ids,
            scores,
            components,
            combiner: Combiner::GeometricMean,
        }
    }
}

/// Scores every chronological pair of the corpus.
pub fn build_coherence<T: Scalar>(
    corpus: &Corpus,
    store: &EmbeddingStore<T>,
    topics: &TopicModel<T>,
    combiner: Combiner,
) -> Result<CoherenceMatrix<T>, CoherenceError> {
    let docs = corpus.documents();
    let mut vectors = Vec::with_capacity(docs.len());
    let mut memberships = Vec::with_capacity(docs.len());
    for d in docs {
        vectors.push(
            store
                .get(d.embedding_key())
                .ok_or_else(|| CoherenceError::MissingEmbedding(d.id.clone()))?,
        );
        memberships.push(
            topics
                .membership
                .get(&d.id)
                .ok_or_else(|| CoherenceError::MissingTopic(d.id.clone()))?,
        );
    }

    let n = docs.len();
    let mut scores = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let mut components = Vec::with_capacity(scores.capacity());
    for i in 0..n {
        for j in i + 1..n {
            let text = cosine_similarity(vectors[i], vectors[j])
                .expect("store vectors are nonzero with a shared dimension");
            let topic = cosine_similarity(memberships[i], memberships[j])
                .expect("membership rows are nonzero with a shared dimension")
                .max(T::zero());
            let score = combiner.combine(text, topic)?;
            scores.push(score);
            components.push(((text + T::one()) * T::half(), topic));
        }
    }
    Ok(CoherenceMatrix {
        ids: docs.iter().map(|d| d.id.clone()).collect(),
        scores,
        components,
        combiner,
    })
}
