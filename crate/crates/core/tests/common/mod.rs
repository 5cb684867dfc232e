#![allow(dead_code)]

use framemap::coherence::{build_coherence, CoherenceMatrix, Combiner};
use framemap::corpus::Corpus;
use framemap::embeddings::EmbeddingStore;
use framemap::synthetic::{generate, SyntheticConfig};
use framemap::topics::{TopicConfig, TopicModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub corpus: Corpus,
    pub store: EmbeddingStore<f64>,
    pub topics: TopicModel<f64>,
    pub matrix: CoherenceMatrix<f64>,
}

impl Instance {
    pub fn first_id(&self) -> &str {
        &self.corpus.documents()[0].id
    }

    pub fn last_id(&self) -> &str {
        &self.corpus.documents()[self.corpus.len() - 1].id
    }
}

/// Grouped synthetic corpus of `n` documents with random frames, dates and
/// embeddings, plus its topic model and coherence matrix.
pub fn random_instance(n: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frame_counts = vec![0usize; 9];
    for _ in 0..n {
        frame_counts[rng.random_range(0..9)] += 1;
    }
    let data = generate(&SyntheticConfig {
        frame_counts,
        dimension: 16,
        noise: rng.random_range(0.2..1.0),
        seed,
        ..Default::default()
    });
    let corpus = data.corpus.apply_frame_grouping().unwrap();
    let topics = TopicModel::from_embeddings(&data.embeddings, &TopicConfig::default(), seed).unwrap();
    let matrix = build_coherence(&corpus, &data.embeddings, &topics, Combiner::GeometricMean).unwrap();
    Instance {
        corpus,
        store: data.embeddings,
        topics,
        matrix,
    }
}
