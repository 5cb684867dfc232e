//! Seeded synthetic news corpora with frame-correlated headlines and
//! embeddings, for smoke tests and demos where real data is unavailable.

use chrono::{Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::{Corpus, Document};
use crate::embeddings::EmbeddingStore;

/// Articles per raw frame in the Gun Violence Frame Corpus (1300 total).
pub const GVFC_FRAME_COUNTS: [usize; 9] = [38, 215, 373, 65, 137, 114, 237, 41, 80];

const KEYWORDS: [&[&str]; 9] = [
    &["gun rights", "Second Amendment", "right to bear arms", "concealed carry"],
    &["background checks", "assault weapons ban", "bump stock rule", "red flag law"],
    &["Congress", "the senator", "the governor", "lawmakers"],
    &["mental health", "the shooter's treatment", "psychiatric care", "warning signs"],
    &["school safety", "campus security", "armed guards", "lockdown drills"],
    &["racial bias", "community leaders", "civil rights groups", "minority neighborhoods"],
    &["a new poll", "voters", "public support", "student marchers"],
    &["hunting culture", "video games", "church groups", "the community"],
    &["gun makers", "retailers", "insurance costs", "investors"],
];

const VERBS: [&str; 6] = ["debate", "push for", "question", "respond to", "weigh", "rally around"];
const TAILS: [&str; 6] = [
    "after the shooting",
    "amid renewed pressure",
    "as the week closes",
    "in a heated hearing",
    "ahead of the vote",
    "following the vigil",
];
const OUTLETS: [&str; 5] = ["Daily Ledger", "Metro Wire", "Evening Post", "Capital Report", "Valley News"];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    /// Documents per raw frame (frame `i + 1` gets `frame_counts[i]`).
    pub frame_counts: Vec<usize>,
    pub dimension: usize,
    /// Spread of each document around its frame centre.
    pub noise: f64,
    /// Distance of a raw frame's centre from its grouped frame's centre.
    pub subframe_offset: f64,
    pub year: i32,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            frame_counts: GVFC_FRAME_COUNTS.to_vec(),
            dimension: 32,
            noise: 0.35,
            subframe_offset: 0.4,
            year: 2018,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    /// Raw (ungrouped) frame labels.
    pub corpus: Corpus,
    pub embeddings: EmbeddingStore<f64>,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Generates the corpus. Documents of the same grouped frame cluster in
/// embedding space, with a finer split by raw frame; dates fall uniformly
/// within the year at midnight UTC.
pub fn generate(config: &SyntheticConfig) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dim = config.dimension.max(2);
    let grouping = |raw: usize| match raw {
        1..=3 => 0,
        4 | 5 => 1,
        _ => 2,
    };
    let group_centres: Vec<Vec<f64>> = (0..3).map(|_| unit(gaussian(&mut rng, dim))).collect();
    let frame_centres: Vec<Vec<f64>> = (1..=config.frame_counts.len())
        .map(|raw| {
            let offset = unit(gaussian(&mut rng, dim));
            group_centres[grouping(raw)]
                .iter()
                .zip(offset)
                .map(|(c, o)| c + config.subframe_offset * o)
                .collect()
        })
        .collect();

    let mut drafts: Vec<(u8, Vec<f64>, String)> = Vec::new();
    for (f, &count) in config.frame_counts.iter().enumerate() {
        let words = KEYWORDS[f % KEYWORDS.len()];
        for _ in 0..count {
            let noise = gaussian(&mut rng, dim);
            let scale = config.noise / (dim as f64).sqrt();
            let v: Vec<f64> = frame_centres[f].iter().zip(noise).map(|(c, e)| c + scale * e).collect();
            let headline = format!(
                "{} {} {} {}",
                capitalize(words[rng.random_range(0..words.len())]),
                VERBS[rng.random_range(0..VERBS.len())],
                words[rng.random_range(0..words.len())],
                TAILS[rng.random_range(0..TAILS.len())]
            );
            drafts.push((f as u8 + 1, v, headline));
        }
    }
    drafts.shuffle(&mut rng);

    let start = Utc.with_ymd_and_hms(config.year, 1, 1, 0, 0, 0).unwrap();
    let days = Utc
        .with_ymd_and_hms(config.year + 1, 1, 1, 0, 0, 0)
        .unwrap()
        .signed_duration_since(start)
        .num_days();
    let width = drafts.len().to_string().len().max(4);
    let mut docs = Vec::with_capacity(drafts.len());
    let mut vectors = Vec::with_capacity(drafts.len());
    for (i, (frame, v, headline)) in drafts.into_iter().enumerate() {
        let id = format!("doc-{i:0width$}");
        let ts = start + Duration::days(rng.random_range(0..days));
        let outlet = OUTLETS[rng.random_range(0..OUTLETS.len())];
        docs.push(Document::new(id.clone(), headline, ts, outlet, frame));
        vectors.push((id, v));
    }
    SyntheticData {
        corpus: Corpus::with_state(docs, false).expect("generated ids are unique"),
        embeddings: EmbeddingStore::from_vectors(vectors).expect("gaussian vectors are nonzero"),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::cosine_similarity;

    #[test]
    fn default_corpus_matches_frame_counts() {
        let data = generate(&SyntheticConfig::default());
        assert_eq!(data.corpus.len(), 1300);
        for (f, &count) in GVFC_FRAME_COUNTS.iter().enumerate() {
            assert_eq!(data.corpus.frames().filter(|&x| x as usize == f + 1).count(), count);
        }
        assert_eq!(data.embeddings.len(), 1300);
        let grouped = data.corpus.apply_frame_grouping().unwrap();
        let g: Vec<usize> = (1..=3).map(|f| grouped.frames().filter(|&x| x == f).count()).collect();
        assert_eq!(g, vec![626, 202, 472]);
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate(&SyntheticConfig::default());
        let b = generate(&SyntheticConfig::default());
        assert_eq!(a.corpus, b.corpus);
        let c = generate(&SyntheticConfig { seed: 7, ..Default::default() });
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn embeddings_correlate_with_frames() {
        let data = generate(&SyntheticConfig::default());
        let docs = data.corpus.documents();
        let (mut same, mut same_n, mut diff, mut diff_n) = (0.0, 0, 0.0, 0);
        for i in (0..docs.len()).step_by(7) {
            for j in (1..docs.len()).step_by(11) {
                if i == j {
                    continue;
                }
                let s = cosine_similarity(
                    data.embeddings.get(&docs[i].id).unwrap(),
                    data.embeddings.get(&docs[j].id).unwrap(),
                )
                .unwrap();
                if docs[i].frame == docs[j].frame {
                    same += s;
                    same_n += 1;
                } else {
                    diff += s;
                    diff_n += 1;
                }
            }
        }
        assert!(same / same_n as f64 > diff / diff_n as f64 + 0.2);
    }
}
