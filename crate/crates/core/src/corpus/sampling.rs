use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Corpus, CorpusError, Document};

/// Hamilton (largest-remainder) apportionment of `n` seats over strata of the
/// given sizes. Leftover seats go to the largest fractional remainders; ties
/// favour the earlier stratum.
pub fn largest_remainder_quotas(sizes: &[usize], n: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    // exact integer arithmetic: quota_i = n * size_i / total
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| n * s / total).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = n * sizes[a] % total;
        let rb = n * sizes[b] % total;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n - assigned) {
        quotas[i] += 1;
    }
    quotas
}

/// Draws `n` documents stratified by frame label. Per-frame quotas come from
/// [`largest_remainder_quotas`]; within a frame, documents are drawn uniformly
/// without replacement from a ChaCha8 stream seeded with `seed`.
pub fn stratified_sample(corpus: &Corpus, n: usize, seed: u64) -> Result<Corpus, CorpusError> {
    if n == 0 {
        return Err(CorpusError::EmptySample);
    }
    if n > corpus.len() {
        return Err(CorpusError::SampleTooLarge {
            requested: n,
            available: corpus.len(),
        });
    }
    let mut strata: BTreeMap<u8, Vec<&Document>> = BTreeMap::new();
    for doc in corpus.documents() {
        strata.entry(doc.frame).or_default().push(doc);
    }
    let sizes: Vec<usize> = strata.values().map(Vec::len).collect();
    let quotas = largest_remainder_quotas(&sizes, n);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(n);
    for (members, quota) in strata.values().zip(quotas) {
        let mut picks = rand::seq::index::sample(&mut rng, members.len(), quota).into_vec();
        picks.sort_unstable();
        chosen.extend(picks.into_iter().map(|i| members[i].clone()));
    }
    Corpus::with_state(chosen, corpus.is_grouped())
}
