//! Writes the synthetic fixture corpus and embeddings under `fixtures/`.
//!
//!     cargo run -p framemap --example make_fixtures

use std::fs;
use std::path::Path;

use framemap::corpus::{export_corpus, CorpusFormat};
use framemap::synthetic::{generate, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    fs::create_dir_all(&dir)?;
    let data = generate(&SyntheticConfig::default());
    fs::write(dir.join("synthetic_corpus.csv"), export_corpus(&data.corpus, CorpusFormat::Csv)?)?;
    let mut jsonl = Vec::new();
    data.embeddings.write_jsonl(&mut jsonl)?;
    fs::write(dir.join("synthetic_embeddings.jsonl"), jsonl)?;
    println!("wrote {} documents to {}", data.corpus.len(), dir.display());
    Ok(())
}
