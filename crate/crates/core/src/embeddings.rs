//! Embedding vectors keyed by document id, cosine similarity, and a
//! deterministic hashing encoder used when no sentence encoder is available.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{self, Scalar};

const MAGIC: &[u8; 4] = b"FMEB";

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("no embeddings")]
    Empty,
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("embedding {id:?} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("vectors have different dimensions ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("duplicate embedding id {0:?}")]
    DuplicateId(String),
    #[error("embedding {0:?} is the zero vector")]
    ZeroVector(String),
    #[error("zero vector has no direction")]
    ZeroInput,
    #[error("embedding {0:?} contains a non-finite value")]
    NonFinite(String),
    #[error("cannot encode empty text")]
    EmptyText,
    #[error("encoder dimension must be at least 8, got {0}")]
    DimensionTooSmall(usize),
    #[error("binary embeddings: {0}")]
    Binary(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Jsonl,
    Binary,
}

impl EmbeddingFormat {
    /// Guesses the format from the leading magic bytes.
    pub fn sniff(raw: &[u8]) -> Self {
        if raw.starts_with(MAGIC) {
            Self::Binary
        } else {
            Self::Jsonl
        }
    }
}

/// Unit-normalized embedding vectors of one shared dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore<T: Scalar = f64> {
    dimension: usize,
    vectors: BTreeMap<String, Vec<T>>,
}

impl<T: Scalar> EmbeddingStore<T> {
    /// Builds a store from `(id, vector)` pairs. The dimension is taken from
    /// the first record; vectors are L2-normalized.
    pub fn from_vectors<I, S>(records: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<T>)>,
        S: Into<String>,
    {
        let mut dimension = None;
        let mut vectors = BTreeMap::new();
        for (id, mut v) in records {
            let id = id.into();
            let expected = *dimension.get_or_insert(v.len());
            if v.len() != expected {
                return Err(EmbeddingError::DimensionMismatch {
                    id,
                    expected,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::NonFinite(id));
            }
            let n = scalar::norm(&v);
            if n == T::zero() {
                return Err(EmbeddingError::ZeroVector(id));
            }
            v.iter_mut().for_each(|x| *x /= n);
            if vectors.contains_key(&id) {
                return Err(EmbeddingError::DuplicateId(id));
            }
            vectors.insert(id, v);
        }
        match dimension {
            Some(0) => Err(EmbeddingError::Format {
                line: 1,
                message: "empty vector".into(),
            }),
            Some(dimension) => Ok(Self { dimension, vectors }),
            None => Err(EmbeddingError::Empty),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[T]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vectors.contains_key(id)
    }

    /// Entries in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[T])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Restricts the store to the given ids, keeping their order irrelevant.
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Option<Self> {
        let mut vectors = BTreeMap::new();
        for id in ids {
            vectors.insert(id.to_string(), self.vectors.get(id)?.clone());
        }
        Some(Self {
            dimension: self.dimension,
            vectors,
        })
    }

    /// Writes one `{"id": .., "vector": [..]}` object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), EmbeddingError> {
        for (id, v) in &self.vectors {
            let line = serde_json::json!({
                "id": id,
                "vector": v.iter().map(|x| x.as_f64()).collect::<Vec<_>>(),
            });
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Writes the `FMEB` binary layout: magic, u32 LE dimension, then per
    /// record a u16 LE id length, the UTF-8 id and `dimension` f32 LE values.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<(), EmbeddingError> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.dimension as u32).to_le_bytes())?;
        for (id, v) in &self.vectors {
            let len = u16::try_from(id.len())
                .map_err(|_| EmbeddingError::Binary(format!("id {id:?} longer than 65535 bytes")))?;
            out.write_all(&len.to_le_bytes())?;
            out.write_all(id.as_bytes())?;
            for x in v {
                out.write_all(&(x.as_f64() as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }
}

#[derive(Deserialize, Serialize)]
struct JsonlRecord {
    id: String,
    vector: Vec<f64>,
}

fn read_jsonl<T: Scalar>(raw: &[u8]) -> Result<Vec<(String, Vec<T>)>, EmbeddingError> {
    let mut records = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(&line).map_err(|e| EmbeddingError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push((rec.id, rec.vector.into_iter().map(T::of).collect()));
    }
    Ok(records)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], EmbeddingError> {
        let end = self.pos + n;
        let slice = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| EmbeddingError::Binary(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(slice)
    }
}

fn read_binary<T: Scalar>(raw: &[u8]) -> Result<Vec<(String, Vec<T>)>, EmbeddingError> {
    let mut cur = Cursor { buf: raw, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(EmbeddingError::Binary("missing FMEB magic".into()));
    }
    let dim = u32::from_le_bytes(cur.take(4)?.try_into().unwrap()) as usize;
    let mut records = Vec::new();
    while cur.pos < raw.len() {
        let len = u16::from_le_bytes(cur.take(2)?.try_into().unwrap()) as usize;
        let id = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| EmbeddingError::Binary("id is not UTF-8".into()))?
            .to_string();
        let mut v = Vec::with_capacity(dim);
        for chunk in cur.take(dim * 4)?.chunks_exact(4) {
            v.push(T::of(f32::from_le_bytes(chunk.try_into().unwrap()) as f64));
        }
        records.push((id, v));
    }
    Ok(records)
}

/// Loads an embedding store from JSONL or the `FMEB` binary layout.
pub fn load_embeddings<T: Scalar>(
    raw: &[u8],
    format: EmbeddingFormat,
) -> Result<EmbeddingStore<T>, EmbeddingError> {
    let records = match format {
        EmbeddingFormat::Jsonl => read_jsonl(raw)?,
        EmbeddingFormat::Binary => read_binary(raw)?,
    };
    EmbeddingStore::from_vectors(records)
}

/// Cosine similarity `u·v / (|u||v|)`, clamped into [-1, 1].
pub fn cosine_similarity<T: Scalar>(u: &[T], v: &[T]) -> Result<T, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::LengthMismatch(u.len(), v.len()));
    }
    let nu = scalar::norm(u);
    let nv = scalar::norm(v);
    if nu == T::zero() || nv == T::zero() {
        return Err(EmbeddingError::ZeroInput);
    }
    let s = scalar::dot(u, v) / (nu * nv);
    Ok(s.max(-T::one()).min(T::one()))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn hash_gram(gram: &[char], seed: u64) -> u64 {
    // FNV-1a over UTF-8 bytes, finalized with the seed
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    let mut buf = [0u8; 4];
    for c in gram {
        for b in c.encode_utf8(&mut buf).bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
    splitmix64(h ^ splitmix64(seed))
}

/// Hashes the character 3-grams of the lowercased text into `dimension`
/// signed buckets and L2-normalizes the result.
pub fn fallback_encode<T: Scalar>(
    text: &str,
    dimension: usize,
    seed: u64,
) -> Result<Vec<T>, EmbeddingError> {
    if dimension < 8 {
        return Err(EmbeddingError::DimensionTooSmall(dimension));
    }
    if text.is_empty() {
        return Err(EmbeddingError::EmptyText);
    }
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut acc = vec![0f64; dimension];
    let grams: Vec<&[char]> = if chars.len() < 3 {
        vec![&chars[..]]
    } else {
        chars.windows(3).collect()
    };
    for gram in grams {
        let h = hash_gram(gram, seed);
        let bucket = (h % dimension as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign;
    }
    let n = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        // every gram cancelled out; fall back to the first gram's bucket
        let h = hash_gram(&chars[..chars.len().min(3)], seed);
        acc[(h % dimension as u64) as usize] = 1.0;
        return Ok(acc.into_iter().map(T::of).collect());
    }
    Ok(acc.into_iter().map(|x| T::of(x / n)).collect())
}
