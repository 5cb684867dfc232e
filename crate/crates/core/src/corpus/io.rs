use chrono::{DateTime, NaiveDate, NaiveDateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Document};

const HEADER: [&str; 5] = ["id", "headline", "date", "source", "frame"];
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Csv,
    Json,
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown corpus format {other:?} (expected csv or json)")),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    headline: String,
    date: String,
    source: String,
    frame: i64,
}

/// Parses an ISO-8601 timestamp into UTC at second resolution. Date-only
/// values are taken as midnight UTC; naive date-times are assumed UTC.
pub fn parse_timestamp(value: &str) -> Option<DateTime<Utc>> {
    let value = value.trim();
    let parsed = if let Ok(dt) = DateTime::parse_from_rfc3339(value) {
        dt.with_timezone(&Utc)
    } else if let Some(naive) = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(value, f).ok())
    {
        naive.and_utc()
    } else {
        NaiveDate::parse_from_str(value, "%Y-%m-%d")
            .ok()?
            .and_hms_opt(0, 0, 0)?
            .and_utc()
    };
    parsed.with_nanosecond(0)
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

fn to_document(row: usize, rec: Record) -> Result<Document, CorpusError> {
    if rec.id.is_empty() {
        return Err(CorpusError::EmptyId { row });
    }
    let timestamp = parse_timestamp(&rec.date).ok_or_else(|| CorpusError::InvalidDate {
        row,
        value: rec.date.clone(),
    })?;
    if !(1..=9).contains(&rec.frame) {
        return Err(CorpusError::FrameOutOfRange {
            row,
            frame: rec.frame,
        });
    }
    Ok(Document::new(
        rec.id,
        rec.headline,
        timestamp,
        rec.source,
        rec.frame as u8,
    ))
}

fn parse_csv(raw: &[u8]) -> Result<Vec<Document>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(raw);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(CorpusError::Malformed {
            row: 0,
            message: format!(
                "expected header `{}`, found `{}`",
                HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut docs = Vec::new();
    for (i, result) in reader.records().enumerate() {
        let row = i + 1;
        let record = result.map_err(|e| CorpusError::Malformed {
            row,
            message: e.to_string(),
        })?;
        let frame_text = record.get(4).unwrap_or_default().trim();
        let frame = frame_text.parse::<i64>().map_err(|_| CorpusError::Malformed {
            row,
            message: format!("frame {frame_text:?} is not an integer"),
        })?;
        let rec = Record {
            id: record.get(0).unwrap_or_default().to_string(),
            headline: record.get(1).unwrap_or_default().to_string(),
            date: record.get(2).unwrap_or_default().to_string(),
            source: record.get(3).unwrap_or_default().to_string(),
            frame,
        };
        docs.push(to_document(row, rec)?);
    }
    Ok(docs)
}

fn parse_json(raw: &[u8]) -> Result<Vec<Document>, CorpusError> {
    let records: Vec<Record> = serde_json::from_slice(raw)?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, rec)| to_document(i + 1, rec))
        .collect()
}

/// Reads a corpus from CSV (`id,headline,date,source,frame`) or a JSON array
/// of objects with the same keys.
pub fn parse_corpus(raw: &[u8], format: CorpusFormat) -> Result<Corpus, CorpusError> {
    std::str::from_utf8(raw).map_err(|_| CorpusError::Utf8)?;
    if raw.iter().all(u8::is_ascii_whitespace) {
        return Corpus::new(Vec::new());
    }
    let docs = match format {
        CorpusFormat::Csv => parse_csv(raw)?,
        CorpusFormat::Json => parse_json(raw)?,
    };
    Corpus::new(docs)
}

/// Serializes a corpus in chronological order. Parsing the output yields an
/// equal corpus, and re-exporting it yields identical bytes.
pub fn export_corpus(corpus: &Corpus, format: CorpusFormat) -> Result<Vec<u8>, CorpusError> {
    let records = corpus.documents().iter().map(|d| Record {
        id: d.id.clone(),
        headline: d.headline.clone(),
        date: format_timestamp(&d.timestamp),
        source: d.source.clone(),
        frame: i64::from(d.frame),
    });
    match format {
        CorpusFormat::Csv => {
            // the header row comes from the first serialized record
            let mut writer = csv::Writer::from_writer(Vec::new());
            for rec in records {
                writer.serialize(rec)?;
            }
            writer
                .into_inner()
                .map_err(|e| CorpusError::Csv(e.into_error().into()))
        }
        CorpusFormat::Json => {
            let records: Vec<Record> = records.collect();
            let mut out = serde_json::to_vec_pretty(&records)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}
