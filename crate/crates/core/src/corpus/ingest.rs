use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{Corpus, Label, Tweet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub corpus: Corpus,
    /// Lines that could not be turned into a tweet.
    pub skipped: usize,
    /// Neutral sentiment140 rows, dropped on purpose.
    pub neutral: usize,
    pub warnings: Vec<String>,
}

impl IngestReport {
    fn warn(&mut self, message: String) {
        warn!("{message}");
        self.skipped += 1;
        self.warnings.push(message);
    }
}

/// Decode a field as UTF-8, falling back to Latin-1 for the legacy dumps.
fn decode(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.to_string(),
        Err(_) => bytes.iter().map(|&b| b as char).collect(),
    }
}

/// Parse the six-field quoted sentiment140 format:
/// `polarity, id, date, query, user, text` with polarity in {0, 2, 4}.
pub fn parse_sentiment140<R: Read>(reader: R, limit: Option<usize>) -> Result<IngestReport> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut report = IngestReport::default();
    let mut record = csv::ByteRecord::new();
    let mut line = 0usize;
    loop {
        if limit.is_some_and(|l| report.corpus.len() >= l) {
            break;
        }
        line += 1;
        match csv.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                if e.is_io_error() {
                    if let csv::ErrorKind::Io(io) = e.into_kind() {
                        return Err(Error::Io(io));
                    }
                    unreachable!();
                }
                report.warn(format!("line {line}: {e}"));
                continue;
            }
        }
        if record.len() != 6 {
            report.warn(format!("line {line}: expected 6 fields, found {}", record.len()));
            continue;
        }
        let label = match record[0].trim_ascii() {
            b"0" => Label::Negative,
            b"4" => Label::Positive,
            b"2" => {
                report.neutral += 1;
                continue;
            }
            other => {
                report.warn(format!("line {line}: bad polarity {:?}", decode(other)));
                continue;
            }
        };
        let id = decode(&record[1]);
        let tweet = Tweet::new(id, decode(&record[5]), label).with_source("sentiment140");
        if let Err(e) = report.corpus.push(tweet) {
            report.warn(format!("line {line}: {e}"));
        }
    }
    Ok(report)
}

pub fn ingest_sentiment140(path: impl AsRef<Path>, limit: Option<usize>) -> Result<IngestReport> {
    let file = File::open(path.as_ref())?;
    parse_sentiment140(BufReader::new(file), limit)
}

/// One line of the JSONL corpus format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonlRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
}

/// Parse `{"id", "text", "label"?}` records, one per line. Blank lines are
/// ignored; malformed lines and duplicate ids are skipped with a warning.
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<IngestReport> {
    let mut report = IngestReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                report.warn(format!("line {}: {e}", i + 1));
                continue;
            }
        };
        let tweet = Tweet::new(rec.id, rec.text, rec.label.unwrap_or(Label::Unlabeled))
            .with_source(rec.source);
        if let Err(e) = report.corpus.push(tweet) {
            report.warn(format!("line {}: {e}", i + 1));
        }
    }
    Ok(report)
}

pub fn ingest_jsonl(path: impl AsRef<Path>) -> Result<IngestReport> {
    parse_jsonl(BufReader::new(File::open(path.as_ref())?))
}

pub fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    for t in corpus.tweets() {
        let rec = JsonlRecord {
            id: t.id.clone(),
            text: t.raw_text.clone(),
            label: t.label.is_labeled().then_some(t.label),
            source: t.source.clone(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentiment140_positive_line() {
        let r = parse_sentiment140(&b"\"4\",\"7\",\"Mon May 11\",\"NO_QUERY\",\"u\",\"love it\"\n"[..], None)
            .unwrap();
        assert_eq!(r.corpus.len(), 1);
        let t = &r.corpus.tweets()[0];
        assert_eq!(t.label, Label::Positive);
        assert_eq!(t.raw_text, "love it");
        assert_eq!(t.id, "7");
    }

    #[test]
    fn sentiment140_neutral_skipped() {
        let r = parse_sentiment140(&b"\"2\",\"7\",\"d\",\"q\",\"u\",\"meh\"\n"[..], None).unwrap();
        assert!(r.corpus.is_empty());
        assert_eq!(r.neutral, 1);
        assert_eq!(r.skipped, 0);
    }

    #[test]
    fn sentiment140_malformed_and_limit() {
        let data = b"\"0\",\"1\",\"d\",\"q\",\"u\",\"bad, day\"\n\
            \"9\",\"2\",\"d\",\"q\",\"u\",\"x\"\n\
            \"0\",\"3\"\n\
            \"4\",\"4\",\"d\",\"q\",\"u\",\"caf\xe9\"\n\
            \"4\",\"5\",\"d\",\"q\",\"u\",\"y\"\n";
        let r = parse_sentiment140(&data[..], None).unwrap();
        assert_eq!(r.corpus.len(), 3);
        assert_eq!(r.skipped, 2);
        assert_eq!(r.corpus.tweets()[0].raw_text, "bad, day");
        assert_eq!(r.corpus.tweets()[1].raw_text, "café");
        let limited = parse_sentiment140(&data[..], Some(2)).unwrap();
        assert_eq!(limited.corpus.len(), 2);
    }

    #[test]
    fn jsonl_basic() {
        let r = parse_jsonl(&b"{\"id\":\"1\",\"text\":\"hi\"}\n"[..]).unwrap();
        assert_eq!(r.corpus.len(), 1);
        assert_eq!(r.corpus.tweets()[0].label, Label::Unlabeled);
    }

    #[test]
    fn jsonl_empty_file() {
        let r = parse_jsonl(&b""[..]).unwrap();
        assert!(r.corpus.is_empty());
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn jsonl_duplicate_id_warns() {
        let r = parse_jsonl(&b"{\"id\":\"1\",\"text\":\"a\"}\n{\"id\":\"1\",\"text\":\"b\"}\n"[..]).unwrap();
        assert_eq!(r.corpus.len(), 1);
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.corpus.tweets()[0].raw_text, "a");
    }

    #[test]
    fn jsonl_labels_and_round_trip() {
        let data = b"{\"id\":\"1\",\"text\":\"a\",\"label\":\"positive\"}\n\
            {\"id\":\"2\",\"text\":\"b\",\"label\":\"negative\"}\n\
            {\"id\":\"3\",\"text\":\"c\"}\n\
            not json\n";
        let r = parse_jsonl(&data[..]).unwrap();
        assert_eq!(r.skipped, 1);
        assert_eq!(r.corpus.count(Label::Positive), 1);
        assert_eq!(r.corpus.count(Label::Negative), 1);
        let mut out = Vec::new();
        write_jsonl(&r.corpus, &mut out).unwrap();
        let back = parse_jsonl(&out[..]).unwrap();
        assert_eq!(back.corpus, r.corpus);
    }
}
