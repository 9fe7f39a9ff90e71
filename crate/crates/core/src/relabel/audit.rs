use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Decider, IterationStats};
use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};

/// One line of the append-only decision log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: usize,
    pub iteration: usize,
    pub tweet_id: String,
    /// `None` when the id was unknown.
    pub old_label: Option<Label>,
    pub new_label: Label,
    pub decider: Decider,
    pub timestamp: u64,
    pub applied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

pub fn write_audit_entry<W: Write>(entry: &AuditEntry, mut out: W) -> Result<()> {
    serde_json::to_writer(&mut out, entry)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Blank lines are skipped. A torn final line (no trailing newline and
/// invalid JSON) is dropped, any other bad line is an error.
pub fn read_audit_log<R: BufRead>(reader: R) -> Result<Vec<AuditEntry>> {
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
    let mut entries = Vec::new();
    let last = lines.len();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<AuditEntry>(line) {
            Ok(e) => entries.push(e),
            Err(_) if i + 1 == last => break,
            Err(e) => return Err(Error::format(i + 1, e.to_string())),
        }
    }
    Ok(entries)
}

/// Apply the applied entries of `entries` in order to a copy of `initial`.
pub fn replay(initial: &Corpus, entries: &[AuditEntry]) -> Result<Corpus> {
    let mut corpus = initial.clone();
    for e in entries.iter().filter(|e| e.applied) {
        if corpus.set_label(&e.tweet_id, e.new_label).is_none() {
            return Err(Error::invalid(format!("audit entry {} names unknown tweet {:?}", e.seq, e.tweet_id)));
        }
    }
    Ok(corpus)
}

/// Session directory: `audit.jsonl` (appended) and `stats.json` (rewritten).
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn audit_path(&self) -> PathBuf {
        self.dir.join("audit.jsonl")
    }

    pub fn stats_path(&self) -> PathBuf {
        self.dir.join("stats.json")
    }

    pub fn append_audit(&self, entries: &[AuditEntry]) -> Result<()> {
        if entries.is_empty() {
            return Ok(());
        }
        let file = OpenOptions::new().create(true).append(true).open(self.audit_path())?;
        let mut out = BufWriter::new(file);
        for e in entries {
            write_audit_entry(e, &mut out)?;
        }
        out.flush()?;
        out.get_ref().sync_data()?;
        Ok(())
    }

    pub fn load_audit(&self) -> Result<Vec<AuditEntry>> {
        match File::open(self.audit_path()) {
            Ok(f) => read_audit_log(BufReader::new(f)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save_stats(&self, stats: &[IterationStats]) -> Result<()> {
        let tmp = self.dir.join("stats.json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(stats)?)?;
        fs::rename(tmp, self.stats_path())?;
        Ok(())
    }

    pub fn load_stats(&self) -> Result<Vec<IterationStats>> {
        match fs::read(self.stats_path()) {
            Ok(bytes) => Ok(serde_json::from_slice(&bytes)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(e.into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tweet;

    fn entry(seq: usize, id: &str, label: Label, applied: bool) -> AuditEntry {
        AuditEntry {
            seq,
            iteration: 1,
            tweet_id: id.into(),
            old_label: Some(Label::Negative),
            new_label: label,
            decider: Decider::Human,
            timestamp: 5,
            applied,
            reason: None,
        }
    }

    #[test]
    fn log_round_trip_and_torn_tail() {
        let entries = vec![entry(0, "a", Label::Positive, true), entry(1, "b", Label::Positive, false)];
        let mut buf = Vec::new();
        for e in &entries {
            write_audit_entry(e, &mut buf).unwrap();
        }
        assert_eq!(read_audit_log(&buf[..]).unwrap(), entries);
        buf.extend_from_slice(b"{\"seq\":2,\"itera");
        assert_eq!(read_audit_log(&buf[..]).unwrap(), entries);
        let bad = b"nonsense\n{}\n";
        assert!(read_audit_log(&bad[..]).is_err());
    }

    #[test]
    fn replay_skips_rejected_and_keeps_order() {
        let c = Corpus::from_tweets([Tweet::new("a", "x", Label::Negative), Tweet::new("b", "y", Label::Negative)]).unwrap();
        let log = vec![
            entry(0, "a", Label::Positive, true),
            entry(1, "b", Label::Positive, false),
            entry(2, "a", Label::Negative, true),
        ];
        let r = replay(&c, &log).unwrap();
        assert_eq!(r.labels(), vec![Label::Negative, Label::Negative]);
        assert!(replay(&c, &[entry(0, "zz", Label::Positive, true)]).is_err());
    }

    #[test]
    fn store_persists() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path().join("s")).unwrap();
        assert!(store.load_audit().unwrap().is_empty());
        store.append_audit(&[entry(0, "a", Label::Positive, true)]).unwrap();
        store.append_audit(&[entry(1, "b", Label::Positive, true)]).unwrap();
        assert_eq!(store.load_audit().unwrap().len(), 2);
        let stats = vec![IterationStats {
            iteration: 1,
            tp: 1,
            fp: 2,
            accepted: 1,
            total_positives: 3,
            queued: 2,
        }];
        store.save_stats(&stats).unwrap();
        assert_eq!(store.load_stats().unwrap(), stats);
    }
}
