//! Seed-word bootstrapping.
//!
//! A round matches tweets against the current lexicon, scores every token of
//! the matched tweets by smoothed log-odds between the matched and unmatched
//! partitions, and grows the lexicon with whatever a reviewer accepts.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::preprocess::is_tag;
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Minimum number of matched tweets a candidate must occur in.
pub const MIN_SUPPORT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcceptedBy {
    Seed,
    Human,
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub round: usize,
    /// `None` only for seeds.
    pub score: Option<f64>,
    pub accepted_by: AcceptedBy,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lexicon {
    provenance: BTreeMap<String, Provenance>,
    round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTerm {
    pub term: String,
    pub score: f64,
    pub matched_count: usize,
    pub unmatched_count: usize,
}

/// `ln((m + 1) / (M + 2)) - ln((u + 1) / (U + 2))`.
pub fn log_odds(matched_count: usize, matched_total: usize, unmatched_count: usize, unmatched_total: usize) -> f64 {
    let p = (matched_count as f64 + 1.0) / (matched_total as f64 + 2.0);
    let q = (unmatched_count as f64 + 1.0) / (unmatched_total as f64 + 2.0);
    p.ln() - q.ln()
}

impl Lexicon {
    pub fn from_seeds<I, S>(seeds: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let provenance = seeds
            .into_iter()
            .map(|s| {
                (
                    s.into(),
                    Provenance {
                        round: 0,
                        score: None,
                        accepted_by: AcceptedBy::Seed,
                    },
                )
            })
            .collect();
        Self {
            provenance,
            round: 0,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.provenance.keys().map(String::as_str)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.provenance.contains_key(term)
    }

    pub fn provenance(&self, term: &str) -> Option<&Provenance> {
        self.provenance.get(term)
    }

    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    /// Number of completed expansion rounds.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Terms of this lexicon present in a token sequence, in lexicon order.
    pub fn hits<'a>(&'a self, tokens: &[String]) -> Vec<&'a str> {
        let present: HashSet<&str> = tokens.iter().map(String::as_str).collect();
        self.terms().filter(|t| present.contains(t)).collect()
    }

    /// Write one JSON object per term: `{"term", "round", "score", "accepted_by"}`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for (term, p) in &self.provenance {
            let entry = LexiconEntry {
                term: term.clone(),
                round: p.round,
                score: p.score,
                accepted_by: p.accepted_by,
            };
            serde_json::to_writer(&mut out, &entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        let mut lexicon = Lexicon::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: LexiconEntry =
                serde_json::from_str(&line).map_err(|e| Error::format(i + 1, e.to_string()))?;
            let is_seed = e.accepted_by == AcceptedBy::Seed;
            if is_seed != (e.round == 0) {
                return Err(Error::format(i + 1, "seeds and only seeds belong to round 0"));
            }
            match e.score {
                Some(s) if !s.is_finite() => {
                    return Err(Error::format(i + 1, "score must be finite"))
                }
                None if !is_seed => return Err(Error::format(i + 1, "non-seed term without score")),
                _ => {}
            }
            if lexicon.provenance.contains_key(&e.term) {
                return Err(Error::format(i + 1, format!("duplicate term {:?}", e.term)));
            }
            lexicon.round = lexicon.round.max(e.round);
            lexicon.provenance.insert(
                e.term,
                Provenance {
                    round: e.round,
                    score: e.score,
                    accepted_by: e.accepted_by,
                },
            );
        }
        Ok(lexicon)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LexiconEntry {
    term: String,
    round: usize,
    score: Option<f64>,
    accepted_by: AcceptedBy,
}

/// Ids of tweets sharing at least one token with the lexicon.
pub fn match_tweets(corpus: &Corpus, lexicon: &Lexicon) -> Result<BTreeSet<String>> {
    if lexicon.is_empty() {
        return Err(Error::Empty("lexicon"));
    }
    Ok(corpus
        .tweets()
        .iter()
        .filter(|t| t.tokens.iter().any(|tok| lexicon.contains(tok)))
        .map(|t| t.id.clone())
        .collect())
}

fn is_candidate_token(token: &str) -> bool {
    !is_tag(token) && token.chars().any(char::is_alphanumeric)
}

/// Score tokens of matched tweets by smoothed log-odds against the rest of
/// the corpus. Tokens need [`MIN_SUPPORT`] matched tweets; lexicon terms,
/// tag tokens and pure punctuation are excluded. Sorted by descending score,
/// ties lexicographic, truncated to `top_k`.
pub fn score_candidates(
    corpus: &Corpus,
    matched_ids: &BTreeSet<String>,
    lexicon: &Lexicon,
    top_k: usize,
) -> Result<Vec<CandidateTerm>> {
    if matched_ids.is_empty() {
        return Err(Error::Empty("matched tweet set"));
    }
    if let Some(missing) = matched_ids.iter().find(|id| corpus.get(id).is_none()) {
        return Err(Error::invalid(format!("matched id {missing:?} not in corpus")));
    }
    let matched_total = matched_ids.len();
    let unmatched_total = corpus.len() - matched_total;

    // document frequency per partition
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for t in corpus.tweets() {
        let matched = matched_ids.contains(&t.id);
        let unique: HashSet<&str> = t.tokens.iter().map(String::as_str).collect();
        for tok in unique {
            let e = counts.entry(tok).or_insert((0, 0));
            if matched {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }

    let mut candidates: Vec<CandidateTerm> = counts
        .into_iter()
        .filter(|(tok, (m, _))| *m >= MIN_SUPPORT && !lexicon.contains(tok) && is_candidate_token(tok))
        .map(|(tok, (m, u))| CandidateTerm {
            term: tok.to_string(),
            score: log_odds(m, matched_total, u, unmatched_total),
            matched_count: m,
            unmatched_count: u,
        })
        .collect();
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.term.cmp(&b.term)));
    candidates.truncate(top_k);
    Ok(candidates)
}

/// Candidates scoring at least `threshold`.
pub fn auto_accept(candidates: &[CandidateTerm], threshold: f64) -> Vec<CandidateTerm> {
    candidates
        .iter()
        .filter(|c| c.score >= threshold)
        .cloned()
        .collect()
}

/// Grow the lexicon by the accepted candidates and advance the round.
/// Terms already present are skipped with a warning.
pub fn expand_round(
    lexicon: &Lexicon,
    accepted: &[CandidateTerm],
    accepted_by: AcceptedBy,
) -> (Lexicon, Vec<String>) {
    let mut next = lexicon.clone();
    next.round += 1;
    let mut warnings = Vec::new();
    for c in accepted {
        if next.contains(&c.term) {
            let msg = format!("term {:?} already in lexicon", c.term);
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        next.provenance.insert(
            c.term.clone(),
            Provenance {
                round: next.round,
                score: Some(c.score),
                accepted_by,
            },
        );
    }
    (next, warnings)
}
