//! Character n-gram language identification.
//!
//! Rank-order profiles of character 1- to 3-grams compared with the
//! out-of-place distance. Word boundaries are written as `_` both in the
//! shipped profile files and in the n-grams extracted from a document.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Language code returned for inputs too short to classify.
pub const UNDETERMINED: &str = "und";

pub const MAX_NGRAM: usize = 3;

/// Profiles derived from public Wikipedia n-gram frequency tables.
const BUILTIN_PROFILES: &[&str] = &[
    include_str!("../../data/langid/en.profile"),
    include_str!("../../data/langid/sw.profile"),
    include_str!("../../data/langid/so.profile"),
    include_str!("../../data/langid/fr.profile"),
    include_str!("../../data/langid/es.profile"),
    include_str!("../../data/langid/de.profile"),
    include_str!("../../data/langid/it.profile"),
    include_str!("../../data/langid/pt.profile"),
    include_str!("../../data/langid/nl.profile"),
    include_str!("../../data/langid/id.profile"),
    include_str!("../../data/langid/tl.profile"),
    include_str!("../../data/langid/af.profile"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageProfile {
    lang_code: String,
    ngrams: Vec<String>,
    ranks: HashMap<String, usize>,
}

impl LanguageProfile {
    /// Build from n-grams already in rank order (rank 1 first).
    pub fn from_ranked(lang_code: impl Into<String>, ngrams: Vec<String>) -> Result<Self> {
        let lang_code = lang_code.into();
        if lang_code.is_empty() || lang_code.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("bad language code {lang_code:?}")));
        }
        if ngrams.is_empty() {
            return Err(Error::Empty("language profile has no n-grams"));
        }
        let mut ranks = HashMap::with_capacity(ngrams.len());
        for (i, g) in ngrams.iter().enumerate() {
            let len = g.chars().count();
            if len == 0 || len > MAX_NGRAM {
                return Err(Error::invalid(format!("n-gram {g:?} has length {len}")));
            }
            if ranks.insert(g.clone(), i + 1).is_some() {
                return Err(Error::invalid(format!("duplicate n-gram {g:?}")));
            }
        }
        Ok(Self {
            lang_code,
            ngrams,
            ranks,
        })
    }

    /// Parse the profile file format: a `#lang <code>` header and one n-gram
    /// per line in rank order.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Empty("language profile"))?;
        let code = header
            .strip_prefix("#lang ")
            .ok_or_else(|| Error::format(1, "expected `#lang <code>` header"))?
            .trim();
        let mut ngrams = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                return Err(Error::format(i + 2, "empty n-gram line"));
            }
            ngrams.push(line.to_string());
        }
        Self::from_ranked(code, ngrams).map_err(|e| match e {
            Error::InvalidInput(m) => Error::format(0, m),
            other => other,
        })
    }

    /// Train a profile from sample text, keeping the `size` most frequent n-grams.
    pub fn from_text(lang_code: impl Into<String>, text: &str, size: usize) -> Result<Self> {
        let ranked = ranked_ngrams(text);
        Self::from_ranked(lang_code, ranked.into_iter().take(size).collect())
    }

    pub fn lang_code(&self) -> &str {
        &self.lang_code
    }

    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }

    /// 1-based rank of an n-gram.
    pub fn rank(&self, ngram: &str) -> Option<usize> {
        self.ranks.get(ngram).copied()
    }

    pub fn ngrams(&self) -> &[String] {
        &self.ngrams
    }

    pub fn to_file_string(&self) -> String {
        let mut out = format!("#lang {}\n", self.lang_code);
        for g in &self.ngrams {
            out.push_str(g);
            out.push('\n');
        }
        out
    }

    /// Out-of-place distance of a ranked document n-gram list against this
    /// profile. Missing n-grams cost the profile length.
    fn out_of_place(&self, doc: &[String]) -> usize {
        let penalty = self.ngrams.len();
        doc.iter()
            .enumerate()
            .map(|(i, g)| match self.ranks.get(g) {
                Some(&r) => (i + 1).abs_diff(r).min(penalty),
                None => penalty,
            })
            .sum()
    }
}

/// Counts of boundary-padded character n-grams, lowercase letters only.
fn ngram_counts(text: &str) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    let lowered = text.to_lowercase();
    for word in lowered.split(|c: char| !c.is_alphabetic()) {
        if word.is_empty() {
            continue;
        }
        let padded: Vec<char> = std::iter::once('_')
            .chain(word.chars())
            .chain(std::iter::once('_'))
            .collect();
        for n in 1..=MAX_NGRAM {
            for window in padded.windows(n) {
                if window.iter().all(|&c| c == '_') {
                    continue;
                }
                *counts.entry(window.iter().collect::<String>()).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Document n-grams in rank order: descending count, ties lexicographic.
pub fn ranked_ngrams(text: &str) -> Vec<String> {
    let mut grams: Vec<(String, usize)> = ngram_counts(text).into_iter().collect();
    grams.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    grams.into_iter().map(|(g, _)| g).collect()
}

#[derive(Debug, Clone)]
pub struct LanguageIdentifier {
    profiles: Vec<LanguageProfile>,
}

impl LanguageIdentifier {
    pub fn new(profiles: Vec<LanguageProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::Empty("no language profiles"));
        }
        Ok(Self { profiles })
    }

    /// Identifier backed by the profiles shipped with the crate.
    pub fn builtin() -> Self {
        let profiles = BUILTIN_PROFILES
            .iter()
            .map(|text| LanguageProfile::parse(text).expect("builtin profile is well formed"))
            .collect();
        Self { profiles }
    }

    pub fn add_profile(&mut self, profile: LanguageProfile) {
        self.profiles.retain(|p| p.lang_code != profile.lang_code);
        self.profiles.push(profile);
    }

    pub fn profiles(&self) -> &[LanguageProfile] {
        &self.profiles
    }

    /// Closest profile by out-of-place distance and a score in `[0, 1]`,
    /// where 1 means the document ranks agree exactly with the profile.
    pub fn detect(&self, text: &str) -> Result<(String, f64)> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(Error::Empty("text for language detection"));
        }
        if trimmed.chars().count() < 3 {
            return Ok((UNDETERMINED.to_string(), 0.0));
        }
        let doc = ranked_ngrams(trimmed);
        if doc.is_empty() {
            return Ok((UNDETERMINED.to_string(), 0.0));
        }
        let mut best: Option<(&LanguageProfile, f64)> = None;
        for profile in &self.profiles {
            // truncate to the profile length so the score stays comparable
            let doc = &doc[..doc.len().min(profile.len())];
            let max = (doc.len() * profile.len()) as f64;
            let score = 1.0 - profile.out_of_place(doc) as f64 / max;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((profile, score));
            }
        }
        let (profile, score) = best.expect("at least one profile");
        Ok((profile.lang_code.clone(), score.clamp(0.0, 1.0)))
    }
}

pub fn detect_language(text: &str) -> Result<(String, f64)> {
    use std::sync::OnceLock;
    static BUILTIN: OnceLock<LanguageIdentifier> = OnceLock::new();
    BUILTIN.get_or_init(LanguageIdentifier::builtin).detect(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn english_sentence_is_english() {
        let (lang, score) =
            detect_language("we need to be united beyond the borders of religion").unwrap();
        assert_eq!(lang, "en");
        assert!(score >= 0.5, "score {score}");
    }

    #[test]
    fn other_languages_are_told_apart() {
        let cases = [
            ("sw", "tunahitaji kuwa na umoja na amani katika nchi yetu ya kenya"),
            ("fr", "nous avons besoin de paix et de solidarité dans notre pays"),
            ("es", "necesitamos estar unidos más allá de las fronteras de la religión"),
            ("de", "wir müssen über die grenzen der religion hinweg vereint sein"),
        ];
        for (want, text) in cases {
            assert_eq!(detect_language(text).unwrap().0, want, "{text}");
        }
    }

    #[test]
    fn short_text_is_undetermined() {
        assert_eq!(detect_language("ab").unwrap(), ("und".to_string(), 0.0));
        assert_eq!(detect_language("  ab  ").unwrap().0, "und");
    }

    #[test]
    fn empty_text_is_an_error() {
        assert!(detect_language("").is_err());
        assert!(detect_language(" \n ").is_err());
    }

    #[test]
    fn deterministic() {
        let text = "pray for mpeketoni and peace";
        assert_eq!(detect_language(text).unwrap(), detect_language(text).unwrap());
    }

    #[test]
    fn builtin_profiles_rank_prefix() {
        for p in LanguageIdentifier::builtin().profiles() {
            for (i, g) in p.ngrams().iter().enumerate() {
                assert_eq!(p.rank(g), Some(i + 1));
            }
        }
    }

    #[test]
    fn self_trained_profile_scores_one() {
        let text = "peace unity prayer";
        let p = LanguageProfile::from_text("xx", text, 1000).unwrap();
        let id = LanguageIdentifier::new(vec![p]).unwrap();
        let (lang, score) = id.detect(text).unwrap();
        assert_eq!(lang, "xx");
        assert_eq!(score, 1.0);
    }

    #[test]
    fn profile_file_round_trip_and_errors() {
        let p = LanguageProfile::from_ranked("en", vec!["e".into(), "_t".into(), "th".into()]).unwrap();
        assert_eq!(LanguageProfile::parse(&p.to_file_string()).unwrap(), p);
        assert!(LanguageProfile::parse("").is_err());
        assert!(LanguageProfile::parse("lang en\ne\n").is_err());
        assert!(LanguageProfile::parse("#lang en\ne\ne\n").is_err());
        assert!(LanguageProfile::parse("#lang en\nabcd\n").is_err());
        assert!(LanguageProfile::parse("#lang en\n").is_err());
    }
}
