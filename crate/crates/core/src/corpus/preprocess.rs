//! Tweet tokenizer.
//!
//! Links become the tag `URL`, mentions become `USER`, hashtags lose their
//! leading `#`, every punctuation character is a token of its own and all
//! other text is lowercased. Tag tokens stay uppercase so they never collide
//! with an ordinary word.

/// Replacement token for links.
pub const URL_TAG: &str = "URL";
/// Replacement token for `@mentions`.
pub const USER_TAG: &str = "USER";

pub fn is_tag(token: &str) -> bool {
    token == URL_TAG || token == USER_TAG
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn starts_with_ignore_case(chars: &[char], at: usize, prefix: &str) -> bool {
    let mut i = at;
    for p in prefix.chars() {
        match chars.get(i) {
            Some(c) if c.to_ascii_lowercase() == p => i += 1,
            _ => return false,
        }
    }
    true
}

fn url_at(chars: &[char], at: usize) -> bool {
    let body_follows = |len: usize| chars.get(at + len).is_some_and(|c| !c.is_whitespace());
    (starts_with_ignore_case(chars, at, "http://") && body_follows(7))
        || (starts_with_ignore_case(chars, at, "https://") && body_follows(8))
        || (starts_with_ignore_case(chars, at, "www.") && body_follows(4))
}

pub fn preprocess(raw_text: &str) -> Vec<String> {
    let chars: Vec<char> = raw_text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let at_boundary = i == 0 || !is_word_char(chars[i - 1]);
        if at_boundary && url_at(&chars, i) {
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            tokens.push(URL_TAG.to_string());
            continue;
        }
        let next_is_word = chars.get(i + 1).copied().is_some_and(is_word_char);
        if c == '@' && next_is_word {
            i += 1;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            tokens.push(USER_TAG.to_string());
            continue;
        }
        if c == '#' && next_is_word {
            // the word itself is picked up on the next pass
            i += 1;
            continue;
        }
        if is_word_char(c) {
            let start = i;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            tokens.push(word.to_lowercase());
            continue;
        }
        tokens.push(c.to_string());
        i += 1;
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        preprocess(s)
    }

    #[test]
    fn mention_url_hashtag_and_punctuation() {
        assert_eq!(
            toks("@Ali check http://t.co/x #PeaceNow!"),
            vec!["USER", "check", "URL", "peacenow", "!"]
        );
    }

    #[test]
    fn retweet_prefix() {
        assert_eq!(
            toks("RT @u: Pray For Peace"),
            vec!["rt", "USER", ":", "pray", "for", "peace"]
        );
    }

    #[test]
    fn empty_input() {
        assert!(toks("").is_empty());
        assert!(toks("   \t\n").is_empty());
    }

    #[test]
    fn bare_markers_are_punctuation() {
        assert_eq!(toks("# @ x"), vec!["#", "@", "x"]);
        assert_eq!(toks("don't"), vec!["don", "'", "t"]);
        assert_eq!(toks("www. x"), vec!["www", ".", "x"]);
    }

    #[test]
    fn https_and_www_links() {
        assert_eq!(toks("see https://a.b/c?d=1, now"), vec!["see", "URL", "now"]);
        assert_eq!(toks("WWW.Example.com"), vec!["URL"]);
    }

    fn untag(tokens: &[String]) -> Vec<String> {
        tokens.iter().map(|t| t.to_lowercase()).collect()
    }

    proptest! {
        #[test]
        fn idempotent_on_detokenized_output(s in "[a-zA-Z0-9 @#:/._!?,'()-]{0,60}|(http://[a-z.]{1,8} [a-z ]{0,10})") {
            let once = preprocess(&s);
            let twice = preprocess(&once.join(" "));
            prop_assert_eq!(untag(&once), untag(&twice));
        }

        #[test]
        fn only_tags_keep_uppercase(s in "\\PC{0,40}") {
            for t in preprocess(&s) {
                if !is_tag(&t) {
                    prop_assert_eq!(t.to_lowercase(), t.clone());
                }
            }
        }
    }
}
