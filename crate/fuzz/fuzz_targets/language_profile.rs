#![no_main]
use libfuzzer_sys::fuzz_target;
use tweetmine::corpus::{LanguageIdentifier, LanguageProfile};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(profile) = LanguageProfile::parse(text) else { return };
    let back = LanguageProfile::parse(&profile.to_file_string()).unwrap();
    assert_eq!(back.ngrams(), profile.ngrams());
    if let Ok(id) = LanguageIdentifier::new(vec![profile]) {
        let _ = id.detect(text);
    }
});
