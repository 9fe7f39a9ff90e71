#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(report) = tweetmine::corpus::parse_sentiment140(data, Some(1000)) {
        assert!(report.corpus.len() <= 1000);
    }
});
