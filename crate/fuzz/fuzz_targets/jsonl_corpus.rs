#![no_main]
use libfuzzer_sys::fuzz_target;
use tweetmine::corpus::{parse_jsonl, write_jsonl};

fuzz_target!(|data: &[u8]| {
    let Ok(report) = parse_jsonl(data) else { return };
    let mut out = Vec::new();
    write_jsonl(&report.corpus, &mut out).unwrap();
    let again = parse_jsonl(&out[..]).unwrap();
    assert_eq!(again.corpus.len(), report.corpus.len());
    assert_eq!(again.skipped, 0);
});
