#![no_main]
use libfuzzer_sys::fuzz_target;
use tweetmine::lexicon::Lexicon;

fuzz_target!(|data: &[u8]| {
    let Ok(lex) = Lexicon::read_jsonl(data) else { return };
    let mut out = Vec::new();
    lex.write_jsonl(&mut out).unwrap();
    let again = Lexicon::read_jsonl(&out[..]).unwrap();
    assert!(again.terms().eq(lex.terms()));
    assert_eq!(again.round(), lex.round());
});
