#![no_main]
use libfuzzer_sys::fuzz_target;
use tweetmine::embedding::EmbeddingModel;

fuzz_target!(|data: &[u8]| {
    let Ok(model) = EmbeddingModel::load(data) else { return };
    let mut out = Vec::new();
    model.save(&mut out).unwrap();
    let again = EmbeddingModel::load(&out[..]).unwrap();
    assert_eq!(again.dim, model.dim);
    assert_eq!(again.vocab.len(), model.vocab.len());
});
