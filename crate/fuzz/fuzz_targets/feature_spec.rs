#![no_main]
use libfuzzer_sys::fuzz_target;
use tweetmine::features::FeatureSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = text.parse::<FeatureSpec>() {
        assert_eq!(spec.to_string().parse::<FeatureSpec>().unwrap(), spec);
    }
});
