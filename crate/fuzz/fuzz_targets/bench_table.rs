#![no_main]
use libfuzzer_sys::fuzz_target;
use tweetmine::bench::Table;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(table) = Table::parse(text) else { return };
    let _ = table.to_aligned();
    let _ = Table::parse(&table.to_tsv());
});
