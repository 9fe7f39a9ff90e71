#![no_main]
use libfuzzer_sys::fuzz_target;
use tweetmine::relabel::{read_audit_log, write_audit_entry};

fuzz_target!(|data: &[u8]| {
    let Ok(entries) = read_audit_log(data) else { return };
    let mut out = Vec::new();
    for e in &entries {
        write_audit_entry(e, &mut out).unwrap();
    }
    assert_eq!(read_audit_log(&out[..]).unwrap(), entries);
});
