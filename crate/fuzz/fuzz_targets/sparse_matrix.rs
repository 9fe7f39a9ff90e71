#![no_main]
use libfuzzer_sys::fuzz_target;
use tweetmine::features::{read_sparse_matrix, write_sparse_matrix};

fuzz_target!(|data: &[u8]| {
    let Ok((rows, cols)) = read_sparse_matrix(data) else { return };
    let mut out = Vec::new();
    write_sparse_matrix(&rows, cols, &mut out).unwrap();
    let (again, cols2) = read_sparse_matrix(&out[..]).unwrap();
    assert_eq!(cols, cols2);
    assert_eq!(again, rows);
});
