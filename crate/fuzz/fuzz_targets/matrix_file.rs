#![no_main]

use libfuzzer_sys::fuzz_target;
use anchorex::preprocess::DocTermMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(matrix) = DocTermMatrix::from_text(text) {
            let again = DocTermMatrix::from_text(&matrix.to_text()).expect("roundtrip");
            assert_eq!(again, matrix);
        }
    }
});
