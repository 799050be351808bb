#![no_main]

use libfuzzer_sys::fuzz_target;
use anchorex::preprocess::Vocabulary;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(vocab) = Vocabulary::from_text(text) {
            let again = Vocabulary::from_text(&vocab.to_text()).expect("roundtrip");
            assert_eq!(again, vocab);
        }
    }
});
