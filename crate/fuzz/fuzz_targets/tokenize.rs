#![no_main]

use libfuzzer_sys::fuzz_target;
use anchorex::preprocess::{tokenize, TokenizerConfig};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let cfg = TokenizerConfig::default();
        let tokens = tokenize(text, &cfg);
        // Tokenization is idempotent on its own output.
        let again = tokenize(&tokens.join(" "), &cfg);
        assert_eq!(tokens, again);
    }
});
