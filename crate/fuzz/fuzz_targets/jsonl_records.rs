#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Malformed rows are counted, never fatal, and must never panic.
        let _ = anchorex::corpus::parse_jsonl(text);
    }
});
