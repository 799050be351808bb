#![no_main]

use libfuzzer_sys::fuzz_target;
use anchorex::corex::SeedSet;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(seeds) = SeedSet::parse(text) {
            // A parsed seed set must survive a text round trip.
            let again = SeedSet::parse(&seeds.to_text()).expect("roundtrip");
            assert_eq!(again.groups, seeds.groups);
        }
    }
});
