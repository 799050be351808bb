#![no_main]

use libfuzzer_sys::fuzz_target;
use anchorex::corex::CorexModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = CorexModel::from_bytes(data) {
        let again = CorexModel::from_bytes(&model.to_bytes()).expect("roundtrip");
        assert_eq!(again, model);
    }
});
