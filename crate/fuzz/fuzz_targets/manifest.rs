#![no_main]

use electromech::formats::RunManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(manifest) = RunManifest::parse(text) {
        let again = RunManifest::parse(&manifest.to_json()).expect("written manifest reparses");
        assert_eq!(again, manifest);
    }
});
