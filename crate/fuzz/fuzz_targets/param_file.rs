#![no_main]

use electromech::formats::{parse_param_file, write_param_file};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(record) = parse_param_file(text) {
        // whatever parses must survive its own writer
        let again = parse_param_file(&write_param_file(&record)).expect("written file reparses");
        assert_eq!(again, record);
        let _ = record.to_params();
    }
});
