#![no_main]

use electromech::formats::{parse_spectrum_csv, write_spectrum_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_spectrum_csv(text) {
        let again = parse_spectrum_csv(&write_spectrum_csv(&table)).expect("written table reparses");
        assert_eq!(again, table);
        let _ = table.to_spectrum();
    }
});
