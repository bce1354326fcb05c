#![no_main]

use electromech::formats::{parse_noise_csv, write_noise_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_noise_csv(text) {
        let again = parse_noise_csv(&write_noise_csv(&table)).expect("written table reparses");
        assert_eq!(again, table);
    }
});
