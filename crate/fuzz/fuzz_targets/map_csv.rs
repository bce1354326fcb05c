#![no_main]

use electromech::formats::{parse_map_csv, write_map_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_map_csv(text) {
        assert_eq!(table.mag_db.len(), table.drive_hz.len() * table.probe_hz.len());
        let again = parse_map_csv(&write_map_csv(&table)).expect("written map reparses");
        assert_eq!(again, table);
    }
});
