#![no_main]

use libfuzzer_sys::fuzz_target;
use treedist::io;

fuzz_target!(|data: &[u8]| {
    if let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) {
        let _ = io::map_from_json(&v, "$");
    }
});
