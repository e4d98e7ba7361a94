#![no_main]

use libfuzzer_sys::fuzz_target;
use treedist::experiments::{ClusterConfig, SineConfig};
use treedist::io;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = io::from_versioned_str::<ClusterConfig>(text);
        let _ = io::from_versioned_str::<SineConfig>(text);
    }
});
