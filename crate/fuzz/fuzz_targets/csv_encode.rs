#![no_main]

use dppred::data::{EncodeOptions, Encoding};
use dppred::{RawTable, Schema};
use libfuzzer_sys::fuzz_target;

// Input is a schema, a NUL byte, then CSV text.
fuzz_target!(|data: &[u8]| {
    let Some(cut) = data.iter().position(|&b| b == 0) else { return };
    let Ok(schema_text) = std::str::from_utf8(&data[..cut]) else { return };
    let Ok(schema) = Schema::parse(schema_text) else { return };
    let Ok(raw) = RawTable::from_reader(&data[cut + 1..]) else { return };
    let Ok(enc) = Encoding::fit(&raw, &schema) else { return };
    if let Ok(ds) = enc.encode(&raw, EncodeOptions::default()) {
        assert_eq!(ds.x.len(), ds.n * ds.d);
        assert!(ds.x.iter().all(|v| v.is_finite()));
    }
});
