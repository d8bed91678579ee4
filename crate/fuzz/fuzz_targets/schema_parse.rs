#![no_main]

use dppred::Schema;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(schema) = Schema::parse(text) {
        // Rendering must parse back to the same schema.
        let again = Schema::parse(&schema.to_text()).expect("rendered schema parses");
        assert_eq!(again, schema);
    }
});
