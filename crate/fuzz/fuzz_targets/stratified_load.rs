#![no_main]

use dppred::StratifiedModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = StratifiedModel::from_text(text) {
        let again = StratifiedModel::from_text(&model.to_text()).expect("saved model reloads");
        assert_eq!(again.to_text(), model.to_text());
    }
});
