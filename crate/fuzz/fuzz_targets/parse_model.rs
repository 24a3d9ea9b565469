#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Parsing must never panic, and an accepted model must round-trip
    // byte-identically through the canonical serializer.
    if let Ok(model) = vanet_qos::agents::parse_model(text) {
        let canonical = vanet_qos::agents::serialize_model(&model);
        let reparsed =
            vanet_qos::agents::parse_model(&canonical).expect("canonical form must parse");
        assert_eq!(reparsed, model);
    }
});
