#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Parsing must never panic; a parsed config must survive validation
    // and the canonical round trip.
    if let Ok(cfg) = vanet_qos::domain::parse_config(text) {
        let canonical = vanet_qos::domain::serialize_config(&cfg);
        let reparsed =
            vanet_qos::domain::parse_config(&canonical).expect("canonical form must parse");
        assert_eq!(
            vanet_qos::domain::serialize_config(&reparsed),
            canonical,
            "canonical form must be a fixed point"
        );
        let _ = vanet_qos::domain::validate_config(cfg);
    }
});
