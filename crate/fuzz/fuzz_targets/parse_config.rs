//! Fuzzes the one entry point that consumes untrusted bytes. The parser
//! must never panic, and anything it accepts must satisfy its own
//! validation contract and survive a serialize/parse round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

use dilemma::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config(text) {
        cfg.validate().expect("accepted config validates");
        let json = serde_json::to_string(&cfg).expect("accepted config serializes");
        let back = parse_config(&json).expect("round trip parses");
        assert_eq!(back, cfg, "round trip changed the config");
    }
});
