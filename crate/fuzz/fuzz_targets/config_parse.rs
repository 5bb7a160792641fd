//! Fuzz the scenario-config JSON parser and validator: arbitrary bytes must
//! never panic, only return errors.

#![no_main]

use libfuzzer_sys::fuzz_target;
use qball::experiments::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ScenarioConfig::from_json_str(text) {
        let _ = cfg.validate();
        // A config that parses must survive a serialize/parse round trip.
        let json = serde_json::to_string(&cfg).expect("serializing a parsed config");
        let back = ScenarioConfig::from_json_str(&json).expect("reparsing serialized config");
        assert_eq!(cfg, back);
    }
});
