#![no_main]

use libfuzzer_sys::fuzz_target;
use septrans::io::{parse_instance, InstanceFile};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(inst) = parse_instance(text) {
        let again = InstanceFile::from_instance(&inst).to_json();
        assert_eq!(parse_instance(&again).unwrap(), inst);
    }
});
