#![no_main]

use libfuzzer_sys::fuzz_target;
use randlab_core::BitString;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = text.parse::<BitString>() {
        assert_eq!(s.to_string(), text);
        assert_eq!(s.len(), text.len());
        // Cylinders of the two children tile the parent's.
        let c = s.cylinder();
        assert_eq!(s.child(false).cylinder().lo, c.lo);
        assert_eq!(s.child(true).cylinder().hi, c.hi);
    }
});
