#![no_main]

use libfuzzer_sys::fuzz_target;
use randlab_core::Rational;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(r) = text.parse::<Rational>() {
        let again: Rational = r.to_string().parse().expect("display output parses");
        assert_eq!(again, r);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<Rational>(&json).unwrap(), r);
    }
});
