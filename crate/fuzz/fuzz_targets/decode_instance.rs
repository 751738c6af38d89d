#![no_main]

use libfuzzer_sys::fuzz_target;
use randlab_cli::{decode_instance, Command};

const COMMANDS: [Command; 7] = [
    Command::Density,
    Command::Covering,
    Command::Porosity,
    Command::Tests,
    Command::Martingale,
    Command::Extend,
    Command::Counterexample,
];

fuzz_target!(|data: &[u8]| {
    let Some((&first, rest)) = data.split_first() else {
        return;
    };
    let command = COMMANDS[first as usize % COMMANDS.len()];
    if let Ok(text) = std::str::from_utf8(rest) {
        let _ = decode_instance(command, text);
    }
});
