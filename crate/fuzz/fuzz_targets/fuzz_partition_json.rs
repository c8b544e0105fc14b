#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    sigma_lab::fuzz_entries::partition_json(data);
});
