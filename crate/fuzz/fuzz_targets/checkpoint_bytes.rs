#![no_main]

use libfuzzer_sys::fuzz_target;
use obsp_core::nn::{decode_checkpoint, encode_checkpoint};

fuzz_target!(|data: &[u8]| {
    // Decoding must never panic on arbitrary bytes, and anything it
    // accepts must reach a byte-stable encoding in one round trip.
    // (Comparing bytes, not structs, keeps NaN parameter payloads honest.)
    if let Ok(ckpt) = decode_checkpoint(data) {
        let bytes = encode_checkpoint(&ckpt.net, ckpt.adam.as_ref());
        let ckpt2 = decode_checkpoint(&bytes).expect("re-encoded checkpoint decodes");
        assert_eq!(encode_checkpoint(&ckpt2.net, ckpt2.adam.as_ref()), bytes);
    }
});
