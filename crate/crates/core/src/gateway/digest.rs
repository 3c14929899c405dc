//! Stable request digests.
//!
//! SHA-256 over a length-prefixed canonical encoding, fields in fixed order:
//! domain tag, prompt, model id, max tokens (u32 LE), temperature (IEEE-754
//! bits LE, `-0.0` folded to `0.0`), stop list (presence byte, count, items).
//! The stage tag is not part of the digest, so identical prompts issued by
//! different runs share cache and replay entries.

use sha2::{Digest, Sha256};

use super::GenerationRequest;

const DOMAIN: &[u8] = b"zefav/generation-request/v1";

fn put_bytes(h: &mut Sha256, bytes: &[u8]) {
    h.update((bytes.len() as u64).to_le_bytes());
    h.update(bytes);
}

pub fn digest(req: &GenerationRequest) -> String {
    let mut h = Sha256::new();
    put_bytes(&mut h, DOMAIN);
    put_bytes(&mut h, req.prompt.as_bytes());
    put_bytes(&mut h, req.model_id.as_bytes());
    h.update(req.max_tokens.to_le_bytes());
    let temperature = if req.temperature == 0.0 { 0.0f64 } else { req.temperature };
    h.update(temperature.to_bits().to_le_bytes());
    match &req.stop {
        None => h.update([0u8]),
        Some(stop) => {
            h.update([1u8]);
            h.update((stop.len() as u64).to_le_bytes());
            for s in stop {
                put_bytes(&mut h, s.as_bytes());
            }
        }
    }
    hex::encode(h.finalize())
}

/// True for a 64-character lowercase hex string.
pub(crate) fn is_valid_digest(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}
