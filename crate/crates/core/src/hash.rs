//! Short content digests used to name auxiliary directories and response files.

use sha2::{Digest, Sha256};

/// Number of hex characters kept from a digest.
pub const SHORT_HASH_LEN: usize = 7;

/// First seven lowercase hex digits of the SHA-256 of `bytes`.
pub fn short_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = hex::encode(digest);
    hex.truncate(SHORT_HASH_LEN);
    hex
}

/// Hash naming the response file of a code snippet.
///
/// Trailing whitespace of every line, and trailing blank lines, are ignored.
pub fn code_hash(code: &str) -> String {
    let normalized: Vec<&str> = code.split('\n').map(str::trim_end).collect();
    short_hash(normalized.join("\n").trim_end_matches('\n').as_bytes())
}
