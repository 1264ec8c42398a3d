//! Stable fingerprints of resolved configurations.

use sha2::{Digest, Sha256};

/// Hex prefix (16 chars) of the SHA-256 of canonical `key=value` lines.
///
/// Pairs are sorted by key first, so insertion order never matters.
pub fn fingerprint<K, V, I>(pairs: I) -> String
where
    K: AsRef<str>,
    V: AsRef<str>,
    I: IntoIterator<Item = (K, V)>,
{
    let mut lines: Vec<String> = pairs
        .into_iter()
        .map(|(k, v)| format!("{}={}", k.as_ref(), v.as_ref()))
        .collect();
    lines.sort();
    let digest = Sha256::digest(lines.join("\n").as_bytes());
    hex::encode(digest)[..16].to_string()
}
