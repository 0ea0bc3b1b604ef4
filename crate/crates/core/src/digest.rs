//! SHA-256 helpers for manifests and data files.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Incremental hasher.
#[derive(Debug, Clone, Default)]
pub struct Hasher(Sha256);

impl Hasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, bytes: &[u8]) {
        self.0.update(bytes);
    }

    /// Hash the canonical JSON encoding of `value`.
    pub fn update_json<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<()> {
        let json = serde_json::to_vec(value).map_err(|e| Error::Config(format!("cannot serialise: {e}")))?;
        self.0.update(&(json.len() as u64).to_le_bytes());
        self.0.update(&json);
        Ok(())
    }

    pub fn finish(self) -> String {
        hex(&self.0.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn json_framing_separates_fields() {
        let mut a = Hasher::new();
        a.update_json("ab").unwrap();
        a.update_json("c").unwrap();
        let mut b = Hasher::new();
        b.update_json("a").unwrap();
        b.update_json("bc").unwrap();
        assert_ne!(a.finish(), b.finish());
    }
}
