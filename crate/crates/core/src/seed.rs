//! 32-byte seeds and the sub-seed derivation used for every role and trial.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::Error;

const DERIVE_DOMAIN: &[u8] = b"liftlab/seed-derive/v1";

/// Fixed-width seed from which all randomness of a run is derived.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seed(pub [u8; 32]);

impl Seed {
    pub const ZERO: Seed = Seed([0u8; 32]);

    pub fn from_u64(value: u64) -> Seed {
        let mut bytes = [0u8; 32];
        bytes[24..].copy_from_slice(&value.to_be_bytes());
        Seed(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// Derives the sub-seed for `(role, index)`.
    ///
    /// The hash input is `domain ∥ seed ∥ len(role) as u32 BE ∥ role ∥ index as u64 BE`.
    /// The length prefix makes the encoding of `(role, index)` injective, so
    /// distinct pairs never hash the same preimage.
    pub fn derive(&self, role: &str, index: u64) -> Seed {
        let mut h = Sha256::new();
        h.update(DERIVE_DOMAIN);
        h.update(self.0);
        h.update((role.len() as u32).to_be_bytes());
        h.update(role.as_bytes());
        h.update(index.to_be_bytes());
        Seed(h.finalize().into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seed({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Seed {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = hex::decode(s.trim()).map_err(|e| Error::Param(format!("seed: {e}")))?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| Error::Param("seed must be exactly 32 bytes (64 hex digits)".into()))?;
        Ok(Seed(arr))
    }
}
