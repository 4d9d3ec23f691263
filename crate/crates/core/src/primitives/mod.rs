//! Function families, the trapdoor permutation, and the standard games over
//! them.

pub mod family;
pub mod games;
pub mod tdp;
pub mod vectors;

pub use family::{
    brute_force_invert, brute_force_key, bytes_to_value, value_to_bytes, FamilyKind,
    FunctionFamilySpec, InverseTable, Strength,
};
pub use games::{audit_transcript, standard_game, StandardGameKind};
pub use tdp::{tdp_forward, tdp_invert, tdp_keygen, TdpKeyPair, TdpPublicKey, TdpSecretKey};
