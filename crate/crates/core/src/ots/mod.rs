//! One-time signatures (Lamport, Winternitz), the forgery game, and the
//! forger-to-inverter and forger-to-key-recovery transformers.
//!
//! Messages are `ceil(ℓ/8)`-byte big-endian values below `2^ℓ`; bit `i` of a
//! message is bit `ℓ−1−i` of that value, so bit 0 is the most significant.
//!
//! Keys and signatures share one byte layout:
//! `version (u8) ∥ params (u32-length-prefixed) ∥ elements (u32 count, then
//! u32-length-prefixed elements)`.

pub mod adversaries;
pub mod forgery;
pub mod lamport;
pub mod transformers;
pub mod wots;

use crate::primitives::family::check_value;
use crate::tape::Tape;
use crate::wire::{Reader, Writer};
use crate::Error;

pub use forgery::{make_forgery_game, ForgeryGameParams};
pub use lamport::{LamportParams, LamportScheme};
pub use transformers::{lamport_inverter_transformer, wots_kow_transformer};
pub use wots::{WotsParams, WotsScheme};

pub const LAYOUT_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub pk: Vec<u8>,
    pub sk: Vec<u8>,
}

/// Key generation, signing and verification over byte encodings.
///
/// Stateful schemes keep their signer state inside `sk` and advance it on
/// every successful `sign`.
pub trait SignatureScheme: Send + Sync {
    fn name(&self) -> String;
    fn message_bits(&self) -> usize;
    fn is_stateful(&self) -> bool {
        false
    }
    /// Exact number of random bits `keygen` consumes, when bounded.
    fn keygen_randomness_bits(&self) -> Option<u32> {
        None
    }
    fn keygen(&self, tape: &mut Tape) -> Result<KeyPair, Error>;
    fn sign(&self, sk: &mut Vec<u8>, msg: &[u8]) -> Result<Vec<u8>, Error>;
    fn verify(&self, pk: &[u8], msg: &[u8], sig: &[u8]) -> bool;
}

pub fn check_message(msg: &[u8], bits: usize) -> Result<(), Error> {
    check_value(msg, bits)
}

/// Bit `i` of an `nbits`-bit message, most significant first.
pub fn message_bit(msg: &[u8], nbits: usize, i: usize) -> bool {
    let pad = 8 * msg.len() - nbits;
    let pos = pad + i;
    (msg[pos / 8] >> (7 - pos % 8)) & 1 == 1
}

pub fn flip_bit(msg: &[u8], nbits: usize, i: usize) -> Vec<u8> {
    let mut m = msg.to_vec();
    let pos = 8 * msg.len() - nbits + i;
    m[pos / 8] ^= 1 << (7 - pos % 8);
    m
}

pub fn encode_layout(params: &[u8], elements: &[Vec<u8>]) -> Vec<u8> {
    Writer::new()
        .u8(LAYOUT_VERSION)
        .bytes(params)
        .array(elements)
        .finish()
}

/// Splits a layout into its params block and elements, requiring the params
/// block to equal `expected_params`.
pub fn decode_layout(buf: &[u8], expected_params: &[u8]) -> Result<Vec<Vec<u8>>, Error> {
    let mut r = Reader::new(buf);
    let v = r.u8()?;
    if v != LAYOUT_VERSION {
        return Err(Error::Decode(format!("unsupported layout version {v}")));
    }
    if r.bytes()? != expected_params {
        return Err(Error::Decode("parameter block mismatch".into()));
    }
    let el = r.array()?;
    r.finish()?;
    Ok(el)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_order_is_big_endian() {
        // 4-bit message 0b1000
        let m = [0b0000_1000u8];
        assert!(message_bit(&m, 4, 0));
        assert!(!message_bit(&m, 4, 3));
        assert_eq!(flip_bit(&m, 4, 3), vec![0b0000_1001]);
        let m = [0x80u8, 0x01];
        assert!(message_bit(&m, 16, 0));
        assert!(message_bit(&m, 16, 15));
    }

    #[test]
    fn layout_round_trip() {
        let el = vec![vec![1, 2], vec![], vec![3]];
        let enc = encode_layout(b"p", &el);
        assert_eq!(decode_layout(&enc, b"p").unwrap(), el);
        assert!(decode_layout(&enc, b"q").is_err());
        assert!(decode_layout(&enc[..enc.len() - 1], b"p").is_err());
    }
}
