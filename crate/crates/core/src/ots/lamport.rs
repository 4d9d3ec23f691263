//! Lamport one-time signatures over a one-way function.
//!
//! The secret key holds `2ℓ` domain elements in slot order `(0,0), (0,1),
//! (1,0), ...`; slot `(i, b)` is index `2i + b`. A signature on `m` reveals
//! `sk[i, m_i]` for every bit position.

use crate::ots::{
    check_message, decode_layout, encode_layout, message_bit, KeyPair, SignatureScheme,
};
use crate::primitives::family::{check_value, FamilyKind, FunctionFamilySpec};
use crate::tape::Tape;
use crate::wire::Writer;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LamportParams {
    pub l: usize,
    pub owf: FunctionFamilySpec,
}

#[derive(Debug, Clone)]
pub struct LamportScheme {
    p: LamportParams,
}

pub fn slot(i: usize, b: bool) -> usize {
    2 * i + usize::from(b)
}

impl LamportScheme {
    pub fn new(p: LamportParams) -> Result<LamportScheme, Error> {
        if p.l == 0 {
            return Err(Error::Param("Lamport needs ℓ ≥ 1".into()));
        }
        if p.owf.kind != FamilyKind::Owf || p.owf.key_bits != 0 {
            return Err(Error::Param(format!(
                "Lamport needs an unkeyed OWF, got {}",
                p.owf.evaluator_id
            )));
        }
        Ok(LamportScheme { p })
    }

    pub fn params(&self) -> &LamportParams {
        &self.p
    }

    pub fn owf(&self) -> &FunctionFamilySpec {
        &self.p.owf
    }

    pub fn slots(&self) -> usize {
        2 * self.p.l
    }

    fn params_block(&self) -> Vec<u8> {
        Writer::new()
            .u32(self.p.l as u32)
            .u32(self.p.owf.input_bits as u32)
            .u32(self.p.owf.output_bits as u32)
            .finish()
    }

    pub fn f(&self, x: &[u8]) -> Vec<u8> {
        self.p.owf.eval_unchecked(&[], x)
    }

    /// Draws the secret elements in slot order, one tape draw per byte.
    pub fn keygen_elements(&self, tape: &mut Tape) -> Result<Vec<Vec<u8>>, Error> {
        (0..self.slots())
            .map(|_| Ok(tape.value_bits(self.p.owf.input_bits)?))
            .collect()
    }

    pub fn public_from_secret(&self, sk: &[Vec<u8>]) -> Vec<Vec<u8>> {
        sk.iter().map(|x| self.f(x)).collect()
    }

    pub fn sign_elements(&self, sk: &[Vec<u8>], msg: &[u8]) -> Vec<Vec<u8>> {
        (0..self.p.l)
            .map(|i| sk[slot(i, message_bit(msg, self.p.l, i))].clone())
            .collect()
    }

    pub fn verify_elements(&self, pk: &[Vec<u8>], msg: &[u8], sig: &[Vec<u8>]) -> bool {
        if pk.len() != self.slots()
            || sig.len() != self.p.l
            || check_message(msg, self.p.l).is_err()
        {
            return false;
        }
        (0..self.p.l).all(|i| {
            check_value(&sig[i], self.p.owf.input_bits).is_ok()
                && self.f(&sig[i]) == pk[slot(i, message_bit(msg, self.p.l, i))]
        })
    }

    pub fn encode(&self, elements: &[Vec<u8>]) -> Vec<u8> {
        encode_layout(&self.params_block(), elements)
    }

    fn decode_checked(&self, buf: &[u8], count: usize, bits: usize) -> Result<Vec<Vec<u8>>, Error> {
        let el = decode_layout(buf, &self.params_block())?;
        if el.len() != count {
            return Err(Error::Decode(format!(
                "expected {count} elements, got {}",
                el.len()
            )));
        }
        for e in &el {
            check_value(e, bits)?;
        }
        Ok(el)
    }

    pub fn decode_pk(&self, buf: &[u8]) -> Result<Vec<Vec<u8>>, Error> {
        self.decode_checked(buf, self.slots(), self.p.owf.output_bits)
    }

    pub fn decode_sk(&self, buf: &[u8]) -> Result<Vec<Vec<u8>>, Error> {
        self.decode_checked(buf, self.slots(), self.p.owf.input_bits)
    }

    pub fn decode_sig(&self, buf: &[u8]) -> Result<Vec<Vec<u8>>, Error> {
        self.decode_checked(buf, self.p.l, self.p.owf.input_bits)
    }
}

impl SignatureScheme for LamportScheme {
    fn name(&self) -> String {
        format!("lamport[l={},{}]", self.p.l, self.p.owf.evaluator_id)
    }

    fn message_bits(&self) -> usize {
        self.p.l
    }

    fn keygen_randomness_bits(&self) -> Option<u32> {
        u32::try_from(self.slots() * self.p.owf.input_bits).ok()
    }

    fn keygen(&self, tape: &mut Tape) -> Result<KeyPair, Error> {
        let sk = self.keygen_elements(tape)?;
        let pk = self.public_from_secret(&sk);
        Ok(KeyPair {
            pk: self.encode(&pk),
            sk: self.encode(&sk),
        })
    }

    fn sign(&self, sk: &mut Vec<u8>, msg: &[u8]) -> Result<Vec<u8>, Error> {
        check_message(msg, self.p.l)?;
        let sk = self.decode_sk(sk)?;
        Ok(self.encode(&self.sign_elements(&sk, msg)))
    }

    fn verify(&self, pk: &[u8], msg: &[u8], sig: &[u8]) -> bool {
        match (self.decode_pk(pk), self.decode_sig(sig)) {
            (Ok(pk), Ok(sig)) => self.verify_elements(&pk, msg, &sig),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::value_to_bytes;
    use crate::seed::Seed;

    fn scheme(l: usize, bits: usize) -> LamportScheme {
        LamportScheme::new(LamportParams {
            l,
            owf: FunctionFamilySpec::weak_owf(bits, bits).unwrap(),
        })
        .unwrap()
    }

    #[test]
    fn single_bit_reveals_slot_zero() {
        let s = scheme(1, 4);
        let mut t = Tape::seeded(Seed::from_u64(1));
        let sk = s.keygen_elements(&mut t).unwrap();
        assert_eq!(s.sign_elements(&sk, &[0]), vec![sk[0].clone()]);
        let pk = s.public_from_secret(&sk);
        assert!(s.verify_elements(&pk, &[0], &s.sign_elements(&sk, &[0])));
    }

    #[test]
    fn exhaustive_correctness_l8() {
        let s = scheme(8, 8);
        let mut kp = s.keygen(&mut Tape::seeded(Seed::from_u64(2))).unwrap();
        for v in 0..256u64 {
            let m = value_to_bytes(v, 8);
            let sig = s.sign(&mut kp.sk, &m).unwrap();
            assert!(s.verify(&kp.pk, &m, &sig));
        }
    }

    #[test]
    fn rejects_oversized_message() {
        let s = scheme(4, 4);
        let mut kp = s.keygen(&mut Tape::seeded(Seed::ZERO)).unwrap();
        assert!(s.sign(&mut kp.sk, &[0x10]).is_err());
        assert!(!s.verify(&kp.pk, &[0x10], &s.sign(&mut kp.sk, &[0]).unwrap()));
    }
}
