//! Winternitz one-time signatures with a base-`w` checksum.
//!
//! Chains iterate a PRF keyed by the previous chain value on a public input
//! `x`: `c_0 = sk_i`, `c_{j+1} = f_{c_j}(x)`. The public key is `x` followed by
//! every chain end `c_{w−1}`. A message is written as `L1 = ceil(ℓ/log₂ w)`
//! base-`w` digits (most significant first), followed by the `L2` digits of
//! the checksum `C = Σ (w−1−b_i)`, where `L2 = floor(log_w(L1·(w−1))) + 1`.
//! Signing digit `b` on chain `i` reveals `c_b`.

use crate::ots::{check_message, decode_layout, encode_layout, KeyPair, SignatureScheme};
use crate::primitives::bytes_to_value;
use crate::primitives::family::{check_value, FamilyKind, FunctionFamilySpec};
use crate::tape::Tape;
use crate::wire::Writer;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WotsParams {
    pub w: u32,
    pub l: usize,
    pub prf: FunctionFamilySpec,
}

#[derive(Debug, Clone)]
pub struct WotsScheme {
    p: WotsParams,
    log_w: u32,
    l1: usize,
    l2: usize,
}

/// Secret chain starts plus the public input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WotsSecret {
    pub x: Vec<u8>,
    pub starts: Vec<Vec<u8>>,
}

impl WotsScheme {
    pub fn new(p: WotsParams) -> Result<WotsScheme, Error> {
        if p.w < 2 || !p.w.is_power_of_two() {
            return Err(Error::Param(format!(
                "w = {} must be a power of two ≥ 2",
                p.w
            )));
        }
        if p.l == 0 || p.l > 64 {
            return Err(Error::Param(
                "W-OTS message length must lie in 1..=64".into(),
            ));
        }
        if p.prf.kind != FamilyKind::Prf {
            return Err(Error::Param(format!(
                "W-OTS needs a PRF, got {}",
                p.prf.evaluator_id
            )));
        }
        let log_w = p.w.trailing_zeros();
        let l1 = p.l.div_ceil(log_w as usize);
        let max_checksum = l1 as u64 * u64::from(p.w - 1);
        let mut l2 = 1;
        while u64::from(p.w).pow(l2 as u32) <= max_checksum {
            l2 += 1;
        }
        Ok(WotsScheme { p, log_w, l1, l2 })
    }

    pub fn params(&self) -> &WotsParams {
        &self.p
    }

    pub fn prf(&self) -> &FunctionFamilySpec {
        &self.p.prf
    }

    pub fn chain_count(&self) -> usize {
        self.l1 + self.l2
    }

    pub fn message_chains(&self) -> usize {
        self.l1
    }

    pub fn checksum_chains(&self) -> usize {
        self.l2
    }

    fn params_block(&self) -> Vec<u8> {
        Writer::new()
            .u32(self.p.w)
            .u32(self.p.l as u32)
            .u32(self.p.prf.key_bits as u32)
            .u32(self.p.prf.input_bits as u32)
            .finish()
    }

    /// Message digits followed by checksum digits, `chain_count()` in total.
    pub fn digits(&self, msg: &[u8]) -> Vec<u32> {
        let v = bytes_to_value(msg);
        let mask = u64::from(self.p.w - 1);
        let mut d: Vec<u32> = (0..self.l1)
            .rev()
            .map(|j| ((v >> (j as u32 * self.log_w)) & mask) as u32)
            .collect();
        let c: u64 = d.iter().map(|&b| u64::from(self.p.w - 1 - b)).sum();
        d.extend(
            (0..self.l2)
                .rev()
                .map(|j| ((c >> (j as u32 * self.log_w)) & mask) as u32),
        );
        d
    }

    /// `steps` applications of the chain function starting at `start`.
    pub fn walk(&self, x: &[u8], start: &[u8], steps: u32) -> Vec<u8> {
        let mut c = start.to_vec();
        for _ in 0..steps {
            c = self.p.prf.eval_unchecked(&c, x);
        }
        c
    }

    /// Draws `x`, then every chain start, one tape draw per byte.
    pub fn keygen_secret(&self, tape: &mut Tape) -> Result<WotsSecret, Error> {
        let x = tape.value_bits(self.p.prf.input_bits)?;
        let starts = (0..self.chain_count())
            .map(|_| Ok(tape.value_bits(self.p.prf.key_bits)?))
            .collect::<Result<Vec<_>, Error>>()?;
        Ok(WotsSecret { x, starts })
    }

    /// `[x, end_0, end_1, ...]`.
    pub fn public_from_secret(&self, sk: &WotsSecret) -> Vec<Vec<u8>> {
        let mut pk = vec![sk.x.clone()];
        pk.extend(sk.starts.iter().map(|s| self.walk(&sk.x, s, self.p.w - 1)));
        pk
    }

    pub fn sign_secret(&self, sk: &WotsSecret, msg: &[u8]) -> Vec<Vec<u8>> {
        self.digits(msg)
            .iter()
            .zip(&sk.starts)
            .map(|(&b, s)| self.walk(&sk.x, s, b))
            .collect()
    }

    pub fn verify_elements(&self, pk: &[Vec<u8>], msg: &[u8], sig: &[Vec<u8>]) -> bool {
        if pk.len() != self.chain_count() + 1
            || sig.len() != self.chain_count()
            || check_message(msg, self.p.l).is_err()
        {
            return false;
        }
        let x = &pk[0];
        self.digits(msg).iter().enumerate().all(|(i, &b)| {
            check_value(&sig[i], self.p.prf.key_bits).is_ok()
                && self.walk(x, &sig[i], self.p.w - 1 - b) == pk[i + 1]
        })
    }

    pub fn encode(&self, elements: &[Vec<u8>]) -> Vec<u8> {
        encode_layout(&self.params_block(), elements)
    }

    pub fn decode_pk(&self, buf: &[u8]) -> Result<Vec<Vec<u8>>, Error> {
        let el = decode_layout(buf, &self.params_block())?;
        if el.len() != self.chain_count() + 1 {
            return Err(Error::Decode("wrong W-OTS public key size".into()));
        }
        check_value(&el[0], self.p.prf.input_bits)?;
        for e in &el[1..] {
            check_value(e, self.p.prf.key_bits)?;
        }
        Ok(el)
    }

    pub fn decode_sig(&self, buf: &[u8]) -> Result<Vec<Vec<u8>>, Error> {
        let el = decode_layout(buf, &self.params_block())?;
        if el.len() != self.chain_count() {
            return Err(Error::Decode("wrong W-OTS signature size".into()));
        }
        for e in &el {
            check_value(e, self.p.prf.key_bits)?;
        }
        Ok(el)
    }

    /// Secret key layout: `[x, start_0, start_1, ...]`.
    pub fn decode_sk(&self, buf: &[u8]) -> Result<WotsSecret, Error> {
        let mut el = decode_layout(buf, &self.params_block())?;
        if el.len() != self.chain_count() + 1 {
            return Err(Error::Decode("wrong W-OTS secret key size".into()));
        }
        let x = el.remove(0);
        check_value(&x, self.p.prf.input_bits)?;
        for e in &el {
            check_value(e, self.p.prf.key_bits)?;
        }
        Ok(WotsSecret { x, starts: el })
    }

    pub fn encode_sk(&self, sk: &WotsSecret) -> Vec<u8> {
        let mut el = vec![sk.x.clone()];
        el.extend(sk.starts.iter().cloned());
        self.encode(&el)
    }
}

impl SignatureScheme for WotsScheme {
    fn name(&self) -> String {
        format!(
            "wots[w={},l={},{}]",
            self.p.w, self.p.l, self.p.prf.evaluator_id
        )
    }

    fn message_bits(&self) -> usize {
        self.p.l
    }

    fn keygen_randomness_bits(&self) -> Option<u32> {
        u32::try_from(self.p.prf.input_bits + self.chain_count() * self.p.prf.key_bits).ok()
    }

    fn keygen(&self, tape: &mut Tape) -> Result<KeyPair, Error> {
        let sk = self.keygen_secret(tape)?;
        Ok(KeyPair {
            pk: self.encode(&self.public_from_secret(&sk)),
            sk: self.encode_sk(&sk),
        })
    }

    fn sign(&self, sk: &mut Vec<u8>, msg: &[u8]) -> Result<Vec<u8>, Error> {
        check_message(msg, self.p.l)?;
        let sk = self.decode_sk(sk)?;
        Ok(self.encode(&self.sign_secret(&sk, msg)))
    }

    fn verify(&self, pk: &[u8], msg: &[u8], sig: &[u8]) -> bool {
        match (self.decode_pk(pk), self.decode_sig(sig)) {
            (Ok(pk), Ok(sig)) => self.verify_elements(&pk, msg, &sig),
            _ => false,
        }
    }
}
