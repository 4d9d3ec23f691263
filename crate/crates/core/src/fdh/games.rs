//! The trapdoor-permutation inversion game and the random-oracle forgery
//! game for Full-Domain Hash.
//!
//! Wire format (tags):
//! - `PK 0x50`: modulus `n` and exponent `e`, big-endian, length-prefixed;
//! - `HASH 0x51 m` → `DIGEST 0x52 h`;
//! - `SIGN 0x53 m` → `SIG 0x54 σ`;
//! - `FORGE 0x55 m σ`.
//!
//! Elements of `Z_N` travel as fixed-width big-endian strings.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_bigint::BigUint;

use crate::game::{
    ChallengerProgram, ChallengerSession, ChallengerStep, GameDef, PlayError, Verdict,
};
use crate::ots::check_message;
use crate::primitives::games::{decode_challenge, TAG_ANSWER, TAG_CHALLENGE};
use crate::primitives::tdp::{
    encode_elem, is_unit, sample_unit, tdp_forward, tdp_invert, tdp_keygen, TdpKeyPair,
    TdpPublicKey, MAX_MODULUS_BITS, MIN_MODULUS_BITS,
};
use crate::tape::Tape;
use crate::wire::{Reader, Writer};
use crate::Error;

pub const TAG_PK: u8 = 0x50;
pub const TAG_HASH: u8 = 0x51;
pub const TAG_DIGEST: u8 = 0x52;
pub const TAG_SIGN: u8 = 0x53;
pub const TAG_SIG: u8 = 0x54;
pub const TAG_FORGE: u8 = 0x55;

/// Parameters of the random-oracle forgery game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoGameParams {
    pub modulus_bits: usize,
    pub message_bits: usize,
    /// Distinct inputs the adversary may hash.
    pub max_hash: u32,
    pub max_sign: u32,
}

impl RoGameParams {
    fn check(&self) -> Result<(), Error> {
        if !(MIN_MODULUS_BITS..=MAX_MODULUS_BITS).contains(&self.modulus_bits) {
            return Err(Error::Param(format!(
                "modulus_bits {} outside [{MIN_MODULUS_BITS}, {MAX_MODULUS_BITS}]",
                self.modulus_bits
            )));
        }
        if self.message_bits == 0 || self.message_bits > 4096 {
            return Err(Error::Param("message_bits must be in 1..=4096".into()));
        }
        Ok(())
    }
}

/// Adversary moves in the forgery game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoMove {
    Hash(Vec<u8>),
    Sign(Vec<u8>),
    Forge { msg: Vec<u8>, sig: Vec<u8> },
}

pub fn encode_tdp_pk(pk: &TdpPublicKey) -> Vec<u8> {
    Writer::tagged(TAG_PK)
        .bytes(&pk.n.to_bytes_be())
        .bytes(&pk.e.to_bytes_be())
        .finish()
}

pub fn decode_tdp_pk(msg: &[u8]) -> Result<TdpPublicKey, Error> {
    let mut r = Reader::new(msg);
    expect(&mut r, TAG_PK)?;
    let n = BigUint::from_bytes_be(&r.bytes()?);
    let e = BigUint::from_bytes_be(&r.bytes()?);
    r.finish()?;
    Ok(TdpPublicKey { n, e })
}

pub fn encode_hash(m: &[u8]) -> Vec<u8> {
    Writer::tagged(TAG_HASH).bytes(m).finish()
}

pub fn encode_sign(m: &[u8]) -> Vec<u8> {
    Writer::tagged(TAG_SIGN).bytes(m).finish()
}

pub fn encode_digest(n: &BigUint, h: &BigUint) -> Vec<u8> {
    Writer::tagged(TAG_DIGEST)
        .bytes(&encode_elem(n, h))
        .finish()
}

pub fn encode_ro_sig(n: &BigUint, s: &BigUint) -> Vec<u8> {
    Writer::tagged(TAG_SIG).bytes(&encode_elem(n, s)).finish()
}

pub fn encode_ro_forgery(n: &BigUint, m: &[u8], s: &BigUint) -> Vec<u8> {
    Writer::tagged(TAG_FORGE)
        .bytes(m)
        .bytes(&encode_elem(n, s))
        .finish()
}

fn expect(r: &mut Reader<'_>, tag: u8) -> Result<(), Error> {
    let t = r.u8()?;
    if t != tag {
        return Err(Error::Decode(format!(
            "expected tag {tag:#04x}, got {t:#04x}"
        )));
    }
    Ok(())
}

/// Decodes a `DIGEST` or `SIG` reply.
pub fn decode_element(msg: &[u8], tag: u8) -> Result<BigUint, Error> {
    let mut r = Reader::new(msg);
    expect(&mut r, tag)?;
    let v = BigUint::from_bytes_be(&r.bytes()?);
    r.finish()?;
    Ok(v)
}

pub fn decode_ro_move(msg: &[u8]) -> Result<RoMove, Error> {
    let mut r = Reader::new(msg);
    let mv = match r.u8()? {
        TAG_HASH => RoMove::Hash(r.bytes()?),
        TAG_SIGN => RoMove::Sign(r.bytes()?),
        TAG_FORGE => RoMove::Forge {
            msg: r.bytes()?,
            sig: r.bytes()?,
        },
        t => return Err(Error::Decode(format!("unexpected tag {t:#04x}"))),
    };
    r.finish()?;
    Ok(mv)
}

/// Reads a fixed-width element of `Z_N`, rejecting wrong widths and
/// non-units.
pub fn decode_unit(n: &BigUint, bytes: &[u8]) -> Option<BigUint> {
    if bytes.len() != (n.bits() as usize).div_ceil(8) {
        return None;
    }
    let v = BigUint::from_bytes_be(bytes);
    is_unit(n, &v).then_some(v)
}

// ---------------------------------------------------------------------------
// Inversion

pub fn tdp_game_name(modulus_bits: usize) -> String {
    format!("inv[tdp,N{modulus_bits}]")
}

/// `G^tdp`: the challenger draws a key seed (four 64-bit draws), generates
/// the key pair from it, draws `y*` uniformly from `Z_N*` and sends
/// `CHALLENGE(pk, y*)`; the adversary wins with `ANSWER(x)`, `f(x) = y*`.
pub fn tdp_inversion_game(modulus_bits: usize) -> Result<GameDef, Error> {
    if !(MIN_MODULUS_BITS..=MAX_MODULUS_BITS).contains(&modulus_bits) {
        return Err(Error::Param(format!(
            "modulus_bits {modulus_bits} outside [{MIN_MODULUS_BITS}, {MAX_MODULUS_BITS}]"
        )));
    }
    Ok(GameDef::new(
        tdp_game_name(modulus_bits),
        Arc::new(TdpChallenger { modulus_bits }),
        3,
    ))
}

pub fn encode_tdp_challenge(pk: &TdpPublicKey, y: &BigUint) -> Vec<u8> {
    Writer::tagged(TAG_CHALLENGE)
        .bytes(&encode_tdp_pk(pk))
        .bytes(&encode_elem(&pk.n, y))
        .finish()
}

pub fn decode_tdp_challenge(msg: &[u8]) -> Result<(TdpPublicKey, BigUint), Error> {
    let c = decode_challenge(msg)?;
    let pk = decode_tdp_pk(&c.key)?;
    let [y] = c.parts.as_slice() else {
        return Err(Error::Decode("inversion challenge has one part".into()));
    };
    let y = decode_unit(&pk.n, y).ok_or(Error::NotUnit)?;
    Ok((pk, y))
}

struct TdpChallenger {
    modulus_bits: usize,
}

struct TdpSession {
    modulus_bits: usize,
    tape: Tape,
    state: Option<(TdpPublicKey, BigUint)>,
}

impl ChallengerProgram for TdpChallenger {
    fn start(&self, tape: Tape) -> Box<dyn ChallengerSession> {
        Box::new(TdpSession {
            modulus_bits: self.modulus_bits,
            tape,
            state: None,
        })
    }
}

impl ChallengerSession for TdpSession {
    fn step(&mut self, incoming: Option<&[u8]>) -> Result<ChallengerStep, PlayError> {
        let Some(msg) = incoming else {
            let kp = tdp_keygen(self.tape.fill_seed()?, self.modulus_bits)?;
            let y = sample_unit(&mut self.tape, &kp.pk.n)?;
            let out = encode_tdp_challenge(&kp.pk, &y);
            self.state = Some((kp.pk, y));
            return Ok(ChallengerStep::Send(out));
        };
        let (pk, y) = self.state.as_ref().expect("challenge sent");
        let x = decode_element(msg, TAG_ANSWER)?;
        let ok = tdp_forward(pk, &x).is_ok_and(|fx| &fx == y);
        Ok(ChallengerStep::finish(Verdict::from_bool(ok)))
    }
}

// ---------------------------------------------------------------------------
// Forgery with a random oracle

pub fn ro_game_name(p: &RoGameParams) -> String {
    format!(
        "ro-forge[fdh,N{},l{}]/h{},s{}",
        p.modulus_bits, p.message_bits, p.max_hash, p.max_sign
    )
}

/// `G^ro-for`: the challenger draws a key seed (four 64-bit draws) and sends
/// `PK`. The oracle `H: messages → Z_N*` is sampled lazily from the
/// challenger tape, one `sample_unit` per fresh input, in order of first
/// need. Signing answers `H(m)^d`. The adversary wins with `FORGE(m*, σ*)`
/// where `m*` was never signed and `f(σ*) = H(m*)`. Exceeding either query
/// budget is a violation.
pub fn ro_forgery_game(p: RoGameParams) -> Result<GameDef, Error> {
    p.check()?;
    Ok(GameDef::new(
        ro_game_name(&p),
        Arc::new(RoChallenger { p }),
        2 * (p.max_hash + p.max_sign) + 3,
    ))
}

struct RoChallenger {
    p: RoGameParams,
}

impl ChallengerProgram for RoChallenger {
    fn start(&self, tape: Tape) -> Box<dyn ChallengerSession> {
        Box::new(RoSession {
            p: self.p,
            tape,
            kp: None,
            table: HashMap::new(),
            hashed: HashSet::new(),
            signed: Vec::new(),
        })
    }
}

struct RoSession {
    p: RoGameParams,
    tape: Tape,
    kp: Option<TdpKeyPair>,
    table: HashMap<Vec<u8>, BigUint>,
    hashed: HashSet<Vec<u8>>,
    signed: Vec<Vec<u8>>,
}

impl RoSession {
    fn h(&mut self, m: &[u8]) -> Result<BigUint, PlayError> {
        if let Some(v) = self.table.get(m) {
            return Ok(v.clone());
        }
        let n = &self.kp.as_ref().expect("keys generated").pk.n;
        let v = sample_unit(&mut self.tape, n)?;
        self.table.insert(m.to_vec(), v.clone());
        Ok(v)
    }
}

impl ChallengerSession for RoSession {
    fn step(&mut self, incoming: Option<&[u8]>) -> Result<ChallengerStep, PlayError> {
        let Some(msg) = incoming else {
            let kp = tdp_keygen(self.tape.fill_seed()?, self.p.modulus_bits)?;
            let out = encode_tdp_pk(&kp.pk);
            self.kp = Some(kp);
            return Ok(ChallengerStep::Send(out));
        };
        let n = self.kp.as_ref().expect("keys generated").pk.n.clone();
        match decode_ro_move(msg)? {
            RoMove::Hash(m) => {
                check_message(&m, self.p.message_bits)?;
                if self.hashed.insert(m.clone()) && self.hashed.len() as u32 > self.p.max_hash {
                    return Err(PlayError::Schema(format!(
                        "hash query budget {} exceeded",
                        self.p.max_hash
                    )));
                }
                let h = self.h(&m)?;
                Ok(ChallengerStep::Send(encode_digest(&n, &h)))
            }
            RoMove::Sign(m) => {
                check_message(&m, self.p.message_bits)?;
                if self.signed.len() as u32 >= self.p.max_sign {
                    return Err(PlayError::Schema(format!(
                        "signing query budget {} exceeded",
                        self.p.max_sign
                    )));
                }
                let h = self.h(&m)?;
                let sk = &self.kp.as_ref().expect("keys generated").sk;
                let s = tdp_invert(sk, &h)?;
                self.signed.push(m);
                Ok(ChallengerStep::Send(encode_ro_sig(&n, &s)))
            }
            RoMove::Forge { msg: m, sig } => {
                check_message(&m, self.p.message_bits)?;
                let h = self.h(&m)?;
                let pk = &self.kp.as_ref().expect("keys generated").pk;
                let ok = !self.signed.contains(&m)
                    && decode_unit(&n, &sig)
                        .is_some_and(|s| tdp_forward(pk, &s).is_ok_and(|y| y == h));
                Ok(ChallengerStep::finish(Verdict::from_bool(ok)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::adversaries::{always_abort, from_fn};
    use crate::game::{run_game, AdversaryStep};
    use crate::primitives::games::encode_answer;
    use crate::primitives::tdp::factor_small;
    use crate::seed::Seed;

    #[test]
    fn factoring_adversary_inverts() {
        let g = tdp_inversion_game(16).unwrap();
        let a = from_fn("factor", &g, Some(0), |_, _, m| {
            let (pk, y) = decode_tdp_challenge(m).unwrap();
            let kp = factor_small(&pk).unwrap();
            let x = tdp_invert(&kp.sk, &y).unwrap();
            Ok(AdversaryStep::Send(encode_answer(&encode_elem(&pk.n, &x))))
        });
        for s in 0..20 {
            assert!(run_game(&g, &a, Seed::from_u64(s))
                .unwrap()
                .outcome
                .verdict
                .is_succ());
        }
        let rec = run_game(&g, &always_abort(&g), Seed::from_u64(1)).unwrap();
        assert!(!rec.outcome.verdict.is_succ());
    }

    fn params() -> RoGameParams {
        RoGameParams {
            modulus_bits: 12,
            message_bits: 8,
            max_hash: 2,
            max_sign: 1,
        }
    }

    #[test]
    fn signed_message_is_not_a_forgery() {
        let g = ro_forgery_game(params()).unwrap();
        let a = from_fn("replay", &g, Some(0), |_, i, m| {
            Ok(AdversaryStep::Send(match i {
                0 => encode_sign(&[7]),
                _ => {
                    let mut r = Reader::new(m);
                    r.u8().unwrap();
                    let s = r.bytes().unwrap();
                    Writer::tagged(TAG_FORGE).bytes(&[7]).bytes(&s).finish()
                }
            }))
        });
        for s in 0..10 {
            let rec = run_game(&g, &a, Seed::from_u64(s)).unwrap();
            assert!(!rec.outcome.verdict.is_succ());
            assert!(rec.outcome.violation.is_none());
        }
    }

    #[test]
    fn budgets_are_enforced() {
        let g = ro_forgery_game(params()).unwrap();
        let a = from_fn("greedy", &g, Some(0), |_, i, _| {
            Ok(AdversaryStep::Send(encode_hash(&[i as u8])))
        });
        let rec = run_game(&g, &a, Seed::from_u64(1)).unwrap();
        assert!(rec.outcome.violation.unwrap().contains("hash query budget"));
        // repeating one input stays within budget until the round bound
        let a = from_fn("repeat", &g, Some(0), |_, _, _| {
            Ok(AdversaryStep::Send(encode_hash(&[1])))
        });
        let rec = run_game(&g, &a, Seed::from_u64(1)).unwrap();
        assert!(rec.outcome.violation.unwrap().contains("round bound"));
    }

    #[test]
    fn oracle_answers_are_consistent() {
        let g = ro_forgery_game(params()).unwrap();
        let a = from_fn("twice", &g, Some(0), |_, i, m| {
            if i == 2 {
                let mut r = Reader::new(m);
                r.u8().unwrap();
                let h = r.bytes().unwrap();
                // forge with the digest itself: valid only if f(h) = h
                return Ok(AdversaryStep::Send(
                    Writer::tagged(TAG_FORGE).bytes(&[3]).bytes(&h).finish(),
                ));
            }
            Ok(AdversaryStep::Send(encode_hash(&[3])))
        });
        let rec = run_game(&g, &a, Seed::from_u64(4)).unwrap();
        let digests: Vec<_> = rec.transcript.challenger_messages().skip(1).collect();
        assert_eq!(digests.len(), 2);
        assert_eq!(digests[0], digests[1]);
    }
}
