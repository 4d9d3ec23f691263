//! FDH forger fixtures. All of them factor the desk-scale modulus.

use std::sync::Arc;

use num_bigint::BigUint;

use crate::fdh::games::{
    decode_element, decode_tdp_pk, encode_hash, encode_ro_forgery, encode_sign, ro_game_name,
    RoGameParams, TAG_DIGEST, TAG_SIG,
};
use crate::game::{AdversaryHandle, AdversaryProgram, AdversarySession, AdversaryStep, RunContext};
use crate::primitives::tdp::{factor_small, tdp_invert, TdpKeyPair};
use crate::tape::{Tape, TapeError};
use crate::Error;

#[derive(Debug, Clone, Copy)]
enum Plan {
    /// Hash `hashes` messages, sign `signs` others, forge on a random hashed one.
    BruteForce { hashes: u32, signs: u32 },
    /// Hash `hashes` messages and forge on the first whose digest repeats.
    RepeatSeeking { hashes: u32 },
    /// Sign one message and resubmit it.
    SignThenForge,
}

struct Forger {
    p: RoGameParams,
    plan: Plan,
}

struct ForgerSession {
    p: RoGameParams,
    plan: Plan,
    tape: Tape,
    kp: Option<TdpKeyPair>,
    hash_msgs: Vec<Vec<u8>>,
    sign_msgs: Vec<Vec<u8>>,
    digests: Vec<BigUint>,
    signed: usize,
}

fn program(
    name: String,
    p: RoGameParams,
    plan: Plan,
    needed: u64,
) -> Result<AdversaryHandle, Error> {
    if p.message_bits < 64 && needed > 1u64 << p.message_bits {
        return Err(Error::Param(format!(
            "{needed} distinct messages do not fit in {} bits",
            p.message_bits
        )));
    }
    Ok(AdversaryHandle::new(
        name,
        ro_game_name(&p),
        None,
        Arc::new(Forger { p, plan }),
    ))
}

/// Hashes `hashes` random distinct messages, signs `signs` further ones, and
/// forges on a uniformly chosen hashed message using the factored key.
pub fn fdh_brute_force(p: RoGameParams, hashes: u32, signs: u32) -> Result<AdversaryHandle, Error> {
    if hashes == 0 {
        return Err(Error::Param(
            "the forger needs at least one hash query".into(),
        ));
    }
    program(
        format!("fdh-brute-force/h{hashes},s{signs}"),
        p,
        Plan::BruteForce { hashes, signs },
        u64::from(hashes) + u64::from(signs),
    )
}

/// Hashes `hashes` distinct messages and forges on the first one whose digest
/// equals an earlier digest. Against a semi-constant oracle, repeats sit at
/// planted points.
pub fn repeat_seeking_forger(p: RoGameParams, hashes: u32) -> Result<AdversaryHandle, Error> {
    if hashes == 0 {
        return Err(Error::Param(
            "the forger needs at least one hash query".into(),
        ));
    }
    program(
        format!("fdh-repeat-seeking/h{hashes}"),
        p,
        Plan::RepeatSeeking { hashes },
        u64::from(hashes),
    )
}

/// Signs a random message, then submits that signature as a forgery.
pub fn sign_then_forge(p: RoGameParams) -> Result<AdversaryHandle, Error> {
    program("fdh-sign-then-forge".into(), p, Plan::SignThenForge, 1)
}

impl AdversaryProgram for Forger {
    fn spawn(&self, tape: Tape, _ctx: &RunContext) -> Box<dyn AdversarySession> {
        Box::new(ForgerSession {
            p: self.p,
            plan: self.plan,
            tape,
            kp: None,
            hash_msgs: Vec::new(),
            sign_msgs: Vec::new(),
            digests: Vec::new(),
            signed: 0,
        })
    }
}

impl ForgerSession {
    fn distinct(&mut self, count: u32, taken: &[Vec<u8>]) -> Result<Vec<Vec<u8>>, TapeError> {
        let mut out: Vec<Vec<u8>> = Vec::new();
        while out.len() < count as usize {
            let m = self.tape.value_bits(self.p.message_bits)?;
            if !out.contains(&m) && !taken.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }

    fn forge_on(&self, i: usize) -> AdversaryStep {
        let kp = self.kp.as_ref().expect("key factored");
        let s = tdp_invert(&kp.sk, &self.digests[i]).expect("digests are units");
        AdversaryStep::Send(encode_ro_forgery(&kp.pk.n, &self.hash_msgs[i], &s))
    }

    fn next(&mut self) -> Result<AdversaryStep, TapeError> {
        let kp = self.kp.as_ref().expect("key factored");
        if self.digests.len() < self.hash_msgs.len() {
            return Ok(AdversaryStep::Send(encode_hash(
                &self.hash_msgs[self.digests.len()],
            )));
        }
        if self.signed < self.sign_msgs.len() {
            return Ok(AdversaryStep::Send(encode_sign(
                &self.sign_msgs[self.signed],
            )));
        }
        match self.plan {
            Plan::BruteForce { hashes, .. } => {
                let t = self.tape.below(u64::from(hashes))? as usize;
                Ok(self.forge_on(t))
            }
            Plan::RepeatSeeking { hashes } => {
                let repeat =
                    (1..self.digests.len()).find(|&i| self.digests[..i].contains(&self.digests[i]));
                match repeat {
                    Some(i) => Ok(self.forge_on(i)),
                    None => {
                        let t = self.tape.below(u64::from(hashes))? as usize;
                        Ok(self.forge_on(t))
                    }
                }
            }
            Plan::SignThenForge => Ok(AdversaryStep::Send(encode_ro_forgery(
                &kp.pk.n,
                &self.sign_msgs[0],
                self.digests.last().expect("signature stored"),
            ))),
        }
    }
}

impl AdversarySession for ForgerSession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
        if self.kp.is_none() {
            let Ok(kp) = decode_tdp_pk(incoming).and_then(|pk| factor_small(&pk)) else {
                return Ok(AdversaryStep::Abort("cannot factor the modulus".into()));
            };
            self.kp = Some(kp);
            let (h, s) = match self.plan {
                Plan::BruteForce { hashes, signs } => (hashes, signs),
                Plan::RepeatSeeking { hashes } => (hashes, 0),
                Plan::SignThenForge => (0, 1),
            };
            self.hash_msgs = self.distinct(h, &[])?;
            let taken = self.hash_msgs.clone();
            self.sign_msgs = self.distinct(s, &taken)?;
            return self.next();
        }
        if self.digests.len() < self.hash_msgs.len() {
            let Ok(h) = decode_element(incoming, TAG_DIGEST) else {
                return Ok(AdversaryStep::Abort("expected a digest".into()));
            };
            self.digests.push(h);
        } else {
            let Ok(s) = decode_element(incoming, TAG_SIG) else {
                return Ok(AdversaryStep::Abort("expected a signature".into()));
            };
            if matches!(self.plan, Plan::SignThenForge) {
                self.digests.push(s);
            }
            self.signed += 1;
        }
        self.next()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdh::games::ro_forgery_game;
    use crate::seed::Seed;
    use crate::{estimate_value, run_game};

    fn p() -> RoGameParams {
        RoGameParams {
            modulus_bits: 12,
            message_bits: 8,
            max_hash: 8,
            max_sign: 1,
        }
    }

    #[test]
    fn brute_force_always_forges() {
        let g = ro_forgery_game(p()).unwrap();
        let a = fdh_brute_force(p(), 8, 1).unwrap();
        let est = estimate_value(&g, &a, 300, 0.95, Seed::from_u64(1)).unwrap();
        assert_eq!(est.successes, 300);
    }

    #[test]
    fn sign_then_forge_never_wins() {
        let g = ro_forgery_game(p()).unwrap();
        let a = sign_then_forge(p()).unwrap();
        for s in 0..20 {
            let rec = run_game(&g, &a, Seed::from_u64(s)).unwrap();
            assert!(!rec.outcome.verdict.is_succ());
            assert!(rec.outcome.violation.is_none());
        }
    }

    #[test]
    fn too_many_messages_rejected() {
        let small = RoGameParams {
            message_bits: 2,
            ..p()
        };
        assert!(fdh_brute_force(small, 4, 1).is_err());
        assert!(fdh_brute_force(small, 0, 1).is_err());
    }
}
