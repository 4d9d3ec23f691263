//! The existential forgery game under chosen-message attack, and helpers for
//! transformers that simulate its challenger.
//!
//! Protocol: the challenger opens with `PK(pk)`. The adversary sends either
//! `QUERY(m)`, answered with `SIG(σ)`, or `FORGE(m*, σ*)`, which ends the
//! game. It wins iff `σ*` verifies on `m*` and `m*` was never queried.

use std::sync::Arc;

use crate::game::{
    AdversaryStep, BlackBox, ChallengerProgram, ChallengerSession, ChallengerStep, GameDef,
    PlayError, Verdict,
};
use crate::ots::{check_message, SignatureScheme};
use crate::tape::{Tape, TapeError};
use crate::wire::{Reader, Writer};
use crate::Error;

pub const TAG_PK: u8 = 0x40;
pub const TAG_QUERY: u8 = 0x41;
pub const TAG_SIG: u8 = 0x42;
pub const TAG_FORGE: u8 = 0x43;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForgeryGameParams {
    pub one_time: bool,
    pub max_sign_queries: u32,
}

impl ForgeryGameParams {
    pub fn one_time() -> ForgeryGameParams {
        ForgeryGameParams {
            one_time: true,
            max_sign_queries: 1,
        }
    }

    pub fn many_time(max_sign_queries: u32) -> ForgeryGameParams {
        ForgeryGameParams {
            one_time: false,
            max_sign_queries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Query(Vec<u8>),
    Forge { msg: Vec<u8>, sig: Vec<u8> },
}

pub fn encode_pk(pk: &[u8]) -> Vec<u8> {
    Writer::tagged(TAG_PK).bytes(pk).finish()
}

pub fn encode_query(m: &[u8]) -> Vec<u8> {
    Writer::tagged(TAG_QUERY).bytes(m).finish()
}

pub fn encode_sig(sig: &[u8]) -> Vec<u8> {
    Writer::tagged(TAG_SIG).bytes(sig).finish()
}

pub fn encode_forgery(m: &[u8], sig: &[u8]) -> Vec<u8> {
    Writer::tagged(TAG_FORGE).bytes(m).bytes(sig).finish()
}

fn single(tag: u8, msg: &[u8]) -> Result<Vec<u8>, Error> {
    let mut r = Reader::new(msg);
    let t = r.u8()?;
    if t != tag {
        return Err(Error::Decode(format!(
            "expected tag {tag:#04x}, got {t:#04x}"
        )));
    }
    let v = r.bytes()?;
    r.finish()?;
    Ok(v)
}

pub fn decode_pk(msg: &[u8]) -> Result<Vec<u8>, Error> {
    single(TAG_PK, msg)
}

pub fn decode_sig(msg: &[u8]) -> Result<Vec<u8>, Error> {
    single(TAG_SIG, msg)
}

pub fn decode_move(msg: &[u8]) -> Result<Move, Error> {
    let mut r = Reader::new(msg);
    let mv = match r.u8()? {
        TAG_QUERY => Move::Query(r.bytes()?),
        TAG_FORGE => Move::Forge {
            msg: r.bytes()?,
            sig: r.bytes()?,
        },
        t => return Err(Error::Decode(format!("unexpected tag {t:#04x}"))),
    };
    r.finish()?;
    Ok(mv)
}

pub fn forgery_game_name(scheme: &dyn SignatureScheme, p: ForgeryGameParams) -> String {
    if p.one_time {
        format!("ot-forge[{}]", scheme.name())
    } else {
        format!("forge[{}]/q{}", scheme.name(), p.max_sign_queries)
    }
}

pub fn make_forgery_game(
    scheme: Arc<dyn SignatureScheme>,
    p: ForgeryGameParams,
) -> Result<GameDef, Error> {
    if p.one_time && p.max_sign_queries != 1 {
        return Err(Error::Param(
            "one-time games allow exactly one signing query".into(),
        ));
    }
    let name = forgery_game_name(scheme.as_ref(), p);
    let bits = scheme.keygen_randomness_bits();
    let g = GameDef::new(
        name,
        Arc::new(ForgeryChallenger { scheme, p }),
        2 * p.max_sign_queries + 3,
    );
    Ok(match bits {
        Some(b) if b <= 64 => g.with_randomness(b),
        _ => g,
    })
}

struct ForgeryChallenger {
    scheme: Arc<dyn SignatureScheme>,
    p: ForgeryGameParams,
}

impl ChallengerProgram for ForgeryChallenger {
    fn start(&self, tape: Tape) -> Box<dyn ChallengerSession> {
        Box::new(ForgerySession {
            scheme: Arc::clone(&self.scheme),
            p: self.p,
            tape,
            keys: None,
            queried: Vec::new(),
        })
    }
}

struct ForgerySession {
    scheme: Arc<dyn SignatureScheme>,
    p: ForgeryGameParams,
    tape: Tape,
    keys: Option<(Vec<u8>, Vec<u8>)>,
    queried: Vec<Vec<u8>>,
}

impl ChallengerSession for ForgerySession {
    fn step(&mut self, incoming: Option<&[u8]>) -> Result<ChallengerStep, PlayError> {
        let Some(msg) = incoming else {
            let kp = self.scheme.keygen(&mut self.tape)?;
            let out = encode_pk(&kp.pk);
            self.keys = Some((kp.pk, kp.sk));
            return Ok(ChallengerStep::Send(out));
        };
        let bits = self.scheme.message_bits();
        let (pk, sk) = self.keys.as_mut().expect("keys generated");
        match decode_move(msg)? {
            Move::Query(m) => {
                check_message(&m, bits)?;
                if self.queried.len() as u32 >= self.p.max_sign_queries {
                    return Err(PlayError::Schema(format!(
                        "signing query budget {} exceeded",
                        self.p.max_sign_queries
                    )));
                }
                let sig = self.scheme.sign(sk, &m)?;
                self.queried.push(m);
                Ok(ChallengerStep::Send(encode_sig(&sig)))
            }
            Move::Forge { msg: m, sig } => {
                check_message(&m, bits)?;
                let ok = !self.queried.contains(&m) && self.scheme.verify(pk, &m, &sig);
                Ok(ChallengerStep::finish(Verdict::from_bool(ok)))
            }
        }
    }
}

/// Result of running a forger against a simulated challenger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Driven {
    Forgery {
        msg: Vec<u8>,
        sig: Vec<u8>,
        queried: Vec<Vec<u8>>,
    },
    /// The forger gave up, misbehaved, or the simulator refused to continue.
    Stopped(String),
}

/// Feeds `opening` (the encoded public key) to a wrapped forger and answers
/// its signing queries with `answer` until it forges. `answer` returns `Err`
/// with a reason to stop the simulation. Queries beyond `max_queries`, and
/// malformed messages, stop the simulation the way the honest challenger
/// would end the game.
pub fn drive_forger<F>(
    bb: &mut BlackBox,
    opening: Vec<u8>,
    message_bits: usize,
    max_queries: u32,
    mut answer: F,
) -> Result<Driven, TapeError>
where
    F: FnMut(&[u8]) -> Result<Vec<u8>, String>,
{
    let mut queried = Vec::new();
    let mut next = opening;
    loop {
        let reply = match bb.send(&next)? {
            AdversaryStep::Abort(r) => return Ok(Driven::Stopped(format!("forger aborted: {r}"))),
            AdversaryStep::Send(reply) => reply,
        };
        match decode_move(&reply) {
            Err(e) => return Ok(Driven::Stopped(format!("malformed forger move: {e}"))),
            Ok(Move::Query(m)) => {
                if check_message(&m, message_bits).is_err() {
                    return Ok(Driven::Stopped("malformed signing query".into()));
                }
                if queried.len() as u32 >= max_queries {
                    return Ok(Driven::Stopped("forger exceeded its query budget".into()));
                }
                match answer(&m) {
                    Ok(sig) => {
                        queried.push(m);
                        next = encode_sig(&sig);
                    }
                    Err(why) => return Ok(Driven::Stopped(why)),
                }
            }
            Ok(Move::Forge { msg, sig }) => {
                if check_message(&msg, message_bits).is_err() {
                    return Ok(Driven::Stopped("malformed forgery".into()));
                }
                return Ok(Driven::Forgery { msg, sig, queried });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::exact_value;
    use crate::game::adversaries::from_fn;
    use crate::game::run_game;
    use crate::ots::lamport::{LamportParams, LamportScheme};
    use crate::primitives::FunctionFamilySpec;
    use crate::seed::Seed;
    use num_rational::Ratio;

    fn lamport(l: usize, bits: usize) -> Arc<LamportScheme> {
        Arc::new(
            LamportScheme::new(LamportParams {
                l,
                owf: FunctionFamilySpec::weak_owf(bits, bits).unwrap(),
            })
            .unwrap(),
        )
    }

    #[test]
    fn replaying_the_queried_message_fails() {
        let s = lamport(2, 4);
        let g = make_forgery_game(s, ForgeryGameParams::one_time()).unwrap();
        let a = from_fn("replay", &g, Some(0), |_, i, m| {
            Ok(AdversaryStep::Send(if i == 0 {
                encode_query(&[0x1])
            } else {
                encode_forgery(&[0x1], &decode_sig(m).unwrap())
            }))
        });
        assert_eq!(exact_value(&g, &a, 24).unwrap(), Ratio::from_integer(0));
        let rec = run_game(&g, &a, Seed::from_u64(1)).unwrap();
        assert!(rec.outcome.violation.is_none());
    }

    #[test]
    fn second_query_is_a_violation() {
        let s = lamport(4, 4);
        let g = make_forgery_game(s, ForgeryGameParams::one_time()).unwrap();
        let a = from_fn("greedy", &g, Some(0), |_, i, _| {
            Ok(AdversaryStep::Send(encode_query(&[i as u8])))
        });
        let rec = run_game(&g, &a, Seed::from_u64(1)).unwrap();
        assert!(rec.outcome.violation.unwrap().contains("budget"));
    }

    #[test]
    fn one_time_requires_single_query() {
        let s = lamport(2, 4);
        let p = ForgeryGameParams {
            one_time: true,
            max_sign_queries: 2,
        };
        assert!(make_forgery_game(s, p).is_err());
    }
}
