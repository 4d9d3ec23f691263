//! Standard games over function families: inversion, key one-wayness, second
//! preimage, collision, and PRF real-or-random distinguishing.
//!
//! Every winning condition can be re-checked from the transcript alone with
//! [`audit_transcript`]; the PRF game reveals its hidden bit and key after the
//! verdict for this purpose.

use std::collections::HashMap;
use std::sync::Arc;

use crate::game::{
    ChallengerProgram, ChallengerSession, ChallengerStep, GameDef, PlayError, Transcript, Verdict,
};
use crate::primitives::family::{check_value, FamilyKind, FunctionFamilySpec};
use crate::tape::Tape;
use crate::wire::{Reader, Writer};
use crate::Error;

pub const TAG_CHALLENGE: u8 = 0x10;
pub const TAG_ANSWER: u8 = 0x11;
pub const TAG_PAIR: u8 = 0x12;
pub const TAG_PRF_READY: u8 = 0x20;
pub const TAG_PRF_QUERY: u8 = 0x21;
pub const TAG_PRF_VALUE: u8 = 0x22;
pub const TAG_PRF_GUESS: u8 = 0x23;
pub const TAG_PRF_REVEAL: u8 = 0x24;

/// Default number of oracle queries in the PRF game.
pub const PRF_DEFAULT_QUERIES: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StandardGameKind {
    Inv,
    Kow,
    Spr,
    Prf,
    Col,
}

impl StandardGameKind {
    pub fn label(self) -> &'static str {
        match self {
            StandardGameKind::Inv => "inv",
            StandardGameKind::Kow => "kow",
            StandardGameKind::Spr => "spr",
            StandardGameKind::Prf => "prf",
            StandardGameKind::Col => "col",
        }
    }

    fn accepts(self, kind: FamilyKind) -> bool {
        match self {
            StandardGameKind::Inv => kind == FamilyKind::Owf,
            StandardGameKind::Kow | StandardGameKind::Prf => kind == FamilyKind::Prf,
            StandardGameKind::Spr | StandardGameKind::Col => {
                matches!(kind, FamilyKind::SprHash | FamilyKind::GenericHash)
            }
        }
    }
}

/// Name of the standard game of `kind` over `spec`.
pub fn game_name(kind: StandardGameKind, spec: &FunctionFamilySpec) -> String {
    format!("{}[{}]", kind.label(), spec.evaluator_id)
}

pub fn standard_game(kind: StandardGameKind, spec: &FunctionFamilySpec) -> Result<GameDef, Error> {
    if kind == StandardGameKind::Prf {
        return prf_game(spec, PRF_DEFAULT_QUERIES);
    }
    if !kind.accepts(spec.kind) {
        return Err(Error::Param(format!(
            "{} game is incompatible with {}",
            kind.label(),
            spec.evaluator_id
        )));
    }
    let bits = match kind {
        StandardGameKind::Inv | StandardGameKind::Kow | StandardGameKind::Spr => {
            spec.key_bits + spec.input_bits
        }
        _ => spec.key_bits,
    };
    let challenger = Arc::new(OneShot {
        kind,
        spec: spec.clone(),
    });
    let game = GameDef::new(game_name(kind, spec), challenger, 3);
    Ok(with_bits(game, bits))
}

fn with_bits(game: GameDef, bits: usize) -> GameDef {
    match u32::try_from(bits) {
        Ok(b) if b <= 64 => game.with_randomness(b),
        _ => game,
    }
}

/// PRF real-or-random game with at most `max_queries` oracle queries.
/// `b = 1` selects the keyed function, `b = 0` a lazily sampled random one.
pub fn prf_game(spec: &FunctionFamilySpec, max_queries: u32) -> Result<GameDef, Error> {
    if spec.kind != FamilyKind::Prf {
        return Err(Error::Param(format!(
            "prf game is incompatible with {}",
            spec.evaluator_id
        )));
    }
    let name = if max_queries == PRF_DEFAULT_QUERIES {
        game_name(StandardGameKind::Prf, spec)
    } else {
        format!("prf[{}]/q{max_queries}", spec.evaluator_id)
    };
    let bits = 1 + spec.key_bits + max_queries as usize * spec.output_bits;
    let game = GameDef::new(
        name,
        Arc::new(PrfChallenger {
            spec: spec.clone(),
            max_queries,
        }),
        2 * max_queries + 3,
    );
    Ok(with_bits(game, bits))
}

struct OneShot {
    kind: StandardGameKind,
    spec: FunctionFamilySpec,
}

impl ChallengerProgram for OneShot {
    fn start(&self, tape: Tape) -> Box<dyn ChallengerSession> {
        Box::new(OneShotSession {
            kind: self.kind,
            spec: self.spec.clone(),
            tape,
            challenge: None,
        })
    }
}

struct OneShotSession {
    kind: StandardGameKind,
    spec: FunctionFamilySpec,
    tape: Tape,
    challenge: Option<(Vec<u8>, Vec<u8>, Vec<u8>)>,
}

impl ChallengerSession for OneShotSession {
    fn step(&mut self, incoming: Option<&[u8]>) -> Result<ChallengerStep, PlayError> {
        let spec = &self.spec;
        let Some(reply) = incoming else {
            let key = self.tape.value_bits(spec.key_bits)?;
            let (x, msg) = match self.kind {
                StandardGameKind::Inv => {
                    let x = self.tape.value_bits(spec.input_bits)?;
                    let y = spec.eval_unchecked(&key, &x);
                    (x, Writer::tagged(TAG_CHALLENGE).bytes(&key).bytes(&y))
                }
                StandardGameKind::Kow => {
                    // the key is the secret here; its field stays empty
                    let x = self.tape.value_bits(spec.input_bits)?;
                    let y = spec.eval_unchecked(&key, &x);
                    (
                        x.clone(),
                        Writer::tagged(TAG_CHALLENGE).bytes(&[]).bytes(&x).bytes(&y),
                    )
                }
                StandardGameKind::Spr => {
                    let x = self.tape.value_bits(spec.input_bits)?;
                    (
                        x.clone(),
                        Writer::tagged(TAG_CHALLENGE).bytes(&key).bytes(&x),
                    )
                }
                _ => (Vec::new(), Writer::tagged(TAG_CHALLENGE).bytes(&key)),
            };
            self.challenge = Some((key, x, Vec::new()));
            return Ok(ChallengerStep::Send(msg.finish()));
        };
        let (key, x, _) = self.challenge.as_ref().expect("challenge sent");
        let ok = judge(self.kind, spec, key, x, reply)?;
        Ok(ChallengerStep::finish(Verdict::from_bool(ok)))
    }
}

fn judge(
    kind: StandardGameKind,
    spec: &FunctionFamilySpec,
    key: &[u8],
    x: &[u8],
    reply: &[u8],
) -> Result<bool, Error> {
    let mut r = Reader::new(reply);
    let ok = match kind {
        StandardGameKind::Inv | StandardGameKind::Spr | StandardGameKind::Kow => {
            expect_tag(&mut r, TAG_ANSWER)?;
            let a = r.bytes()?;
            r.finish()?;
            match kind {
                StandardGameKind::Inv => {
                    check_value(&a, spec.input_bits)?;
                    spec.eval_unchecked(key, &a) == spec.eval_unchecked(key, x)
                }
                StandardGameKind::Spr => {
                    check_value(&a, spec.input_bits)?;
                    a != x && spec.eval_unchecked(key, &a) == spec.eval_unchecked(key, x)
                }
                _ => {
                    check_value(&a, spec.key_bits)?;
                    spec.eval_unchecked(&a, x) == spec.eval_unchecked(key, x)
                }
            }
        }
        StandardGameKind::Col => {
            expect_tag(&mut r, TAG_PAIR)?;
            let a = r.bytes()?;
            let b = r.bytes()?;
            r.finish()?;
            check_value(&a, spec.input_bits)?;
            check_value(&b, spec.input_bits)?;
            a != b && spec.eval_unchecked(key, &a) == spec.eval_unchecked(key, &b)
        }
        StandardGameKind::Prf => unreachable!("prf uses its own challenger"),
    };
    Ok(ok)
}

fn expect_tag(r: &mut Reader<'_>, tag: u8) -> Result<(), Error> {
    let t = r.u8()?;
    if t != tag {
        return Err(Error::Decode(format!(
            "expected tag {tag:#04x}, got {t:#04x}"
        )));
    }
    Ok(())
}

struct PrfChallenger {
    spec: FunctionFamilySpec,
    max_queries: u32,
}

impl ChallengerProgram for PrfChallenger {
    fn start(&self, tape: Tape) -> Box<dyn ChallengerSession> {
        Box::new(PrfSession {
            spec: self.spec.clone(),
            max_queries: self.max_queries,
            tape,
            state: None,
            queries: 0,
            table: HashMap::new(),
        })
    }
}

struct PrfSession {
    spec: FunctionFamilySpec,
    max_queries: u32,
    tape: Tape,
    state: Option<(bool, Vec<u8>)>,
    queries: u32,
    table: HashMap<Vec<u8>, Vec<u8>>,
}

impl ChallengerSession for PrfSession {
    fn step(&mut self, incoming: Option<&[u8]>) -> Result<ChallengerStep, PlayError> {
        let Some(msg) = incoming else {
            let b = self.tape.coin()?;
            let key = self.tape.value_bits(self.spec.key_bits)?;
            self.state = Some((b, key));
            return Ok(ChallengerStep::Send(
                Writer::tagged(TAG_PRF_READY).u32(self.max_queries).finish(),
            ));
        };
        let (b, key) = self.state.clone().expect("started");
        let mut r = Reader::new(msg);
        match r.u8()? {
            TAG_PRF_QUERY => {
                let x = r.bytes()?;
                r.finish()?;
                check_value(&x, self.spec.input_bits)?;
                self.queries += 1;
                if self.queries > self.max_queries {
                    return Err(PlayError::Schema(format!(
                        "query budget {} exceeded",
                        self.max_queries
                    )));
                }
                let v = if b {
                    self.spec.eval_unchecked(&key, &x)
                } else if let Some(v) = self.table.get(&x) {
                    v.clone()
                } else {
                    let v = self.tape.value_bits(self.spec.output_bits)?;
                    self.table.insert(x, v.clone());
                    v
                };
                Ok(ChallengerStep::Send(
                    Writer::tagged(TAG_PRF_VALUE).bytes(&v).finish(),
                ))
            }
            TAG_PRF_GUESS => {
                let g = r.u8()?;
                r.finish()?;
                if g > 1 {
                    return Err(PlayError::Schema("guess must be a bit".into()));
                }
                Ok(ChallengerStep::Finish {
                    verdict: Verdict::from_bool((g == 1) == b),
                    reveal: Some(
                        Writer::tagged(TAG_PRF_REVEAL)
                            .u8(u8::from(b))
                            .bytes(&key)
                            .finish(),
                    ),
                })
            }
            t => Err(PlayError::Schema(format!("unexpected tag {t:#04x}"))),
        }
    }
}

pub fn encode_answer(v: &[u8]) -> Vec<u8> {
    Writer::tagged(TAG_ANSWER).bytes(v).finish()
}

pub fn encode_pair(a: &[u8], b: &[u8]) -> Vec<u8> {
    Writer::tagged(TAG_PAIR).bytes(a).bytes(b).finish()
}

pub fn encode_prf_query(x: &[u8]) -> Vec<u8> {
    Writer::tagged(TAG_PRF_QUERY).bytes(x).finish()
}

pub fn encode_prf_guess(b: bool) -> Vec<u8> {
    Writer::tagged(TAG_PRF_GUESS).u8(u8::from(b)).finish()
}

/// Decoded opening message of a one-shot standard game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Challenge {
    /// Public key of the family; empty for kow, where the key is the secret.
    pub key: Vec<u8>,
    /// `y` for inv, `x` for spr, `(x, y)` for kow, nothing for col.
    pub parts: Vec<Vec<u8>>,
}

pub fn decode_challenge(msg: &[u8]) -> Result<Challenge, Error> {
    let mut r = Reader::new(msg);
    expect_tag(&mut r, TAG_CHALLENGE)?;
    let key = r.bytes()?;
    let mut parts = Vec::new();
    while !r.rest_is_empty() {
        parts.push(r.bytes()?);
    }
    Ok(Challenge { key, parts })
}

/// Re-derives the verdict of a finished standard-game run from its transcript
/// alone. Returns `false` for transcripts that do not contain a winning
/// witness.
pub fn audit_transcript(kind: StandardGameKind, spec: &FunctionFamilySpec, t: &Transcript) -> bool {
    let msgs: Vec<&[u8]> = t.messages.iter().map(|m| m.payload.as_slice()).collect();
    if kind == StandardGameKind::Prf {
        let (Some(guess), Some(reveal)) = (msgs.len().checked_sub(2).map(|i| msgs[i]), msgs.last())
        else {
            return false;
        };
        if !t.final_reveal {
            return false;
        }
        let mut g = Reader::new(guess);
        let mut r = Reader::new(reveal);
        let parsed = (|| -> Result<bool, Error> {
            expect_tag(&mut g, TAG_PRF_GUESS)?;
            let guess = g.u8()?;
            expect_tag(&mut r, TAG_PRF_REVEAL)?;
            let b = r.u8()?;
            let key = r.bytes()?;
            // real-world answers must be consistent with the revealed key
            if b == 1 {
                for pair in msgs[1..msgs.len() - 2].chunks(2) {
                    let mut q = Reader::new(pair[0]);
                    expect_tag(&mut q, TAG_PRF_QUERY)?;
                    let x = q.bytes()?;
                    let mut a = Reader::new(pair[1]);
                    expect_tag(&mut a, TAG_PRF_VALUE)?;
                    if a.bytes()? != spec.eval(&key, &x)? {
                        return Ok(false);
                    }
                }
            }
            Ok(guess == b)
        })();
        return parsed.unwrap_or(false);
    }
    if msgs.len() != 2 {
        return false;
    }
    let Ok(ch) = decode_challenge(msgs[0]) else {
        return false;
    };
    let parsed = (|| -> Result<bool, Error> {
        let mut r = Reader::new(msgs[1]);
        match kind {
            StandardGameKind::Inv => {
                expect_tag(&mut r, TAG_ANSWER)?;
                let x = r.bytes()?;
                Ok(spec.eval(&ch.key, &x)? == ch.parts[0])
            }
            StandardGameKind::Kow => {
                expect_tag(&mut r, TAG_ANSWER)?;
                let k = r.bytes()?;
                Ok(spec.eval(&k, &ch.parts[0])? == ch.parts[1])
            }
            StandardGameKind::Spr => {
                expect_tag(&mut r, TAG_ANSWER)?;
                let x2 = r.bytes()?;
                let x = &ch.parts[0];
                Ok(&x2 != x && spec.eval(&ch.key, &x2)? == spec.eval(&ch.key, x)?)
            }
            StandardGameKind::Col => {
                expect_tag(&mut r, TAG_PAIR)?;
                let a = r.bytes()?;
                let b = r.bytes()?;
                Ok(a != b && spec.eval(&ch.key, &a)? == spec.eval(&ch.key, &b)?)
            }
            StandardGameKind::Prf => unreachable!(),
        }
    })();
    parsed.unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::exact_value;
    use crate::game::adversaries::from_fn;
    use crate::game::{run_game, AdversaryStep};
    use crate::primitives::family::brute_force_invert;
    use crate::seed::Seed;
    use num_rational::Ratio;

    #[test]
    fn inv_brute_force_wins_exactly() {
        let f = FunctionFamilySpec::weak_owf(4, 4).unwrap();
        let g = standard_game(StandardGameKind::Inv, &f).unwrap();
        let fc = f.clone();
        let a = from_fn("bf", &g, Some(0), move |_, _, m| {
            let ch = decode_challenge(m).unwrap();
            let x = brute_force_invert(&fc, &ch.key, &ch.parts[0])
                .unwrap()
                .unwrap();
            Ok(AdversaryStep::Send(encode_answer(&x)))
        });
        assert_eq!(exact_value(&g, &a, 24).unwrap(), Ratio::from_integer(1));
        let rec = run_game(&g, &a, Seed::from_u64(3)).unwrap();
        assert!(audit_transcript(StandardGameKind::Inv, &f, &rec.transcript));
    }

    #[test]
    fn spr_echo_never_wins() {
        let h = FunctionFamilySpec::new(
            FamilyKind::SprHash,
            4,
            8,
            4,
            crate::primitives::Strength::Weak,
        )
        .unwrap();
        let g = standard_game(StandardGameKind::Spr, &h).unwrap();
        let a = from_fn("echo", &g, Some(0), |_, _, m| {
            let ch = decode_challenge(m).unwrap();
            Ok(AdversaryStep::Send(encode_answer(&ch.parts[0])))
        });
        assert_eq!(exact_value(&g, &a, 24).unwrap(), Ratio::from_integer(0));
    }

    #[test]
    fn prf_constant_guess_is_half() {
        let f = FunctionFamilySpec::weak_prf(4, 4).unwrap();
        let g = standard_game(StandardGameKind::Prf, &f).unwrap();
        let a = from_fn("const", &g, Some(0), |_, _, _| {
            Ok(AdversaryStep::Send(encode_prf_guess(false)))
        });
        assert_eq!(exact_value(&g, &a, 24).unwrap(), Ratio::new(1, 2));
    }

    #[test]
    fn prf_query_budget_is_enforced() {
        let f = FunctionFamilySpec::weak_prf(4, 4).unwrap();
        let g = prf_game(&f, 1).unwrap();
        let a = from_fn("greedy", &g, Some(0), |_, _, _| {
            Ok(AdversaryStep::Send(encode_prf_query(&[0])))
        });
        let rec = run_game(&g, &a, Seed::ZERO).unwrap();
        assert!(rec.outcome.violation.is_some());
    }

    #[test]
    fn incompatible_kind_rejected() {
        let f = FunctionFamilySpec::weak_owf(4, 4).unwrap();
        assert!(standard_game(StandardGameKind::Kow, &f).is_err());
        assert!(standard_game(StandardGameKind::Prf, &f).is_err());
    }
}
