//! Small games, adversaries and deliberately broken transformers used by the
//! tests, the acceptance suite and the command-line fixture registry.

use std::sync::Arc;

use crate::game::adversaries::from_fn;
use crate::game::{
    AdversaryHandle, AdversaryProgram, AdversarySession, AdversaryStep, BlackBox,
    ChallengerProgram, ChallengerSession, ChallengerStep, Embedding, GameDef, PlayError,
    RunContext, Verdict,
};
use crate::primitives::family::{brute_force_invert, brute_force_key, FunctionFamilySpec};
use crate::primitives::games::{decode_challenge, encode_answer, encode_prf_guess};
use crate::reduction::{BetaSpec, Reduction, Transformer};
use crate::tape::{Tape, TapeError};
use crate::Error;

// ---------------------------------------------------------------------------
// Games

/// The challenger draws `bits` random bits and sends nothing of substance;
/// the adversary wins iff the draw is below `threshold`. Its value is
/// exactly `threshold / 2^bits` whatever the adversary does.
pub fn coin_game(bits: u32, threshold: u64) -> Result<GameDef, Error> {
    if bits == 0 || bits > 24 {
        return Err(Error::Param("coin games use 1..=24 bits".into()));
    }
    if threshold > 1 << bits {
        return Err(Error::Param("threshold exceeds the draw range".into()));
    }
    Ok(GameDef::new(
        format!("coin[{threshold}/2^{bits}]"),
        Arc::new(Coin { bits, threshold }),
        3,
    )
    .with_randomness(bits))
}

struct Coin {
    bits: u32,
    threshold: u64,
}

struct CoinSession {
    bits: u32,
    threshold: u64,
    tape: Tape,
    draw: u64,
}

impl ChallengerProgram for Coin {
    fn start(&self, tape: Tape) -> Box<dyn ChallengerSession> {
        Box::new(CoinSession {
            bits: self.bits,
            threshold: self.threshold,
            tape,
            draw: 0,
        })
    }
}

impl ChallengerSession for CoinSession {
    fn step(&mut self, incoming: Option<&[u8]>) -> Result<ChallengerStep, PlayError> {
        match incoming {
            None => {
                self.draw = self.tape.bits(self.bits)?;
                Ok(ChallengerStep::Send(vec![0]))
            }
            Some(_) => Ok(ChallengerStep::finish(Verdict::from_bool(
                self.draw < self.threshold,
            ))),
        }
    }
}

/// Answers any message with an empty payload.
pub fn passive(game: &GameDef) -> AdversaryHandle {
    from_fn("passive", game, Some(0), |_, _, _| {
        Ok(AdversaryStep::Send(Vec::new()))
    })
}

// ---------------------------------------------------------------------------
// Adversaries for the standard games

/// Inverts `y` by exhaustive search over the input space.
pub fn inv_brute_force(game: &GameDef, spec: &FunctionFamilySpec) -> AdversaryHandle {
    let spec = spec.clone();
    from_fn("inv-brute-force", game, Some(0), move |_, _, m| {
        let step = decode_challenge(m)
            .ok()
            .and_then(|c| match c.parts.as_slice() {
                [y] => brute_force_invert(&spec, &c.key, y).ok().flatten(),
                _ => None,
            });
        Ok(match step {
            Some(x) => AdversaryStep::Send(encode_answer(&x)),
            None => AdversaryStep::Abort("no preimage found".into()),
        })
    })
}

/// Answers with a uniformly random input.
pub fn inv_random_guess(game: &GameDef, spec: &FunctionFamilySpec) -> AdversaryHandle {
    let bits = spec.input_bits;
    from_fn(
        "inv-random-guess",
        game,
        u32::try_from(bits).ok(),
        move |tape, _, _| Ok(AdversaryStep::Send(encode_answer(&tape.value_bits(bits)?))),
    )
}

/// Recovers a key mapping `x` to `y` by exhaustive search.
pub fn kow_brute_force(game: &GameDef, spec: &FunctionFamilySpec) -> AdversaryHandle {
    let spec = spec.clone();
    from_fn("kow-brute-force", game, Some(0), move |_, _, m| {
        let step = decode_challenge(m)
            .ok()
            .and_then(|c| match c.parts.as_slice() {
                [x, y] => brute_force_key(&spec, x, y).ok().flatten(),
                _ => None,
            });
        Ok(match step {
            Some(k) => AdversaryStep::Send(encode_answer(&k)),
            None => AdversaryStep::Abort("no key found".into()),
        })
    })
}

/// Guesses `bit` without querying.
pub fn prf_constant_guess(game: &GameDef, bit: bool) -> AdversaryHandle {
    from_fn("prf-constant-guess", game, Some(0), move |_, _, _| {
        Ok(AdversaryStep::Send(encode_prf_guess(bit)))
    })
}

// ---------------------------------------------------------------------------
// Broken transformers

/// A transformer over `game` that delivers the opening message, then starts
/// a second copy of the adversary and replays the opening to it, answering
/// with the second copy's reply. Straight-line checks must reject it.
pub fn rewinding_reduction(game: &GameDef) -> Reduction {
    let t = Transformer::new(
        "rewinding",
        true,
        true,
        Arc::new(|a: &AdversaryHandle| {
            AdversaryHandle::new(
                format!("rewinding({})", a.name),
                a.interface.clone(),
                None,
                Arc::new(Rewinding { inner: a.clone() }),
            )
        }),
    );
    Reduction::new(
        "rewinding-fixture",
        game.clone(),
        t,
        game.clone(),
        BetaSpec::identity(),
    )
}

struct Rewinding {
    inner: AdversaryHandle,
}

struct RewindingSession {
    inner: AdversaryHandle,
    tape: Tape,
    ctx: RunContext,
    bb: Option<BlackBox>,
    history: Vec<Vec<u8>>,
}

impl AdversaryProgram for Rewinding {
    fn spawn(&self, mut tape: Tape, ctx: &RunContext) -> Box<dyn AdversarySession> {
        ctx.set_embedding(Embedding::Identity);
        let bb = self.inner.spawn_black_box(tape.fork("inner"), ctx);
        Box::new(RewindingSession {
            inner: self.inner.clone(),
            tape,
            ctx: ctx.clone(),
            bb: Some(bb),
            history: Vec::new(),
        })
    }
}

impl AdversarySession for RewindingSession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
        self.history.push(incoming.to_vec());
        let first = self.bb.as_mut().expect("running").send(incoming)?;
        if self.history.len() > 1 {
            return Ok(first);
        }
        // rewind: a fresh copy sees the opening again
        let mut again = self
            .inner
            .spawn_black_box(self.tape.fork("rewound"), &self.ctx);
        let reply = again.send(incoming)?;
        self.bb = Some(again);
        Ok(reply)
    }
}

/// A relay that aborts whenever the wrapped adversary's declared name
/// contains `marker`. Two adversaries with identical behaviour but different
/// names expose it to the dominance check.
pub fn name_branching_reduction(game: &GameDef, marker: &str) -> Reduction {
    let marker = marker.to_string();
    let t = Transformer::new(
        "name-branching",
        false,
        true,
        Arc::new(move |a: &AdversaryHandle| {
            AdversaryHandle::new(
                a.name.clone(),
                a.interface.clone(),
                a.randomness_bits,
                Arc::new(NameBranching {
                    inner: a.clone(),
                    refuse: a.name.contains(&marker),
                }),
            )
        }),
    );
    Reduction::new(
        "name-branching-fixture",
        game.clone(),
        t,
        game.clone(),
        BetaSpec::identity(),
    )
}

struct NameBranching {
    inner: AdversaryHandle,
    refuse: bool,
}

struct NameBranchingSession {
    bb: BlackBox,
    refuse: bool,
}

impl AdversaryProgram for NameBranching {
    fn spawn(&self, tape: Tape, ctx: &RunContext) -> Box<dyn AdversarySession> {
        ctx.set_embedding(Embedding::Identity);
        Box::new(NameBranchingSession {
            bb: self.inner.spawn_black_box(tape, ctx),
            refuse: self.refuse,
        })
    }
}

impl AdversarySession for NameBranchingSession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
        if self.refuse {
            return Ok(AdversaryStep::Abort("refuses this adversary".into()));
        }
        self.bb.send(incoming)
    }
}
