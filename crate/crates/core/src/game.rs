//! Games as interactive processes between a challenger and an adversary.
//!
//! Both players are deterministic programs over a random [`Tape`]. A run
//! alternates messages starting with the challenger; the challenger ends the
//! run with a [`Verdict`] and may attach a final reveal message (for example
//! its hidden coin) so that transcripts can be audited after the fact.

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use crate::seed::Seed;
use crate::tape::{DrawSource, Tape, TapeError};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Challenger,
    Adversary,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    pub sender: Role,
    pub round: u32,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Transcript {
    pub messages: Vec<Message>,
    /// Set when the last challenger message is a post-verdict reveal that the
    /// adversary never received.
    pub final_reveal: bool,
}

impl Transcript {
    /// Challenger messages that were actually delivered to the adversary.
    pub fn delivered(&self) -> Vec<&[u8]> {
        let n = self.messages.len() - usize::from(self.final_reveal);
        self.messages[..n]
            .iter()
            .filter(|m| m.sender == Role::Challenger)
            .map(|m| m.payload.as_slice())
            .collect()
    }

    pub fn adversary_messages(&self) -> impl Iterator<Item = &[u8]> {
        self.messages
            .iter()
            .filter(|m| m.sender == Role::Adversary)
            .map(|m| m.payload.as_slice())
    }

    pub fn challenger_messages(&self) -> impl Iterator<Item = &[u8]> {
        self.messages
            .iter()
            .filter(|m| m.sender == Role::Challenger)
            .map(|m| m.payload.as_slice())
    }

    /// Rounds strictly increase from 0 and roles alternate starting with the
    /// challenger.
    pub fn is_well_formed(&self) -> bool {
        self.messages.iter().enumerate().all(|(i, m)| {
            let expected = if i % 2 == 0 {
                Role::Challenger
            } else {
                Role::Adversary
            };
            m.round == i as u32 && m.sender == expected
        }) && (!self.final_reveal
            || self
                .messages
                .last()
                .is_some_and(|m| m.sender == Role::Challenger))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Succ,
    Fail,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Verdict {
        if b {
            Verdict::Succ
        } else {
            Verdict::Fail
        }
    }

    pub fn is_succ(self) -> bool {
        self == Verdict::Succ
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Succ => "succ",
            Verdict::Fail => "fail",
        })
    }
}

/// Final verdict of one run plus diagnostic flags.
///
/// `violation` marks a schema violation (malformed payload, exceeded query or
/// round budget); it always comes with `Verdict::Fail` and is distinct from an
/// ordinary loss. `abort` carries the reason an adversary gave up.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameOutcome {
    pub verdict: Verdict,
    pub violation: Option<String>,
    pub abort: Option<String>,
}

impl GameOutcome {
    fn plain(verdict: Verdict) -> GameOutcome {
        GameOutcome {
            verdict,
            violation: None,
            abort: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RunRecord {
    pub outcome: GameOutcome,
    pub transcript: Transcript,
}

#[derive(Debug)]
pub enum PlayError {
    Schema(String),
    Tape(TapeError),
}

impl From<TapeError> for PlayError {
    fn from(e: TapeError) -> Self {
        PlayError::Tape(e)
    }
}

impl From<Error> for PlayError {
    fn from(e: Error) -> Self {
        match e {
            Error::Tape(t) => PlayError::Tape(t),
            other => PlayError::Schema(other.to_string()),
        }
    }
}

pub enum ChallengerStep {
    Send(Vec<u8>),
    Finish {
        verdict: Verdict,
        reveal: Option<Vec<u8>>,
    },
}

impl ChallengerStep {
    pub fn finish(verdict: Verdict) -> ChallengerStep {
        ChallengerStep::Finish {
            verdict,
            reveal: None,
        }
    }
}

pub trait ChallengerSession {
    /// `incoming` is `None` on the opening move and the adversary's last
    /// message afterwards.
    fn step(&mut self, incoming: Option<&[u8]>) -> Result<ChallengerStep, PlayError>;
}

pub trait ChallengerProgram: Send + Sync {
    fn start(&self, tape: Tape) -> Box<dyn ChallengerSession>;
}

pub enum AdversaryStep {
    Send(Vec<u8>),
    Abort(String),
}

pub trait AdversarySession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError>;
}

pub trait AdversaryProgram: Send + Sync {
    fn spawn(&self, tape: Tape, ctx: &RunContext) -> Box<dyn AdversarySession>;
}

#[derive(Clone)]
pub struct GameDef {
    pub name: String,
    pub interface: String,
    pub round_bound: u32,
    pub max_payload: usize,
    /// Declared number of random bits the challenger consumes, when bounded.
    pub randomness_bits: Option<u32>,
    pub challenger: Arc<dyn ChallengerProgram>,
}

impl fmt::Debug for GameDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameDef")
            .field("name", &self.name)
            .field("interface", &self.interface)
            .field("round_bound", &self.round_bound)
            .field("randomness_bits", &self.randomness_bits)
            .finish()
    }
}

impl GameDef {
    pub fn new(
        name: impl Into<String>,
        challenger: Arc<dyn ChallengerProgram>,
        round_bound: u32,
    ) -> GameDef {
        let name = name.into();
        GameDef {
            interface: name.clone(),
            name,
            round_bound,
            max_payload: 1 << 20,
            randomness_bits: None,
            challenger,
        }
    }

    pub fn with_randomness(mut self, bits: u32) -> GameDef {
        self.randomness_bits = Some(bits);
        self
    }

    pub fn with_max_payload(mut self, bytes: usize) -> GameDef {
        self.max_payload = bytes;
        self
    }
}

#[derive(Clone)]
pub struct AdversaryHandle {
    pub name: String,
    pub interface: String,
    /// Declared number of random bits consumed, when bounded.
    pub randomness_bits: Option<u32>,
    program: Arc<dyn AdversaryProgram>,
}

impl fmt::Debug for AdversaryHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdversaryHandle")
            .field("name", &self.name)
            .field("interface", &self.interface)
            .field("randomness_bits", &self.randomness_bits)
            .finish()
    }
}

impl AdversaryHandle {
    pub fn new(
        name: impl Into<String>,
        interface: impl Into<String>,
        randomness_bits: Option<u32>,
        program: Arc<dyn AdversaryProgram>,
    ) -> AdversaryHandle {
        AdversaryHandle {
            name: name.into(),
            interface: interface.into(),
            randomness_bits,
            program,
        }
    }

    pub fn for_game(
        name: impl Into<String>,
        game: &GameDef,
        randomness_bits: Option<u32>,
        program: Arc<dyn AdversaryProgram>,
    ) -> AdversaryHandle {
        AdversaryHandle::new(name, game.interface.clone(), randomness_bits, program)
    }

    pub fn spawn(&self, tape: Tape, ctx: &RunContext) -> Box<dyn AdversarySession> {
        self.program.spawn(tape, ctx)
    }

    /// Starts the adversary behind a message-only interface. This is the only
    /// way transformers interact with wrapped adversaries; deliveries are
    /// recorded in the run's probe when one is attached.
    pub fn spawn_black_box(&self, tape: Tape, ctx: &RunContext) -> BlackBox {
        let instance = ctx.probe.as_ref().map_or(0, |p| {
            let mut log = p.borrow_mut();
            log.spawns.push(tape.seed());
            log.spawns.len() - 1
        });
        BlackBox {
            session: self.program.spawn(tape, &RunContext::default()),
            probe: ctx.probe.clone(),
            instance,
        }
    }
}

pub struct BlackBox {
    session: Box<dyn AdversarySession>,
    probe: Option<Probe>,
    instance: usize,
}

impl BlackBox {
    pub fn send(&mut self, msg: &[u8]) -> Result<AdversaryStep, TapeError> {
        if let Some(p) = &self.probe {
            p.borrow_mut().delivered.push((self.instance, msg.to_vec()));
        }
        self.session.respond(msg)
    }
}

/// Correspondence between a transformer's external run and an honest internal
/// run, exported so straight-line behaviour can be checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Embedding {
    /// The internal challenger's coins are exactly the external challenger's.
    Identity,
    /// The internal challenger's draws, in order.
    Draws(Vec<DrawSource>),
}

#[derive(Debug, Default)]
pub struct ProbeLog {
    pub spawns: Vec<Option<Seed>>,
    pub delivered: Vec<(usize, Vec<u8>)>,
    pub embedding: Option<Embedding>,
    pub notes: Vec<String>,
}

pub type Probe = Rc<RefCell<ProbeLog>>;

#[derive(Clone, Default)]
pub struct RunContext {
    pub probe: Option<Probe>,
}

impl RunContext {
    pub fn with_probe(probe: Probe) -> RunContext {
        RunContext { probe: Some(probe) }
    }

    pub fn set_embedding(&self, e: Embedding) {
        if let Some(p) = &self.probe {
            p.borrow_mut().embedding = Some(e);
        }
    }

    pub fn note(&self, s: impl Into<String>) {
        if let Some(p) = &self.probe {
            p.borrow_mut().notes.push(s.into());
        }
    }
}

fn violated(messages: Vec<Message>, why: String) -> RunRecord {
    RunRecord {
        outcome: GameOutcome {
            verdict: Verdict::Fail,
            violation: Some(why),
            abort: None,
        },
        transcript: Transcript {
            messages,
            final_reveal: false,
        },
    }
}

/// Plays one game with explicit tapes. Tape errors propagate; everything the
/// adversary can do wrong becomes a flagged failure.
pub fn play(
    game: &GameDef,
    adversary: &AdversaryHandle,
    challenger_tape: Tape,
    adversary_tape: Tape,
    ctx: &RunContext,
) -> Result<RunRecord, TapeError> {
    if adversary.interface != game.interface {
        return Ok(violated(
            Vec::new(),
            format!(
                "adversary interface `{}` does not match game interface `{}`",
                adversary.interface, game.interface
            ),
        ));
    }
    let mut challenger = game.challenger.start(challenger_tape);
    let mut adv = adversary.spawn(adversary_tape, ctx);
    let mut messages: Vec<Message> = Vec::new();
    let mut incoming: Option<Vec<u8>> = None;
    loop {
        let step = match challenger.step(incoming.as_deref()) {
            Ok(s) => s,
            Err(PlayError::Tape(e)) => return Err(e),
            Err(PlayError::Schema(why)) => return Ok(violated(messages, why)),
        };
        match step {
            ChallengerStep::Finish { verdict, reveal } => {
                let final_reveal = reveal.is_some();
                if let Some(payload) = reveal {
                    let round = messages.len() as u32;
                    messages.push(Message {
                        sender: Role::Challenger,
                        round,
                        payload,
                    });
                }
                return Ok(RunRecord {
                    outcome: GameOutcome::plain(verdict),
                    transcript: Transcript {
                        messages,
                        final_reveal,
                    },
                });
            }
            ChallengerStep::Send(payload) => {
                let round = messages.len() as u32;
                messages.push(Message {
                    sender: Role::Challenger,
                    round,
                    payload,
                });
                let reply = adv.respond(&messages.last().unwrap().payload)?;
                match reply {
                    AdversaryStep::Abort(reason) => {
                        return Ok(RunRecord {
                            outcome: GameOutcome {
                                verdict: Verdict::Fail,
                                violation: None,
                                abort: Some(reason),
                            },
                            transcript: Transcript {
                                messages,
                                final_reveal: false,
                            },
                        })
                    }
                    AdversaryStep::Send(payload) => {
                        let round = messages.len() as u32;
                        if round + 1 >= game.round_bound {
                            return Ok(violated(
                                messages,
                                format!("round bound {} exceeded", game.round_bound),
                            ));
                        }
                        if payload.len() > game.max_payload {
                            return Ok(violated(
                                messages,
                                format!(
                                    "payload of {} bytes exceeds bound {}",
                                    payload.len(),
                                    game.max_payload
                                ),
                            ));
                        }
                        messages.push(Message {
                            sender: Role::Adversary,
                            round,
                            payload: payload.clone(),
                        });
                        incoming = Some(payload);
                    }
                }
            }
        }
    }
}

/// Runs `game` against `adversary` with coins derived from `seed`.
///
/// The challenger tape is keyed by `seed.derive("challenger", 0)` and the
/// adversary tape by `seed.derive("adversary", 0)`.
pub fn run_game(
    game: &GameDef,
    adversary: &AdversaryHandle,
    seed: Seed,
) -> Result<RunRecord, Error> {
    run_game_in(game, adversary, seed, &RunContext::default())
}

pub fn run_game_in(
    game: &GameDef,
    adversary: &AdversaryHandle,
    seed: Seed,
    ctx: &RunContext,
) -> Result<RunRecord, Error> {
    Ok(play(
        game,
        adversary,
        Tape::seeded(seed.derive("challenger", 0)),
        Tape::seeded(seed.derive("adversary", 0)),
        ctx,
    )?)
}

/// Helpers for writing small adversaries as closures.
pub mod adversaries {
    use super::*;

    type StepFn = dyn Fn(&mut Tape, usize, &[u8]) -> Result<AdversaryStep, TapeError> + Send + Sync;

    /// An adversary whose move depends only on its tape, the move index and
    /// the incoming message.
    pub struct Stateless(pub Arc<StepFn>);

    struct StatelessSession {
        f: Arc<StepFn>,
        tape: Tape,
        moves: usize,
    }

    impl AdversarySession for StatelessSession {
        fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
            let out = (self.f)(&mut self.tape, self.moves, incoming);
            self.moves += 1;
            out
        }
    }

    impl AdversaryProgram for Stateless {
        fn spawn(&self, tape: Tape, _ctx: &RunContext) -> Box<dyn AdversarySession> {
            Box::new(StatelessSession {
                f: Arc::clone(&self.0),
                tape,
                moves: 0,
            })
        }
    }

    pub fn from_fn<F>(name: &str, game: &GameDef, bits: Option<u32>, f: F) -> AdversaryHandle
    where
        F: Fn(&mut Tape, usize, &[u8]) -> Result<AdversaryStep, TapeError> + Send + Sync + 'static,
    {
        AdversaryHandle::for_game(name, game, bits, Arc::new(Stateless(Arc::new(f))))
    }

    pub fn always_abort(game: &GameDef) -> AdversaryHandle {
        from_fn("always-abort", game, Some(0), |_, _, _| {
            Ok(AdversaryStep::Abort("gives up".into()))
        })
    }

    /// Sends a payload no challenger accepts.
    pub fn malformed(game: &GameDef) -> AdversaryHandle {
        from_fn("malformed", game, Some(0), |_, _, _| {
            Ok(AdversaryStep::Send(vec![0xee, 0xee, 0xee]))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Challenger: sends a random byte, succeeds iff the reply echoes it.
    struct Echo;
    struct EchoSession {
        tape: Tape,
        sent: Option<u8>,
    }
    impl ChallengerSession for EchoSession {
        fn step(&mut self, incoming: Option<&[u8]>) -> Result<ChallengerStep, PlayError> {
            match (incoming, self.sent) {
                (None, _) => {
                    let b = self.tape.bits(8)? as u8;
                    self.sent = Some(b);
                    Ok(ChallengerStep::Send(vec![b]))
                }
                (Some(reply), Some(b)) => {
                    if reply.len() != 1 {
                        return Err(PlayError::Schema("echo reply must be one byte".into()));
                    }
                    Ok(ChallengerStep::finish(Verdict::from_bool(reply[0] == b)))
                }
                _ => unreachable!(),
            }
        }
    }
    impl ChallengerProgram for Echo {
        fn start(&self, tape: Tape) -> Box<dyn ChallengerSession> {
            Box::new(EchoSession { tape, sent: None })
        }
    }

    fn echo_game() -> GameDef {
        GameDef::new("echo", Arc::new(Echo), 4).with_randomness(8)
    }

    #[test]
    fn echo_succeeds_and_is_deterministic() {
        let g = echo_game();
        let a = adversaries::from_fn("echo", &g, Some(0), |_, _, m| {
            Ok(AdversaryStep::Send(m.to_vec()))
        });
        let r1 = run_game(&g, &a, Seed::from_u64(1)).unwrap();
        let r2 = run_game(&g, &a, Seed::from_u64(1)).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.outcome.verdict.is_succ());
        assert!(r1.transcript.is_well_formed());
        assert_eq!(r1.transcript.messages.len(), 2);
    }

    #[test]
    fn malformed_payload_is_flagged() {
        let g = echo_game();
        let r = run_game(&g, &adversaries::malformed(&g), Seed::ZERO).unwrap();
        assert_eq!(r.outcome.verdict, Verdict::Fail);
        assert!(r.outcome.violation.is_some());
    }

    #[test]
    fn abort_is_fail_without_violation() {
        let g = echo_game();
        let r = run_game(&g, &adversaries::always_abort(&g), Seed::ZERO).unwrap();
        assert_eq!(r.outcome.verdict, Verdict::Fail);
        assert!(r.outcome.violation.is_none());
        assert!(r.outcome.abort.is_some());
    }

    #[test]
    fn interface_mismatch_is_flagged() {
        let g = echo_game();
        let mut a = adversaries::always_abort(&g);
        a.interface = "other".into();
        let r = run_game(&g, &a, Seed::ZERO).unwrap();
        assert!(r.outcome.violation.unwrap().contains("interface"));
    }

    #[test]
    fn payload_bound_is_enforced() {
        let g = echo_game().with_max_payload(0);
        let a = adversaries::from_fn("echo", &g, Some(0), |_, _, m| {
            Ok(AdversaryStep::Send(m.to_vec()))
        });
        let r = run_game(&g, &a, Seed::ZERO).unwrap();
        assert!(r.outcome.violation.unwrap().contains("payload"));
    }
}
