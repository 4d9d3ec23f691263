//! An executable laboratory for game-based security reductions.
//!
//! Games are seeded interactive processes between a challenger and an
//! adversary ([`game`]). Their values are estimated by Monte Carlo or computed
//! exactly by enumerating random tapes ([`estimate`]). Reductions wrap
//! adversaries of one game into adversaries of another and are checked
//! empirically for straight-line behaviour, behavioural dominance and
//! success-probability relations ([`reduction`]).
//!
//! The concrete instantiations are hash-based signatures (Lamport, Winternitz,
//! Merkle and XOR-masked trees) over deliberately weak desk-scale primitives,
//! and Full-Domain Hash over a small RSA-style trapdoor permutation together
//! with the semi-constant oracle and its interpreter ([`fdh`]).

pub mod estimate;
pub mod fdh;
pub mod fixtures;
pub mod game;
pub mod hashtree;
pub mod ots;
pub mod par;
pub mod primitives;
pub mod reduction;
pub mod report;
pub mod seed;
pub mod tape;
pub mod wire;

pub use estimate::{estimate_value, exact_value, max_value_over, GameValueEstimate};
pub use game::{run_game, AdversaryHandle, GameDef, GameOutcome, Transcript, Verdict};
pub use seed::Seed;
pub use tape::{Tape, TapeError};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tape(#[from] TapeError),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("length mismatch: expected {expected} bytes, got {got}")]
    Length { expected: usize, got: usize },
    #[error("randomness budget: {0}")]
    Budget(String),
    #[error("schema incompatibility: {0}")]
    Schema(String),
    #[error("game mismatch: {0}")]
    GameMismatch(String),
    #[error("adversary set is empty")]
    EmptySet,
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("signer state exhausted: all {0} leaves used")]
    Exhausted(u64),
    #[error("integrity check failed: {0}")]
    Integrity(String),
    #[error("element is not a unit modulo N")]
    NotUnit,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
