//! Distinguishing games between two samplers and the hybrid-argument
//! telescoping check.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::Signed;

use crate::estimate::exact_value;
use crate::game::{
    AdversaryHandle, ChallengerProgram, ChallengerSession, ChallengerStep, GameDef, PlayError,
    Verdict,
};
use crate::reduction::Rational;
use crate::tape::{Tape, TapeError};
use crate::wire::{Reader, Writer};
use crate::Error;

pub const TAG_SAMPLE: u8 = 0x30;
pub const TAG_GUESS: u8 = 0x31;
pub const TAG_COIN: u8 = 0x32;

/// A distribution given as `2^k` equally likely outcomes (repeats allowed),
/// sampled with exactly `k` random bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSampler {
    outcomes: Vec<Vec<u8>>,
    bits: u32,
    len: usize,
}

impl TableSampler {
    pub fn new(outcomes: Vec<Vec<u8>>) -> Result<TableSampler, Error> {
        if outcomes.is_empty() || !outcomes.len().is_power_of_two() {
            return Err(Error::Param(
                "a table sampler needs a power-of-two number of outcomes".into(),
            ));
        }
        let len = outcomes[0].len();
        if outcomes.iter().any(|o| o.len() != len) {
            return Err(Error::Param("table outcomes differ in length".into()));
        }
        Ok(TableSampler {
            bits: outcomes.len().trailing_zeros(),
            outcomes,
            len,
        })
    }

    pub fn constant(v: Vec<u8>) -> TableSampler {
        TableSampler::new(vec![v]).expect("one outcome")
    }

    pub fn out_len(&self) -> usize {
        self.len
    }

    pub fn randomness_bits(&self) -> u32 {
        self.bits
    }

    pub fn sample(&self, tape: &mut Tape) -> Result<Vec<u8>, TapeError> {
        let i = tape.bits(self.bits)?;
        Ok(self.outcomes[i as usize].clone())
    }

    /// Probability of each value, as a map value -> count / 2^k.
    pub fn probability(&self, v: &[u8]) -> Ratio<u64> {
        let c = self.outcomes.iter().filter(|o| o.as_slice() == v).count() as u64;
        Ratio::new(c, self.outcomes.len() as u64)
    }

    /// Statistical distance to `other` over their joint support.
    pub fn statistical_distance(&self, other: &TableSampler) -> Ratio<u64> {
        let mut support: Vec<&Vec<u8>> = self.outcomes.iter().chain(&other.outcomes).collect();
        support.sort();
        support.dedup();
        let mut twice = Ratio::from_integer(0u64);
        for v in support {
            let (p, q) = (self.probability(v), other.probability(v));
            twice += if p > q { p - q } else { q - p };
        }
        twice / 2
    }
}

/// Interface shared by every distinguishing game over `len`-byte samples, so
/// one distinguisher can play all games of a hybrid chain.
pub fn distinguishing_interface(len: usize) -> String {
    format!("dist/{len}")
}

/// Challenger flips `b`, sends a sample from `left` (b = 0) or `right`
/// (b = 1), and wins the adversary's game iff its guess equals `b`. The coin
/// is revealed after the verdict.
pub fn build_distinguishing_game(
    name: &str,
    left: &TableSampler,
    right: &TableSampler,
) -> Result<GameDef, Error> {
    if left.out_len() != right.out_len() {
        return Err(Error::Length {
            expected: left.out_len(),
            got: right.out_len(),
        });
    }
    let bits = 1 + left.randomness_bits().max(right.randomness_bits());
    let mut g = GameDef::new(
        name,
        Arc::new(Distinguish {
            left: left.clone(),
            right: right.clone(),
        }),
        3,
    )
    .with_randomness(bits);
    g.interface = distinguishing_interface(left.out_len());
    Ok(g)
}

struct Distinguish {
    left: TableSampler,
    right: TableSampler,
}

struct DistinguishSession {
    left: TableSampler,
    right: TableSampler,
    tape: Tape,
    b: Option<bool>,
}

impl ChallengerProgram for Distinguish {
    fn start(&self, tape: Tape) -> Box<dyn ChallengerSession> {
        Box::new(DistinguishSession {
            left: self.left.clone(),
            right: self.right.clone(),
            tape,
            b: None,
        })
    }
}

impl ChallengerSession for DistinguishSession {
    fn step(&mut self, incoming: Option<&[u8]>) -> Result<ChallengerStep, PlayError> {
        match (incoming, self.b) {
            (None, _) => {
                let b = self.tape.coin()?;
                self.b = Some(b);
                let s = if b {
                    self.right.sample(&mut self.tape)?
                } else {
                    self.left.sample(&mut self.tape)?
                };
                Ok(ChallengerStep::Send(
                    Writer::tagged(TAG_SAMPLE).bytes(&s).finish(),
                ))
            }
            (Some(reply), Some(b)) => {
                let mut r = Reader::new(reply);
                if r.u8()? != TAG_GUESS {
                    return Err(PlayError::Schema("expected a guess".into()));
                }
                let g = r.u8()?;
                r.finish()?;
                if g > 1 {
                    return Err(PlayError::Schema("guess must be a bit".into()));
                }
                Ok(ChallengerStep::Finish {
                    verdict: Verdict::from_bool((g == 1) == b),
                    reveal: Some(Writer::tagged(TAG_COIN).u8(u8::from(b)).finish()),
                })
            }
            (Some(_), None) => unreachable!("reply before challenge"),
        }
    }
}

pub fn decode_sample(msg: &[u8]) -> Result<Vec<u8>, Error> {
    let mut r = Reader::new(msg);
    if r.u8()? != TAG_SAMPLE {
        return Err(Error::Decode("expected a sample".into()));
    }
    let s = r.bytes()?;
    r.finish()?;
    Ok(s)
}

pub fn encode_guess(b: bool) -> Vec<u8> {
    Writer::tagged(TAG_GUESS).u8(u8::from(b)).finish()
}

/// Deterministic distinguisher guessing 1 exactly on samples in `accept`.
pub fn set_distinguisher(len: usize, accept: Vec<Vec<u8>>) -> AdversaryHandle {
    use crate::game::adversaries::Stateless;
    use crate::game::AdversaryStep;
    let prog = Stateless(Arc::new(move |_: &mut Tape, _: usize, m: &[u8]| {
        Ok(match decode_sample(m) {
            Ok(s) => AdversaryStep::Send(encode_guess(accept.contains(&s))),
            Err(e) => AdversaryStep::Abort(e.to_string()),
        })
    }));
    AdversaryHandle::new(
        "set-distinguisher",
        distinguishing_interface(len),
        Some(0),
        Arc::new(prog),
    )
}

#[derive(Debug, Clone)]
pub struct HybridChain {
    pub samplers: Vec<TableSampler>,
}

impl HybridChain {
    pub fn new(samplers: Vec<TableSampler>) -> Result<HybridChain, Error> {
        if samplers.len() < 2 {
            return Err(Error::Param(
                "a hybrid chain needs at least two samplers".into(),
            ));
        }
        let len = samplers[0].out_len();
        if let Some(s) = samplers.iter().find(|s| s.out_len() != len) {
            return Err(Error::Length {
                expected: len,
                got: s.out_len(),
            });
        }
        Ok(HybridChain { samplers })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridReport {
    pub adjacent_values: Vec<Ratio<u64>>,
    pub end_to_end_value: Ratio<u64>,
    /// `|2v − 1|` for the end-to-end game.
    pub end_to_end_advantage: Rational,
    /// `Σ |2v_i − 1|` over adjacent pairs.
    pub advantage_sum: Rational,
    pub telescoping_holds: bool,
}

fn advantage(v: Ratio<u64>) -> Rational {
    let v = Rational::new(BigInt::from(*v.numer()), BigInt::from(*v.denom()));
    (v * BigInt::from(2) - BigInt::from(1)).abs()
}

/// Exact values of `distinguisher` on every adjacent pair and on the end
/// points, and the advantage telescoping inequality.
pub fn hybrid_chain_check(
    chain: &HybridChain,
    distinguisher: &AdversaryHandle,
    budget: u32,
) -> Result<HybridReport, Error> {
    let s = &chain.samplers;
    let mut adjacent_values = Vec::with_capacity(s.len() - 1);
    for (i, w) in s.windows(2).enumerate() {
        let g = build_distinguishing_game(&format!("hybrid/{i}-{}", i + 1), &w[0], &w[1])?;
        adjacent_values.push(exact_value(&g, distinguisher, budget)?);
    }
    let g = build_distinguishing_game("hybrid/ends", &s[0], &s[s.len() - 1])?;
    let end_to_end_value = exact_value(&g, distinguisher, budget)?;
    let end_to_end_advantage = advantage(end_to_end_value);
    let advantage_sum = adjacent_values
        .iter()
        .map(|&v| advantage(v))
        .sum::<Rational>();
    Ok(HybridReport {
        telescoping_holds: end_to_end_advantage <= advantage_sum,
        adjacent_values,
        end_to_end_value,
        end_to_end_advantage,
        advantage_sum,
    })
}
