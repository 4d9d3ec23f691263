//! Game values: Monte Carlo estimates with Hoeffding intervals, exact values by
//! tape enumeration, and the maximum over a finite adversary class.

use num_rational::Ratio;

use crate::game::{play, AdversaryHandle, GameDef, RunContext};
use crate::par::{map_reduce, Execution};
use crate::seed::Seed;
use crate::tape::Tape;
use crate::Error;

/// Largest total randomness `exact_value` will enumerate.
pub const MAX_EXACT_BITS: u32 = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct GameValueEstimate {
    pub point: f64,
    pub trials: u64,
    pub successes: u64,
    pub confidence: f64,
    pub half_width: f64,
    /// Trials that ended in a schema violation (counted as failures).
    pub violations: u64,
    pub aborts: u64,
}

impl GameValueEstimate {
    pub fn lower(&self) -> f64 {
        self.point - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.point + self.half_width
    }

    pub fn covers(&self, v: f64) -> bool {
        (self.point - v).abs() <= self.half_width
    }
}

/// Two-sided Hoeffding half-width `sqrt(ln(2/(1-c)) / (2t))`.
pub fn hoeffding_half_width(trials: u64, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * trials as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    pub successes: u64,
    pub violations: u64,
    pub aborts: u64,
}

impl Tally {
    pub fn merge(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            successes: self.successes + o.successes,
            violations: self.violations + o.violations,
            aborts: self.aborts + o.aborts,
        }
    }
}

fn check_args(trials: u64, confidence: f64) -> Result<(), Error> {
    if trials == 0 {
        return Err(Error::Param("trials must be at least 1".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Param(format!(
            "confidence {confidence} must lie in (0,1)"
        )));
    }
    Ok(())
}

/// Estimates the game value over `trials` runs; trial `i` uses
/// `seed.derive("trial", i)` as its run seed.
pub fn estimate_value(
    game: &GameDef,
    adversary: &AdversaryHandle,
    trials: u64,
    confidence: f64,
    seed: Seed,
) -> Result<GameValueEstimate, Error> {
    estimate_value_with(
        Execution::default(),
        game,
        adversary,
        trials,
        confidence,
        seed,
    )
}

pub fn estimate_value_with(
    exec: Execution,
    game: &GameDef,
    adversary: &AdversaryHandle,
    trials: u64,
    confidence: f64,
    seed: Seed,
) -> Result<GameValueEstimate, Error> {
    check_args(trials, confidence)?;
    let tally = map_reduce(
        trials,
        exec,
        Tally::default(),
        |i| {
            let s = seed.derive("trial", i);
            let rec = play(
                game,
                adversary,
                Tape::seeded(s.derive("challenger", 0)),
                Tape::seeded(s.derive("adversary", 0)),
                &RunContext::default(),
            )?;
            Ok::<_, Error>(Tally {
                trials: 1,
                successes: u64::from(rec.outcome.verdict.is_succ()),
                violations: u64::from(rec.outcome.violation.is_some()),
                aborts: u64::from(rec.outcome.abort.is_some()),
            })
        },
        Tally::merge,
    )?;
    Ok(GameValueEstimate {
        point: tally.successes as f64 / trials as f64,
        trials,
        successes: tally.successes,
        confidence,
        half_width: hoeffding_half_width(trials, confidence),
        violations: tally.violations,
        aborts: tally.aborts,
    })
}

/// Exact `Pr[succ]` by enumerating every challenger and adversary tape.
///
/// Both programs must declare their randomness and the total must fit in
/// `budget ≤ 24` bits. A program that draws more than it declared, or draws
/// from a range that is not a power of two, makes the enumeration fail.
pub fn exact_value(
    game: &GameDef,
    adversary: &AdversaryHandle,
    budget: u32,
) -> Result<Ratio<u64>, Error> {
    exact_value_with(Execution::default(), game, adversary, budget)
}

pub fn exact_value_with(
    exec: Execution,
    game: &GameDef,
    adversary: &AdversaryHandle,
    budget: u32,
) -> Result<Ratio<u64>, Error> {
    if budget > MAX_EXACT_BITS {
        return Err(Error::Budget(format!(
            "budget {budget} exceeds the {MAX_EXACT_BITS}-bit enumeration limit"
        )));
    }
    let c = game.randomness_bits.ok_or_else(|| {
        Error::Budget(format!(
            "game `{}` does not declare its randomness",
            game.name
        ))
    })?;
    let a = adversary.randomness_bits.ok_or_else(|| {
        Error::Budget(format!(
            "adversary `{}` does not declare its randomness",
            adversary.name
        ))
    })?;
    if c + a > budget {
        return Err(Error::Budget(format!(
            "declared randomness {c}+{a} bits exceeds budget {budget}"
        )));
    }
    let total = 1u64 << (c + a);
    let tally = map_reduce(
        total,
        exec,
        Tally::default(),
        |t| {
            let ct = Tape::from_bits(t & ((1u64 << c) - 1), c);
            let at = Tape::from_bits(t >> c, a);
            let rec = play(game, adversary, ct, at, &RunContext::default()).map_err(|e| {
                Error::Budget(format!(
                    "enumeration failed (declared randomness wrong?): {e}"
                ))
            })?;
            Ok::<_, Error>(Tally {
                trials: 1,
                successes: u64::from(rec.outcome.verdict.is_succ()),
                ..Tally::default()
            })
        },
        Tally::merge,
    )?;
    Ok(Ratio::new(tally.successes, total))
}

/// Picks the adversary with the highest point estimate; ties go to the one
/// declared first. Every adversary is estimated with the same master seed.
pub fn max_value_over(
    game: &GameDef,
    adversaries: &[AdversaryHandle],
    trials: u64,
    confidence: f64,
    seed: Seed,
) -> Result<(AdversaryHandle, GameValueEstimate), Error> {
    let mut best: Option<(usize, GameValueEstimate)> = None;
    for (i, a) in adversaries.iter().enumerate() {
        let est = estimate_value(game, a, trials, confidence, seed)?;
        if best.as_ref().is_none_or(|(_, b)| est.point > b.point) {
            best = Some((i, est));
        }
    }
    let (i, est) = best.ok_or(Error::EmptySet)?;
    Ok((adversaries[i].clone(), est))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_width_formula() {
        let hw = hoeffding_half_width(10_000, 0.99);
        let expected = ((2.0f64 / 0.01).ln() / 20_000.0).sqrt();
        assert_eq!(hw, expected);
        assert!((hw - 0.016_276).abs() < 1e-5);
    }

    #[test]
    fn tally_merge_is_order_independent() {
        let a = Tally {
            trials: 3,
            successes: 1,
            violations: 0,
            aborts: 2,
        };
        let b = Tally {
            trials: 5,
            successes: 4,
            violations: 1,
            aborts: 0,
        };
        assert_eq!(a.merge(b), b.merge(a));
    }
}
