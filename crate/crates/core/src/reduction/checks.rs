//! Empirical checks of reduction properties: straight-line behaviour,
//! behavioural dominance, `β`-effectiveness, and the combined lifting check.

use std::cell::RefCell;
use std::rc::Rc;
use std::sync::Arc;

use crate::estimate::{estimate_value, GameValueEstimate};
use crate::game::{
    play, AdversaryHandle, AdversaryProgram, AdversarySession, AdversaryStep, Embedding, ProbeLog,
    RunContext, RunRecord,
};
use crate::reduction::{apply_transformer, BetaSpec, Reduction};
use crate::seed::Seed;
use crate::tape::{resolve_draws, Tape, TapeError};
use crate::Error;

/// Where a wrapped adversary's view first departed from the honest run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub seed: Seed,
    /// Index of the delivered message (0-based) at which views differ.
    pub delivery: usize,
    /// Round of that message in the internal game.
    pub round: u32,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StraightLineReport {
    pub passed: bool,
    pub seeds_checked: usize,
    pub divergence: Option<Divergence>,
}

/// One external run of `T(a)` under `seed` with a probe attached.
struct ProbedRun {
    record: RunRecord,
    log: ProbeLog,
    external_draws: Vec<u64>,
}

fn probed_external_run(r: &Reduction, t: &AdversaryHandle, seed: Seed) -> Result<ProbedRun, Error> {
    let probe = Rc::new(RefCell::new(ProbeLog::default()));
    let ctape = Tape::seeded(seed.derive("challenger", 0)).recording();
    let draws = ctape.log_handle().expect("recording tape");
    let record = play(
        &r.external,
        t,
        ctape,
        Tape::seeded(seed.derive("adversary", 0)),
        &RunContext::with_probe(Rc::clone(&probe)),
    )?;
    let external_draws = draws.borrow().clone();
    let log = std::mem::take(&mut *probe.borrow_mut());
    Ok(ProbedRun {
        record,
        log,
        external_draws,
    })
}

/// Stops the wrapped adversary once it has seen `limit` messages, so the
/// honest replay needs no challenger coins past the point the transformer
/// reached.
struct Truncated {
    inner: AdversaryHandle,
    limit: usize,
}

struct TruncatedSession {
    inner: Box<dyn AdversarySession>,
    seen: usize,
    limit: usize,
}

impl AdversaryProgram for Truncated {
    fn spawn(&self, tape: Tape, ctx: &RunContext) -> Box<dyn AdversarySession> {
        Box::new(TruncatedSession {
            inner: self.inner.spawn(tape, ctx),
            seen: 0,
            limit: self.limit,
        })
    }
}

impl AdversarySession for TruncatedSession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
        self.seen += 1;
        if self.seen >= self.limit {
            return Ok(AdversaryStep::Abort("replay horizon".into()));
        }
        self.inner.respond(incoming)
    }
}

/// The honest internal run the transformer claims to simulate: the internal
/// challenger's coins come from the exported embedding, the adversary's from
/// the seed its first instance was spawned with. With `truncate`, the replay
/// stops after as many deliveries as the transformer made. `None` when the
/// transformer never delivered anything.
fn honest_replay(
    r: &Reduction,
    a: &AdversaryHandle,
    seed: Seed,
    run: &ProbedRun,
    truncate: bool,
) -> Result<Option<RunRecord>, Error> {
    let Some(first) = run.log.spawns.first() else {
        return Ok(None);
    };
    if run.log.delivered.is_empty() {
        return Ok(None);
    }
    let adv_seed = first.ok_or_else(|| {
        Error::Inconclusive(format!(
            "{}: wrapped adversary was not given a seeded tape",
            r.transformer.name
        ))
    })?;
    let ctape = match &run.log.embedding {
        None => {
            return Err(Error::Inconclusive(format!(
                "{} does not export its embedding rule",
                r.transformer.name
            )))
        }
        Some(Embedding::Identity) => Tape::seeded(seed.derive("challenger", 0)),
        Some(Embedding::Draws(rule)) => {
            Tape::scripted(resolve_draws(rule, &run.external_draws).ok_or_else(|| {
                Error::Inconclusive(format!(
                    "{}: embedding rule refers past the external challenger's {} draws",
                    r.transformer.name,
                    run.external_draws.len()
                ))
            })?)
        }
    };
    let horizon = if !truncate {
        a.clone()
    } else {
        AdversaryHandle::new(
            a.name.clone(),
            a.interface.clone(),
            a.randomness_bits,
            Arc::new(Truncated {
                inner: a.clone(),
                limit: run.log.delivered.len(),
            }),
        )
    };
    match play(
        &r.internal,
        &horizon,
        ctape,
        Tape::seeded(adv_seed),
        &RunContext::default(),
    ) {
        Ok(rec) => Ok(Some(rec)),
        Err(e @ (TapeError::ScriptExhausted | TapeError::ScriptOutOfRange { .. })) => {
            Err(Error::Inconclusive(format!(
                "{}: embedding rule does not determine the internal run ({e})",
                r.transformer.name
            )))
        }
        Err(e) => Err(e.into()),
    }
}

/// Compares what `a` was shown inside `T(a)` with what it would see in the
/// honest internal run named by the exported embedding.
///
/// A single instance must be spawned and its deliveries must be a prefix of
/// the honest deliveries (stopping early is allowed; restarting is not).
pub fn check_straight_line(
    r: &Reduction,
    a: &AdversaryHandle,
    seeds: &[Seed],
) -> Result<StraightLineReport, Error> {
    if !r.transformer.straight_line_claimed {
        return Err(Error::Param(format!(
            "{} does not claim to be straight-line",
            r.transformer.name
        )));
    }
    if let Some((outer, inner)) = &r.components {
        let first = check_straight_line(inner, a, seeds)?;
        if !first.passed {
            return Ok(first);
        }
        return check_straight_line(outer, &apply_transformer(inner, a)?, seeds);
    }
    let t = apply_transformer(r, a)?;
    for (checked, &seed) in seeds.iter().enumerate() {
        let run = probed_external_run(r, &t, seed)?;
        let Some(honest) = honest_replay(r, a, seed, &run, true)? else {
            continue;
        };
        let honest_view = honest.transcript.delivered();
        let mut div = None;
        for (j, (instance, msg)) in run.log.delivered.iter().enumerate() {
            let round = 2 * j as u32;
            if *instance != 0 {
                div = Some(Divergence {
                    seed,
                    delivery: j,
                    round,
                    detail: format!("adversary restarted (instance {instance}) at delivery {j}"),
                });
                break;
            }
            match honest_view.get(j) {
                None => {
                    div = Some(Divergence {
                        seed,
                        delivery: j,
                        round,
                        detail: format!(
                            "delivery {j} beyond the honest run's {} messages",
                            honest_view.len()
                        ),
                    });
                    break;
                }
                Some(h) if *h != msg.as_slice() => {
                    div = Some(Divergence {
                        seed,
                        delivery: j,
                        round,
                        detail: format!("message {j} differs from the honest run"),
                    });
                    break;
                }
                _ => {}
            }
        }
        if div.is_none() && run.log.spawns.len() > 1 {
            let j = run.log.delivered.len();
            div = Some(Divergence {
                seed,
                delivery: j,
                round: 2 * j as u32,
                detail: format!("{} adversary instances spawned", run.log.spawns.len()),
            });
        }
        if div.is_some() {
            return Ok(StraightLineReport {
                passed: false,
                seeds_checked: checked + 1,
                divergence: div,
            });
        }
    }
    Ok(StraightLineReport {
        passed: true,
        seeds_checked: seeds.len(),
        divergence: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominanceReport {
    pub passed: bool,
    /// Seeds on which both adversaries produced identical internal transcripts.
    pub comparable: usize,
    pub seeds: usize,
    pub first_failure: Option<Seed>,
}

/// The honest internal run matching one external run of `t = T(a)`, together
/// with that external run. Falls back to a plain internal run under `seed`
/// when the transformer exports no usable embedding.
fn paired_runs(
    r: &Reduction,
    a: &AdversaryHandle,
    t: &AdversaryHandle,
    seed: Seed,
) -> Result<(RunRecord, RunRecord), Error> {
    let run = probed_external_run(r, t, seed)?;
    let internal = match honest_replay(r, a, seed, &run, false) {
        Ok(Some(rec)) => rec,
        _ => crate::game::run_game(&r.internal, a, seed)?,
    };
    Ok((internal, run.record))
}

/// For every seed where `a1` and `a2` behave identically in the honest
/// internal run, the external runs of `T(a1)` and `T(a2)` must end with the
/// same verdict.
pub fn check_behavioral_dominance(
    r: &Reduction,
    a1: &AdversaryHandle,
    a2: &AdversaryHandle,
    seeds: &[Seed],
) -> Result<DominanceReport, Error> {
    let t1 = apply_transformer(r, a1)?;
    let t2 = apply_transformer(r, a2)?;
    let mut comparable = 0;
    for &seed in seeds {
        let (i1, e1) = paired_runs(r, a1, &t1, seed)?;
        let (i2, e2) = paired_runs(r, a2, &t2, seed)?;
        if i1.transcript.messages != i2.transcript.messages {
            continue;
        }
        comparable += 1;
        if e1.outcome.verdict != e2.outcome.verdict {
            return Ok(DominanceReport {
                passed: false,
                comparable,
                seeds: seeds.len(),
                first_failure: Some(seed),
            });
        }
    }
    Ok(DominanceReport {
        passed: true,
        comparable,
        seeds: seeds.len(),
        first_failure: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectivenessReport {
    pub internal_estimate: GameValueEstimate,
    pub external_estimate: GameValueEstimate,
    pub claimed_lower_bound: f64,
    pub satisfied: bool,
    /// `ext.point + ext.half_width − (bound − int.half_width)`; non-negative
    /// iff satisfied.
    pub margin: f64,
}

/// Estimates `ω_int(a)` and `ω_ext(T(a))` with the same trial count and
/// master seed and compares against `β(ω_int)` with summed half-widths.
pub fn check_effectiveness(
    r: &Reduction,
    a: &AdversaryHandle,
    trials: u64,
    confidence: f64,
    seed: Seed,
) -> Result<EffectivenessReport, Error> {
    let t = apply_transformer(r, a)?;
    let internal_estimate = estimate_value(&r.internal, a, trials, confidence, seed)?;
    let external_estimate = estimate_value(&r.external, &t, trials, confidence, seed)?;
    Ok(effectiveness_from(
        &r.claimed_beta,
        internal_estimate,
        external_estimate,
    ))
}

pub fn effectiveness_from(
    beta: &BetaSpec,
    internal_estimate: GameValueEstimate,
    external_estimate: GameValueEstimate,
) -> EffectivenessReport {
    let claimed_lower_bound = beta.evaluate(internal_estimate.point);
    let margin = external_estimate.point + external_estimate.half_width
        - (claimed_lower_bound - internal_estimate.half_width);
    EffectivenessReport {
        internal_estimate,
        external_estimate,
        claimed_lower_bound,
        satisfied: margin >= 0.0,
        margin,
    }
}

#[derive(Debug, Clone)]
pub struct LiftVerdict {
    /// Transformed test adversaries never violated the external schema.
    pub extendable_checked: bool,
    pub straight_line_verified: bool,
    pub value_dominating_tested: usize,
    pub value_dominating_passed: bool,
    pub effectiveness: Vec<EffectivenessReport>,
    /// `Some(claimed_beta)` exactly when every sub-check passed.
    pub conclusion_beta: Option<BetaSpec>,
    pub inconclusive: bool,
    pub notes: Vec<String>,
}

impl LiftVerdict {
    pub fn passed(&self) -> bool {
        self.conclusion_beta.is_some()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LiftConfig<'a> {
    pub seeds: &'a [Seed],
    pub trials: u64,
    pub confidence: f64,
    pub master_seed: Seed,
}

pub fn lift_check(
    r: &Reduction,
    adversaries: &[AdversaryHandle],
    pairs: &[(AdversaryHandle, AdversaryHandle)],
    cfg: LiftConfig<'_>,
) -> Result<LiftVerdict, Error> {
    if adversaries.is_empty() || pairs.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut notes = Vec::new();
    let mut inconclusive = false;

    let mut extendable = true;
    for a in adversaries {
        let t = apply_transformer(r, a)?;
        for &s in cfg.seeds {
            if let Some(v) = crate::game::run_game(&r.external, &t, s)?.outcome.violation {
                extendable = false;
                notes.push(format!("{}: external schema violation: {v}", a.name));
                break;
            }
        }
    }

    let mut straight = r.transformer.straight_line_claimed;
    if !straight {
        notes.push("transformer does not claim straight-line".into());
    }
    for a in adversaries
        .iter()
        .filter(|_| r.transformer.straight_line_claimed)
    {
        match check_straight_line(r, a, cfg.seeds) {
            Ok(rep) if rep.passed => {}
            Ok(rep) => {
                straight = false;
                let d = rep.divergence.expect("failing report has a divergence");
                notes.push(format!(
                    "{}: straight-line divergence at round {} ({})",
                    a.name, d.round, d.detail
                ));
            }
            Err(Error::Inconclusive(why)) => {
                straight = false;
                inconclusive = true;
                notes.push(format!(
                    "{}: straight-line check inconclusive: {why}",
                    a.name
                ));
            }
            Err(e) => return Err(e),
        }
    }

    let mut dominating = true;
    for (a1, a2) in pairs {
        let rep = check_behavioral_dominance(r, a1, a2, cfg.seeds)?;
        if !rep.passed {
            dominating = false;
            notes.push(format!(
                "{} / {}: behavioural dominance fails",
                a1.name, a2.name
            ));
        }
    }

    let mut effectiveness = Vec::new();
    let mut effective = true;
    for a in adversaries {
        let rep = check_effectiveness(r, a, cfg.trials, cfg.confidence, cfg.master_seed)?;
        if !rep.satisfied {
            effective = false;
            notes.push(format!(
                "{}: effectiveness fails with margin {:.6}",
                a.name, rep.margin
            ));
        }
        effectiveness.push(rep);
    }

    let all = extendable && straight && dominating && effective && !inconclusive;
    Ok(LiftVerdict {
        extendable_checked: extendable,
        straight_line_verified: straight,
        value_dominating_tested: pairs.len(),
        value_dominating_passed: dominating,
        effectiveness,
        conclusion_beta: all.then(|| r.claimed_beta.clone()),
        inconclusive,
        notes,
    })
}
