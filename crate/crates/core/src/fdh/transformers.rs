//! The classical FDH programming transformer (TDP inversion from an
//! RO-model forger) and the interpreter `Î` (RO forger from a forger against
//! the semi-constant oracle).

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_bigint::BigUint;

use crate::fdh::games::{
    decode_element, decode_ro_move, decode_tdp_challenge, decode_tdp_pk, decode_unit,
    encode_digest, encode_hash, encode_ro_forgery, encode_ro_sig, encode_tdp_pk, ro_forgery_game,
    tdp_inversion_game, RoGameParams, RoMove, TAG_DIGEST,
};
use crate::fdh::{check_lambda, sample_sc_oracle, unit_draws, LambdaChoice, SemiConstantOracle};
use crate::game::{
    AdversaryHandle, AdversaryProgram, AdversarySession, AdversaryStep, BlackBox, Embedding,
    RunContext,
};
use crate::ots::check_message;
use crate::primitives::games::encode_answer;
use crate::primitives::tdp::{encode_elem, sample_unit, tdp_forward, TdpPublicKey};
use crate::reduction::{compose, rat, BetaSpec, Poly, Rational, Reduction, Transformer};
use crate::tape::{DrawSource, Tape, TapeError};
use crate::Error;

fn stop(why: impl Into<String>) -> Result<AdversaryStep, TapeError> {
    Ok(AdversaryStep::Abort(why.into()))
}

/// Answers a wrapped forger's oracle and signing queries.
trait Simulator {
    /// `Ok(Err(why))` stops the simulation.
    fn hash(&mut self, m: &[u8]) -> Result<Result<BigUint, String>, TapeError>;
    fn sign(&mut self, m: &[u8]) -> Result<Result<BigUint, String>, TapeError>;
    /// The honest challenger's draws so far, in order.
    fn rule(&self) -> Vec<DrawSource>;
}

enum RoDriven {
    Forgery {
        msg: Vec<u8>,
        sig: Vec<u8>,
        signed: Vec<Vec<u8>>,
    },
    Stopped(String),
}

/// Plays the honest forgery-game challenger towards `bb` with `sim`
/// answering queries, enforcing the game's budgets, and exporting the
/// embedding before every delivery.
fn drive_ro_forger(
    bb: &mut BlackBox,
    pk: &TdpPublicKey,
    p: &RoGameParams,
    sim: &mut dyn Simulator,
    ctx: &RunContext,
) -> Result<RoDriven, TapeError> {
    let mut hashed = HashSet::new();
    let mut signed: Vec<Vec<u8>> = Vec::new();
    let mut next = encode_tdp_pk(pk);
    loop {
        ctx.set_embedding(Embedding::Draws(sim.rule()));
        let reply = match bb.send(&next)? {
            AdversaryStep::Abort(r) => {
                return Ok(RoDriven::Stopped(format!("forger aborted: {r}")))
            }
            AdversaryStep::Send(reply) => reply,
        };
        let mv = match decode_ro_move(&reply) {
            Ok(mv) => mv,
            Err(e) => return Ok(RoDriven::Stopped(format!("malformed forger move: {e}"))),
        };
        let m = match &mv {
            RoMove::Hash(m) | RoMove::Sign(m) | RoMove::Forge { msg: m, .. } => m,
        };
        if check_message(m, p.message_bits).is_err() {
            return Ok(RoDriven::Stopped("malformed message".into()));
        }
        match mv {
            RoMove::Hash(m) => {
                if hashed.insert(m.clone()) && hashed.len() as u32 > p.max_hash {
                    ctx.note(format!("forger exceeded hash budget {}", p.max_hash));
                    return Ok(RoDriven::Stopped("forger exceeded its hash budget".into()));
                }
                match sim.hash(&m)? {
                    Ok(h) => next = encode_digest(&pk.n, &h),
                    Err(why) => return Ok(RoDriven::Stopped(why)),
                }
            }
            RoMove::Sign(m) => {
                if signed.len() as u32 >= p.max_sign {
                    ctx.note(format!("forger exceeded signing budget {}", p.max_sign));
                    return Ok(RoDriven::Stopped(
                        "forger exceeded its signing budget".into(),
                    ));
                }
                match sim.sign(&m)? {
                    Ok(s) => {
                        signed.push(m);
                        next = encode_ro_sig(&pk.n, &s);
                    }
                    Err(why) => return Ok(RoDriven::Stopped(why)),
                }
            }
            RoMove::Forge { msg, sig } => return Ok(RoDriven::Forgery { msg, sig, signed }),
        }
    }
}

fn wrap<F>(label: &str, interface: String, make: F) -> Transformer
where
    F: Fn(&AdversaryHandle) -> Arc<dyn AdversaryProgram> + Send + Sync + 'static,
{
    let label = label.to_string();
    Transformer::new(
        label.clone(),
        true,
        true,
        Arc::new(move |a: &AdversaryHandle| {
            AdversaryHandle::new(
                format!("{label}({})", a.name),
                interface.clone(),
                None,
                make(a),
            )
        }),
    )
}

// ---------------------------------------------------------------------------
// Classical programming

struct Programmed {
    n: BigUint,
    pk: TdpPublicKey,
    y_star: BigUint,
    i_star: u64,
    fresh_hashes: u64,
    /// Oracle value and, where programmed, its preimage.
    table: HashMap<Vec<u8>, (BigUint, Option<BigUint>)>,
    embedded: Option<Vec<u8>>,
    rule: Vec<DrawSource>,
    tape: Tape,
}

impl Programmed {
    fn point(&mut self, m: &[u8], via_hash: bool) -> Result<BigUint, TapeError> {
        if let Some((v, _)) = self.table.get(m) {
            return Ok(v.clone());
        }
        let entry = if via_hash && self.fresh_hashes == self.i_star {
            self.embedded = Some(m.to_vec());
            (self.y_star.clone(), None)
        } else {
            let r = sample_unit(&mut self.tape, &self.n)?;
            let v = tdp_forward(&self.pk, &r).expect("units map to units");
            (v, Some(r))
        };
        if via_hash {
            self.fresh_hashes += 1;
        }
        self.rule.extend(
            unit_draws(&self.n, &entry.0)
                .into_iter()
                .map(DrawSource::Own),
        );
        let v = entry.0.clone();
        self.table.insert(m.to_vec(), entry);
        Ok(v)
    }
}

impl Simulator for Programmed {
    fn hash(&mut self, m: &[u8]) -> Result<Result<BigUint, String>, TapeError> {
        self.point(m, true).map(Ok)
    }

    fn sign(&mut self, m: &[u8]) -> Result<Result<BigUint, String>, TapeError> {
        self.point(m, false)?;
        Ok(match &self.table[m].1 {
            Some(r) => Ok(r.clone()),
            None => Err("signing query hits the embedded point".into()),
        })
    }

    fn rule(&self) -> Vec<DrawSource> {
        self.rule.clone()
    }
}

#[derive(Clone)]
struct ClassicalProgram {
    p: RoGameParams,
    inner: AdversaryHandle,
}

struct ClassicalSession {
    prog: ClassicalProgram,
    tape: Tape,
    ctx: RunContext,
    done: bool,
}

impl AdversaryProgram for ClassicalProgram {
    fn spawn(&self, tape: Tape, ctx: &RunContext) -> Box<dyn AdversarySession> {
        Box::new(ClassicalSession {
            prog: self.clone(),
            tape,
            ctx: ctx.clone(),
            done: false,
        })
    }
}

impl AdversarySession for ClassicalSession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
        if std::mem::replace(&mut self.done, true) {
            return stop("inversion game has a single move");
        }
        let p = self.prog.p;
        let Ok((pk, y_star)) = decode_tdp_challenge(incoming) else {
            return stop("malformed inversion challenge");
        };
        let i_star = self.tape.below(u64::from(p.max_hash))?;
        let mut sim = Programmed {
            n: pk.n.clone(),
            pk: pk.clone(),
            y_star: y_star.clone(),
            i_star,
            fresh_hashes: 0,
            table: HashMap::new(),
            embedded: None,
            // the key seed is the external challenger's first four draws
            rule: (0..4).map(DrawSource::External).collect(),
            tape: self.tape.fork("oracle"),
        };
        let mut bb = self
            .prog
            .inner
            .spawn_black_box(self.tape.fork("inner"), &self.ctx);
        let (msg, sig, signed) = match drive_ro_forger(&mut bb, &pk, &p, &mut sim, &self.ctx)? {
            RoDriven::Stopped(why) => return stop(why),
            RoDriven::Forgery { msg, sig, signed } => (msg, sig, signed),
        };
        sim.point(&msg, false)?;
        if signed.contains(&msg) {
            return stop("forgery on a signed message");
        }
        if sim.embedded.as_deref() != Some(msg.as_slice()) {
            return stop("forgery is not at the embedded point");
        }
        let Some(s) = decode_unit(&pk.n, &sig) else {
            return stop("forged signature is not a unit");
        };
        if tdp_forward(&pk, &s).ok() != Some(y_star) {
            return stop("forgery is invalid");
        }
        Ok(AdversaryStep::Send(encode_answer(&encode_elem(&pk.n, &s))))
    }
}

/// Plants the inversion challenge as the oracle answer to a uniformly chosen
/// fresh hash query, programs every other answer as `f(r)` for a fresh `r`
/// (so signing queries are answered with `r`) and reads the preimage off a
/// forgery at the planted point.
pub fn fdh_classical_transformer(p: RoGameParams) -> Result<Transformer, Error> {
    if p.max_hash == 0 {
        return Err(Error::Param("the hash budget must be at least 1".into()));
    }
    let external = tdp_inversion_game(p.modulus_bits)?;
    Ok(wrap("fdh-classical", external.interface, move |a| {
        Arc::new(ClassicalProgram {
            p,
            inner: a.clone(),
        })
    }))
}

/// `(G^tdp, T, G^ro-for)` with `β(x) = x/q_H`.
pub fn fdh_classical_reduction(p: RoGameParams) -> Result<Reduction, Error> {
    let transformer = fdh_classical_transformer(p)?;
    let beta = BetaSpec::linear_over_poly(
        rat(1, 1),
        Poly::constant(i64::from(p.max_hash)),
        u64::from(p.max_hash),
    )?;
    Ok(Reduction::new(
        format!("fdh-classical[N{},h{}]", p.modulus_bits, p.max_hash),
        tdp_inversion_game(p.modulus_bits)?,
        transformer,
        ro_forgery_game(p)?,
        beta,
    ))
}

// ---------------------------------------------------------------------------
// The interpreter

/// Parameters of `Î`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpreterConfig {
    pub lambda: Rational,
    pub q_h: u32,
    pub q_s: u32,
    pub modulus_bits: usize,
    pub message_bits: usize,
}

impl InterpreterConfig {
    /// `λ` from [`crate::fdh::choose_lambda`].
    pub fn auto(modulus_bits: usize, message_bits: usize, q_h: u32, q_s: u32) -> InterpreterConfig {
        InterpreterConfig {
            lambda: crate::fdh::choose_lambda(u64::from(q_h), u64::from(q_s)).lambda,
            q_h,
            q_s,
            modulus_bits,
            message_bits,
        }
    }

    pub fn internal(&self) -> RoGameParams {
        RoGameParams {
            modulus_bits: self.modulus_bits,
            message_bits: self.message_bits,
            max_hash: self.q_h,
            max_sign: self.q_s,
        }
    }

    /// The game `Î` plays: one hash query, no signing queries.
    pub fn external(&self) -> RoGameParams {
        RoGameParams {
            max_hash: 1,
            max_sign: 0,
            ..self.internal()
        }
    }

    pub fn choice(&self) -> LambdaChoice {
        LambdaChoice::for_lambda(
            self.lambda.clone(),
            u64::from(self.q_h),
            u64::from(self.q_s),
            "λ supplied by the caller".into(),
        )
    }

    /// The fixed message `a` whose hash becomes the planted target.
    pub fn anchor(&self) -> Vec<u8> {
        vec![0u8; self.message_bits.div_ceil(8)]
    }
}

struct SemiConstant {
    sc: SemiConstantOracle,
    n: BigUint,
    seen: HashSet<Vec<u8>>,
    rule: Vec<DrawSource>,
}

impl SemiConstant {
    fn value(&mut self, m: &[u8]) -> BigUint {
        let v = self.sc.query(m);
        if self.seen.insert(m.to_vec()) {
            self.rule
                .extend(unit_draws(&self.n, &v).into_iter().map(DrawSource::Own));
        }
        v
    }
}

impl Simulator for SemiConstant {
    fn hash(&mut self, m: &[u8]) -> Result<Result<BigUint, String>, TapeError> {
        Ok(Ok(self.value(m)))
    }

    fn sign(&mut self, m: &[u8]) -> Result<Result<BigUint, String>, TapeError> {
        if self.sc.planted(m) {
            return Ok(Err("signing query hits a planted point".into()));
        }
        self.value(m);
        Ok(Ok(self.sc.preimage(m)))
    }

    fn rule(&self) -> Vec<DrawSource> {
        self.rule.clone()
    }
}

#[derive(Clone)]
struct InterpreterProgram {
    cfg: InterpreterConfig,
    inner: AdversaryHandle,
}

enum Stage {
    Opening,
    AwaitDigest(TdpPublicKey),
    Done,
}

struct InterpreterSession {
    prog: InterpreterProgram,
    tape: Tape,
    ctx: RunContext,
    stage: Stage,
}

impl AdversaryProgram for InterpreterProgram {
    fn spawn(&self, tape: Tape, ctx: &RunContext) -> Box<dyn AdversarySession> {
        Box::new(InterpreterSession {
            prog: self.clone(),
            tape,
            ctx: ctx.clone(),
            stage: Stage::Opening,
        })
    }
}

impl InterpreterSession {
    fn run(&mut self, pk: TdpPublicKey, b: BigUint) -> Result<AdversaryStep, TapeError> {
        let cfg = self.prog.cfg.clone();
        let oracle_seed = self.tape.fill_seed()?;
        let sc = match sample_sc_oracle(cfg.lambda.clone(), b.clone(), pk.clone(), oracle_seed) {
            Ok(sc) => sc,
            Err(e) => return stop(format!("cannot build the semi-constant oracle: {e}")),
        };
        let mut sim = SemiConstant {
            sc,
            n: pk.n.clone(),
            seen: HashSet::new(),
            rule: (0..4).map(DrawSource::External).collect(),
        };
        let mut bb = self
            .prog
            .inner
            .spawn_black_box(self.tape.fork("inner"), &self.ctx);
        let driven = drive_ro_forger(&mut bb, &pk, &cfg.internal(), &mut sim, &self.ctx)?;
        let (msg, sig, signed) = match driven {
            RoDriven::Stopped(why) => return stop(why),
            RoDriven::Forgery { msg, sig, signed } => (msg, sig, signed),
        };
        sim.value(&msg);
        if signed.contains(&msg) {
            return stop("forgery on a signed message");
        }
        if !sim.sc.planted(&msg) {
            return stop("forgery is not at a planted point");
        }
        let Some(s) = decode_unit(&pk.n, &sig) else {
            return stop("forged signature is not a unit");
        };
        if tdp_forward(&pk, &s).ok() != Some(b) {
            return stop("forgery is invalid");
        }
        Ok(AdversaryStep::Send(encode_ro_forgery(
            &pk.n,
            &cfg.anchor(),
            &s,
        )))
    }
}

impl AdversarySession for InterpreterSession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
        match std::mem::replace(&mut self.stage, Stage::Done) {
            Stage::Opening => {
                let Ok(pk) = decode_tdp_pk(incoming) else {
                    return stop("expected a public key");
                };
                self.stage = Stage::AwaitDigest(pk);
                Ok(AdversaryStep::Send(encode_hash(&self.prog.cfg.anchor())))
            }
            Stage::AwaitDigest(pk) => match decode_element(incoming, TAG_DIGEST) {
                Ok(b) if decode_unit(&pk.n, &encode_elem(&pk.n, &b)).is_some() => self.run(pk, b),
                _ => stop("expected the anchor's digest"),
            },
            Stage::Done => stop("interpreter already finished"),
        }
    }
}

/// `Î`: hashes the anchor `a` to get `b`, answers the wrapped forger from
/// `SC_λ` with target `b`, signs with `o1` unless `o2` fires (abort), and
/// turns a forgery at a planted point into a forgery on `a`.
pub fn fdh_interpreter(cfg: InterpreterConfig) -> Result<Transformer, Error> {
    check_lambda(&cfg.lambda)?;
    let external = ro_forgery_game(cfg.external())?;
    ro_forgery_game(cfg.internal())?;
    Ok(wrap("fdh-interpreter", external.interface, move |a| {
        Arc::new(InterpreterProgram {
            cfg: cfg.clone(),
            inner: a.clone(),
        })
    }))
}

/// `(G^ro-for(1,0), Î, G^ro-for(q_H,q_S))` with `β′(x) = λ(1−λ)^{q_S}·x`.
pub fn fdh_interpreter_reduction(cfg: InterpreterConfig) -> Result<Reduction, Error> {
    let beta = BetaSpec::scalar(cfg.choice().success_factor())?;
    Ok(Reduction::new(
        format!("fdh-interpreter[h{},s{}]", cfg.q_h, cfg.q_s),
        ro_forgery_game(cfg.external())?,
        fdh_interpreter(cfg.clone())?,
        ro_forgery_game(cfg.internal())?,
        beta,
    ))
}

/// The classical transformer (one hash query) composed with `Î`: TDP
/// inversion from a forger of `G^ro-for(q_H, q_S)`.
pub fn fdh_end_to_end(cfg: InterpreterConfig) -> Result<Reduction, Error> {
    let outer = fdh_classical_reduction(cfg.external())?;
    compose(&outer, &fdh_interpreter_reduction(cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdh::adversaries::{fdh_brute_force, repeat_seeking_forger, sign_then_forge};
    use crate::game::adversaries::always_abort;
    use crate::reduction::{apply_transformer, check_straight_line};
    use crate::seed::Seed;
    use crate::{estimate_value, run_game};

    fn p(h: u32, s: u32) -> RoGameParams {
        RoGameParams {
            modulus_bits: 12,
            message_bits: 8,
            max_hash: h,
            max_sign: s,
        }
    }

    fn seeds(n: u64) -> Vec<Seed> {
        (0..n).map(Seed::from_u64).collect()
    }

    #[test]
    fn always_abort_gives_nothing() {
        let r = fdh_classical_reduction(p(4, 1)).unwrap();
        let t = apply_transformer(&r, &always_abort(&r.internal)).unwrap();
        let est = estimate_value(&r.external, &t, 50, 0.95, Seed::from_u64(1)).unwrap();
        assert_eq!(est.successes, 0);
    }

    #[test]
    fn single_hash_forger_always_inverts() {
        let r = fdh_classical_reduction(p(1, 0)).unwrap();
        let a = fdh_brute_force(p(1, 0), 1, 0).unwrap();
        let t = apply_transformer(&r, &a).unwrap();
        let est = estimate_value(&r.external, &t, 200, 0.95, Seed::from_u64(2)).unwrap();
        assert_eq!(est.successes, 200);
    }

    #[test]
    fn classical_is_straight_line() {
        let r = fdh_classical_reduction(p(8, 1)).unwrap();
        let a = fdh_brute_force(p(8, 1), 8, 1).unwrap();
        let rep = check_straight_line(&r, &a, &seeds(40)).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn classical_rate_is_about_one_over_q_h() {
        let r = fdh_classical_reduction(p(4, 1)).unwrap();
        let a = fdh_brute_force(p(4, 1), 4, 1).unwrap();
        let t = apply_transformer(&r, &a).unwrap();
        let est = estimate_value(&r.external, &t, 2000, 0.99, Seed::from_u64(3)).unwrap();
        assert!(est.covers(0.25), "{est:?}");
        assert_eq!(est.violations, 0);
    }

    fn cfg(lambda: Rational, h: u32, s: u32) -> InterpreterConfig {
        InterpreterConfig {
            lambda,
            q_h: h,
            q_s: s,
            modulus_bits: 12,
            message_bits: 8,
        }
    }

    #[test]
    fn signed_forgeries_never_pass_the_guard() {
        let c = cfg(rat(1, 2), 2, 1);
        let r = fdh_interpreter_reduction(c.clone()).unwrap();
        let t = apply_transformer(&r, &sign_then_forge(c.internal()).unwrap()).unwrap();
        let est = estimate_value(&r.external, &t, 300, 0.95, Seed::from_u64(4)).unwrap();
        assert_eq!(est.successes, 0);
    }

    #[test]
    fn planted_forgeries_verify_against_the_anchor() {
        let c = cfg(rat(1, 4), 64, 0);
        let r = fdh_interpreter_reduction(c.clone()).unwrap();
        let t = apply_transformer(&r, &repeat_seeking_forger(c.internal(), 64).unwrap()).unwrap();
        let mut sent = 0;
        for s in 0..100 {
            let rec = run_game(&r.external, &t, Seed::from_u64(s)).unwrap();
            if rec.outcome.abort.is_none() {
                sent += 1;
                assert!(rec.outcome.verdict.is_succ(), "{:?}", rec.outcome);
            }
        }
        assert!(sent > 50, "{sent}");
    }

    #[test]
    fn interpreter_is_straight_line_and_respects_budgets() {
        let c = InterpreterConfig::auto(12, 8, 8, 1);
        let r = fdh_interpreter_reduction(c.clone()).unwrap();
        let a = fdh_brute_force(c.internal(), 8, 1).unwrap();
        let rep = check_straight_line(&r, &a, &seeds(40)).unwrap();
        assert!(rep.passed, "{rep:?}");
        let greedy = fdh_brute_force(c.internal(), 9, 0).unwrap();
        let t = apply_transformer(&r, &greedy).unwrap();
        let rec = run_game(&r.external, &t, Seed::from_u64(1)).unwrap();
        assert!(rec.outcome.abort.unwrap().contains("hash budget"));
    }

    #[test]
    fn end_to_end_is_straight_line_and_composes_beta() {
        let c = InterpreterConfig::auto(12, 8, 8, 1);
        assert_eq!(c.lambda, rat(1, 256));
        let r = fdh_end_to_end(c.clone()).unwrap();
        assert_eq!(r.claimed_beta.slope(), rat(255, 256 * 256));
        let a = fdh_brute_force(c.internal(), 8, 1).unwrap();
        let rep = check_straight_line(&r, &a, &seeds(20)).unwrap();
        assert!(rep.passed, "{rep:?}");
    }
}
