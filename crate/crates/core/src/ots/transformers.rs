//! Forger-to-inverter (Lamport) and forger-to-key-recovery (W-OTS)
//! transformers, and the reductions built from them.

use std::sync::Arc;

use crate::game::{
    AdversaryHandle, AdversaryProgram, AdversarySession, AdversaryStep, Embedding, RunContext,
};
use crate::ots::forgery::{drive_forger, encode_pk, make_forgery_game, Driven, ForgeryGameParams};
use crate::ots::lamport::{slot, LamportParams, LamportScheme};
use crate::ots::message_bit;
use crate::ots::wots::{WotsParams, WotsScheme};
use crate::primitives::games::{decode_challenge, encode_answer, standard_game, StandardGameKind};
use crate::reduction::{rat, BetaSpec, Poly, Reduction, Transformer};
use crate::tape::{DrawSource, Tape, TapeError};
use crate::Error;

fn own_bytes(rule: &mut Vec<DrawSource>, v: &[u8]) {
    rule.extend(v.iter().map(|&b| DrawSource::Own(u64::from(b))));
}

fn external_range(rule: &mut Vec<DrawSource>, start: usize, len: usize) {
    rule.extend((start..start + len).map(DrawSource::External));
}

fn stop(why: impl Into<String>) -> Result<AdversaryStep, TapeError> {
    Ok(AdversaryStep::Abort(why.into()))
}

/// Builds a transformer whose output adversaries run `make(inner, tape, ctx)`
/// on the first external message.
fn lazy_transformer<S>(
    name: &str,
    interface: String,
    own_bits: Option<u32>,
    state: S,
) -> Transformer
where
    S: Fn(&AdversaryHandle) -> Arc<dyn AdversaryProgram> + Send + Sync + 'static,
{
    let label = name.to_string();
    Transformer::new(
        name,
        true,
        true,
        Arc::new(move |a: &AdversaryHandle| {
            let bits = match (own_bits, a.randomness_bits) {
                (Some(x), Some(y)) => Some(x + y),
                _ => None,
            };
            AdversaryHandle::new(
                format!("{label}({})", a.name),
                interface.clone(),
                bits,
                state(a),
            )
        }),
    )
}

// ---------------------------------------------------------------------------
// Lamport

#[derive(Clone)]
struct LamportInverter {
    scheme: Arc<LamportScheme>,
    inner: AdversaryHandle,
}

struct LamportInverterSession {
    prog: LamportInverter,
    tape: Tape,
    ctx: RunContext,
    done: bool,
}

impl AdversaryProgram for LamportInverter {
    fn spawn(&self, tape: Tape, ctx: &RunContext) -> Box<dyn AdversarySession> {
        Box::new(LamportInverterSession {
            prog: self.clone(),
            tape,
            ctx: ctx.clone(),
            done: false,
        })
    }
}

impl AdversarySession for LamportInverterSession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
        if std::mem::replace(&mut self.done, true) {
            return stop("inversion game has a single move");
        }
        let s = &self.prog.scheme;
        let l = s.params().l;
        let owf = s.owf();
        let y = match decode_challenge(incoming) {
            Ok(c) if c.parts.len() == 1 => c.parts[0].clone(),
            _ => return stop("malformed inversion challenge"),
        };
        let pos = self.tape.below(2 * l as u64)? as usize;
        let mut sk: Vec<Option<Vec<u8>>> = Vec::with_capacity(2 * l);
        let mut pk = Vec::with_capacity(2 * l);
        let mut rule = Vec::new();
        for sl in 0..2 * l {
            if sl == pos {
                external_range(&mut rule, owf.key_len(), owf.input_len());
                sk.push(None);
                pk.push(y.clone());
            } else {
                let x = self.tape.value_bits(owf.input_bits)?;
                own_bytes(&mut rule, &x);
                pk.push(s.f(&x));
                sk.push(Some(x));
            }
        }
        self.ctx.set_embedding(Embedding::Draws(rule));
        let mut bb = self
            .prog
            .inner
            .spawn_black_box(self.tape.fork("inner"), &self.ctx);
        let (i_star, b_star) = (pos / 2, pos % 2 == 1);
        let driven = drive_forger(&mut bb, encode_pk(&s.encode(&pk)), l, 1, |m| {
            if message_bit(m, l, i_star) == b_star {
                return Err("signing query needs the embedded slot".into());
            }
            let sig: Vec<Vec<u8>> = (0..l)
                .map(|i| {
                    sk[slot(i, message_bit(m, l, i))]
                        .clone()
                        .expect("not embedded")
                })
                .collect();
            Ok(s.encode(&sig))
        })?;
        let (msg, sig, queried) = match driven {
            Driven::Stopped(why) => return stop(why),
            Driven::Forgery { msg, sig, queried } => (msg, sig, queried),
        };
        let Ok(sig) = s.decode_sig(&sig) else {
            return stop("forgery does not decode");
        };
        if queried.contains(&msg) || !s.verify_elements(&pk, &msg, &sig) {
            return stop("forgery is invalid");
        }
        if message_bit(&msg, l, i_star) != b_star {
            return stop("forgery does not open the embedded slot");
        }
        Ok(AdversaryStep::Send(encode_answer(&sig[i_star])))
    }
}

/// `(inv[f], T, ot-forge[Lamport])`: plant the inversion challenge at a
/// uniformly chosen slot, run the forger once, read the preimage off the
/// forgery.
pub fn lamport_inverter_transformer(p: &LamportParams) -> Result<Transformer, Error> {
    let scheme = Arc::new(LamportScheme::new(p.clone())?);
    let external = standard_game(StandardGameKind::Inv, &p.owf)?;
    let slots = 2 * p.l as u64;
    let own_bits = slots
        .is_power_of_two()
        .then(|| slots.trailing_zeros() + ((slots - 1) * p.owf.input_bits as u64) as u32);
    Ok(lazy_transformer(
        "lamport-inv",
        external.interface,
        own_bits,
        move |a| {
            Arc::new(LamportInverter {
                scheme: Arc::clone(&scheme),
                inner: a.clone(),
            })
        },
    ))
}

/// The Lamport reduction with `β(x) = x/(2ℓ)`.
pub fn lamport_reduction(p: &LamportParams) -> Result<Reduction, Error> {
    let scheme = Arc::new(LamportScheme::new(p.clone())?);
    let internal = make_forgery_game(scheme, ForgeryGameParams::one_time())?;
    let external = standard_game(StandardGameKind::Inv, &p.owf)?;
    let beta =
        BetaSpec::linear_over_poly(rat(1, 1), Poly::new(vec![rat(0, 1), rat(2, 1)]), p.l as u64)?;
    Ok(Reduction::new(
        format!("lamport-inv[l={}]", p.l),
        external,
        lamport_inverter_transformer(p)?,
        internal,
        beta,
    ))
}

// ---------------------------------------------------------------------------
// W-OTS

#[derive(Clone)]
struct WotsKow {
    scheme: Arc<WotsScheme>,
    inner: AdversaryHandle,
}

struct WotsKowSession {
    prog: WotsKow,
    tape: Tape,
    ctx: RunContext,
    done: bool,
}

impl AdversaryProgram for WotsKow {
    fn spawn(&self, tape: Tape, ctx: &RunContext) -> Box<dyn AdversarySession> {
        Box::new(WotsKowSession {
            prog: self.clone(),
            tape,
            ctx: ctx.clone(),
            done: false,
        })
    }
}

impl AdversarySession for WotsKowSession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
        if std::mem::replace(&mut self.done, true) {
            return stop("key one-wayness game has a single move");
        }
        let s = &self.prog.scheme;
        let prf = s.prf();
        let w = s.params().w;
        let (x, y) = match decode_challenge(incoming) {
            Ok(c) if c.parts.len() == 2 => (c.parts[0].clone(), c.parts[1].clone()),
            _ => return stop("malformed key one-wayness challenge"),
        };
        let chains = s.chain_count();
        let target = self.tape.below(chains as u64)? as usize;
        // internal keygen draws x first, then every chain start
        let mut rule = Vec::new();
        external_range(&mut rule, prf.key_len(), prf.input_len());
        let mut starts: Vec<Option<Vec<u8>>> = Vec::with_capacity(chains);
        for c in 0..chains {
            if c == target {
                external_range(&mut rule, 0, prf.key_len());
                starts.push(None);
            } else {
                let k = self.tape.value_bits(prf.key_bits)?;
                own_bytes(&mut rule, &k);
                starts.push(Some(k));
            }
        }
        self.ctx.set_embedding(Embedding::Draws(rule));
        // chain value c_d for d >= 1 on the target chain is known from y
        let value_at = |c: usize, d: u32| -> Option<Vec<u8>> {
            match &starts[c] {
                Some(k) => Some(s.walk(&x, k, d)),
                None if d >= 1 => Some(s.walk(&x, &y, d - 1)),
                None => None,
            }
        };
        let mut pk = vec![x.clone()];
        pk.extend((0..chains).map(|c| value_at(c, w - 1).expect("end is known")));
        let mut bb = self
            .prog
            .inner
            .spawn_black_box(self.tape.fork("inner"), &self.ctx);
        let driven = drive_forger(&mut bb, encode_pk(&s.encode(&pk)), s.params().l, 1, |m| {
            s.digits(m)
                .iter()
                .enumerate()
                .map(|(c, &d)| value_at(c, d))
                .collect::<Option<Vec<_>>>()
                .map(|sig| s.encode(&sig))
                .ok_or_else(|| "signing query needs the embedded chain start".to_string())
        })?;
        let (msg, sig, queried) = match driven {
            Driven::Stopped(why) => return stop(why),
            Driven::Forgery { msg, sig, queried } => (msg, sig, queried),
        };
        let Ok(sig) = s.decode_sig(&sig) else {
            return stop("forgery does not decode");
        };
        if queried.contains(&msg) || !s.verify_elements(&pk, &msg, &sig) {
            return stop("forgery is invalid");
        }
        if s.digits(&msg)[target] != 0 {
            return stop("forgery does not open the embedded chain start");
        }
        let k = &sig[target];
        if prf.eval_unchecked(k, &x) != y {
            return stop("forged chain start does not map to the challenge");
        }
        Ok(AdversaryStep::Send(encode_answer(k)))
    }
}

/// `(kow[f], T, ot-forge[W-OTS])`: plant the challenge key as the start of a
/// uniformly chosen chain and read a key off a forgery that opens it.
pub fn wots_kow_transformer(p: &WotsParams) -> Result<Transformer, Error> {
    let scheme = Arc::new(WotsScheme::new(p.clone())?);
    let external = standard_game(StandardGameKind::Kow, &p.prf)?;
    Ok(lazy_transformer(
        "wots-kow",
        external.interface,
        None,
        move |a| {
            Arc::new(WotsKow {
                scheme: Arc::clone(&scheme),
                inner: a.clone(),
            })
        },
    ))
}

/// The W-OTS reduction, carrying the claimed `β = 1`.
pub fn wots_kow_reduction(p: &WotsParams) -> Result<Reduction, Error> {
    let scheme = Arc::new(WotsScheme::new(p.clone())?);
    let internal = make_forgery_game(scheme, ForgeryGameParams::one_time())?;
    let external = standard_game(StandardGameKind::Kow, &p.prf)?;
    Ok(Reduction::new(
        format!("wots-kow[w={},l={}]", p.w, p.l),
        external,
        wots_kow_transformer(p)?,
        internal,
        BetaSpec::identity(),
    ))
}
