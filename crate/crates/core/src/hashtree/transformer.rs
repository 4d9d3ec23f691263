//! Tree forger to collision (plain trees), second preimage (masked trees)
//! or one-time forgery.
//!
//! The transformer builds an honest tree around the external challenge, runs
//! the tree forger once, and walks a successful forgery from the root down
//! (`TreeScheme::split_forgery`). A collision at a node, or a one-time
//! forgery at a node, is the witness; it is output only when it matches the
//! target. For one-time forgery the external public key sits at a uniformly
//! chosen node and that node's single signing query is relayed. For masked
//! trees the second-preimage challenge `x` is planted at a uniformly chosen
//! internal node by choosing that level's masks as `x ⊕ (pk_{w0} ∥ pk_{w1})`.

use std::sync::Arc;

use crate::game::{
    AdversaryHandle, AdversaryProgram, AdversarySession, AdversaryStep, BlackBox, Embedding,
    GameDef, RunContext,
};
use crate::hashtree::{level_of, ForgeryCase, TreeKeys, TreeScheme, TreeVariant};
use crate::ots::forgery::{
    decode_move, decode_pk, decode_sig, encode_forgery, encode_pk, encode_query, encode_sig,
    make_forgery_game, ForgeryGameParams, Move,
};
use crate::ots::{check_message, KeyPair};
use crate::primitives::games::{
    decode_challenge, encode_answer, encode_pair, standard_game, StandardGameKind,
};
use crate::reduction::{BetaSpec, Reduction, Transformer};
use crate::seed::Seed;
use crate::tape::{DrawSource, Tape, TapeError};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeTarget {
    /// Collision for plain trees, second preimage for masked trees.
    CollisionOrSpr,
    OtsForgery,
}

/// The external game for `target`.
pub fn external_game(scheme: &Arc<TreeScheme>, target: TreeTarget) -> Result<GameDef, Error> {
    let p = scheme.params();
    match (target, p.variant) {
        (TreeTarget::CollisionOrSpr, TreeVariant::Merkle) => {
            standard_game(StandardGameKind::Col, &p.hash)
        }
        (TreeTarget::CollisionOrSpr, TreeVariant::Masked) => {
            standard_game(StandardGameKind::Spr, &p.hash)
        }
        (TreeTarget::OtsForgery, _) => {
            make_forgery_game(Arc::clone(&p.ots), ForgeryGameParams::one_time())
        }
    }
}

/// The tree forgery game, allowing one signing query per leaf.
pub fn tree_forgery_game(scheme: &Arc<TreeScheme>) -> Result<GameDef, Error> {
    make_forgery_game(
        Arc::clone(scheme) as Arc<_>,
        ForgeryGameParams::many_time(scheme.leaves() as u32),
    )
}

pub fn tree_forger_transformer(
    scheme: &Arc<TreeScheme>,
    target: TreeTarget,
) -> Result<Transformer, Error> {
    let interface = external_game(scheme, target)?.interface;
    let mut t = Tape::seeded(Seed::ZERO).recording();
    scheme.ots().keygen(&mut t)?;
    let ots_draws = t.take_log().len();
    let scheme = Arc::clone(scheme);
    let label = match target {
        TreeTarget::CollisionOrSpr => "tree-col",
        TreeTarget::OtsForgery => "tree-ots",
    };
    Ok(Transformer::new(
        label,
        true,
        true,
        Arc::new(move |a: &AdversaryHandle| {
            AdversaryHandle::new(
                format!("{label}({})", a.name),
                interface.clone(),
                None,
                Arc::new(TreeRed {
                    scheme: Arc::clone(&scheme),
                    target,
                    ots_draws,
                    inner: a.clone(),
                }),
            )
        }),
    ))
}

/// One half of the case split. Neither half bounds the forger's value on
/// its own, so the claimed `β` is zero; the split itself is checked by
/// re-verifying witnesses.
pub fn tree_reduction(scheme: &Arc<TreeScheme>, target: TreeTarget) -> Result<Reduction, Error> {
    let beta = BetaSpec::scalar(crate::reduction::rat(0, 1))?;
    Ok(Reduction::new(
        format!(
            "{}/{target:?}",
            crate::ots::SignatureScheme::name(scheme.as_ref())
        ),
        external_game(scheme, target)?,
        tree_forger_transformer(scheme, target)?,
        tree_forgery_game(scheme)?,
        beta,
    ))
}

#[derive(Clone)]
struct TreeRed {
    scheme: Arc<TreeScheme>,
    target: TreeTarget,
    ots_draws: usize,
    inner: AdversaryHandle,
}

impl AdversaryProgram for TreeRed {
    fn spawn(&self, tape: Tape, ctx: &RunContext) -> Box<dyn AdversarySession> {
        Box::new(TreeRedSession {
            prog: self.clone(),
            tape,
            ctx: ctx.clone(),
            started: false,
            bb: None,
            keys: None,
            embedded: 0,
            relayed: None,
            pending: None,
            signed: Vec::new(),
        })
    }
}

struct TreeRedSession {
    prog: TreeRed,
    tape: Tape,
    ctx: RunContext,
    started: bool,
    bb: Option<BlackBox>,
    keys: Option<TreeKeys>,
    /// Node carrying the external key or the planted challenge.
    embedded: usize,
    /// `(message, signature)` obtained from the external signer.
    relayed: Option<(Vec<u8>, Vec<u8>)>,
    /// Tree signing query waiting for the external signature.
    pending: Option<Vec<u8>>,
    signed: Vec<Vec<u8>>,
}

enum Next {
    Inner(Vec<u8>),
    Outer(AdversaryStep),
}

fn stop(why: impl Into<String>) -> Result<AdversaryStep, TapeError> {
    Ok(AdversaryStep::Abort(why.into()))
}

fn tape_only<T>(r: Result<T, Error>) -> Result<Result<T, String>, TapeError> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(Error::Tape(e)) => Err(e),
        Err(e) => Ok(Err(e.to_string())),
    }
}

impl TreeRedSession {
    /// Draws `n` bits' worth of bytes from a recording fork and appends the
    /// draws to `rule` as own values.
    fn own_value(&mut self, bits: usize, rule: &mut Vec<DrawSource>) -> Result<Vec<u8>, TapeError> {
        let mut t = self.tape.fork("keys").recording();
        let v = t.value_bits(bits)?;
        rule.extend(t.take_log().into_iter().map(DrawSource::Own));
        Ok(v)
    }

    fn own_keypair(
        &mut self,
        rule: &mut Vec<DrawSource>,
    ) -> Result<Result<KeyPair, String>, TapeError> {
        let mut t = self.tape.fork("keys").recording();
        let kp = tape_only(self.prog.scheme.ots().keygen(&mut t))?;
        rule.extend(t.take_log().into_iter().map(DrawSource::Own));
        Ok(kp)
    }

    /// Builds the tree around the external opening and returns the public key
    /// to show the forger.
    fn open(&mut self, incoming: &[u8]) -> Result<Result<Vec<u8>, String>, TapeError> {
        let s = Arc::clone(&self.prog.scheme);
        let hash = &s.params().hash;
        let masked = s.params().variant == TreeVariant::Masked;
        let n = s.node_count();
        let mut key_rule = Vec::new();
        let (hash_key, planted, ext_pk) = match self.prog.target {
            TreeTarget::CollisionOrSpr => {
                let Ok(c) = decode_challenge(incoming) else {
                    return Ok(Err("malformed challenge".into()));
                };
                key_rule.extend((0..hash.key_len()).map(DrawSource::External));
                let planted = if masked {
                    let Some(x) = c.parts.first() else {
                        return Ok(Err("challenge lacks x".into()));
                    };
                    let internal = s.leaves() - 1;
                    self.embedded = 1 + self.tape.below(internal)? as usize;
                    Some(x.clone())
                } else {
                    None
                };
                (c.key, planted, None)
            }
            TreeTarget::OtsForgery => {
                let Ok(pk) = decode_pk(incoming) else {
                    return Ok(Err("malformed one-time public key".into()));
                };
                self.embedded = 1 + self.tape.below(n as u64)? as usize;
                let k = self.own_value(hash.key_bits, &mut key_rule)?;
                (k, None, Some(pk))
            }
        };
        let mut node_rule = Vec::new();
        let mut nodes = Vec::with_capacity(n);
        for w in 1..=n {
            match &ext_pk {
                Some(pk) if w == self.embedded => {
                    node_rule.extend((0..self.prog.ots_draws).map(DrawSource::External));
                    nodes.push(KeyPair {
                        pk: pk.clone(),
                        sk: Vec::new(),
                    });
                }
                _ => match self.own_keypair(&mut node_rule)? {
                    Ok(kp) => nodes.push(kp),
                    Err(e) => return Ok(Err(e)),
                },
            }
        }
        let mut mask_rule = Vec::new();
        let mut masks = Vec::new();
        if masked {
            let len = s.pk_len();
            for d in 0..s.depth() {
                match &planted {
                    Some(x) if d == level_of(self.embedded) => {
                        let w = self.embedded;
                        let l: Vec<u8> = x[..len]
                            .iter()
                            .zip(&nodes[2 * w - 1].pk)
                            .map(|(a, b)| a ^ b)
                            .collect();
                        let r: Vec<u8> = x[len..]
                            .iter()
                            .zip(&nodes[2 * w].pk)
                            .map(|(a, b)| a ^ b)
                            .collect();
                        mask_rule
                            .extend(l.iter().chain(&r).map(|&b| DrawSource::Own(u64::from(b))));
                        masks.push((l, r));
                    }
                    _ => {
                        let l = self.own_value(8 * len, &mut mask_rule)?;
                        let r = self.own_value(8 * len, &mut mask_rule)?;
                        masks.push((l, r));
                    }
                }
            }
        }
        key_rule.extend(mask_rule);
        key_rule.extend(node_rule);
        self.ctx.set_embedding(Embedding::Draws(key_rule));
        let keys = TreeKeys {
            hash_key,
            masks,
            nodes,
        };
        let pk = s.encode_pk(&s.public_of(&keys));
        self.keys = Some(keys);
        Ok(Ok(pk))
    }

    /// Answers a tree signing query, or asks the external signer first.
    fn answer_query(&mut self, m: Vec<u8>) -> Result<Next, String> {
        let s = Arc::clone(&self.prog.scheme);
        let leaf = self.signed.len() as u64;
        if leaf >= s.leaves() {
            return Err("forger exceeded the tree's capacity".into());
        }
        check_message(&m, crate::ots::SignatureScheme::message_bits(s.as_ref()))
            .map_err(|_| "malformed signing query".to_string())?;
        let keys = self.keys.as_ref().expect("tree built");
        let mut sigs = Vec::new();
        for (w, msg) in s.signing_nodes(keys, leaf, &m) {
            if self.prog.target == TreeTarget::OtsForgery && w == self.embedded {
                match &self.relayed {
                    Some((rm, rs)) if *rm == msg => sigs.push(rs.clone()),
                    Some(_) => return Err("embedded node asked to sign twice".into()),
                    None => {
                        self.pending = Some(m);
                        return Ok(Next::Outer(AdversaryStep::Send(encode_query(&msg))));
                    }
                }
            } else {
                let sig = s
                    .ots()
                    .sign(&mut keys.node(w).sk.clone(), &msg)
                    .map_err(|e| e.to_string())?;
                sigs.push(sig);
            }
        }
        let sig = s.assemble(keys, leaf, sigs);
        self.signed.push(m);
        Ok(Next::Inner(encode_sig(&s.encode_sig(&sig))))
    }

    fn finish(&mut self, msg: Vec<u8>, sig: Vec<u8>) -> Result<AdversaryStep, TapeError> {
        let s = Arc::clone(&self.prog.scheme);
        let keys = self.keys.as_ref().expect("tree built");
        if self.signed.contains(&msg) {
            return stop("forgery repeats a signed message");
        }
        let Ok(sig) = s.decode_sig(&sig) else {
            return stop("forgery does not decode");
        };
        let Some(case) = s.split_forgery(keys, &msg, &sig) else {
            return stop("forgery is invalid");
        };
        match (self.prog.target, case) {
            (
                TreeTarget::CollisionOrSpr,
                ForgeryCase::Collision {
                    node,
                    forged,
                    honest,
                },
            ) => {
                if s.params().variant == TreeVariant::Merkle {
                    Ok(AdversaryStep::Send(encode_pair(&forged, &honest)))
                } else if node == self.embedded {
                    Ok(AdversaryStep::Send(encode_answer(&forged)))
                } else {
                    stop(format!(
                        "collision at node {node}, challenge planted at {}",
                        self.embedded
                    ))
                }
            }
            (TreeTarget::OtsForgery, ForgeryCase::OtsForgery { node, message, sig })
                if node == self.embedded =>
            {
                Ok(AdversaryStep::Send(encode_forgery(&message, &sig)))
            }
            (_, case) => stop(format!(
                "forgery departs at node {} in the other case",
                case.node()
            )),
        }
    }

    fn pump(&mut self, mut next: Vec<u8>) -> Result<AdversaryStep, TapeError> {
        loop {
            let reply = match self.bb.as_mut().expect("forger running").send(&next)? {
                AdversaryStep::Abort(r) => return stop(format!("forger aborted: {r}")),
                AdversaryStep::Send(r) => r,
            };
            match decode_move(&reply) {
                Err(e) => return stop(format!("malformed forger move: {e}")),
                Ok(Move::Forge { msg, sig }) => return self.finish(msg, sig),
                Ok(Move::Query(m)) => match self.answer_query(m) {
                    Err(why) => return stop(why),
                    Ok(Next::Outer(step)) => return Ok(step),
                    Ok(Next::Inner(msg)) => next = msg,
                },
            }
        }
    }
}

impl AdversarySession for TreeRedSession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
        if !std::mem::replace(&mut self.started, true) {
            let pk = match self.open(incoming)? {
                Ok(pk) => pk,
                Err(why) => return stop(why),
            };
            let tape = self.tape.fork("inner");
            self.bb = Some(self.prog.inner.spawn_black_box(tape, &self.ctx));
            return self.pump(encode_pk(&pk));
        }
        let Some(m) = self.pending.take() else {
            return stop("unexpected external message");
        };
        let Ok(sig) = decode_sig(incoming) else {
            return stop("external signer sent no signature");
        };
        let keys = self.keys.as_ref().expect("tree built");
        let leaf = self.signed.len() as u64;
        let (_, msg) = self
            .prog
            .scheme
            .signing_nodes(keys, leaf, &m)
            .into_iter()
            .find(|(w, _)| *w == self.embedded)
            .expect("embedded node is on the path");
        self.relayed = Some((msg, sig));
        match self.answer_query(m) {
            Err(why) => stop(why),
            Ok(Next::Outer(_)) => stop("external signer answered out of order"),
            Ok(Next::Inner(msg)) => self.pump(msg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::estimate_value;
    use crate::hashtree::adversaries::birthday_forger;
    use crate::hashtree::{node_hash, TreeParams};
    use crate::ots::adversaries::replay;
    use crate::ots::{LamportParams, LamportScheme};
    use crate::primitives::{FamilyKind, FunctionFamilySpec};
    use crate::reduction::apply_transformer;
    use crate::reduction::checks::check_straight_line;

    fn setup(depth: u32, variant: TreeVariant) -> (Arc<TreeScheme>, Arc<LamportScheme>) {
        let lamport = Arc::new(
            LamportScheme::new(LamportParams {
                l: 8,
                owf: FunctionFamilySpec::weak_owf(8, 8).unwrap(),
            })
            .unwrap(),
        );
        let kind = match variant {
            TreeVariant::Merkle => FamilyKind::GenericHash,
            TreeVariant::Masked => FamilyKind::SprHash,
        };
        let hash = node_hash(lamport.as_ref(), kind, 8).unwrap();
        let scheme = TreeScheme::new(TreeParams {
            depth,
            ots: lamport.clone(),
            hash,
            variant,
        })
        .unwrap();
        (Arc::new(scheme), lamport)
    }

    fn seeds(n: u64) -> Vec<Seed> {
        (0..n).map(|i| Seed::from_u64(500 + i)).collect()
    }

    #[test]
    fn all_transformers_are_straight_line() {
        for variant in [TreeVariant::Merkle, TreeVariant::Masked] {
            let (s, lamport) = setup(2, variant);
            for target in [TreeTarget::CollisionOrSpr, TreeTarget::OtsForgery] {
                let r = tree_reduction(&s, target).unwrap();
                for budget in [0, 512] {
                    let a = birthday_forger(s.clone(), lamport.clone(), &r.internal, budget);
                    let rep = check_straight_line(&r, &a, &seeds(10)).unwrap();
                    assert!(rep.passed, "{variant:?} {target:?}: {:?}", rep.divergence);
                }
            }
        }
    }

    #[test]
    fn outputs_win_the_external_game() {
        for variant in [TreeVariant::Merkle, TreeVariant::Masked] {
            let (s, lamport) = setup(2, variant);
            for target in [TreeTarget::CollisionOrSpr, TreeTarget::OtsForgery] {
                let r = tree_reduction(&s, target).unwrap();
                let budget = if target == TreeTarget::OtsForgery {
                    0
                } else {
                    4096
                };
                let a = birthday_forger(s.clone(), lamport.clone(), &r.internal, budget);
                let t = apply_transformer(&r, &a).unwrap();
                let e = estimate_value(&r.external, &t, 60, 0.95, Seed::from_u64(9)).unwrap();
                assert!(e.successes > 0, "{variant:?} {target:?}");
                assert_eq!(e.violations, 0);
                // every non-abort output wins
                assert_eq!(e.successes + e.aborts, e.trials, "{variant:?} {target:?}");
            }
        }
    }

    #[test]
    fn resubmitting_fails_both_sides() {
        let (s, _) = setup(2, TreeVariant::Merkle);
        let r = tree_reduction(&s, TreeTarget::CollisionOrSpr).unwrap();
        let a = replay(&r.internal, 8);
        assert_eq!(
            estimate_value(&r.internal, &a, 20, 0.95, Seed::ZERO)
                .unwrap()
                .successes,
            0
        );
        let t = apply_transformer(&r, &a).unwrap();
        assert_eq!(
            estimate_value(&r.external, &t, 20, 0.95, Seed::ZERO)
                .unwrap()
                .successes,
            0
        );
    }
}
