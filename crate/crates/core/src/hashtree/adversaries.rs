//! Tree forger fixtures.

use std::sync::Arc;

use crate::game::{
    AdversaryHandle, AdversaryProgram, AdversarySession, AdversaryStep, GameDef, RunContext,
};
use crate::hashtree::{PathNode, TreePublic, TreeScheme, TreeSignature};
use crate::ots::forgery::{decode_pk, decode_sig, encode_forgery, encode_query};
use crate::ots::lamport::{slot, LamportScheme};
use crate::ots::{flip_bit, message_bit, SignatureScheme};
use crate::primitives::InverseTable;
use crate::tape::{Tape, TapeError};
use crate::Error;

/// Queries one random message, then tries `budget` fresh one-time keys for
/// a right child of the root whose node message collides with the honest
/// one; on success it grafts its own subtree there. Otherwise it forges the
/// queried leaf's Lamport signature on a fresh message by exhaustive
/// inversion. The first branch yields a collision, the second a one-time
/// forgery.
pub fn birthday_forger(
    scheme: Arc<TreeScheme>,
    lamport: Arc<LamportScheme>,
    game: &GameDef,
    budget: u32,
) -> AdversaryHandle {
    AdversaryHandle::for_game(
        format!("birthday-forger/{budget}"),
        game,
        None,
        Arc::new(Birthday {
            scheme,
            lamport,
            budget,
        }),
    )
}

struct Birthday {
    scheme: Arc<TreeScheme>,
    lamport: Arc<LamportScheme>,
    budget: u32,
}

struct BirthdaySession {
    scheme: Arc<TreeScheme>,
    lamport: Arc<LamportScheme>,
    budget: u32,
    tape: Tape,
    pk: Option<TreePublic>,
    query: Vec<u8>,
}

impl AdversaryProgram for Birthday {
    fn spawn(&self, tape: Tape, _ctx: &RunContext) -> Box<dyn AdversarySession> {
        Box::new(BirthdaySession {
            scheme: Arc::clone(&self.scheme),
            lamport: Arc::clone(&self.lamport),
            budget: self.budget,
            tape,
            pk: None,
            query: Vec::new(),
        })
    }
}

fn abort(why: &str) -> Result<AdversaryStep, TapeError> {
    Ok(AdversaryStep::Abort(why.into()))
}

fn lift(e: Error) -> Result<AdversaryStep, TapeError> {
    match e {
        Error::Tape(t) => Err(t),
        other => Ok(AdversaryStep::Abort(other.to_string())),
    }
}

impl BirthdaySession {
    /// A subtree under `top` down to the leftmost leaf, signing `msg` there.
    fn graft(
        &mut self,
        top: crate::ots::KeyPair,
        pk: &TreePublic,
        msg: &[u8],
    ) -> Result<(Vec<PathNode>, Vec<u8>), Error> {
        let s = &self.scheme;
        let ots = s.ots();
        let mut cur = top;
        let mut levels = Vec::new();
        for d in 1..s.depth() {
            let c0 = ots.keygen(&mut self.tape)?;
            let c1 = ots.keygen(&mut self.tape)?;
            let input = s.node_input(&pk.masks, d, &c0.pk, &c1.pk);
            let m = s.node_message(&pk.hash_key, &input);
            levels.push(PathNode {
                sig: ots.sign(&mut cur.sk.clone(), &m)?,
                pk0: c0.pk.clone(),
                pk1: c1.pk,
            });
            cur = c0;
        }
        let leaf_sig = ots.sign(&mut cur.sk, msg)?;
        levels.reverse();
        Ok((levels, leaf_sig))
    }

    fn forge(&mut self, honest: TreeSignature) -> Result<AdversaryStep, Error> {
        let s = Arc::clone(&self.scheme);
        let pk = self.pk.clone().expect("public key seen");
        let l = s.message_bits();
        let k = s.depth() as usize;
        let mut msg = self.tape.value_bits(l)?;
        if msg == self.query {
            msg = flip_bit(&msg, l, 0);
        }
        let root = &honest.path.levels[k - 1];
        let input = s.node_input(&pk.masks, 0, &root.pk0, &root.pk1);
        let target = s.node_message(&pk.hash_key, &input);
        for _ in 0..self.budget {
            let kp = s.ots().keygen(&mut self.tape)?;
            if kp.pk == root.pk1 {
                continue;
            }
            let input = s.node_input(&pk.masks, 0, &root.pk0, &kp.pk);
            if s.node_message(&pk.hash_key, &input) != target {
                continue;
            }
            let pk1 = kp.pk.clone();
            let (mut levels, leaf_sig) = self.graft(kp, &pk, &msg)?;
            levels.push(PathNode {
                pk0: root.pk0.clone(),
                pk1,
                sig: root.sig.clone(),
            });
            let forged = TreeSignature {
                leaf_sig,
                path: crate::hashtree::AuthPath {
                    leaf_index: 1 << (k - 1),
                    levels,
                },
            };
            return Ok(AdversaryStep::Send(encode_forgery(
                &msg,
                &s.encode_sig(&forged),
            )));
        }
        // the queried leaf is a left child; its key is pk0 of the lowest triple
        let leaf_pk = self.lamport.decode_pk(&honest.path.levels[0].pk0)?;
        let table = InverseTable::shared(self.lamport.owf())?;
        let mut elems = Vec::with_capacity(l);
        for i in 0..l {
            match table.invert(&leaf_pk[slot(i, message_bit(&msg, l, i))]) {
                Some(x) => elems.push(x.to_vec()),
                None => return Ok(AdversaryStep::Abort("leaf key has no preimage".into())),
            }
        }
        let forged = TreeSignature {
            leaf_sig: self.lamport.encode(&elems),
            path: honest.path,
        };
        Ok(AdversaryStep::Send(encode_forgery(
            &msg,
            &s.encode_sig(&forged),
        )))
    }
}

impl AdversarySession for BirthdaySession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
        let s = Arc::clone(&self.scheme);
        if self.pk.is_none() {
            let Ok(pk) = decode_pk(incoming).and_then(|pk| s.decode_pk(&pk)) else {
                return abort("expected a public key");
            };
            self.pk = Some(pk);
            self.query = self.tape.value_bits(s.message_bits())?;
            return Ok(AdversaryStep::Send(encode_query(&self.query)));
        }
        let Ok(sig) = decode_sig(incoming).and_then(|sig| s.decode_sig(&sig)) else {
            return abort("expected a signature");
        };
        if sig.path.leaf_index != 0 {
            return abort("expected the first leaf");
        }
        self.forge(sig).or_else(lift)
    }
}
