//! Merkle hash trees over a one-time signature scheme, the masked
//! (XMSS-style) variant, and the signer state file.
//!
//! Nodes are numbered in heap order: the root is 1 and node `w` has children
//! `2w` and `2w + 1`, so leaf `i` of a depth-`k` tree is node `2^k + i` and
//! node `w` sits on level `floor(log2 w)`. Every node owns a one-time
//! keypair. Internal node `w` on level `d` signs
//! `h_s((pk_{2w} ⊕ L_d) ∥ (pk_{2w+1} ⊕ R_d))`; in the plain variant there are
//! no masks and the children are hashed as they are. Leaves sign messages.
//!
//! Key generation draws the hash key, then (masked variant) `L_d, R_d` for
//! every level, then every node keypair in heap order, all from one tape.
//!
//! Layouts (elements of the shared one-time layout):
//! - public key: `hash key, L_0, R_0, ..., root pk`
//! - signature: `leaf index (u64 BE), σ_m, then pk_{w0}, pk_{w1}, σ_w` for each
//!   ancestor `w`, from the leaf's parent up to the root
//! - secret key: `next leaf (u64 BE), hash key, masks..., then pk_w, sk_w` per node

pub mod adversaries;
pub mod transformer;

use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::ots::{check_message, decode_layout, encode_layout, KeyPair, SignatureScheme};
use crate::primitives::family::{check_value, FULL_OUTPUT_BITS};
use crate::primitives::{FamilyKind, FunctionFamilySpec, Strength};
use crate::seed::Seed;
use crate::tape::Tape;
use crate::wire::{Reader, Writer};
use crate::Error;

pub use transformer::{tree_forger_transformer, tree_reduction, TreeTarget};

pub const MAX_DEPTH: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeVariant {
    Merkle,
    Masked,
}

#[derive(Clone)]
pub struct TreeParams {
    pub depth: u32,
    pub ots: Arc<dyn SignatureScheme>,
    pub hash: FunctionFamilySpec,
    pub variant: TreeVariant,
}

impl fmt::Debug for TreeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TreeParams")
            .field("depth", &self.depth)
            .field("ots", &self.ots.name())
            .field("hash", &self.hash.evaluator_id)
            .field("variant", &self.variant)
            .finish()
    }
}

/// Byte length of the scheme's encoded public keys.
pub fn ots_pk_len(ots: &dyn SignatureScheme) -> Result<usize, Error> {
    Ok(ots.keygen(&mut Tape::seeded(Seed::ZERO))?.pk.len())
}

/// The node hash for `ots`: two public keys in, one message out.
pub fn node_hash(
    ots: &dyn SignatureScheme,
    kind: FamilyKind,
    key_bits: usize,
) -> Result<FunctionFamilySpec, Error> {
    let out = ots.message_bits();
    let strength = if out == FULL_OUTPUT_BITS {
        Strength::Full
    } else {
        Strength::Weak
    };
    FunctionFamilySpec::new(kind, key_bits, 16 * ots_pk_len(ots)?, out, strength)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeKeys {
    pub hash_key: Vec<u8>,
    /// `(L_d, R_d)` per level; empty in the plain variant.
    pub masks: Vec<(Vec<u8>, Vec<u8>)>,
    /// Keypair of node `w` at index `w - 1`.
    pub nodes: Vec<KeyPair>,
}

impl TreeKeys {
    pub fn node(&self, w: usize) -> &KeyPair {
        &self.nodes[w - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreePublic {
    pub hash_key: Vec<u8>,
    pub masks: Vec<(Vec<u8>, Vec<u8>)>,
    pub root: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathNode {
    pub pk0: Vec<u8>,
    pub pk1: Vec<u8>,
    pub sig: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthPath {
    pub leaf_index: u64,
    /// One entry per level, leaf's parent first.
    pub levels: Vec<PathNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeSignature {
    pub leaf_sig: Vec<u8>,
    pub path: AuthPath,
}

/// Where a valid forgery departs from the honest tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForgeryCase {
    /// The forged children of `node` differ from the honest ones but give
    /// the same node message. `forged` and `honest` are the hash inputs.
    Collision {
        node: usize,
        forged: Vec<u8>,
        honest: Vec<u8>,
    },
    /// `sig` verifies under the honest key of `node` on `message`, which that
    /// node never signed.
    OtsForgery {
        node: usize,
        message: Vec<u8>,
        sig: Vec<u8>,
    },
}

impl ForgeryCase {
    pub fn node(&self) -> usize {
        match self {
            ForgeryCase::Collision { node, .. } | ForgeryCase::OtsForgery { node, .. } => *node,
        }
    }
}

pub fn level_of(w: usize) -> u32 {
    usize::BITS - 1 - w.leading_zeros()
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

#[derive(Debug, Clone)]
pub struct TreeScheme {
    p: TreeParams,
    pk_len: usize,
}

impl TreeScheme {
    pub fn new(p: TreeParams) -> Result<TreeScheme, Error> {
        if p.depth == 0 || p.depth > MAX_DEPTH {
            return Err(Error::Param(format!(
                "depth {} outside 1..={MAX_DEPTH}",
                p.depth
            )));
        }
        if p.ots.is_stateful() {
            return Err(Error::Param(
                "tree nodes need a stateless one-time scheme".into(),
            ));
        }
        match (p.variant, p.hash.kind) {
            (TreeVariant::Merkle, FamilyKind::GenericHash | FamilyKind::SprHash)
            | (TreeVariant::Masked, FamilyKind::SprHash) => {}
            _ => {
                return Err(Error::Param(format!(
                    "{:?} tree cannot use {}",
                    p.variant, p.hash.evaluator_id
                )))
            }
        }
        let pk_len = ots_pk_len(p.ots.as_ref())?;
        if p.hash.input_bits != 16 * pk_len {
            return Err(Error::Param(format!(
                "node hash must take two {pk_len}-byte public keys"
            )));
        }
        if p.hash.output_bits != p.ots.message_bits() {
            return Err(Error::Param(
                "node hash output must match the one-time message width".into(),
            ));
        }
        Ok(TreeScheme { p, pk_len })
    }

    pub fn params(&self) -> &TreeParams {
        &self.p
    }

    pub fn ots(&self) -> &dyn SignatureScheme {
        self.p.ots.as_ref()
    }

    pub fn pk_len(&self) -> usize {
        self.pk_len
    }

    pub fn depth(&self) -> u32 {
        self.p.depth
    }

    pub fn leaves(&self) -> u64 {
        1 << self.p.depth
    }

    pub fn node_count(&self) -> usize {
        (1 << (self.p.depth + 1)) - 1
    }

    pub fn leaf_node(&self, leaf: u64) -> usize {
        (self.leaves() + leaf) as usize
    }

    fn params_block(&self) -> Vec<u8> {
        Writer::new()
            .u32(self.p.depth)
            .u8(match self.p.variant {
                TreeVariant::Merkle => 0,
                TreeVariant::Masked => 1,
            })
            .bytes(self.p.ots.name().as_bytes())
            .bytes(self.p.hash.evaluator_id.as_bytes())
            .finish()
    }

    /// Hash input of a level-`level` node with children `pk0`, `pk1`.
    pub fn node_input(
        &self,
        masks: &[(Vec<u8>, Vec<u8>)],
        level: u32,
        pk0: &[u8],
        pk1: &[u8],
    ) -> Vec<u8> {
        match masks.get(level as usize) {
            Some((l, r)) => {
                let mut v = xor(pk0, l);
                v.extend(xor(pk1, r));
                v
            }
            None => [pk0, pk1].concat(),
        }
    }

    pub fn node_message(&self, hash_key: &[u8], input: &[u8]) -> Vec<u8> {
        self.p.hash.eval_unchecked(hash_key, input)
    }

    pub fn honest_message(&self, keys: &TreeKeys, w: usize) -> Vec<u8> {
        let input = self.node_input(
            &keys.masks,
            level_of(w),
            &keys.node(2 * w).pk,
            &keys.node(2 * w + 1).pk,
        );
        self.node_message(&keys.hash_key, &input)
    }

    pub fn keygen_keys(&self, tape: &mut Tape) -> Result<TreeKeys, Error> {
        let hash_key = tape.value_bits(self.p.hash.key_bits)?;
        let mut masks = Vec::new();
        if self.p.variant == TreeVariant::Masked {
            for _ in 0..self.p.depth {
                let l = tape.value_bits(8 * self.pk_len)?;
                let r = tape.value_bits(8 * self.pk_len)?;
                masks.push((l, r));
            }
        }
        let nodes = (0..self.node_count())
            .map(|_| self.p.ots.keygen(tape))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TreeKeys {
            hash_key,
            masks,
            nodes,
        })
    }

    pub fn public_of(&self, keys: &TreeKeys) -> TreePublic {
        TreePublic {
            hash_key: keys.hash_key.clone(),
            masks: keys.masks.clone(),
            root: keys.node(1).pk.clone(),
        }
    }

    pub fn encode_pk(&self, pk: &TreePublic) -> Vec<u8> {
        let mut el = vec![pk.hash_key.clone()];
        for (l, r) in &pk.masks {
            el.push(l.clone());
            el.push(r.clone());
        }
        el.push(pk.root.clone());
        encode_layout(&self.params_block(), &el)
    }

    pub fn decode_pk(&self, buf: &[u8]) -> Result<TreePublic, Error> {
        let mut el = decode_layout(buf, &self.params_block())?;
        let nmasks = match self.p.variant {
            TreeVariant::Merkle => 0,
            TreeVariant::Masked => 2 * self.p.depth as usize,
        };
        if el.len() != 2 + nmasks {
            return Err(Error::Decode("wrong tree public key size".into()));
        }
        let root = el.pop().expect("non-empty");
        let hash_key = el.remove(0);
        check_value(&hash_key, self.p.hash.key_bits)?;
        if root.len() != self.pk_len || el.iter().any(|m| m.len() != self.pk_len) {
            return Err(Error::Decode("wrong tree public key element size".into()));
        }
        let masks = el.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect();
        Ok(TreePublic {
            hash_key,
            masks,
            root,
        })
    }

    /// Nodes that sign when leaf `leaf` signs `msg`, with their messages,
    /// leaf first, then every ancestor up to the root.
    pub fn signing_nodes(&self, keys: &TreeKeys, leaf: u64, msg: &[u8]) -> Vec<(usize, Vec<u8>)> {
        let mut w = self.leaf_node(leaf);
        let mut out = vec![(w, msg.to_vec())];
        while w > 1 {
            w /= 2;
            out.push((w, self.honest_message(keys, w)));
        }
        out
    }

    /// Builds a signature from per-node signatures given in
    /// `signing_nodes` order.
    pub fn assemble(&self, keys: &TreeKeys, leaf: u64, mut sigs: Vec<Vec<u8>>) -> TreeSignature {
        let leaf_sig = sigs.remove(0);
        let mut w = self.leaf_node(leaf);
        let mut levels = Vec::with_capacity(sigs.len());
        for sig in sigs {
            w /= 2;
            levels.push(PathNode {
                pk0: keys.node(2 * w).pk.clone(),
                pk1: keys.node(2 * w + 1).pk.clone(),
                sig,
            });
        }
        TreeSignature {
            leaf_sig,
            path: AuthPath {
                leaf_index: leaf,
                levels,
            },
        }
    }

    /// Signs `msg` with leaf `leaf`. One-time signatures are deterministic,
    /// so an internal node signs the same message every time it is used.
    pub fn sign_leaf(
        &self,
        keys: &TreeKeys,
        leaf: u64,
        msg: &[u8],
    ) -> Result<TreeSignature, Error> {
        if leaf >= self.leaves() {
            return Err(Error::Exhausted(self.leaves()));
        }
        let sigs = self
            .signing_nodes(keys, leaf, msg)
            .into_iter()
            .map(|(w, m)| self.ots().sign(&mut keys.node(w).sk.clone(), &m))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.assemble(keys, leaf, sigs))
    }

    pub fn encode_sig(&self, sig: &TreeSignature) -> Vec<u8> {
        let mut el = vec![
            sig.path.leaf_index.to_be_bytes().to_vec(),
            sig.leaf_sig.clone(),
        ];
        for n in &sig.path.levels {
            el.extend([n.pk0.clone(), n.pk1.clone(), n.sig.clone()]);
        }
        encode_layout(&self.params_block(), &el)
    }

    pub fn decode_sig(&self, buf: &[u8]) -> Result<TreeSignature, Error> {
        let el = decode_layout(buf, &self.params_block())?;
        if el.len() != 2 + 3 * self.p.depth as usize {
            return Err(Error::Decode("wrong tree signature size".into()));
        }
        let idx: [u8; 8] = el[0]
            .as_slice()
            .try_into()
            .map_err(|_| Error::Decode("leaf index must be 8 bytes".into()))?;
        let levels = el[2..]
            .chunks(3)
            .map(|c| PathNode {
                pk0: c[0].clone(),
                pk1: c[1].clone(),
                sig: c[2].clone(),
            })
            .collect();
        Ok(TreeSignature {
            leaf_sig: el[1].clone(),
            path: AuthPath {
                leaf_index: u64::from_be_bytes(idx),
                levels,
            },
        })
    }

    pub fn verify_decoded(&self, pk: &TreePublic, msg: &[u8], sig: &TreeSignature) -> bool {
        let k = self.p.depth as usize;
        let path = &sig.path;
        if check_message(msg, self.ots().message_bits()).is_err()
            || path.leaf_index >= self.leaves()
            || path.levels.len() != k
        {
            return false;
        }
        let mut current = pk.root.as_slice();
        for d in 0..k {
            let n = &path.levels[k - 1 - d];
            if n.pk0.len() != self.pk_len || n.pk1.len() != self.pk_len {
                return false;
            }
            let input = self.node_input(&pk.masks, d as u32, &n.pk0, &n.pk1);
            let m = self.node_message(&pk.hash_key, &input);
            if !self.ots().verify(current, &m, &n.sig) {
                return false;
            }
            current = if (path.leaf_index >> (k - 1 - d)) & 1 == 1 {
                &n.pk1
            } else {
                &n.pk0
            };
        }
        self.ots().verify(current, msg, &sig.leaf_sig)
    }

    /// Walks a forgery from the root towards its leaf against the honest
    /// keys and reports the first node where it departs. Returns `None` when
    /// the forgery does not verify under the honest public key.
    pub fn split_forgery(
        &self,
        keys: &TreeKeys,
        msg: &[u8],
        sig: &TreeSignature,
    ) -> Option<ForgeryCase> {
        if !self.verify_decoded(&self.public_of(keys), msg, sig) {
            return None;
        }
        let k = self.p.depth as usize;
        let mut w = 1usize;
        for d in 0..k {
            let n = &sig.path.levels[k - 1 - d];
            let (h0, h1) = (&keys.node(2 * w).pk, &keys.node(2 * w + 1).pk);
            if (&n.pk0, &n.pk1) != (h0, h1) {
                let forged = self.node_input(&keys.masks, d as u32, &n.pk0, &n.pk1);
                let honest = self.node_input(&keys.masks, d as u32, h0, h1);
                let fm = self.node_message(&keys.hash_key, &forged);
                if fm == self.node_message(&keys.hash_key, &honest) {
                    return Some(ForgeryCase::Collision {
                        node: w,
                        forged,
                        honest,
                    });
                }
                return Some(ForgeryCase::OtsForgery {
                    node: w,
                    message: fm,
                    sig: n.sig.clone(),
                });
            }
            w = 2 * w + ((sig.path.leaf_index >> (k - 1 - d)) & 1) as usize;
        }
        Some(ForgeryCase::OtsForgery {
            node: w,
            message: msg.to_vec(),
            sig: sig.leaf_sig.clone(),
        })
    }

    /// Re-checks a case-split witness against the honest keys. `signed`
    /// lists the messages signed so far, leaf 0 first.
    pub fn witness_holds(&self, keys: &TreeKeys, case: &ForgeryCase, signed: &[Vec<u8>]) -> bool {
        match case {
            ForgeryCase::Collision { forged, honest, .. } => {
                forged != honest
                    && check_value(forged, self.p.hash.input_bits).is_ok()
                    && self.node_message(&keys.hash_key, forged)
                        == self.node_message(&keys.hash_key, honest)
            }
            ForgeryCase::OtsForgery { node, message, sig } => {
                let fresh = if *node < self.leaves() as usize {
                    *message != self.honest_message(keys, *node)
                } else {
                    signed.get(*node - self.leaves() as usize) != Some(message)
                };
                fresh && self.ots().verify(&keys.node(*node).pk, message, sig)
            }
        }
    }

    pub fn encode_sk(&self, keys: &TreeKeys, next_leaf: u64) -> Vec<u8> {
        let mut el = vec![next_leaf.to_be_bytes().to_vec(), keys.hash_key.clone()];
        for (l, r) in &keys.masks {
            el.push(l.clone());
            el.push(r.clone());
        }
        for kp in &keys.nodes {
            el.push(kp.pk.clone());
            el.push(kp.sk.clone());
        }
        encode_layout(&self.params_block(), &el)
    }

    pub fn decode_sk(&self, buf: &[u8]) -> Result<(TreeKeys, u64), Error> {
        let el = decode_layout(buf, &self.params_block())?;
        let nmasks = match self.p.variant {
            TreeVariant::Merkle => 0,
            TreeVariant::Masked => 2 * self.p.depth as usize,
        };
        if el.len() != 2 + nmasks + 2 * self.node_count() {
            return Err(Error::Decode("wrong tree secret key size".into()));
        }
        let next: [u8; 8] = el[0]
            .as_slice()
            .try_into()
            .map_err(|_| Error::Decode("next leaf must be 8 bytes".into()))?;
        let masks = el[2..2 + nmasks]
            .chunks(2)
            .map(|c| (c[0].clone(), c[1].clone()))
            .collect();
        let nodes = el[2 + nmasks..]
            .chunks(2)
            .map(|c| KeyPair {
                pk: c[0].clone(),
                sk: c[1].clone(),
            })
            .collect();
        Ok((
            TreeKeys {
                hash_key: el[1].clone(),
                masks,
                nodes,
            },
            u64::from_be_bytes(next),
        ))
    }
}

impl SignatureScheme for TreeScheme {
    fn name(&self) -> String {
        let kind = match self.p.variant {
            TreeVariant::Merkle => "merkle",
            TreeVariant::Masked => "xmss",
        };
        format!(
            "{kind}[k={},{},{}]",
            self.p.depth,
            self.p.ots.name(),
            self.p.hash.evaluator_id
        )
    }

    fn message_bits(&self) -> usize {
        self.p.ots.message_bits()
    }

    fn is_stateful(&self) -> bool {
        true
    }

    fn keygen(&self, tape: &mut Tape) -> Result<KeyPair, Error> {
        let keys = self.keygen_keys(tape)?;
        Ok(KeyPair {
            pk: self.encode_pk(&self.public_of(&keys)),
            sk: self.encode_sk(&keys, 0),
        })
    }

    fn sign(&self, sk: &mut Vec<u8>, msg: &[u8]) -> Result<Vec<u8>, Error> {
        check_message(msg, self.message_bits())?;
        let (keys, next) = self.decode_sk(sk)?;
        let sig = self.sign_leaf(&keys, next, msg)?;
        *sk = self.encode_sk(&keys, next + 1);
        Ok(self.encode_sig(&sig))
    }

    fn verify(&self, pk: &[u8], msg: &[u8], sig: &[u8]) -> bool {
        match (self.decode_pk(pk), self.decode_sig(sig)) {
            (Ok(pk), Ok(sig)) => self.verify_decoded(&pk, msg, &sig),
            _ => false,
        }
    }
}

pub const STATE_VERSION: u8 = 1;
pub const STATE_LEN: usize = 1 + 8 + 32 + 32;

/// Signer state file: `version (u8) ∥ next_leaf (u64 BE) ∥ tree seed (32 bytes)
/// ∥ SHA-256 of the preceding 41 bytes`. The tree keys are regenerated from
/// the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignerState {
    pub next_leaf: u64,
    pub tree_seed: Seed,
}

impl SignerState {
    pub fn fresh(tree_seed: Seed) -> SignerState {
        SignerState {
            next_leaf: 0,
            tree_seed,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let body = Writer::new()
            .u8(STATE_VERSION)
            .u64(self.next_leaf)
            .raw(self.tree_seed.as_bytes())
            .finish();
        let digest = Sha256::digest(&body);
        [body.as_slice(), digest.as_slice()].concat()
    }

    pub fn decode(buf: &[u8]) -> Result<SignerState, Error> {
        if buf.len() != STATE_LEN {
            return Err(Error::Integrity(format!(
                "state file has {} bytes, expected {STATE_LEN}",
                buf.len()
            )));
        }
        let (body, digest) = buf.split_at(STATE_LEN - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Integrity("state digest mismatch".into()));
        }
        let mut r = Reader::new(body);
        let v = r.u8()?;
        if v != STATE_VERSION {
            return Err(Error::Integrity(format!("unsupported state version {v}")));
        }
        let next_leaf = r.u64()?;
        let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        Ok(SignerState {
            next_leaf,
            tree_seed: Seed(seed),
        })
    }
}

/// A stateful signer whose keys are regenerated from its state's seed.
#[derive(Debug)]
pub struct TreeSigner<'a> {
    scheme: &'a TreeScheme,
    keys: TreeKeys,
    pub state: SignerState,
}

impl<'a> TreeSigner<'a> {
    pub fn new(scheme: &'a TreeScheme, state: SignerState) -> Result<TreeSigner<'a>, Error> {
        let keys = scheme.keygen_keys(&mut Tape::seeded(state.tree_seed))?;
        Ok(TreeSigner {
            scheme,
            keys,
            state,
        })
    }

    pub fn public_key(&self) -> Vec<u8> {
        self.scheme.encode_pk(&self.scheme.public_of(&self.keys))
    }

    pub fn keys(&self) -> &TreeKeys {
        &self.keys
    }

    /// Signs with the next unused leaf and advances the state. Refuses once
    /// every leaf has been used.
    pub fn sign(&mut self, msg: &[u8]) -> Result<Vec<u8>, Error> {
        check_message(msg, self.scheme.message_bits())?;
        let sig = self
            .scheme
            .sign_leaf(&self.keys, self.state.next_leaf, msg)?;
        self.state.next_leaf += 1;
        Ok(self.scheme.encode_sig(&sig))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ots::{LamportParams, LamportScheme};

    pub(crate) fn lamport(l: usize) -> Arc<dyn SignatureScheme> {
        Arc::new(
            LamportScheme::new(LamportParams {
                l,
                owf: FunctionFamilySpec::weak_owf(8, 8).unwrap(),
            })
            .unwrap(),
        )
    }

    fn tree(depth: u32, variant: TreeVariant) -> TreeScheme {
        let ots = lamport(8);
        let kind = match variant {
            TreeVariant::Merkle => FamilyKind::GenericHash,
            TreeVariant::Masked => FamilyKind::SprHash,
        };
        let hash = node_hash(ots.as_ref(), kind, 8).unwrap();
        TreeScheme::new(TreeParams {
            depth,
            ots,
            hash,
            variant,
        })
        .unwrap()
    }

    #[test]
    fn depth_one_signs_twice_then_refuses() {
        let t = tree(1, TreeVariant::Merkle);
        let mut kp = t.keygen(&mut Tape::seeded(Seed::from_u64(1))).unwrap();
        for m in [[3u8], [4u8]] {
            let s = t.sign(&mut kp.sk, &m).unwrap();
            assert!(t.verify(&kp.pk, &m, &s));
        }
        assert!(matches!(t.sign(&mut kp.sk, &[5]), Err(Error::Exhausted(2))));
    }

    #[test]
    fn masked_tree_signs_all_leaves() {
        let t = tree(2, TreeVariant::Masked);
        let mut kp = t.keygen(&mut Tape::seeded(Seed::from_u64(2))).unwrap();
        for m in 0..4u8 {
            let s = t.sign(&mut kp.sk, &[m]).unwrap();
            assert!(t.verify(&kp.pk, &[m], &s));
        }
    }

    #[test]
    fn wrong_leaf_index_is_rejected() {
        let t = tree(3, TreeVariant::Merkle);
        let keys = t.keygen_keys(&mut Tape::seeded(Seed::from_u64(3))).unwrap();
        let pk = t.public_of(&keys);
        let mut sig = t.sign_leaf(&keys, 5, &[0x42]).unwrap();
        assert!(t.verify_decoded(&pk, &[0x42], &sig));
        for wrong in [4, 7, 1] {
            sig.path.leaf_index = wrong;
            assert!(!t.verify_decoded(&pk, &[0x42], &sig));
        }
    }

    #[test]
    fn zero_masks_match_plain_node_messages() {
        let ots = lamport(8);
        let hash = node_hash(ots.as_ref(), FamilyKind::SprHash, 8).unwrap();
        let mk = |variant| {
            TreeScheme::new(TreeParams {
                depth: 2,
                ots: ots.clone(),
                hash: hash.clone(),
                variant,
            })
            .unwrap()
        };
        let (plain, masked) = (mk(TreeVariant::Merkle), mk(TreeVariant::Masked));
        let mut keys = masked
            .keygen_keys(&mut Tape::seeded(Seed::from_u64(4)))
            .unwrap();
        for (l, r) in &mut keys.masks {
            l.fill(0);
            r.fill(0);
        }
        for w in 1..4 {
            assert_eq!(
                masked.honest_message(&keys, w),
                plain.honest_message(&keys, w)
            );
        }
    }

    #[test]
    fn honest_signature_has_no_divergence_case() {
        // an honest signature on a fresh message departs only at its leaf
        let t = tree(3, TreeVariant::Merkle);
        let keys = t.keygen_keys(&mut Tape::seeded(Seed::from_u64(5))).unwrap();
        let sig = t.sign_leaf(&keys, 2, &[9]).unwrap();
        let case = t.split_forgery(&keys, &[9], &sig).unwrap();
        assert_eq!(case.node(), t.leaf_node(2));
        assert!(t.witness_holds(&keys, &case, &[]));
        assert!(!t.witness_holds(&keys, &case, &[vec![1], vec![2], vec![9]]));
    }

    #[test]
    fn state_round_trip_and_tamper() {
        let s = SignerState {
            next_leaf: 3,
            tree_seed: Seed::from_u64(77),
        };
        let enc = s.encode();
        assert_eq!(enc.len(), STATE_LEN);
        assert_eq!(SignerState::decode(&enc).unwrap(), s);
        let mut bad = enc.clone();
        bad[5] ^= 1;
        assert!(matches!(
            SignerState::decode(&bad),
            Err(Error::Integrity(_))
        ));
        assert!(SignerState::decode(&enc[..40]).is_err());
    }

    #[test]
    fn restored_signer_continues() {
        let t = tree(2, TreeVariant::Merkle);
        let mut a = TreeSigner::new(&t, SignerState::fresh(Seed::from_u64(6))).unwrap();
        let pk = a.public_key();
        a.sign(&[1]).unwrap();
        let saved = a.state.encode();
        let mut b = TreeSigner::new(&t, SignerState::decode(&saved).unwrap()).unwrap();
        assert_eq!(b.public_key(), pk);
        let s = b.sign(&[2]).unwrap();
        assert_eq!(t.decode_sig(&s).unwrap().path.leaf_index, 1);
        assert!(t.verify(&pk, &[2], &s));
        b.sign(&[3]).unwrap();
        b.sign(&[4]).unwrap();
        assert!(matches!(b.sign(&[5]), Err(Error::Exhausted(4))));
        assert_eq!(b.state.next_leaf, 4);
    }
}
