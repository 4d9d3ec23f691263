//! Forger fixtures for the one-time signature games.

use std::sync::Arc;

use crate::game::adversaries::from_fn;
use crate::game::{
    AdversaryHandle, AdversaryProgram, AdversarySession, AdversaryStep, GameDef, RunContext,
};
use crate::ots::forgery::{decode_pk, decode_sig, encode_forgery, encode_query};
use crate::ots::lamport::{slot, LamportScheme};
use crate::ots::wots::WotsScheme;
use crate::ots::{flip_bit, message_bit};
use crate::primitives::family::{brute_force_invert, value_to_bytes, InverseTable};
use crate::tape::{Tape, TapeError};

fn random_message(tape: &mut Tape, bits: usize) -> Result<Vec<u8>, TapeError> {
    tape.value_bits(bits)
}

/// Queries the all-zero message, then submits it again with the signature it
/// received. Never wins.
pub fn replay(game: &GameDef, message_bits: usize) -> AdversaryHandle {
    let zero = vec![0u8; message_bits.div_ceil(8)];
    from_fn("replay", game, Some(0), move |_, i, m| {
        Ok(AdversaryStep::Send(match i {
            0 => encode_query(&zero),
            _ => match decode_sig(m) {
                Ok(sig) => encode_forgery(&zero, &sig),
                Err(e) => return Ok(AdversaryStep::Abort(e.to_string())),
            },
        }))
    })
}

/// Makes no query; forges on `fixed` (or a uniformly random message when
/// `None`) by inverting the needed public elements exhaustively.
pub fn lamport_brute_force(
    scheme: Arc<LamportScheme>,
    game: &GameDef,
    fixed: Option<Vec<u8>>,
) -> AdversaryHandle {
    let l = scheme.params().l;
    let bits = if fixed.is_some() { 0 } else { l as u32 };
    from_fn(
        "lamport-brute-force",
        game,
        Some(bits),
        move |tape, _, m| {
            let Ok(pk) = decode_pk(m).and_then(|pk| scheme.decode_pk(&pk)) else {
                return Ok(AdversaryStep::Abort("unexpected message".into()));
            };
            let msg = match &fixed {
                Some(v) => v.clone(),
                None => random_message(tape, l)?,
            };
            let table = InverseTable::shared(scheme.owf()).expect("weak OWF");
            let mut sig = Vec::with_capacity(l);
            for i in 0..l {
                match table.invert(&pk[slot(i, message_bit(&msg, l, i))]) {
                    Some(x) => sig.push(x.to_vec()),
                    None => return Ok(AdversaryStep::Abort("no preimage".into())),
                }
            }
            Ok(AdversaryStep::Send(encode_forgery(
                &msg,
                &scheme.encode(&sig),
            )))
        },
    )
}

type MemoFn =
    dyn Fn(&mut Tape, usize, &[u8], &mut Vec<u8>) -> Result<AdversaryStep, TapeError> + Send + Sync;

/// Like `from_fn`, but each session carries a byte buffer between moves.
struct WithMemory(Arc<MemoFn>);

struct WithMemorySession {
    f: Arc<MemoFn>,
    tape: Tape,
    moves: usize,
    memo: Vec<u8>,
}

impl AdversaryProgram for WithMemory {
    fn spawn(&self, tape: Tape, _ctx: &RunContext) -> Box<dyn AdversarySession> {
        Box::new(WithMemorySession {
            f: Arc::clone(&self.0),
            tape,
            moves: 0,
            memo: Vec::new(),
        })
    }
}

impl AdversarySession for WithMemorySession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
        let out = (self.f)(&mut self.tape, self.moves, incoming, &mut self.memo);
        self.moves += 1;
        out
    }
}

fn with_memory<F>(name: &str, game: &GameDef, bits: Option<u32>, f: F) -> AdversaryHandle
where
    F: Fn(&mut Tape, usize, &[u8], &mut Vec<u8>) -> Result<AdversaryStep, TapeError>
        + Send
        + Sync
        + 'static,
{
    AdversaryHandle::for_game(name, game, bits, Arc::new(WithMemory(Arc::new(f))))
}

fn abort(why: &str) -> Result<AdversaryStep, TapeError> {
    Ok(AdversaryStep::Abort(why.into()))
}

/// Queries a uniformly random message, flips one uniformly chosen bit `j`,
/// and completes the forgery by inverting `pk[j, 1 - m_j]`. With
/// `linear_search` the preimage comes from a fresh exhaustive scan instead of
/// the shared table. Both return the least preimage, so the two variants
/// compute the same function.
pub fn lamport_query_flip(
    scheme: Arc<LamportScheme>,
    game: &GameDef,
    linear_search: bool,
) -> AdversaryHandle {
    let l = scheme.params().l;
    let declared = (l as u64)
        .is_power_of_two()
        .then(|| l as u32 + (l as u64).trailing_zeros());
    let name = if linear_search {
        "lamport-query-flip/scan"
    } else {
        "lamport-query-flip"
    };
    with_memory(name, game, declared, move |tape, i, m, memo| {
        let s = &scheme;
        match i {
            0 => {
                let Ok(pk) = decode_pk(m) else {
                    return abort("expected a public key");
                };
                *memo = pk;
                let msg = random_message(tape, l)?;
                let out = encode_query(&msg);
                memo.extend_from_slice(&msg);
                Ok(AdversaryStep::Send(out))
            }
            1 => {
                let msg_len = l.div_ceil(8);
                let (pk, msg) = memo.split_at(memo.len() - msg_len);
                let (Ok(pk), Ok(mut sig)) = (
                    s.decode_pk(pk),
                    decode_sig(m).and_then(|sig| s.decode_sig(&sig)),
                ) else {
                    return abort("expected a signature");
                };
                let j = tape.below(l as u64)? as usize;
                let forged = flip_bit(msg, l, j);
                let target = &pk[slot(j, message_bit(&forged, l, j))];
                let pre = if linear_search {
                    brute_force_invert(s.owf(), &[], target).expect("weak OWF")
                } else {
                    InverseTable::shared(s.owf())
                        .expect("weak OWF")
                        .invert(target)
                        .map(<[u8]>::to_vec)
                };
                let Some(pre) = pre else {
                    return abort("no preimage");
                };
                sig[j] = pre;
                Ok(AdversaryStep::Send(encode_forgery(
                    &forged,
                    &s.encode(&sig),
                )))
            }
            _ => abort("game is over"),
        }
    })
}

/// Queries a uniformly random message, flips its first bit, and guesses the
/// missing secret element uniformly at random.
pub fn lamport_random_guess(scheme: Arc<LamportScheme>, game: &GameDef) -> AdversaryHandle {
    let l = scheme.params().l;
    let in_bits = scheme.owf().input_bits;
    let bits = u32::try_from(l + in_bits).ok();
    with_memory(
        "lamport-random-guess",
        game,
        bits,
        move |tape, i, m, memo| {
            if i == 0 {
                *memo = random_message(tape, l)?;
                return Ok(AdversaryStep::Send(encode_query(memo)));
            }
            let Ok(mut sig) = decode_sig(m).and_then(|sig| scheme.decode_sig(&sig)) else {
                return abort("expected a signature");
            };
            sig[0] = tape.value_bits(in_bits)?;
            Ok(AdversaryStep::Send(encode_forgery(
                &flip_bit(memo, l, 0),
                &scheme.encode(&sig),
            )))
        },
    )
}

/// Makes no query; forges on a uniformly random message by searching, chain
/// by chain, for the least key whose walk reaches the public end.
pub fn wots_brute_force(scheme: Arc<WotsScheme>, game: &GameDef) -> AdversaryHandle {
    let l = scheme.params().l;
    from_fn(
        "wots-brute-force",
        game,
        Some(l as u32),
        move |tape, _, m| {
            let Ok(pk) = decode_pk(m).and_then(|pk| scheme.decode_pk(&pk)) else {
                return Ok(AdversaryStep::Abort("expected a public key".into()));
            };
            let msg = random_message(tape, l)?;
            let w = scheme.params().w;
            let kb = scheme.prf().key_bits;
            let x = &pk[0];
            let mut sig = Vec::new();
            for (c, &d) in scheme.digits(&msg).iter().enumerate() {
                let steps = w - 1 - d;
                let found = (0..1u64 << kb)
                    .map(|v| value_to_bytes(v, kb))
                    .find(|k| scheme.walk(x, k, steps) == pk[c + 1]);
                match found {
                    Some(k) => sig.push(k),
                    None => return Ok(AdversaryStep::Abort("chain end has no preimage".into())),
                }
            }
            Ok(AdversaryStep::Send(encode_forgery(
                &msg,
                &scheme.encode(&sig),
            )))
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::estimate_value;
    use crate::ots::forgery::{make_forgery_game, ForgeryGameParams};
    use crate::ots::lamport::LamportParams;
    use crate::ots::transformers::{lamport_reduction, wots_kow_reduction};
    use crate::ots::wots::WotsParams;
    use crate::primitives::FunctionFamilySpec;
    use crate::reduction::apply_transformer;
    use crate::reduction::checks::{check_behavioral_dominance, check_straight_line};
    use crate::seed::Seed;

    fn lamport_params(l: usize) -> LamportParams {
        LamportParams {
            l,
            owf: FunctionFamilySpec::weak_owf(10, 10).unwrap(),
        }
    }

    fn seeds(n: u64) -> Vec<Seed> {
        (0..n).map(|i| Seed::from_u64(1000 + i)).collect()
    }

    #[test]
    fn brute_force_always_forges() {
        let p = lamport_params(8);
        let s = Arc::new(LamportScheme::new(p).unwrap());
        let g = make_forgery_game(s.clone(), ForgeryGameParams::one_time()).unwrap();
        let a = lamport_brute_force(s, &g, None);
        let e = estimate_value(&g, &a, 200, 0.95, Seed::from_u64(3)).unwrap();
        assert_eq!(e.successes, 200);
    }

    #[test]
    fn query_flip_variants_agree_and_win() {
        let p = lamport_params(8);
        let s = Arc::new(LamportScheme::new(p).unwrap());
        let g = make_forgery_game(s.clone(), ForgeryGameParams::one_time()).unwrap();
        for scan in [false, true] {
            let a = lamport_query_flip(s.clone(), &g, scan);
            let e = estimate_value(&g, &a, 50, 0.95, Seed::from_u64(4)).unwrap();
            assert_eq!(e.successes, 50);
        }
    }

    #[test]
    fn replay_never_wins() {
        let s = Arc::new(LamportScheme::new(lamport_params(4)).unwrap());
        let g = make_forgery_game(s, ForgeryGameParams::one_time()).unwrap();
        let e = estimate_value(&g, &replay(&g, 4), 50, 0.95, Seed::from_u64(5)).unwrap();
        assert_eq!(e.successes, 0);
        assert_eq!(e.violations, 0);
    }

    #[test]
    fn lamport_transformer_is_straight_line_and_dominating() {
        let p = lamport_params(4);
        let r = lamport_reduction(&p).unwrap();
        let s = Arc::new(LamportScheme::new(p).unwrap());
        let a1 = lamport_query_flip(s.clone(), &r.internal, false);
        let a2 = lamport_query_flip(s.clone(), &r.internal, true);
        for a in [&a1, &a2, &lamport_brute_force(s, &r.internal, None)] {
            let rep = check_straight_line(&r, a, &seeds(20)).unwrap();
            assert!(rep.passed, "{:?}", rep.divergence);
        }
        assert!(
            check_behavioral_dominance(&r, &a1, &a2, &seeds(20))
                .unwrap()
                .passed
        );
    }

    #[test]
    fn lamport_inverter_outputs_preimages() {
        let p = lamport_params(4);
        let r = lamport_reduction(&p).unwrap();
        let s = Arc::new(LamportScheme::new(p.clone()).unwrap());
        let t = apply_transformer(&r, &lamport_query_flip(s, &r.internal, false)).unwrap();
        let e = estimate_value(&r.external, &t, 400, 0.99, Seed::from_u64(6)).unwrap();
        // 1/(2l) = 1/8
        assert!((e.point - 0.125).abs() <= e.half_width, "{e:?}");
        assert_eq!(e.violations, 0);
    }

    #[test]
    fn wots_transformer_extracts_valid_keys() {
        let p = WotsParams {
            w: 4,
            l: 4,
            prf: FunctionFamilySpec::weak_prf(8, 8).unwrap(),
        };
        let r = wots_kow_reduction(&p).unwrap();
        let s = Arc::new(WotsScheme::new(p).unwrap());
        let a = wots_brute_force(s, &r.internal);
        let t = apply_transformer(&r, &a).unwrap();
        let e = estimate_value(&r.external, &t, 200, 0.95, Seed::from_u64(7)).unwrap();
        assert!(e.successes > 0);
        assert_eq!(e.violations, 0);
        let rep = check_straight_line(&r, &a, &seeds(20)).unwrap();
        assert!(rep.passed, "{:?}", rep.divergence);
    }
}
