//! Signature schemes selectable by `--scheme`.

use std::sync::Arc;

use liftlab::fdh::{FdhParams, FdhScheme};
use liftlab::hashtree::{node_hash, TreeParams, TreeScheme, TreeVariant};
use liftlab::ots::{LamportParams, LamportScheme, SignatureScheme, WotsParams, WotsScheme};
use liftlab::primitives::{FamilyKind, FunctionFamilySpec};
use liftlab::Seed;

use crate::error::{CliError, CliResult};
use crate::params::{Canonical, Params};

pub const SCHEMES: &[(&str, &str)] = &[
    ("lamport", "l=16 message bits, f=full|N (weak N-bit OWF)"),
    ("wots", "w=4, l=16, f=full|N (weak N-bit PRF)"),
    (
        "merkle",
        "k=3 depth over Lamport; l=16, f=full|N, hash_key=64",
    ),
    (
        "xmss",
        "k=3 masked tree over W-OTS; w=4, l=16, f=full|N, hash_key=64",
    ),
    (
        "fdh",
        "modulus=16 bits, l=16 message bits, oracle=HEX32 (default: derived from --seed)",
    ),
];

fn family(f: &str, owf: bool) -> CliResult<FunctionFamilySpec> {
    if f == "full" {
        return Ok(if owf {
            FunctionFamilySpec::full_owf()
        } else {
            FunctionFamilySpec::full_prf()
        });
    }
    let bits: usize = f
        .parse()
        .map_err(|_| CliError::Usage(format!("f must be `full` or a bit width, got `{f}`")))?;
    Ok(if owf {
        FunctionFamilySpec::weak_owf(bits, bits)?
    } else {
        FunctionFamilySpec::weak_prf(bits, bits)?
    })
}

/// A scheme built from parameters, with the canonical parameter string that
/// rebuilds it exactly.
pub struct Built {
    pub scheme: Box<dyn SignatureScheme>,
    pub canonical: String,
}

/// Builds `id` from `p`. `seed` supplies defaults that must be fixed at key
/// generation (the FDH oracle seed); it is `None` when loading a key file.
pub fn build(id: &str, p: &Params, seed: Option<Seed>) -> CliResult<Built> {
    let mut c = Canonical::default();
    let scheme: Box<dyn SignatureScheme> = match id {
        "lamport" => Box::new(lamport(p, &mut c)?),
        "wots" => Box::new(wots(p, &mut c)?),
        "merkle" | "xmss" => {
            let depth: u32 = p.get("k", 3)?;
            let hash_key: usize = p.get("hash_key", 64)?;
            let (ots, kind, variant): (Arc<dyn SignatureScheme>, _, _) = if id == "merkle" {
                (
                    Arc::new(lamport(p, &mut c)?),
                    FamilyKind::GenericHash,
                    TreeVariant::Merkle,
                )
            } else {
                (
                    Arc::new(wots(p, &mut c)?),
                    FamilyKind::SprHash,
                    TreeVariant::Masked,
                )
            };
            c.set("k", depth).set("hash_key", hash_key);
            Box::new(TreeScheme::new(TreeParams {
                depth,
                hash: node_hash(ots.as_ref(), kind, hash_key)?,
                ots,
                variant,
            })?)
        }
        "fdh" => {
            let params = FdhParams {
                modulus_bits: p.get("modulus", 16)?,
                message_bits: p.get("l", 16)?,
            };
            let oracle = match (p.text("oracle", "").as_str(), seed) {
                ("", Some(s)) => s.derive("oracle", 0),
                ("", None) => return Err(CliError::Usage("fdh keys need an oracle seed".into())),
                (hex_seed, _) => parse_seed(hex_seed)?,
            };
            c.set("modulus", params.modulus_bits)
                .set("l", params.message_bits)
                .set("oracle", oracle.to_hex());
            Box::new(FdhScheme::new(params, oracle)?)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown scheme `{other}`; run `liftlab list`"
            )))
        }
    };
    p.finish()?;
    Ok(Built {
        scheme,
        canonical: c.to_string(),
    })
}

fn lamport(p: &Params, c: &mut Canonical) -> CliResult<LamportScheme> {
    let l: usize = p.get("l", 16)?;
    let f = p.text("f", "full");
    c.set("l", l).set("f", &f);
    Ok(LamportScheme::new(LamportParams {
        l,
        owf: family(&f, true)?,
    })?)
}

fn wots(p: &Params, c: &mut Canonical) -> CliResult<WotsScheme> {
    let (w, l): (u32, usize) = (p.get("w", 4)?, p.get("l", 16)?);
    let f = p.text("f", "full");
    c.set("w", w).set("l", l).set("f", &f);
    Ok(WotsScheme::new(WotsParams {
        w,
        l,
        prf: family(&f, false)?,
    })?)
}

/// A 32-byte seed written as 64 hex digits.
pub fn parse_seed(text: &str) -> CliResult<Seed> {
    let bytes =
        hex::decode(text.trim()).map_err(|e| CliError::Usage(format!("seed is not hex: {e}")))?;
    let arr: [u8; 32] = bytes
        .try_into()
        .map_err(|_| CliError::Usage("seed must be 32 bytes (64 hex digits)".into()))?;
    Ok(Seed(arr))
}
