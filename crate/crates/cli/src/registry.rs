//! Games, adversary fixtures and reductions addressable from the command line.

use std::sync::Arc;

use liftlab::fdh::adversaries::{fdh_brute_force, repeat_seeking_forger, sign_then_forge};
use liftlab::fdh::games::ro_forgery_game;
use liftlab::fdh::{
    choose_lambda, fdh_classical_reduction, fdh_end_to_end, fdh_interpreter_reduction,
    InterpreterConfig, LambdaChoice, RoGameParams,
};
use liftlab::fixtures::{
    coin_game, inv_brute_force, inv_random_guess, kow_brute_force, passive, prf_constant_guess,
};
use liftlab::hashtree::adversaries::birthday_forger;
use liftlab::hashtree::transformer::tree_forgery_game;
use liftlab::hashtree::{
    node_hash, tree_reduction, TreeParams, TreeScheme, TreeTarget, TreeVariant,
};
use liftlab::ots::adversaries::{
    lamport_brute_force, lamport_query_flip, lamport_random_guess, replay, wots_brute_force,
};
use liftlab::ots::transformers::{lamport_reduction, wots_kow_reduction};
use liftlab::ots::{
    make_forgery_game, ForgeryGameParams, LamportParams, LamportScheme, SignatureScheme,
    WotsParams, WotsScheme,
};
use liftlab::primitives::{standard_game, FamilyKind, FunctionFamilySpec, StandardGameKind};
use liftlab::reduction::{rat, rompel_demo, Rational, Reduction};
use liftlab::{AdversaryHandle, GameDef};

use crate::error::{CliError, CliResult};
use crate::params::Params;

/// `(id, parameters, fixtures)` for `liftlab game`.
pub const GAMES: &[(&str, &str, &str)] = &[
    ("inv", "bits=4", "brute-force, random-guess, passive"),
    ("kow", "bits=8", "brute-force, passive"),
    ("prf", "bits=8", "constant-guess, passive"),
    (
        "lamport-forge",
        "l=8, f=8",
        "replay, brute-force, query-flip, random-guess",
    ),
    ("wots-forge", "w=4, l=8, f=8", "replay, brute-force"),
    (
        "tree-forge",
        "k=3, l=8, f=8, hash_key=8, variant=merkle|xmss, budget=256",
        "replay, birthday",
    ),
    (
        "ro-forge",
        "modulus=12, l=8, h=8, s=1",
        "brute-force, sign-then-forge, repeat-seeking",
    ),
    ("coin", "bits=10, threshold=300", "passive"),
];

/// `(id, parameters, fixtures)` for `liftlab reduction`.
pub const REDUCTIONS: &[(&str, &str, &str)] = &[
    (
        "lamport-inv",
        "l=16, f=12",
        "query-flip, brute-force, random-guess",
    ),
    ("wots-kow", "w=4, l=16, f=8", "brute-force"),
    (
        "tree-col",
        "k=3, l=8, f=8, hash_key=8, variant=merkle|xmss, budget=256",
        "birthday",
    ),
    (
        "tree-ots",
        "k=3, l=8, f=8, hash_key=8, variant=merkle|xmss, budget=256",
        "birthday",
    ),
    (
        "fdh-classical",
        "modulus=12, l=8, h=8, s=1",
        "brute-force, repeat-seeking",
    ),
    (
        "fdh-interpreter",
        "modulus=12, l=8, h=8, s=1, lambda=auto|p/q",
        "brute-force",
    ),
    (
        "fdh-end-to-end",
        "modulus=12, l=8, h=8, s=1, lambda=auto|p/q",
        "brute-force",
    ),
    (
        "compose-rompel-demo",
        "l=16",
        "(none: the chain is abstract)",
    ),
];

fn unknown_fixture(kind: &str, id: &str, fixture: &str) -> CliError {
    let list = GAMES
        .iter()
        .chain(REDUCTIONS)
        .find(|(g, ..)| *g == id)
        .map_or("", |(.., f)| *f);
    CliError::Usage(format!(
        "unknown fixture `{fixture}` for {kind} `{id}`; available: {list}"
    ))
}

fn weak(kind: FamilyKind, bits: usize) -> CliResult<FunctionFamilySpec> {
    Ok(match kind {
        FamilyKind::Owf => FunctionFamilySpec::weak_owf(bits, bits)?,
        _ => FunctionFamilySpec::weak_prf(bits, bits)?,
    })
}

fn lamport_params(p: &Params, l: usize, f: usize) -> CliResult<LamportParams> {
    Ok(LamportParams {
        l: p.get("l", l)?,
        owf: weak(FamilyKind::Owf, p.get("f", f)?)?,
    })
}

fn wots_params(p: &Params, l: usize) -> CliResult<WotsParams> {
    Ok(WotsParams {
        w: p.get("w", 4)?,
        l: p.get("l", l)?,
        prf: weak(FamilyKind::Prf, p.get("f", 8)?)?,
    })
}

fn ro_params(p: &Params) -> CliResult<RoGameParams> {
    Ok(RoGameParams {
        modulus_bits: p.get("modulus", 12)?,
        message_bits: p.get("l", 8)?,
        max_hash: p.get("h", 8)?,
        max_sign: p.get("s", 1)?,
    })
}

struct Tree {
    scheme: Arc<TreeScheme>,
    lamport: Arc<LamportScheme>,
    budget: u32,
}

fn tree(p: &Params) -> CliResult<Tree> {
    let lamport = Arc::new(LamportScheme::new(lamport_params(p, 8, 8)?)?);
    let (kind, variant) = match p.text("variant", "merkle").as_str() {
        "merkle" => (FamilyKind::GenericHash, TreeVariant::Merkle),
        "xmss" => (FamilyKind::SprHash, TreeVariant::Masked),
        v => {
            return Err(CliError::Usage(format!(
                "variant must be merkle or xmss, got `{v}`"
            )))
        }
    };
    let scheme = TreeScheme::new(TreeParams {
        depth: p.get("k", 3)?,
        hash: node_hash(lamport.as_ref(), kind, p.get("hash_key", 8)?)?,
        ots: lamport.clone(),
        variant,
    })?;
    Ok(Tree {
        scheme: Arc::new(scheme),
        lamport,
        budget: p.get("budget", 256)?,
    })
}

/// Game `id` and the fixture named `fixture` playing it.
pub fn game(id: &str, fixture: &str, p: &Params) -> CliResult<(GameDef, AdversaryHandle)> {
    let bad = || unknown_fixture("game", id, fixture);
    let out = match id {
        "inv" | "kow" | "prf" => {
            let (kind, family, default) = match id {
                "inv" => (StandardGameKind::Inv, FamilyKind::Owf, 4),
                "kow" => (StandardGameKind::Kow, FamilyKind::Prf, 8),
                _ => (StandardGameKind::Prf, FamilyKind::Prf, 8),
            };
            let spec = weak(family, p.get("bits", default)?)?;
            let g = standard_game(kind, &spec)?;
            let a = match (id, fixture) {
                (_, "passive") => passive(&g),
                ("inv", "brute-force") => inv_brute_force(&g, &spec),
                ("inv", "random-guess") => inv_random_guess(&g, &spec),
                ("kow", "brute-force") => kow_brute_force(&g, &spec),
                ("prf", "constant-guess") => prf_constant_guess(&g, false),
                _ => return Err(bad()),
            };
            (g, a)
        }
        "lamport-forge" => {
            let s = Arc::new(LamportScheme::new(lamport_params(p, 8, 8)?)?);
            let g = make_forgery_game(s.clone(), ForgeryGameParams::one_time())?;
            let a = match fixture {
                "replay" => replay(&g, s.message_bits()),
                "brute-force" => lamport_brute_force(s, &g, None),
                "query-flip" => lamport_query_flip(s, &g, false),
                "random-guess" => lamport_random_guess(s, &g),
                _ => return Err(bad()),
            };
            (g, a)
        }
        "wots-forge" => {
            let s = Arc::new(WotsScheme::new(wots_params(p, 8)?)?);
            let g = make_forgery_game(s.clone(), ForgeryGameParams::one_time())?;
            let a = match fixture {
                "replay" => replay(&g, s.message_bits()),
                "brute-force" => wots_brute_force(s, &g),
                _ => return Err(bad()),
            };
            (g, a)
        }
        "tree-forge" => {
            let t = tree(p)?;
            let g = tree_forgery_game(&t.scheme)?;
            let a = match fixture {
                "replay" => replay(&g, t.scheme.message_bits()),
                "birthday" => birthday_forger(t.scheme, t.lamport, &g, t.budget),
                _ => return Err(bad()),
            };
            (g, a)
        }
        "ro-forge" => {
            let rp = ro_params(p)?;
            let g = ro_forgery_game(rp)?;
            let a = match fixture {
                "brute-force" => fdh_brute_force(rp, rp.max_hash, rp.max_sign)?,
                "sign-then-forge" => sign_then_forge(rp)?,
                "repeat-seeking" => repeat_seeking_forger(rp, rp.max_hash)?,
                _ => return Err(bad()),
            };
            (g, a)
        }
        "coin" => {
            let g = coin_game(p.get("bits", 10)?, p.get("threshold", 300)?)?;
            match fixture {
                "passive" => (g.clone(), passive(&g)),
                _ => return Err(bad()),
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown game `{other}`; run `liftlab list`"
            )))
        }
    };
    p.finish()?;
    Ok(out)
}

/// What `liftlab reduction` runs.
pub enum Target {
    /// A runnable reduction, its test adversaries, dominance pairs, and the
    /// λ choice for interpreter-based reductions.
    Runnable {
        reduction: Box<Reduction>,
        adversaries: Vec<AdversaryHandle>,
        pairs: Vec<(AdversaryHandle, AdversaryHandle)>,
        lambda: Option<LambdaChoice>,
    },
    /// A chain of abstract reductions: only `β` is meaningful.
    Abstract(Reduction),
}

fn lambda_param(p: &Params) -> CliResult<Option<Rational>> {
    let text = p.text("lambda", "auto");
    if text == "auto" {
        return Ok(None);
    }
    let (n, d) = text
        .split_once('/')
        .and_then(|(n, d)| Some((n.parse::<i64>().ok()?, d.parse::<i64>().ok()?)))
        .filter(|&(n, d)| d > 0 && 0 < n && n < d)
        .ok_or_else(|| {
            CliError::Usage(format!("lambda must be auto or p/q in (0,1), got `{text}`"))
        })?;
    Ok(Some(rat(n, d)))
}

fn interpreter_config(p: &Params) -> CliResult<(InterpreterConfig, LambdaChoice)> {
    let rp = ro_params(p)?;
    let mut cfg =
        InterpreterConfig::auto(rp.modulus_bits, rp.message_bits, rp.max_hash, rp.max_sign);
    let choice = match lambda_param(p)? {
        Some(l) => {
            cfg.lambda = l;
            cfg.choice()
        }
        None => choose_lambda(u64::from(rp.max_hash), u64::from(rp.max_sign)),
    };
    Ok((cfg, choice))
}

fn single(reduction: Reduction, a: AdversaryHandle, lambda: Option<LambdaChoice>) -> Target {
    Target::Runnable {
        reduction: Box::new(reduction),
        pairs: vec![(a.clone(), a.clone())],
        adversaries: vec![a],
        lambda,
    }
}

pub fn reduction(id: &str, fixture: Option<&str>, p: &Params) -> CliResult<Target> {
    let fixture_or = |d: &'static str| fixture.unwrap_or(d);
    let out = match id {
        "lamport-inv" => {
            let lp = lamport_params(p, 16, 12)?;
            let r = lamport_reduction(&lp)?;
            let s = Arc::new(LamportScheme::new(lp)?);
            let a = match fixture_or("query-flip") {
                "query-flip" => lamport_query_flip(s.clone(), &r.internal, false),
                "brute-force" => lamport_brute_force(s.clone(), &r.internal, None),
                "random-guess" => lamport_random_guess(s.clone(), &r.internal),
                f => return Err(unknown_fixture("reduction", id, f)),
            };
            // two programs computing the same forger function
            let pairs = vec![(
                lamport_query_flip(s.clone(), &r.internal, false),
                lamport_query_flip(s, &r.internal, true),
            )];
            Target::Runnable {
                reduction: Box::new(r),
                adversaries: vec![a],
                pairs,
                lambda: None,
            }
        }
        "wots-kow" => {
            let wp = wots_params(p, 16)?;
            let r = wots_kow_reduction(&wp)?;
            let a = match fixture_or("brute-force") {
                "brute-force" => wots_brute_force(Arc::new(WotsScheme::new(wp)?), &r.internal),
                f => return Err(unknown_fixture("reduction", id, f)),
            };
            single(r, a, None)
        }
        "tree-col" | "tree-ots" => {
            let t = tree(p)?;
            let target = if id == "tree-col" {
                TreeTarget::CollisionOrSpr
            } else {
                TreeTarget::OtsForgery
            };
            let r = tree_reduction(&t.scheme, target)?;
            let a = match fixture_or("birthday") {
                "birthday" => birthday_forger(t.scheme, t.lamport, &r.internal, t.budget),
                f => return Err(unknown_fixture("reduction", id, f)),
            };
            single(r, a, None)
        }
        "fdh-classical" => {
            let rp = ro_params(p)?;
            let r = fdh_classical_reduction(rp)?;
            let a = match fixture_or("brute-force") {
                "brute-force" => fdh_brute_force(rp, rp.max_hash, rp.max_sign)?,
                "repeat-seeking" => repeat_seeking_forger(rp, rp.max_hash)?,
                f => return Err(unknown_fixture("reduction", id, f)),
            };
            single(r, a, None)
        }
        "fdh-interpreter" | "fdh-end-to-end" => {
            let (cfg, choice) = interpreter_config(p)?;
            let r = if id == "fdh-interpreter" {
                fdh_interpreter_reduction(cfg.clone())?
            } else {
                fdh_end_to_end(cfg.clone())?
            };
            let rp = cfg.internal();
            let a = match fixture_or("brute-force") {
                "brute-force" => fdh_brute_force(rp, rp.max_hash, rp.max_sign)?,
                f => return Err(unknown_fixture("reduction", id, f)),
            };
            single(r, a, Some(choice))
        }
        "compose-rompel-demo" => {
            if let Some(f) = fixture {
                return Err(unknown_fixture("reduction", id, f));
            }
            Target::Abstract(rompel_demo(p.get("l", 16)?)?)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown reduction `{other}`; run `liftlab list`"
            )))
        }
    };
    p.finish()?;
    Ok(out)
}
