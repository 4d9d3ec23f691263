//! Acceptance suite. Runs every criterion in order, prints one line per
//! criterion and exits non-zero if any fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use liftlab::fdh::adversaries::fdh_brute_force;
use liftlab::fdh::{
    choose_lambda, fdh_classical_reduction, fdh_end_to_end, sample_sc_oracle, sc_distance_budget,
    FdhParams, FdhScheme, InterpreterConfig, RoGameParams,
};
use liftlab::fixtures::{coin_game, name_branching_reduction, passive, rewinding_reduction};
use liftlab::game::{run_game, AdversaryHandle};
use liftlab::hashtree::adversaries::birthday_forger;
use liftlab::hashtree::transformer::tree_forgery_game;
use liftlab::hashtree::{
    node_hash, tree_reduction, TreeParams, TreeScheme, TreeTarget, TreeVariant,
};
use liftlab::ots::adversaries::{lamport_query_flip, wots_brute_force};
use liftlab::ots::forgery::{decode_move, decode_pk, Move};
use liftlab::ots::transformers::{lamport_reduction, wots_kow_reduction};
use liftlab::ots::{LamportParams, LamportScheme, SignatureScheme, WotsParams, WotsScheme};
use liftlab::primitives::tdp::TdpKeyPair;
use liftlab::primitives::{audit_transcript, FamilyKind, FunctionFamilySpec, StandardGameKind};
use liftlab::reduction::hybrid::set_distinguisher;
use liftlab::reduction::{
    apply_transformer, check_effectiveness, check_straight_line, compose, hybrid_chain_check, rat,
    rompel_chain, rompel_demo, HybridChain, Reduction, TableSampler,
};
use liftlab::report::Report;
use liftlab::{estimate_value, exact_value, Seed, Tape};
use num_bigint::BigUint;
use num_rational::Ratio;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn ensure(cond: bool, why: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why.into())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t <= limit, format!("took {t:.1?}, limit {limit:?}"))
}

fn seeds(base: u64, n: u64) -> Vec<Seed> {
    (0..n).map(|i| Seed::from_u64(base + i)).collect()
}

// 1 -------------------------------------------------------------------------

fn round_trips(s: &dyn SignatureScheme, rounds: u64, tag: u64) -> Result<u64, String> {
    let mut accepted = 0;
    let bits = s.message_bits();
    for i in 0..rounds {
        let mut tape = Tape::seeded(Seed::from_u64(tag).derive("round", i));
        let mut kp = s.keygen(&mut tape).map_err(err)?;
        let m = tape.value_bits(bits).map_err(err)?;
        let sig = s.sign(&mut kp.sk, &m).map_err(err)?;
        accepted += u64::from(s.verify(&kp.pk, &m, &sig));
    }
    Ok(accepted)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let lamport = Arc::new(
        LamportScheme::new(LamportParams {
            l: 16,
            owf: FunctionFamilySpec::full_owf(),
        })
        .map_err(err)?,
    );
    let wots = Arc::new(
        WotsScheme::new(WotsParams {
            w: 4,
            l: 16,
            prf: FunctionFamilySpec::full_prf(),
        })
        .map_err(err)?,
    );
    let merkle = TreeScheme::new(TreeParams {
        depth: 3,
        hash: node_hash(lamport.as_ref(), FamilyKind::GenericHash, 64).map_err(err)?,
        ots: lamport.clone(),
        variant: TreeVariant::Merkle,
    })
    .map_err(err)?;
    let xmss = TreeScheme::new(TreeParams {
        depth: 3,
        hash: node_hash(wots.as_ref(), FamilyKind::SprHash, 64).map_err(err)?,
        ots: wots.clone(),
        variant: TreeVariant::Masked,
    })
    .map_err(err)?;
    let fdh = FdhScheme::new(
        FdhParams {
            modulus_bits: 16,
            message_bits: 16,
        },
        Seed::from_u64(0xfd),
    )
    .map_err(err)?;
    let schemes: [(&str, &dyn SignatureScheme); 5] = [
        ("lamport", lamport.as_ref()),
        ("wots", wots.as_ref()),
        ("merkle", &merkle),
        ("xmss", &xmss),
        ("fdh", &fdh),
    ];
    let mut parts = Vec::new();
    for (tag, (name, s)) in schemes.iter().enumerate() {
        let ok = round_trips(*s, 1000, tag as u64)?;
        ensure(ok == 1000, format!("{name}: {ok}/1000 accepted"))?;
        parts.push(format!("{name} 1000/1000"));
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("{} in {:.1?}", parts.join(", "), start.elapsed()))
}

// 2 -------------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let p = LamportParams {
        l: 16,
        owf: FunctionFamilySpec::weak_owf(12, 12).map_err(err)?,
    };
    let r = lamport_reduction(&p).map_err(err)?;
    let scheme = Arc::new(LamportScheme::new(p).map_err(err)?);
    let a = lamport_query_flip(scheme, &r.internal, false);
    let rep = check_effectiveness(&r, &a, 20_000, 0.99, Seed::from_u64(2)).map_err(err)?;
    let (int, ext) = (&rep.internal_estimate, &rep.external_estimate);
    ensure(
        int.point >= 0.99,
        format!("internal p̂ = {:.4} < 0.99", int.point),
    )?;
    let bound = int.point / 32.0 - (int.half_width + ext.half_width);
    ensure(
        ext.point >= bound,
        format!("external {:.5} < p̂/32 − CI = {bound:.5}", ext.point),
    )?;
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "p̂ = {:.4}, external = {:.5} ≥ {bound:.5} (p̂/32 = {:.5})",
        int.point,
        ext.point,
        int.point / 32.0
    ))
}

// 3 -------------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let spec = FunctionFamilySpec::weak_prf(8, 8).map_err(err)?;
    let p = WotsParams {
        w: 4,
        l: 16,
        prf: spec.clone(),
    };
    let r = wots_kow_reduction(&p).map_err(err)?;
    let a = wots_brute_force(Arc::new(WotsScheme::new(p).map_err(err)?), &r.internal);
    let t = apply_transformer(&r, &a).map_err(err)?;
    let (mut answered, mut verified) = (0u32, 0u32);
    for s in seeds(30_000, 5000) {
        let rec = run_game(&r.external, &t, s).map_err(err)?;
        ensure(rec.outcome.violation.is_none(), "external schema violation")?;
        if rec.outcome.abort.is_some() {
            continue;
        }
        answered += 1;
        let ok = audit_transcript(StandardGameKind::Kow, &spec, &rec.transcript);
        ensure(
            ok == rec.outcome.verdict.is_succ(),
            "audit disagrees with verdict",
        )?;
        verified += u32::from(ok);
    }
    ensure(answered > 0, "no run produced an output")?;
    ensure(
        verified == answered,
        format!("{verified}/{answered} outputs verify"),
    )?;
    within(start, Duration::from_secs(120))?;
    Ok(format!(
        "{verified}/{answered} non-abort outputs satisfy f_k'(x) = y over 5000 runs"
    ))
}

// 4 -------------------------------------------------------------------------

fn straight(r: &Reduction, a: &AdversaryHandle, label: &str) -> Result<(), String> {
    let rep = check_straight_line(r, a, &seeds(4000, 100)).map_err(err)?;
    ensure(
        rep.passed && rep.seeds_checked == 100,
        format!("{label}: {:?}", rep.divergence),
    )
}

fn tiny_tree(variant: TreeVariant) -> Result<(Arc<TreeScheme>, Arc<LamportScheme>), String> {
    let lamport = Arc::new(
        LamportScheme::new(LamportParams {
            l: 8,
            owf: FunctionFamilySpec::weak_owf(8, 8).map_err(err)?,
        })
        .map_err(err)?,
    );
    let kind = match variant {
        TreeVariant::Merkle => FamilyKind::GenericHash,
        TreeVariant::Masked => FamilyKind::SprHash,
    };
    let scheme = TreeScheme::new(TreeParams {
        depth: 3,
        hash: node_hash(lamport.as_ref(), kind, 8).map_err(err)?,
        ots: lamport.clone(),
        variant,
    })
    .map_err(err)?;
    Ok((Arc::new(scheme), lamport))
}

fn criterion_4() -> Outcome {
    let lp = LamportParams {
        l: 16,
        owf: FunctionFamilySpec::weak_owf(12, 12).map_err(err)?,
    };
    let r = lamport_reduction(&lp).map_err(err)?;
    let a = lamport_query_flip(
        Arc::new(LamportScheme::new(lp).map_err(err)?),
        &r.internal,
        false,
    );
    straight(&r, &a, "lamport")?;

    let wp = WotsParams {
        w: 4,
        l: 16,
        prf: FunctionFamilySpec::weak_prf(8, 8).map_err(err)?,
    };
    let r = wots_kow_reduction(&wp).map_err(err)?;
    let a = wots_brute_force(Arc::new(WotsScheme::new(wp).map_err(err)?), &r.internal);
    straight(&r, &a, "wots")?;

    for variant in [TreeVariant::Merkle, TreeVariant::Masked] {
        let (s, lamport) = tiny_tree(variant)?;
        for target in [TreeTarget::CollisionOrSpr, TreeTarget::OtsForgery] {
            let r = tree_reduction(&s, target).map_err(err)?;
            let a = birthday_forger(s.clone(), lamport.clone(), &r.internal, 256);
            straight(&r, &a, &format!("tree {variant:?}/{target:?}"))?;
        }
    }

    let fp = RoGameParams {
        modulus_bits: 12,
        message_bits: 8,
        max_hash: 8,
        max_sign: 1,
    };
    let r = fdh_classical_reduction(fp).map_err(err)?;
    let a = fdh_brute_force(fp, 8, 1).map_err(err)?;
    straight(&r, &a, "fdh-classical")?;

    let g = coin_game(4, 8).map_err(err)?;
    let rep = check_straight_line(&rewinding_reduction(&g), &passive(&g), &seeds(4000, 100))
        .map_err(err)?;
    let d = rep
        .divergence
        .filter(|_| !rep.passed)
        .ok_or("rewinding fixture passed")?;
    Ok(format!(
        "lamport, wots, tree (4 variants), fdh-classical pass on 100 seeds; rewinding fixture diverges at round {} ({})",
        d.round, d.detail
    ))
}

// 5 -------------------------------------------------------------------------

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let (s, lamport) = tiny_tree(TreeVariant::Merkle)?;
    let g = tree_forgery_game(&s).map_err(err)?;
    let a = birthday_forger(s.clone(), lamport, &g, 256);
    let (mut wins, mut collisions, mut forgeries) = (0u32, 0u32, 0u32);
    for seed in seeds(50_000, 2000) {
        let rec = run_game(&g, &a, seed).map_err(err)?;
        if !rec.outcome.verdict.is_succ() {
            continue;
        }
        wins += 1;
        let keys = s
            .keygen_keys(&mut Tape::seeded(seed.derive("challenger", 0)))
            .map_err(err)?;
        let mut cm = rec.transcript.challenger_messages();
        let pk = decode_pk(cm.next().ok_or("no public key")?).map_err(err)?;
        ensure(
            s.decode_pk(&pk).map_err(err)?.root == s.public_of(&keys).root,
            "key replay mismatch",
        )?;
        let mut signed = Vec::new();
        let mut forged = None;
        for m in rec.transcript.adversary_messages() {
            match decode_move(m).map_err(err)? {
                Move::Query(q) => signed.push(q),
                Move::Forge { msg, sig } => forged = Some((msg, sig)),
            }
        }
        let (msg, sig) = forged.ok_or("winning run without a forgery")?;
        let sig = s.decode_sig(&sig).map_err(err)?;
        let case = s
            .split_forgery(&keys, &msg, &sig)
            .ok_or("winning forgery has no divergence case")?;
        ensure(
            s.witness_holds(&keys, &case, &signed),
            "witness does not verify",
        )?;
        match case {
            liftlab::hashtree::ForgeryCase::Collision { .. } => collisions += 1,
            liftlab::hashtree::ForgeryCase::OtsForgery { .. } => forgeries += 1,
        }
    }
    ensure(
        collisions > 0 && forgeries > 0,
        format!("collisions {collisions}, forgeries {forgeries}"),
    )?;
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "{wins} successful runs of 2000: {collisions} collision witnesses, {forgeries} fresh OTS forgeries, all verified"
    ))
}

// 6 -------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let kp = TdpKeyPair::from_primes(2u32.into(), 257u32.into(), Some(3u32.into())).map_err(err)?;
    let target = BigUint::from(3u32);
    let lambda = rat(1, 16);
    let expected = 1.0 / 16.0 + (15.0 / 16.0) / 256.0;
    let samples = 100_000u64;
    let mut hits = [0u64; 16];
    let master = Seed::from_u64(6);
    for i in 0..samples {
        let mut sc = sample_sc_oracle(
            lambda.clone(),
            target.clone(),
            kp.pk.clone(),
            master.derive("sc", i),
        )
        .map_err(err)?;
        for (p, h) in hits.iter_mut().enumerate() {
            *h += u64::from(sc.query(&[p as u8]) == target);
        }
    }
    let worst = hits
        .iter()
        .map(|&h| (h as f64 / samples as f64 - expected).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 0.01, format!("largest deviation {worst:.4}"))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "16 probes × 10^5 samples, expected {expected:.6}, largest deviation {worst:.5}"
    ))
}

// 7 -------------------------------------------------------------------------

fn criterion_7() -> Outcome {
    ensure(
        sc_distance_budget(2, &rat(1, 16)) == rat(1, 6),
        "budget(2, 1/16) ≠ 1/6",
    )?;
    for l in [rat(1, 2), rat(1, 16), rat(1, 1 << 30)] {
        ensure(
            sc_distance_budget(0, &l) == rat(0, 1),
            format!("budget(0, {l}) ≠ 0"),
        )?;
    }
    Ok("sc_distance_budget(2, 1/16) = 1/6; sc_distance_budget(0, λ) = 0".into())
}

// 8 -------------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let r = rompel_demo(16).map_err(err)?;
    ensure(
        r.claimed_beta.slope() == rat(1, 4128),
        format!("slope {}", r.claimed_beta.slope()),
    )?;
    let [r1, r2, r3] = rompel_chain(16).map_err(err)?;
    let left = compose(&compose(&r1, &r2).map_err(err)?, &r3).map_err(err)?;
    for i in 0..=16 {
        let x = rat(i, 16);
        ensure(
            left.claimed_beta.evaluate_exact(&x) == r.claimed_beta.evaluate_exact(&x),
            "grouping changes β",
        )?;
    }

    // behaviour under seed replay on a concrete chain
    let g = coin_game(5, 11).map_err(err)?;
    let a = Reduction::identity(&g);
    let b = rewinding_reduction(&g);
    let c = name_branching_reduction(&g, "never-matches");
    let lhs = compose(&compose(&a, &b).map_err(err)?, &c).map_err(err)?;
    let rhs = compose(&a, &compose(&b, &c).map_err(err)?).map_err(err)?;
    let adv = passive(&g);
    let tl = apply_transformer(&lhs, &adv).map_err(err)?;
    let tr = apply_transformer(&rhs, &adv).map_err(err)?;
    for s in seeds(800, 200) {
        let x = run_game(&g, &tl, s).map_err(err)?;
        let y = run_game(&g, &tr, s).map_err(err)?;
        ensure(
            x.transcript == y.transcript && x.outcome == y.outcome,
            "groupings disagree under replay",
        )?;
    }
    Ok(format!(
        "rompel demo β = {} at ℓ' = 16; both groupings agree on β and on 200 replayed runs",
        r.claimed_beta
    ))
}

// 9 -------------------------------------------------------------------------

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let cfg = InterpreterConfig::auto(12, 8, 8, 1);
    let r = fdh_end_to_end(cfg.clone()).map_err(err)?;
    let a = fdh_brute_force(cfg.internal(), 8, 1).map_err(err)?;
    let rep = check_effectiveness(&r, &a, 20_000, 0.99, Seed::from_u64(9)).map_err(err)?;
    let (int, ext) = (&rep.internal_estimate, &rep.external_estimate);
    let floor = rep.claimed_lower_bound - (int.half_width + ext.half_width);
    ensure(ext.violations == 0, "external violations")?;
    ensure(
        ext.point >= floor,
        format!("external {:.5} < {floor:.5}", ext.point),
    )?;
    let mut report = Report::new("acceptance 9");
    report.section("lambda").lambda(&choose_lambda(8, 1));
    report.section("effectiveness").effectiveness(&rep);
    for key in [
        "lambda",
        "sc_distance_budget",
        "no_abort_lower_bound",
        "external.aborts",
    ] {
        ensure(report.get(key).is_some(), format!("report lacks {key}"))?;
    }
    within(start, Duration::from_secs(600))?;
    Ok(format!(
        "v̂ = {:.4}, composed inversion value {:.5} (claimed β·β′ = {:.5}, floor {floor:.5}); λ = {}, budget = {}, no-abort bound = {}, measured abort rate {:.4}, measured ratio ω/v̂² = {:.5}",
        int.point,
        ext.point,
        rep.claimed_lower_bound,
        report.get("lambda").unwrap_or("?"),
        report.get("sc_distance_budget").unwrap_or("?"),
        report.get("no_abort_lower_bound").unwrap_or("?"),
        ext.aborts as f64 / ext.trials as f64,
        ext.point / (int.point * int.point),
    ))
}

// 10 ------------------------------------------------------------------------

fn criterion_10() -> Outcome {
    let g = coin_game(10, 300).map_err(err)?;
    let a = passive(&g);
    let v = exact_value(&g, &a, 24).map_err(err)?;
    ensure(v == Ratio::new(300, 1024), format!("exact value {v}"))?;
    let vf = 300.0 / 1024.0;
    let mut covered = 0;
    for i in 0..100 {
        let e = estimate_value(
            &g,
            &a,
            1000,
            0.95,
            Seed::from_u64(10).derive("calibration", i),
        )
        .map_err(err)?;
        covered += u32::from(e.covers(vf));
    }
    ensure(covered >= 90, format!("{covered}/100 intervals cover v"))?;
    Ok(format!(
        "v = {v} (exact); {covered}/100 intervals at 95% cover v"
    ))
}

// 11 ------------------------------------------------------------------------

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let mut tape = Tape::seeded(Seed::from_u64(11));
    let mut tight = 0;
    for _ in 0..50 {
        let links = 2 + tape.below(3).map_err(err)? as usize;
        let mut samplers = Vec::with_capacity(links + 1);
        for _ in 0..=links {
            let table = (0..8)
                .map(|_| tape.bits(2).map(|v| vec![v as u8]))
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            samplers.push(TableSampler::new(table).map_err(err)?);
        }
        let accept = (0u8..4)
            .filter(|_| tape.coin().unwrap_or(false))
            .map(|v| vec![v])
            .collect();
        let chain = HybridChain::new(samplers).map_err(err)?;
        let rep = hybrid_chain_check(&chain, &set_distinguisher(1, accept), 24).map_err(err)?;
        ensure(
            rep.telescoping_holds,
            "|2v−1| exceeds the sum of adjacent advantages",
        )?;
        tight += u32::from(rep.end_to_end_advantage == rep.advantage_sum);
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "telescoping holds on 50 chains ({tight} with equality)"
    ))
}

fn main() {
    let criteria: [(&str, Criterion); 11] = [
        ("scheme correctness", criterion_1),
        ("Lamport β-effectiveness", criterion_2),
        ("W-OTS extraction soundness", criterion_3),
        ("straight-line verification", criterion_4),
        ("tree case split", criterion_5),
        ("SC_λ marginal", criterion_6),
        ("distance budget", criterion_7),
        ("composition arithmetic", criterion_8),
        ("FDH end-to-end", criterion_9),
        ("estimator calibration", criterion_10),
        ("hybrid telescoping", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{t:.1?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{t:.1?}]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
