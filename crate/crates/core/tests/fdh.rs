//! FDH oracle statistics and interpreter validity.

use liftlab::fdh::adversaries::fdh_brute_force;
use liftlab::fdh::games::{decode_ro_move, RoMove};
use liftlab::fdh::{
    fdh_interpreter_reduction, lazy_random_oracle, sample_sc_oracle, InterpreterConfig, OracleRange,
};
use liftlab::game::run_game;
use liftlab::primitives::tdp::{tdp_forward, TdpKeyPair};
use liftlab::reduction::{apply_transformer, rat, Rational};
use liftlab::Seed;
use num_bigint::BigUint;

fn marginal(lambda: Rational, probes: u8, samples: u64, kp: &TdpKeyPair) -> (f64, f64) {
    // N = 514 has φ(N) = 256 units
    let lf = liftlab::fdh::lambda_f64(&lambda);
    let expected = lf + (1.0 - lf) / 256.0;
    let target = BigUint::from(5u32);
    let mut worst = 0.0f64;
    let mut hits = vec![0u64; probes as usize];
    for i in 0..samples {
        let mut sc = sample_sc_oracle(
            lambda.clone(),
            target.clone(),
            kp.pk.clone(),
            Seed::from_u64(i),
        )
        .unwrap();
        for (p, h) in hits.iter_mut().enumerate() {
            *h += u64::from(sc.query(&[p as u8]) == target);
        }
    }
    for h in hits {
        worst = worst.max((h as f64 / samples as f64 - expected).abs());
    }
    (expected, worst)
}

fn n514() -> TdpKeyPair {
    TdpKeyPair::from_primes(2u32.into(), 257u32.into(), Some(3u32.into())).unwrap()
}

#[test]
fn sc_marginal_at_three_parameter_points() {
    // tolerance: about four standard deviations of a binomial mean at 4·10^4 samples
    for (lambda, tol) in [
        (rat(1, 2), 0.011),
        (rat(1, 16), 0.006),
        (rat(1, 256), 0.003),
    ] {
        let (expected, worst) = marginal(lambda.clone(), 4, 40_000, &n514());
        assert!(
            worst <= tol,
            "λ = {lambda}: expected {expected}, deviation {worst}"
        );
    }
}

#[test]
fn planted_events_are_uncorrelated_across_points() {
    let kp = n514();
    let target = BigUint::from(5u32);
    let samples = 100_000u64;
    let (mut a, mut b, mut ab) = (0u64, 0u64, 0u64);
    for i in 0..samples {
        let mut sc =
            sample_sc_oracle(rat(1, 4), target.clone(), kp.pk.clone(), Seed::from_u64(i)).unwrap();
        let x = sc.query(b"x1") == target;
        let y = sc.query(b"x2") == target;
        a += u64::from(x);
        b += u64::from(y);
        ab += u64::from(x && y);
    }
    let n = samples as f64;
    let (pa, pb, pab) = (a as f64 / n, b as f64 / n, ab as f64 / n);
    let cov = pab - pa * pb;
    let corr = cov / (pa * (1.0 - pa) * pb * (1.0 - pb)).sqrt();
    // the sample correlation of independent events has standard error 1/sqrt(n)
    assert!(corr.abs() < 4.0 / n.sqrt(), "correlation {corr}");
}

#[test]
fn unplanted_points_follow_the_permutation() {
    let kp = n514();
    for i in 0..200 {
        let mut sc = sample_sc_oracle(
            rat(1, 8),
            BigUint::from(3u32),
            kp.pk.clone(),
            Seed::from_u64(i),
        )
        .unwrap();
        let x = [i as u8];
        if !sc.planted(&x) {
            let pre = sc.preimage(&x);
            assert_eq!(sc.query(&x), tdp_forward(&kp.pk, &pre).unwrap());
        }
    }
}

#[test]
fn lazy_oracle_is_uniform_on_four_values() {
    let mut h = lazy_random_oracle(Seed::from_u64(77), OracleRange::Below(4)).unwrap();
    let mut counts = [0u64; 4];
    for i in 0..100_000u32 {
        counts[usize::try_from(h.query(&i.to_be_bytes())).unwrap()] += 1;
    }
    for c in counts {
        assert!((c as f64 / 1e5 - 0.25).abs() <= 0.01, "{counts:?}");
    }
    assert_eq!(h.q_h_observed(), 100_000);
}

#[test]
fn interpreter_outputs_always_verify_classically() {
    let cfg = InterpreterConfig::auto(12, 8, 8, 1);
    let r = fdh_interpreter_reduction(cfg.clone()).unwrap();
    let a = fdh_brute_force(cfg.internal(), 8, 1).unwrap();
    let t = apply_transformer(&r, &a).unwrap();
    let (mut forged, mut won) = (0, 0);
    for i in 0..3000 {
        let rec = run_game(&r.external, &t, Seed::from_u64(i)).unwrap();
        assert!(rec.outcome.violation.is_none());
        let emitted = rec
            .transcript
            .adversary_messages()
            .any(|m| matches!(decode_ro_move(m), Ok(RoMove::Forge { .. })));
        forged += u32::from(emitted);
        won += u32::from(rec.outcome.verdict.is_succ());
    }
    assert!(forged > 0, "no forgery emitted");
    assert_eq!(forged, won, "every emitted forgery must verify");
}
