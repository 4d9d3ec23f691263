//! Full-Domain Hash over the trapdoor permutation, lazily sampled random
//! oracles, the semi-constant oracle `SC_λ`, the classical programming
//! transformer and the interpreter `Î`.
//!
//! Oracles are classical: every query is a single input, and fresh outputs
//! are a deterministic function of the oracle seed and the input.

pub mod adversaries;
pub mod games;
pub mod transformers;

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use sha2::{Digest, Sha256};

use crate::ots::{check_message, decode_layout, encode_layout, KeyPair, SignatureScheme};
use crate::primitives::tdp::{
    encode_elem, is_unit, sample_unit, tdp_forward, tdp_keygen, TdpPublicKey,
};
use crate::reduction::{rat, Rational};
use crate::seed::Seed;
use crate::tape::{Tape, TapeError};
use crate::wire::Writer;
use crate::Error;

pub use games::{ro_forgery_game, tdp_inversion_game, RoGameParams};
pub use transformers::{
    fdh_classical_reduction, fdh_classical_transformer, fdh_end_to_end, fdh_interpreter,
    fdh_interpreter_reduction, InterpreterConfig,
};

/// Output set of a lazily sampled oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleRange {
    /// Uniform on `[0, n)`.
    Below(u64),
    /// Uniform on `Z_N*`.
    Units(BigUint),
    /// `1` with probability `λ`, else `0`.
    Bernoulli(Rational),
}

impl OracleRange {
    fn check(&self) -> Result<(), Error> {
        match self {
            OracleRange::Below(0) => Err(Error::Param("empty oracle range".into())),
            OracleRange::Units(n) if n <= &BigUint::from(2u32) => {
                Err(Error::Param("modulus has no units besides 1".into()))
            }
            OracleRange::Bernoulli(l) => check_lambda(l),
            _ => Ok(()),
        }
    }

    fn sample(&self, tape: &mut Tape) -> Result<BigUint, TapeError> {
        match self {
            OracleRange::Below(n) => Ok(BigUint::from(tape.below(*n)?)),
            OracleRange::Units(n) => sample_unit(tape, n),
            OracleRange::Bernoulli(l) => {
                let draw = BigUint::from(tape.bits(64)?);
                Ok(BigUint::from(u8::from(draw < bernoulli_threshold(l))))
            }
        }
    }
}

/// `⌊λ·2⁶⁴⌋`: a 64-bit draw below it has probability `λ` up to `2⁻⁶⁴`.
fn bernoulli_threshold(l: &Rational) -> BigUint {
    let scaled = l * Rational::from_integer(BigInt::one() << 64u32);
    scaled.floor().to_integer().to_biguint().unwrap_or_default()
}

pub fn check_lambda(l: &Rational) -> Result<(), Error> {
    if *l <= Rational::zero() || *l >= Rational::one() {
        return Err(Error::Param(format!(
            "λ = {l} must lie strictly between 0 and 1"
        )));
    }
    Ok(())
}

/// The value a fresh oracle query at `x` takes: a tape keyed by
/// `SHA-256(label ∥ seed ∥ x)` sampled in `range`.
pub fn oracle_value(seed: &Seed, range: &OracleRange, x: &[u8]) -> BigUint {
    let mut h = Sha256::new();
    h.update(b"liftlab/oracle");
    h.update(seed.as_bytes());
    h.update((x.len() as u64).to_be_bytes());
    h.update(x);
    let mut tape = Tape::seeded(Seed(h.finalize().into()));
    range
        .sample(&mut tape)
        .expect("seeded tapes do not run out")
}

/// A lazily populated random oracle.
#[derive(Debug, Clone)]
pub struct OracleHandle {
    seed: Seed,
    range: OracleRange,
    table: HashMap<Vec<u8>, BigUint>,
    query_log: Vec<Vec<u8>>,
}

pub fn lazy_random_oracle(seed: Seed, range: OracleRange) -> Result<OracleHandle, Error> {
    range.check()?;
    Ok(OracleHandle {
        seed,
        range,
        table: HashMap::new(),
        query_log: Vec::new(),
    })
}

impl OracleHandle {
    pub fn query(&mut self, x: &[u8]) -> BigUint {
        if let Some(v) = self.table.get(x) {
            return v.clone();
        }
        let v = oracle_value(&self.seed, &self.range, x);
        self.table.insert(x.to_vec(), v.clone());
        self.query_log.push(x.to_vec());
        v
    }

    pub fn range(&self) -> &OracleRange {
        &self.range
    }

    /// Distinct inputs queried so far, in order of first query.
    pub fn query_log(&self) -> &[Vec<u8>] {
        &self.query_log
    }

    pub fn q_h_observed(&self) -> usize {
        self.query_log.len()
    }
}

/// `SC_λ`: answers `target` where `o2` fires, `f_pk(o1(x))` elsewhere.
#[derive(Debug, Clone)]
pub struct SemiConstantOracle {
    pub lambda: Rational,
    pub target: BigUint,
    pub pk: TdpPublicKey,
    o1: OracleHandle,
    o2: OracleHandle,
    queried: Vec<Vec<u8>>,
}

pub fn sample_sc_oracle(
    lambda: Rational,
    target: BigUint,
    pk: TdpPublicKey,
    seed: Seed,
) -> Result<SemiConstantOracle, Error> {
    check_lambda(&lambda)?;
    if !is_unit(&pk.n, &target) {
        return Err(Error::NotUnit);
    }
    Ok(SemiConstantOracle {
        o1: lazy_random_oracle(seed.derive("o1", 0), OracleRange::Units(pk.n.clone()))?,
        o2: lazy_random_oracle(seed.derive("o2", 0), OracleRange::Bernoulli(lambda.clone()))?,
        lambda,
        target,
        pk,
        queried: Vec::new(),
    })
}

impl SemiConstantOracle {
    pub fn query(&mut self, x: &[u8]) -> BigUint {
        if !self.queried.iter().any(|q| q == x) {
            self.queried.push(x.to_vec());
        }
        if self.planted(x) {
            self.target.clone()
        } else {
            let r = self.o1.query(x);
            tdp_forward(&self.pk, &r).expect("o1 outputs units")
        }
    }

    /// `o2(x) = 1`.
    pub fn planted(&mut self, x: &[u8]) -> bool {
        self.o2.query(x).is_one()
    }

    /// `o1(x)`: a preimage of the answer at `x` whenever `x` is not planted.
    pub fn preimage(&mut self, x: &[u8]) -> BigUint {
        self.o1.query(x)
    }

    pub fn q_h_observed(&self) -> usize {
        self.queried.len()
    }
}

/// `(8/3)·q_H⁴·λ²`, unclamped.
pub fn sc_distance_budget(q_h: u64, lambda: &Rational) -> Rational {
    let q = Rational::from_integer(BigInt::from(q_h));
    rat(8, 3) * &q * &q * &q * &q * lambda * lambda
}

/// The budget clamped to `[0, 1]` for reporting.
pub fn sc_distance_budget_clamped(q_h: u64, lambda: &Rational) -> Rational {
    sc_distance_budget(q_h, lambda).min(Rational::one())
}

/// A choice of `λ` with the quantities it trades off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaChoice {
    pub lambda: Rational,
    pub q_h: u64,
    pub q_s: u64,
    /// `sc_distance_budget(q_H, λ)`, clamped.
    pub budget: Rational,
    /// `(1−λ)^{q_S}`: probability that no signing query hits a planted point.
    pub no_abort_lower_bound: Rational,
    pub rationale: String,
}

impl LambdaChoice {
    pub fn for_lambda(lambda: Rational, q_h: u64, q_s: u64, rationale: String) -> LambdaChoice {
        let keep = Rational::one() - &lambda;
        let mut no_abort = Rational::one();
        for _ in 0..q_s {
            no_abort *= &keep;
        }
        LambdaChoice {
            budget: sc_distance_budget_clamped(q_h, &lambda),
            no_abort_lower_bound: no_abort,
            lambda,
            q_h,
            q_s,
            rationale,
        }
    }

    /// `λ·(1−λ)^{q_S}`: the interpreter's success factor.
    pub fn success_factor(&self) -> Rational {
        &self.lambda * &self.no_abort_lower_bound
    }
}

/// `λ = 1 / (2·(q_S+1)·max(q_H,1)²)`.
pub fn choose_lambda(q_h: u64, q_s: u64) -> LambdaChoice {
    let qh = q_h.max(1) as i64;
    let den = 2 * (q_s as i64 + 1) * qh * qh;
    LambdaChoice::for_lambda(
        rat(1, den),
        q_h,
        q_s,
        format!(
            "λ = 1/(2·(q_S+1)·max(q_H,1)²) = 1/{den}: keeps the abort bound (1−λ)^q_S near 1 \
             and the distance budget (8/3)·q_H⁴·λ² below 1/(6·(q_S+1)²)"
        ),
    )
}

/// Draws the challenger's `sample_unit` would consume to produce `v`.
pub fn unit_draws(n: &BigUint, v: &BigUint) -> Vec<u64> {
    let limbs = (n.bits() as usize).div_ceil(64);
    let mut digits: Vec<u64> = v.iter_u64_digits().collect();
    digits.resize(limbs, 0);
    digits.reverse();
    digits
}

// ---------------------------------------------------------------------------
// The scheme

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FdhParams {
    pub modulus_bits: usize,
    pub message_bits: usize,
}

/// `σ = f⁻¹(H(m))` with `H` the seeded oracle onto `Z_N*`.
#[derive(Debug, Clone)]
pub struct FdhScheme {
    params: FdhParams,
    oracle_seed: Seed,
}

impl FdhScheme {
    pub fn new(params: FdhParams, oracle_seed: Seed) -> Result<FdhScheme, Error> {
        use crate::primitives::tdp::{MAX_MODULUS_BITS, MIN_MODULUS_BITS};
        if !(MIN_MODULUS_BITS..=MAX_MODULUS_BITS).contains(&params.modulus_bits) {
            return Err(Error::Param(format!(
                "modulus_bits {} outside [{MIN_MODULUS_BITS}, {MAX_MODULUS_BITS}]",
                params.modulus_bits
            )));
        }
        if params.message_bits == 0 || params.message_bits > 4096 {
            return Err(Error::Param("message_bits must be in 1..=4096".into()));
        }
        Ok(FdhScheme {
            params,
            oracle_seed,
        })
    }

    pub fn params(&self) -> FdhParams {
        self.params
    }

    pub fn hash(&self, pk: &TdpPublicKey, m: &[u8]) -> BigUint {
        oracle_value(&self.oracle_seed, &OracleRange::Units(pk.n.clone()), m)
    }

    fn params_block(&self) -> Vec<u8> {
        Writer::new()
            .u32(self.params.modulus_bits as u32)
            .u32(self.params.message_bits as u32)
            .raw(self.oracle_seed.as_bytes())
            .finish()
    }

    pub fn decode_pk(&self, pk: &[u8]) -> Result<TdpPublicKey, Error> {
        let el = decode_layout(pk, &self.params_block())?;
        let [n, e] = el.as_slice() else {
            return Err(Error::Decode("public key has two elements".into()));
        };
        let n = BigUint::from_bytes_be(n);
        if n.bits() as usize != self.params.modulus_bits {
            return Err(Error::Decode("modulus has the wrong length".into()));
        }
        Ok(TdpPublicKey {
            n,
            e: BigUint::from_bytes_be(e),
        })
    }
}

impl SignatureScheme for FdhScheme {
    fn name(&self) -> String {
        format!(
            "fdh[N{},l{}]",
            self.params.modulus_bits, self.params.message_bits
        )
    }

    fn message_bits(&self) -> usize {
        self.params.message_bits
    }

    fn keygen_randomness_bits(&self) -> Option<u32> {
        Some(256)
    }

    fn keygen(&self, tape: &mut Tape) -> Result<KeyPair, Error> {
        let kp = tdp_keygen(tape.fill_seed()?, self.params.modulus_bits)?;
        let block = self.params_block();
        let n = kp.pk.n.to_bytes_be();
        Ok(KeyPair {
            pk: encode_layout(&block, &[n.clone(), kp.pk.e.to_bytes_be()]),
            sk: encode_layout(&block, &[n, kp.pk.e.to_bytes_be(), kp.sk.d.to_bytes_be()]),
        })
    }

    fn sign(&self, sk: &mut Vec<u8>, msg: &[u8]) -> Result<Vec<u8>, Error> {
        check_message(msg, self.params.message_bits)?;
        let el = decode_layout(sk, &self.params_block())?;
        let [n, e, d] = el.as_slice() else {
            return Err(Error::Decode("secret key has three elements".into()));
        };
        let pk = TdpPublicKey {
            n: BigUint::from_bytes_be(n),
            e: BigUint::from_bytes_be(e),
        };
        let h = self.hash(&pk, msg);
        let sigma = h.modpow(&BigUint::from_bytes_be(d), &pk.n);
        Ok(encode_elem(&pk.n, &sigma))
    }

    fn verify(&self, pk: &[u8], msg: &[u8], sig: &[u8]) -> bool {
        if check_message(msg, self.params.message_bits).is_err() {
            return false;
        }
        let Ok(pk) = self.decode_pk(pk) else {
            return false;
        };
        if sig.len() != (pk.n.bits() as usize).div_ceil(8) {
            return false;
        }
        let sigma = BigUint::from_bytes_be(sig);
        tdp_forward(&pk, &sigma).is_ok_and(|y| y == self.hash(&pk, msg))
    }
}

/// `λ` as a float, for reports.
pub fn lambda_f64(l: &Rational) -> f64 {
    l.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::tdp::TdpKeyPair;

    #[test]
    fn oracle_is_consistent_and_counts_distinct_inputs() {
        let mut o = lazy_random_oracle(Seed::from_u64(1), OracleRange::Below(1000)).unwrap();
        let a = o.query(b"x");
        o.query(b"y");
        assert_eq!(o.query(b"x"), a);
        assert_eq!(o.q_h_observed(), 2);
        let mut o2 = lazy_random_oracle(Seed::from_u64(1), OracleRange::Below(1000)).unwrap();
        assert_eq!(o2.query(b"x"), a);
    }

    #[test]
    fn uniform_over_four_values() {
        let mut o = lazy_random_oracle(Seed::from_u64(5), OracleRange::Below(4)).unwrap();
        let mut counts = [0u32; 4];
        let n = 100_000u32;
        for i in 0..n {
            counts[o.query(&i.to_be_bytes()).to_usize().unwrap()] += 1;
        }
        for c in counts {
            assert!(
                (f64::from(c) / f64::from(n) - 0.25).abs() < 0.01,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn lambda_domain() {
        assert!(check_lambda(&rat(0, 1)).is_err());
        assert!(check_lambda(&rat(1, 1)).is_err());
        assert!(check_lambda(&rat(1, 1 << 30)).is_ok());
        let kp = TdpKeyPair::from_primes(2u32.into(), 257u32.into(), Some(3u32.into())).unwrap();
        assert!(sample_sc_oracle(rat(0, 1), BigUint::one(), kp.pk.clone(), Seed::ZERO).is_err());
        assert!(sample_sc_oracle(rat(1, 1 << 30), BigUint::one(), kp.pk, Seed::ZERO).is_ok());
    }

    #[test]
    fn tiny_lambda_threshold_is_exact() {
        assert_eq!(
            bernoulli_threshold(&rat(1, 1 << 30)),
            BigUint::one() << 34u32
        );
        assert_eq!(bernoulli_threshold(&rat(1, 2)), BigUint::one() << 63u32);
    }

    #[test]
    fn unplanted_points_follow_the_permutation() {
        let kp = tdp_keygen(Seed::from_u64(3), 16).unwrap();
        let mut sc = sample_sc_oracle(
            rat(1, 4),
            BigUint::from(5u32),
            kp.pk.clone(),
            Seed::from_u64(9),
        )
        .unwrap();
        let (mut planted, mut plain) = (0, 0);
        for i in 0u32..200 {
            let x = i.to_be_bytes();
            let v = sc.query(&x);
            if sc.planted(&x) {
                planted += 1;
                assert_eq!(v, BigUint::from(5u32));
            } else {
                plain += 1;
                assert_eq!(v, tdp_forward(&kp.pk, &sc.preimage(&x)).unwrap());
            }
        }
        assert!(planted > 0 && plain > 0);
        assert_eq!(sc.q_h_observed(), 200);
    }

    #[test]
    fn budget_values() {
        assert_eq!(sc_distance_budget(2, &rat(1, 16)), rat(1, 6));
        assert_eq!(sc_distance_budget(0, &rat(1, 3)), rat(0, 1));
        assert_eq!(sc_distance_budget(4, &rat(1, 128)), rat(1, 24));
        assert_eq!(
            sc_distance_budget(10, &rat(1, 10_000)),
            rat(8, 3) * rat(1, 10_000)
        );
        assert_eq!(sc_distance_budget_clamped(100, &rat(1, 2)), rat(1, 1));
    }

    #[test]
    fn lambda_formula() {
        assert_eq!(choose_lambda(0, 0).lambda, rat(1, 2));
        let c = choose_lambda(4, 3);
        assert_eq!(c.lambda, rat(1, 128));
        assert_eq!(c.budget, rat(1, 24));
        assert_eq!(
            c.no_abort_lower_bound,
            rat(127 * 127 * 127, 128 * 128 * 128)
        );
    }

    #[test]
    fn unit_draws_round_trip() {
        let n = BigUint::from(3233u32);
        let mut t = Tape::scripted(unit_draws(&n, &BigUint::from(42u32)));
        assert_eq!(sample_unit(&mut t, &n).unwrap(), BigUint::from(42u32));
        let big = (BigUint::one() << 100u32) + 7u32;
        let v = (BigUint::one() << 70u32) + 3u32;
        let mut t = Tape::scripted(unit_draws(&big, &v));
        assert_eq!(t.below_big(&big).unwrap(), v);
    }

    fn scheme() -> FdhScheme {
        FdhScheme::new(
            FdhParams {
                modulus_bits: 16,
                message_bits: 16,
            },
            Seed::from_u64(77),
        )
        .unwrap()
    }

    #[test]
    fn sign_verify_and_determinism() {
        let s = scheme();
        let mut tape = Tape::seeded(Seed::from_u64(1));
        let mut kp = s.keygen(&mut tape).unwrap();
        for i in 0u16..200 {
            let m = i.wrapping_mul(313).to_be_bytes();
            let sig = s.sign(&mut kp.sk, &m).unwrap();
            assert!(s.verify(&kp.pk, &m, &sig));
            assert_eq!(s.sign(&mut kp.sk, &m).unwrap(), sig);
        }
        assert!(!s.verify(&kp.pk, &[0, 1], &[0]));
    }

    #[test]
    fn shifted_signature_rejected_except_on_hash_collision() {
        let s = scheme();
        let mut kp = s.keygen(&mut Tape::seeded(Seed::from_u64(2))).unwrap();
        let pk = s.decode_pk(&kp.pk).unwrap();
        for i in 0u16..300 {
            let m = i.to_be_bytes();
            let sig = s.sign(&mut kp.sk, &m).unwrap();
            let shifted = (BigUint::from_bytes_be(&sig) + 1u32) % &pk.n;
            let expected = tdp_forward(&pk, &shifted).is_ok_and(|y| y == s.hash(&pk, &m));
            assert!(!expected);
            assert!(!s.verify(&kp.pk, &m, &encode_elem(&pk.n, &shifted)));
        }
    }
}
