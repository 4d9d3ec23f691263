//! RSA-style trapdoor permutation on `Z_N*`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::seed::Seed;
use crate::tape::{Tape, TapeError};
use crate::Error;

pub const MIN_MODULUS_BITS: usize = 10;
pub const MAX_MODULUS_BITS: usize = 2048;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdpPublicKey {
    pub n: BigUint,
    pub e: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdpSecretKey {
    pub n: BigUint,
    pub d: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdpKeyPair {
    pub pk: TdpPublicKey,
    pub sk: TdpSecretKey,
    pub p: BigUint,
    pub q: BigUint,
}

impl TdpKeyPair {
    /// Builds a key pair from two distinct primes. With `e = None` the
    /// exponent is 65537 when admissible, else the least odd `e ≥ 3` coprime
    /// to `φ(N)`.
    pub fn from_primes(p: BigUint, q: BigUint, e: Option<BigUint>) -> Result<TdpKeyPair, Error> {
        if p == q || !is_probable_prime(&p) || !is_probable_prime(&q) {
            return Err(Error::Param(
                "modulus factors must be distinct primes".into(),
            ));
        }
        let n = &p * &q;
        let phi = (&p - 1u32) * (&q - 1u32);
        let e = match e {
            Some(e) => {
                if e <= BigUint::one() || e >= phi || !e.gcd(&phi).is_one() {
                    return Err(Error::Param(format!(
                        "exponent {e} is not invertible mod φ(N)"
                    )));
                }
                e
            }
            None => choose_exponent(&phi)
                .ok_or_else(|| Error::Param("no admissible public exponent".into()))?,
        };
        let d = mod_inverse(&e, &phi).expect("gcd checked");
        Ok(TdpKeyPair {
            pk: TdpPublicKey { n: n.clone(), e },
            sk: TdpSecretKey { n, d },
            p,
            q,
        })
    }
}

fn choose_exponent(phi: &BigUint) -> Option<BigUint> {
    let f4 = BigUint::from(65537u32);
    if &f4 < phi && f4.gcd(phi).is_one() {
        return Some(f4);
    }
    let mut e = BigUint::from(3u32);
    while &e < phi {
        if e.gcd(phi).is_one() {
            return Some(e);
        }
        e += 2u32;
    }
    None
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    use num_bigint::BigInt;
    let a = BigInt::from(a.clone());
    let m_i = BigInt::from(m.clone());
    let g = a.extended_gcd(&m_i);
    if !g.gcd.is_one() {
        return None;
    }
    let x = g.x.mod_floor(&m_i);
    x.to_biguint()
}

const MR_BASES: [u32; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

/// Miller–Rabin with the first twenty prime bases (deterministic below 2^64).
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &b in &MR_BASES {
        let b = BigUint::from(b);
        if n == &b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }
    let n1 = n - 1u32;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    'bases: for &b in &MR_BASES {
        let mut x = BigUint::from(b).modpow(&d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

fn random_prime(tape: &mut Tape, bits: usize) -> Result<BigUint, TapeError> {
    loop {
        let mut v = BigUint::zero();
        let mut left = bits;
        while left > 0 {
            let k = left.min(64);
            v = (v << k) + BigUint::from(tape.bits(k as u32)?);
            left -= k;
        }
        // top two bits set so the product has full length; odd
        v.set_bit(bits as u64 - 1, true);
        v.set_bit(bits as u64 - 2, true);
        v.set_bit(0, true);
        if is_probable_prime(&v) {
            return Ok(v);
        }
    }
}

/// Deterministic key generation from `seed`.
pub fn tdp_keygen(seed: Seed, modulus_bits: usize) -> Result<TdpKeyPair, Error> {
    tdp_keygen_from_tape(&mut Tape::seeded(seed), modulus_bits)
}

pub fn tdp_keygen_from_tape(tape: &mut Tape, modulus_bits: usize) -> Result<TdpKeyPair, Error> {
    if !(MIN_MODULUS_BITS..=MAX_MODULUS_BITS).contains(&modulus_bits) {
        return Err(Error::Param(format!(
            "modulus_bits {modulus_bits} outside [{MIN_MODULUS_BITS}, {MAX_MODULUS_BITS}]"
        )));
    }
    let pb = modulus_bits.div_ceil(2);
    let qb = modulus_bits - pb;
    loop {
        let p = random_prime(tape, pb)?;
        let q = random_prime(tape, qb)?;
        if p == q {
            continue;
        }
        if let Ok(kp) = TdpKeyPair::from_primes(p, q, None) {
            debug_assert_eq!(kp.pk.n.bits() as usize, modulus_bits);
            return Ok(kp);
        }
    }
}

pub fn is_unit(n: &BigUint, x: &BigUint) -> bool {
    !x.is_zero() && x < n && x.gcd(n).is_one()
}

pub fn tdp_forward(pk: &TdpPublicKey, x: &BigUint) -> Result<BigUint, Error> {
    if !is_unit(&pk.n, x) {
        return Err(Error::NotUnit);
    }
    Ok(x.modpow(&pk.e, &pk.n))
}

pub fn tdp_invert(sk: &TdpSecretKey, y: &BigUint) -> Result<BigUint, Error> {
    if !is_unit(&sk.n, y) {
        return Err(Error::NotUnit);
    }
    Ok(y.modpow(&sk.d, &sk.n))
}

/// Uniform element of `Z_N*` by rejection.
pub fn sample_unit(tape: &mut Tape, n: &BigUint) -> Result<BigUint, TapeError> {
    loop {
        let x = tape.below_big(n)?;
        if is_unit(n, &x) {
            return Ok(x);
        }
    }
}

/// Recovers the secret key by trial division. Desk-scale moduli only.
pub fn factor_small(pk: &TdpPublicKey) -> Result<TdpKeyPair, Error> {
    if pk.n.bits() > 48 {
        return Err(Error::Refused("trial division beyond 48-bit moduli".into()));
    }
    let n = pk.n.iter_u64_digits().next().unwrap_or(0);
    let mut f = 2u64;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return TdpKeyPair::from_primes(
                BigUint::from(f),
                BigUint::from(n / f),
                Some(pk.e.clone()),
            );
        }
        f += 1;
    }
    Err(Error::Param("modulus is prime".into()))
}

/// Fixed-width big-endian encoding of an element of `Z_N`.
pub fn encode_elem(n: &BigUint, x: &BigUint) -> Vec<u8> {
    let len = (n.bits() as usize).div_ceil(8);
    let raw = x.to_bytes_be();
    let mut out = vec![0u8; len.saturating_sub(raw.len())];
    out.extend_from_slice(&raw);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn textbook_example() {
        let kp = TdpKeyPair::from_primes(b(5), b(11), Some(b(3))).unwrap();
        assert_eq!(kp.sk.d, b(27));
        assert_eq!(tdp_forward(&kp.pk, &b(2)).unwrap(), b(8));
        assert_eq!(tdp_invert(&kp.sk, &b(8)).unwrap(), b(2));
    }

    #[test]
    fn one_is_fixed() {
        let kp = tdp_keygen(Seed::from_u64(1), 16).unwrap();
        assert_eq!(tdp_forward(&kp.pk, &b(1)).unwrap(), b(1));
        assert_eq!(tdp_invert(&kp.sk, &b(1)).unwrap(), b(1));
    }

    #[test]
    fn keygen_has_exact_length_and_valid_exponents() {
        for bits in [10usize, 12, 16, 17, 33, 64, 128] {
            let kp = tdp_keygen(Seed::from_u64(bits as u64), bits).unwrap();
            assert_eq!(kp.pk.n.bits() as usize, bits);
            let phi = (&kp.p - 1u32) * (&kp.q - 1u32);
            assert!(((&kp.pk.e * &kp.sk.d) % &phi).is_one());
            assert_ne!(kp.p, kp.q);
        }
    }

    #[test]
    fn non_units_rejected() {
        let kp = TdpKeyPair::from_primes(b(5), b(11), Some(b(3))).unwrap();
        for x in [0u64, 5, 11, 55, 60] {
            assert!(matches!(tdp_forward(&kp.pk, &b(x)), Err(Error::NotUnit)));
        }
    }

    #[test]
    fn primality_matches_sieve() {
        let limit = 5000usize;
        let mut sieve = vec![true; limit];
        sieve[0] = false;
        sieve[1] = false;
        for i in 2..limit {
            if sieve[i] {
                for j in (i * i..limit).step_by(i) {
                    sieve[j] = false;
                }
            }
        }
        for (i, &p) in sieve.iter().enumerate() {
            assert_eq!(is_probable_prime(&b(i as u64)), p, "{i}");
        }
    }

    #[test]
    fn factoring_recovers_trapdoor() {
        let kp = tdp_keygen(Seed::from_u64(7), 24).unwrap();
        let rec = factor_small(&kp.pk).unwrap();
        assert_eq!(rec.sk.d, kp.sk.d);
    }
}
