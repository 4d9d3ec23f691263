//! Keyed function families over a SHA-256 core, in full-strength and weak
//! (brute-forceable) variants.
//!
//! Values are big-endian byte strings of `ceil(bits/8)` bytes whose value is
//! below `2^bits`. A family evaluates `SHA-256(prefix(kind) ∥ key ∥ x)` and
//! keeps the first `output_bits` bits of the digest. The generic hash uses an
//! empty prefix, so an unkeyed full-strength generic hash is plain SHA-256.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use sha2::{Digest, Sha256};

use crate::Error;

/// Largest input (or key, for PRFs) a weak family may have.
pub const WEAK_MAX_BITS: usize = 24;
pub const FULL_OUTPUT_BITS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    Owf,
    Prf,
    SprHash,
    GenericHash,
}

impl FamilyKind {
    fn prefix(self) -> &'static [u8] {
        match self {
            FamilyKind::Owf => b"\x01owf",
            FamilyKind::Prf => b"\x02prf",
            FamilyKind::SprHash => b"\x03spr",
            FamilyKind::GenericHash => b"",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FamilyKind::Owf => "owf",
            FamilyKind::Prf => "prf",
            FamilyKind::SprHash => "spr",
            FamilyKind::GenericHash => "hash",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strength {
    Full,
    Weak,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionFamilySpec {
    pub kind: FamilyKind,
    pub key_bits: usize,
    pub input_bits: usize,
    pub output_bits: usize,
    pub strength: Strength,
    pub evaluator_id: String,
}

impl fmt::Display for FunctionFamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.evaluator_id)
    }
}

impl FunctionFamilySpec {
    pub fn new(
        kind: FamilyKind,
        key_bits: usize,
        input_bits: usize,
        output_bits: usize,
        strength: Strength,
    ) -> Result<FunctionFamilySpec, Error> {
        let s = match strength {
            Strength::Full => "full",
            Strength::Weak => "weak",
        };
        let spec = FunctionFamilySpec {
            kind,
            key_bits,
            input_bits,
            output_bits,
            strength,
            evaluator_id: format!(
                "{}-{s}-k{key_bits}-i{input_bits}-o{output_bits}",
                kind.label()
            ),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Param(format!("{}: {m}", self.evaluator_id)));
        if self.output_bits == 0 || self.output_bits > FULL_OUTPUT_BITS {
            return bad(format!("output_bits must lie in 1..={FULL_OUTPUT_BITS}"));
        }
        if self.kind == FamilyKind::Prf && self.key_bits != self.output_bits {
            // chains feed outputs back in as keys
            return bad("a PRF's output width must equal its key width".into());
        }
        match self.strength {
            Strength::Full if self.output_bits != FULL_OUTPUT_BITS => {
                bad("full-strength families have 256-bit outputs".into())
            }
            Strength::Weak => match self.kind {
                FamilyKind::Owf if self.input_bits > WEAK_MAX_BITS => {
                    bad(format!("weak OWF input exceeds {WEAK_MAX_BITS} bits"))
                }
                FamilyKind::Prf if self.key_bits > WEAK_MAX_BITS => {
                    bad(format!("weak PRF key exceeds {WEAK_MAX_BITS} bits"))
                }
                FamilyKind::SprHash | FamilyKind::GenericHash
                    if self.output_bits > WEAK_MAX_BITS =>
                {
                    bad(format!("weak hash output exceeds {WEAK_MAX_BITS} bits"))
                }
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }

    pub fn weak_owf(input_bits: usize, output_bits: usize) -> Result<Self, Error> {
        Self::new(FamilyKind::Owf, 0, input_bits, output_bits, Strength::Weak)
    }

    pub fn full_owf() -> Self {
        Self::new(FamilyKind::Owf, 0, 256, 256, Strength::Full).expect("valid")
    }

    pub fn weak_prf(key_bits: usize, input_bits: usize) -> Result<Self, Error> {
        Self::new(
            FamilyKind::Prf,
            key_bits,
            input_bits,
            key_bits,
            Strength::Weak,
        )
    }

    pub fn full_prf() -> Self {
        Self::new(FamilyKind::Prf, 256, 256, 256, Strength::Full).expect("valid")
    }

    pub fn key_len(&self) -> usize {
        self.key_bits.div_ceil(8)
    }

    pub fn input_len(&self) -> usize {
        self.input_bits.div_ceil(8)
    }

    pub fn output_len(&self) -> usize {
        self.output_bits.div_ceil(8)
    }

    pub fn is_weak(&self) -> bool {
        self.strength == Strength::Weak
    }

    /// Pure evaluation `f_key(x)`.
    pub fn eval(&self, key: &[u8], x: &[u8]) -> Result<Vec<u8>, Error> {
        check_value(key, self.key_bits)?;
        check_value(x, self.input_bits)?;
        Ok(self.eval_unchecked(key, x))
    }

    pub(crate) fn eval_unchecked(&self, key: &[u8], x: &[u8]) -> Vec<u8> {
        let mut h = Sha256::new();
        h.update(self.kind.prefix());
        h.update(key);
        h.update(x);
        truncate_bits(&h.finalize(), self.output_bits)
    }
}

/// Checks that `v` is the canonical encoding of a `bits`-bit value.
pub fn check_value(v: &[u8], bits: usize) -> Result<(), Error> {
    let len = bits.div_ceil(8);
    if v.len() != len {
        return Err(Error::Length {
            expected: len,
            got: v.len(),
        });
    }
    if !bits.is_multiple_of(8) && v[0] >> (bits % 8) != 0 {
        return Err(Error::Param(format!("value exceeds {bits} bits")));
    }
    Ok(())
}

/// The first `bits` bits of `digest`, as a right-aligned big-endian value.
pub fn truncate_bits(digest: &[u8], bits: usize) -> Vec<u8> {
    let len = bits.div_ceil(8);
    let shift = 8 * len - bits;
    let prefix = &digest[..len];
    if shift == 0 {
        return prefix.to_vec();
    }
    let mut out = vec![0u8; len];
    for i in 0..len {
        let hi = if i == 0 { 0 } else { prefix[i - 1] };
        out[i] = (hi << (8 - shift)) | (prefix[i] >> shift);
    }
    out
}

pub fn value_to_bytes(v: u64, bits: usize) -> Vec<u8> {
    let len = bits.div_ceil(8);
    v.to_be_bytes()[8 - len..].to_vec()
}

pub fn bytes_to_value(b: &[u8]) -> u64 {
    b.iter().fold(0u64, |acc, &x| (acc << 8) | u64::from(x))
}

/// Least `x` with `f_key(x) = y`, by exhaustive search. Weak families only.
pub fn brute_force_invert(
    spec: &FunctionFamilySpec,
    key: &[u8],
    y: &[u8],
) -> Result<Option<Vec<u8>>, Error> {
    if !spec.is_weak() || spec.input_bits > WEAK_MAX_BITS {
        return Err(Error::Refused(format!(
            "brute-force inversion of {} is infeasible",
            spec.evaluator_id
        )));
    }
    check_value(key, spec.key_bits)?;
    check_value(y, spec.output_bits)?;
    for v in 0..(1u64 << spec.input_bits) {
        let x = value_to_bytes(v, spec.input_bits);
        if spec.eval_unchecked(key, &x) == y {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// Least preimage of every image value under one fixed key, precomputed once.
#[derive(Debug, Clone)]
pub struct InverseTable {
    spec: FunctionFamilySpec,
    key: Vec<u8>,
    least: HashMap<Vec<u8>, Vec<u8>>,
}

impl InverseTable {
    pub fn build(spec: &FunctionFamilySpec, key: &[u8]) -> Result<InverseTable, Error> {
        if !spec.is_weak() || spec.input_bits > WEAK_MAX_BITS {
            return Err(Error::Refused(format!(
                "cannot tabulate {}",
                spec.evaluator_id
            )));
        }
        check_value(key, spec.key_bits)?;
        let mut least = HashMap::new();
        for v in 0..(1u64 << spec.input_bits) {
            let x = value_to_bytes(v, spec.input_bits);
            least.entry(spec.eval_unchecked(key, &x)).or_insert(x);
        }
        Ok(InverseTable {
            spec: spec.clone(),
            key: key.to_vec(),
            least,
        })
    }

    /// Process-wide table for an unkeyed family, built on first use.
    pub fn shared(spec: &FunctionFamilySpec) -> Result<Arc<InverseTable>, Error> {
        static TABLES: OnceLock<Mutex<HashMap<String, Arc<InverseTable>>>> = OnceLock::new();
        let tables = TABLES.get_or_init(Default::default);
        if let Some(t) = tables.lock().expect("table cache").get(&spec.evaluator_id) {
            return Ok(Arc::clone(t));
        }
        let t = Arc::new(InverseTable::build(spec, &vec![0u8; spec.key_len()])?);
        tables
            .lock()
            .expect("table cache")
            .insert(spec.evaluator_id.clone(), Arc::clone(&t));
        Ok(t)
    }

    pub fn invert(&self, y: &[u8]) -> Option<&[u8]> {
        self.least.get(y).map(Vec::as_slice)
    }

    pub fn image_size(&self) -> usize {
        self.least.len()
    }

    pub fn spec(&self) -> &FunctionFamilySpec {
        &self.spec
    }

    pub fn key(&self) -> &[u8] {
        &self.key
    }
}

/// Brute-force search over keys: least `k` with `f_k(x) = y` (key one-wayness
/// attacks on weak PRFs).
pub fn brute_force_key(
    spec: &FunctionFamilySpec,
    x: &[u8],
    y: &[u8],
) -> Result<Option<Vec<u8>>, Error> {
    if !spec.is_weak() || spec.key_bits > WEAK_MAX_BITS {
        return Err(Error::Refused(format!(
            "key search over {} is infeasible",
            spec.evaluator_id
        )));
    }
    check_value(x, spec.input_bits)?;
    for v in 0..(1u64 << spec.key_bits) {
        let k = value_to_bytes(v, spec.key_bits);
        if spec.eval_unchecked(&k, x) == y {
            return Ok(Some(k));
        }
    }
    Ok(None)
}
