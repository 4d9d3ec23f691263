//! Random tapes.
//!
//! Every probabilistic program in the crate draws its coins from a [`Tape`].
//! A tape is backed by one of three sources:
//!
//! * a ChaCha20 stream keyed by a [`Seed`] (Monte Carlo runs),
//! * an explicit bit string (exhaustive enumeration for exact game values),
//! * a script of pre-determined draw values (replaying an honest run whose
//!   challenger coins were fixed by a transformer's embedding rule).
//!
//! Draws are always of the form "uniform below `n`"; byte strings are drawn one
//! byte per draw so that a scripted replay can address individual bytes.

use std::cell::RefCell;
use std::rc::Rc;

use num_bigint::BigUint;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::seed::Seed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TapeError {
    #[error("random tape exhausted: needed {needed} more bits, {remaining} left")]
    Exhausted { needed: u32, remaining: u32 },
    #[error("draw below {0} is not a power of two and cannot be enumerated exactly")]
    NotEnumerable(u128),
    #[error("scripted tape ran out of draws")]
    ScriptExhausted,
    #[error("scripted draw {value} is out of range below {bound}")]
    ScriptOutOfRange { value: u64, bound: u128 },
}

#[derive(Debug)]
struct BitStream {
    bits: u64,
    len: u32,
    pos: u32,
}

impl BitStream {
    fn take(&mut self, k: u32) -> Result<u64, TapeError> {
        if self.pos + k > self.len {
            return Err(TapeError::Exhausted {
                needed: k,
                remaining: self.len - self.pos,
            });
        }
        let v = if k == 0 {
            0
        } else if k == 64 {
            self.bits >> self.pos
        } else {
            (self.bits >> self.pos) & ((1u64 << k) - 1)
        };
        self.pos += k;
        Ok(v)
    }
}

enum Source {
    Seeded {
        rng: Box<ChaCha20Rng>,
        seed: Seed,
        forks: u64,
    },
    Bits(Rc<RefCell<BitStream>>),
    Scripted {
        draws: Vec<u64>,
        pos: usize,
    },
}

pub struct Tape {
    source: Source,
    log: Option<Rc<RefCell<Vec<u64>>>>,
}

impl std::fmt::Debug for Tape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.source {
            Source::Seeded { seed, .. } => write!(f, "Tape::Seeded({seed:?})"),
            Source::Bits(b) => {
                let b = b.borrow();
                write!(f, "Tape::Bits({}/{})", b.pos, b.len)
            }
            Source::Scripted { draws, pos } => write!(f, "Tape::Scripted({pos}/{})", draws.len()),
        }
    }
}

impl Tape {
    pub fn seeded(seed: Seed) -> Tape {
        Tape {
            source: Source::Seeded {
                rng: Box::new(ChaCha20Rng::from_seed(seed.0)),
                seed,
                forks: 0,
            },
            log: None,
        }
    }

    /// A tape holding exactly `len` bits (LSB first) of `bits`.
    pub fn from_bits(bits: u64, len: u32) -> Tape {
        assert!(len <= 64);
        Tape {
            source: Source::Bits(Rc::new(RefCell::new(BitStream { bits, len, pos: 0 }))),
            log: None,
        }
    }

    pub fn scripted(draws: Vec<u64>) -> Tape {
        Tape {
            source: Source::Scripted { draws, pos: 0 },
            log: None,
        }
    }

    /// Enables recording of every draw value from now on.
    pub fn recording(mut self) -> Tape {
        self.log = Some(Rc::new(RefCell::new(Vec::new())));
        self
    }

    /// Shared view of the draw log, readable after the tape has been moved
    /// into a program.
    pub fn log_handle(&self) -> Option<Rc<RefCell<Vec<u64>>>> {
        self.log.clone()
    }

    pub fn take_log(&mut self) -> Vec<u64> {
        self.log
            .as_ref()
            .map(|l| std::mem::take(&mut *l.borrow_mut()))
            .unwrap_or_default()
    }

    pub fn seed(&self) -> Option<Seed> {
        match &self.source {
            Source::Seeded { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// Bits still available on an enumeration tape; `None` for unbounded sources.
    pub fn remaining_bits(&self) -> Option<u32> {
        match &self.source {
            Source::Bits(b) => {
                let b = b.borrow();
                Some(b.len - b.pos)
            }
            _ => None,
        }
    }

    /// Derives a child tape.
    ///
    /// Seeded tapes fork into an independent stream keyed by
    /// `seed.derive("fork:<label>", n)` where `n` counts previous forks.
    /// Enumeration tapes share their bit stream with the child so the combined
    /// program still consumes one enumerable tape. Scripted tapes fork into an
    /// empty script.
    pub fn fork(&mut self, label: &str) -> Tape {
        match &mut self.source {
            Source::Seeded { seed, forks, .. } => {
                let child = seed.derive(&format!("fork:{label}"), *forks);
                *forks += 1;
                Tape::seeded(child)
            }
            Source::Bits(stream) => Tape {
                source: Source::Bits(Rc::clone(stream)),
                log: None,
            },
            Source::Scripted { .. } => Tape::scripted(Vec::new()),
        }
    }

    fn record(&mut self, v: u64) -> u64 {
        if let Some(log) = &self.log {
            log.borrow_mut().push(v);
        }
        v
    }

    /// Uniform draw of `k ≤ 64` bits.
    pub fn bits(&mut self, k: u32) -> Result<u64, TapeError> {
        assert!(k <= 64);
        let v = match &mut self.source {
            Source::Seeded { rng, .. } => {
                let raw = rng.next_u64();
                if k == 64 {
                    raw
                } else {
                    raw & ((1u64 << k) - 1)
                }
            }
            Source::Bits(stream) => stream.borrow_mut().take(k)?,
            Source::Scripted { draws, pos } => {
                let v = *draws.get(*pos).ok_or(TapeError::ScriptExhausted)?;
                *pos += 1;
                if k < 64 && v >> k != 0 {
                    return Err(TapeError::ScriptOutOfRange {
                        value: v,
                        bound: 1u128 << k,
                    });
                }
                v
            }
        };
        Ok(self.record(v))
    }

    /// Uniform draw from `[0, n)`. `n = 1` consumes nothing.
    pub fn below(&mut self, n: u64) -> Result<u64, TapeError> {
        assert!(n >= 1, "empty range");
        if n == 1 {
            return Ok(0);
        }
        if n.is_power_of_two() {
            return self.bits(n.trailing_zeros());
        }
        let v = match &mut self.source {
            Source::Seeded { rng, .. } => {
                let zone = (u64::MAX / n) * n;
                loop {
                    let raw = rng.next_u64();
                    if raw < zone {
                        break raw % n;
                    }
                }
            }
            Source::Bits(_) => return Err(TapeError::NotEnumerable(n as u128)),
            Source::Scripted { draws, pos } => {
                let v = *draws.get(*pos).ok_or(TapeError::ScriptExhausted)?;
                *pos += 1;
                if v >= n {
                    return Err(TapeError::ScriptOutOfRange {
                        value: v,
                        bound: n as u128,
                    });
                }
                v
            }
        };
        Ok(self.record(v))
    }

    pub fn coin(&mut self) -> Result<bool, TapeError> {
        Ok(self.bits(1)? == 1)
    }

    /// Draws an `nbits`-bit value as big-endian bytes, one draw per byte.
    /// The leading byte carries `nbits mod 8` bits (or 8 when divisible).
    pub fn value_bits(&mut self, nbits: usize) -> Result<Vec<u8>, TapeError> {
        let len = nbits.div_ceil(8);
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let k = if i == 0 && !nbits.is_multiple_of(8) {
                (nbits % 8) as u32
            } else {
                8
            };
            out.push(self.bits(k)? as u8);
        }
        Ok(out)
    }

    /// Uniform draw from `[0, n)` for arbitrary-size `n`, by rejection over
    /// 64-bit limbs (most significant limb first).
    pub fn below_big(&mut self, n: &BigUint) -> Result<BigUint, TapeError> {
        assert!(n.bits() > 0, "empty range");
        if n.bits() <= 64 {
            let small = n.iter_u64_digits().next().unwrap_or(0);
            return Ok(BigUint::from(self.below(small)?));
        }
        let nbits = n.bits();
        let limbs = nbits.div_ceil(64) as usize;
        let top_bits = (nbits - 64 * (limbs as u64 - 1)) as u32;
        loop {
            let mut digits = vec![0u64; limbs];
            digits[limbs - 1] = self.bits(top_bits)?;
            for d in digits.iter_mut().take(limbs - 1).rev() {
                *d = self.bits(64)?;
            }
            let v = biguint_from_u64_digits(&digits);
            if &v < n {
                return Ok(v);
            }
        }
    }

    pub fn fill_seed(&mut self) -> Result<Seed, TapeError> {
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_mut(8) {
            chunk.copy_from_slice(&self.bits(64)?.to_be_bytes());
        }
        Ok(Seed(bytes))
    }
}

pub(crate) fn biguint_from_u64_digits(digits: &[u64]) -> BigUint {
    let mut v = BigUint::default();
    for d in digits.iter().rev() {
        v = (v << 64u32) + BigUint::from(*d);
    }
    v
}

/// One entry of an embedding rule: how an honest internal challenger's draw is
/// obtained from what the transformer knows and from the external challenger's
/// recorded draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawSource {
    Own(u64),
    External(usize),
    ExternalXor(usize, u64),
}

/// Resolves an embedding rule against the external challenger's draw log.
pub fn resolve_draws(rule: &[DrawSource], external: &[u64]) -> Option<Vec<u64>> {
    rule.iter()
        .map(|d| match *d {
            DrawSource::Own(v) => Some(v),
            DrawSource::External(i) => external.get(i).copied(),
            DrawSource::ExternalXor(i, m) => external.get(i).map(|v| v ^ m),
        })
        .collect()
}
