//! Pinned test vectors: one `input-hex output-hex` pair per line.
//!
//! Keyed families are pinned under the all-zero key. Lines starting with `#`
//! and blank lines are ignored.

use crate::primitives::family::{value_to_bytes, FunctionFamilySpec};
use crate::Error;

/// Vectors for the inputs `0, 1, ..., count-1` (capped at the domain size).
pub fn render_vectors(spec: &FunctionFamilySpec, count: u64) -> String {
    let key = vec![0u8; spec.key_len()];
    let domain = if spec.input_bits >= 64 {
        u64::MAX
    } else {
        1u64 << spec.input_bits
    };
    let mut out = String::new();
    for v in 0..count.min(domain) {
        let x = if spec.input_bits >= 64 {
            let mut x = vec![0u8; spec.input_len()];
            let n = x.len();
            x[n - 8..].copy_from_slice(&v.to_be_bytes());
            x
        } else {
            value_to_bytes(v, spec.input_bits)
        };
        let y = spec.eval_unchecked(&key, &x);
        out.push_str(&format!("{} {}\n", hex::encode(&x), hex::encode(&y)));
    }
    out
}

/// An `(input, output)` pair.
pub type Vector = (Vec<u8>, Vec<u8>);

pub fn parse_vectors(text: &str) -> Result<Vec<Vector>, Error> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Decode(format!("bad vector line `{l}`")));
            };
            let dec = |s: &str| hex::decode(s).map_err(|e| Error::Decode(e.to_string()));
            Ok((dec(a)?, dec(b)?))
        })
        .collect()
}

/// Checks every pinned pair against the evaluator; returns the number checked.
pub fn check_vectors(spec: &FunctionFamilySpec, text: &str) -> Result<usize, Error> {
    let key = vec![0u8; spec.key_len()];
    let pairs = parse_vectors(text)?;
    for (x, y) in &pairs {
        let got = spec.eval(&key, x)?;
        if &got != y {
            return Err(Error::Param(format!(
                "{}: vector {} expected {} got {}",
                spec.evaluator_id,
                hex::encode(x),
                hex::encode(y),
                hex::encode(&got)
            )));
        }
    }
    Ok(pairs.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_then_check() {
        let f = FunctionFamilySpec::weak_owf(4, 4).unwrap();
        let text = render_vectors(&f, 100);
        assert_eq!(text.lines().count(), 16);
        assert_eq!(check_vectors(&f, &text).unwrap(), 16);
        let broken = text.replacen(' ', " f", 1);
        assert!(check_vectors(&f, &broken).is_err());
    }
}
