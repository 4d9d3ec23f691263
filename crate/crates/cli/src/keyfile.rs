//! Key files: `"LLAB" ∥ version ∥ role ∥ scheme id ∥ params ∥ material ∥
//! SHA-256 of everything before it`.
//!
//! The scheme id, canonical params and key material are u32-length-prefixed.
//! Writes go to a temporary file in the same directory which is then renamed
//! over the target, so readers only ever see a complete old or new file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use liftlab::wire::{Reader, Writer};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"LLAB";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Public = 1,
    Secret = 2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyFile {
    pub role: Role,
    pub scheme: String,
    pub params: String,
    pub material: Vec<u8>,
}

impl KeyFile {
    pub fn encode(&self) -> Vec<u8> {
        let body = Writer::new()
            .raw(MAGIC)
            .u8(VERSION)
            .u8(self.role as u8)
            .bytes(self.scheme.as_bytes())
            .bytes(self.params.as_bytes())
            .bytes(&self.material)
            .finish();
        let digest = Sha256::digest(&body);
        let mut out = body;
        out.extend_from_slice(&digest);
        out
    }

    pub fn decode(buf: &[u8]) -> CliResult<KeyFile> {
        let bad = |m: &str| CliError::Integrity(m.to_string());
        if buf.len() < MAGIC.len() + 32 || &buf[..4] != MAGIC {
            return Err(bad("not a key file"));
        }
        let (body, digest) = buf.split_at(buf.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(bad("digest mismatch"));
        }
        let mut r = Reader::new(&body[4..]);
        let fail = |e: liftlab::Error| CliError::Integrity(e.to_string());
        if r.u8().map_err(fail)? != VERSION {
            return Err(bad("unsupported key file version"));
        }
        let role = match r.u8().map_err(fail)? {
            1 => Role::Public,
            2 => Role::Secret,
            _ => return Err(bad("unknown key role")),
        };
        let text = |b: Vec<u8>| String::from_utf8(b).map_err(|_| bad("non-utf8 header"));
        let scheme = text(r.bytes().map_err(fail)?)?;
        let params = text(r.bytes().map_err(fail)?)?;
        let material = r.bytes().map_err(fail)?;
        r.finish().map_err(fail)?;
        Ok(KeyFile {
            role,
            scheme,
            params,
            material,
        })
    }

    pub fn load(path: &Path, role: Role) -> CliResult<KeyFile> {
        let buf = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let kf = KeyFile::decode(&buf)
            .map_err(|e| CliError::Integrity(format!("{}: {e}", path.display())))?;
        if kf.role != role {
            return Err(CliError::Usage(format!(
                "{}: expected a {} key",
                path.display(),
                if role == Role::Public {
                    "public"
                } else {
                    "secret"
                }
            )));
        }
        Ok(kf)
    }
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".tmp-{}", std::process::id()));
    path.with_file_name(name)
}

/// Test hook: `LIFTLAB_FAULT=before-rename` or `after-rename` aborts the
/// process at that point of the next atomic write.
fn fault(point: &str) {
    if std::env::var("LIFTLAB_FAULT").is_ok_and(|v| v == point) {
        std::process::abort();
    }
}

/// Replaces `path` with `data` through write-new-then-rename.
pub fn write_atomic(path: &Path, data: &[u8]) -> CliResult<()> {
    let tmp = temp_path(path);
    let io = |e| CliError::io(path, e);
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(data).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fault("before-rename");
    fs::rename(&tmp, path).map_err(io)?;
    fault("after-rename");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> KeyFile {
        KeyFile {
            role: Role::Secret,
            scheme: "lamport".into(),
            params: "f=full,l=16".into(),
            material: vec![1, 2, 3],
        }
    }

    #[test]
    fn round_trip() {
        let k = sample();
        assert_eq!(KeyFile::decode(&k.encode()).unwrap(), k);
    }

    #[test]
    fn any_flipped_byte_is_an_integrity_error() {
        let enc = sample().encode();
        for i in 0..enc.len() {
            let mut bad = enc.clone();
            bad[i] ^= 0x01;
            assert!(
                matches!(KeyFile::decode(&bad), Err(CliError::Integrity(_))),
                "byte {i}"
            );
        }
        assert!(KeyFile::decode(&enc[..enc.len() - 1]).is_err());
    }
}
