//! Minimal tagged wire format for game messages and key/signature layouts.
//!
//! A message is `tag:u8` followed by fields. Byte fields are prefixed with
//! their length as a big-endian `u32`; arrays are a `u32` BE count followed by
//! length-prefixed elements.

use crate::Error;

#[derive(Debug, Default, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Writer {
        Writer::default()
    }

    pub fn tagged(tag: u8) -> Writer {
        Writer { buf: vec![tag] }
    }

    pub fn u8(mut self, v: u8) -> Self {
        self.buf.push(v);
        self
    }

    pub fn u32(mut self, v: u32) -> Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(mut self, v: u64) -> Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn bytes(mut self, b: &[u8]) -> Self {
        self.buf.extend_from_slice(&(b.len() as u32).to_be_bytes());
        self.buf.extend_from_slice(b);
        self
    }

    pub fn array<T: AsRef<[u8]>>(mut self, items: &[T]) -> Self {
        self.buf
            .extend_from_slice(&(items.len() as u32).to_be_bytes());
        for it in items {
            self = self.bytes(it.as_ref());
        }
        self
    }

    pub fn raw(mut self, b: &[u8]) -> Self {
        self.buf.extend_from_slice(b);
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug, Clone)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn short(what: &str) -> Error {
    Error::Decode(format!("truncated input while reading {what}"))
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Reader<'a> {
        Reader { buf, pos: 0 }
    }

    pub fn u8(&mut self) -> Result<u8, Error> {
        let v = *self.buf.get(self.pos).ok_or_else(|| short("u8"))?;
        self.pos += 1;
        Ok(v)
    }

    pub fn u32(&mut self) -> Result<u32, Error> {
        let s = self.take(4).map_err(|_| short("u32"))?;
        Ok(u32::from_be_bytes(s.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, Error> {
        let s = self.take(8).map_err(|_| short("u64"))?;
        Ok(u64::from_be_bytes(s.try_into().unwrap()))
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], Error> {
        if self.buf.len() - self.pos < n {
            return Err(short("bytes"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>, Error> {
        let n = self.u32()? as usize;
        Ok(self.take(n)?.to_vec())
    }

    pub fn array(&mut self) -> Result<Vec<Vec<u8>>, Error> {
        let n = self.u32()? as usize;
        // every element costs at least its 4-byte length prefix
        if n > (self.buf.len() - self.pos) / 4 {
            return Err(Error::Decode(format!("array count {n} exceeds input")));
        }
        (0..n).map(|_| self.bytes()).collect()
    }

    pub fn rest(&mut self) -> &'a [u8] {
        let s = &self.buf[self.pos..];
        self.pos = self.buf.len();
        s
    }

    pub fn rest_is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }

    pub fn finish(&self) -> Result<(), Error> {
        if self.pos != self.buf.len() {
            return Err(Error::Decode(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_rejects_truncation() {
        let msg = Writer::tagged(3)
            .u32(9)
            .bytes(b"abc")
            .array(&[vec![1u8], vec![], vec![2, 3]])
            .finish();
        let mut r = Reader::new(&msg);
        assert_eq!(r.u8().unwrap(), 3);
        assert_eq!(r.u32().unwrap(), 9);
        assert_eq!(r.bytes().unwrap(), b"abc");
        assert_eq!(r.array().unwrap(), vec![vec![1u8], vec![], vec![2, 3]]);
        r.finish().unwrap();
        for cut in 0..msg.len() {
            let mut r = Reader::new(&msg[..cut]);
            let ok = r
                .u8()
                .and_then(|_| r.u32())
                .and_then(|_| r.bytes())
                .and_then(|_| r.array());
            assert!(ok.is_err(), "cut at {cut} decoded");
        }
    }
}
