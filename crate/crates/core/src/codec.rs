//! Little-endian binary framing shared by the model and filter file formats.
//! Every file ends with a CRC-32 of all preceding bytes.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("bad magic bytes, expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported format version {found} (this build reads up to {supported})")]
    UnsupportedVersion { found: u16, supported: u16 },
    #[error("stream truncated")]
    Truncated,
    #[error("checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("invalid content: {0}")]
    Invalid(String),
}

#[derive(Default)]
pub(crate) struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new(magic: &[u8; 4], version: u16) -> Self {
        let mut e = Self::default();
        e.bytes(magic);
        e.u16(version);
        e
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.u32(crc);
        self.buf
    }
}

pub(crate) struct Decoder<'a> {
    body: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    /// Verifies magic, version and trailing CRC, returning a decoder
    /// positioned after the header along with the stored version.
    pub fn open(
        data: &'a [u8],
        magic: &'static [u8; 4],
        supported: u16,
    ) -> Result<(Self, u16), CodecError> {
        if data.len() < 4 || &data[..4] != magic {
            if data.len() < 4 && magic.starts_with(data) {
                return Err(CodecError::Truncated);
            }
            return Err(CodecError::BadMagic {
                expected: std::str::from_utf8(magic).unwrap_or("?"),
            });
        }
        if data.len() < 10 {
            return Err(CodecError::Truncated);
        }
        let version = u16::from_le_bytes([data[4], data[5]]);
        if version > supported {
            return Err(CodecError::UnsupportedVersion { found: version, supported });
        }
        let (body, tail) = data.split_at(data.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(CodecError::Checksum { stored, computed });
        }
        Ok((Self { body, pos: 6 }, version))
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).ok_or(CodecError::Truncated)?;
        let out = self.body.get(self.pos..end).ok_or(CodecError::Truncated)?;
        self.pos = end;
        Ok(out)
    }
    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }
    pub fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn finish(self) -> Result<(), CodecError> {
        if self.pos == self.body.len() {
            Ok(())
        } else {
            Err(CodecError::Invalid(format!(
                "{} trailing bytes",
                self.body.len() - self.pos
            )))
        }
    }
}
