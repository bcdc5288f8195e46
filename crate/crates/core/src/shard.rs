//! On-disk shard format and byte/symbol packing.
//!
//! Header, all integers little-endian:
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4 | magic `ZGZ1` |
//! | 4  | 2 | format version (1) |
//! | 6  | 1 | construction (1 or 2) |
//! | 7  | 1 | r |
//! | 8  | 1 | m |
//! | 9  | 1 | k |
//! | 10 | 2 | q |
//! | 12 | 4 | reduction polynomial id (0 for prime fields) |
//! | 16 | 1 | coefficient provenance: 0 closed form, 1 search |
//! | 17 | 1 | alpha (construction 2, else 0) |
//! | 18 | 1 | zero node (0xFF if none) |
//! | 19 | 1 | number of generator vectors `t` |
//! | 20 | 8 | search seed |
//! | 28 | 4 | search tries |
//! | 32 | 2 | node index |
//! | 34 | 8 | stripe count |
//! | 42 | 8 | payload length in bytes |
//! | 50 | 8 | original file length in bytes |
//! | 58 | 4 | padding symbols in the last stripe |
//! | 62 | 4 | header length |
//! | 66 | t*m | generator vector digits |
//!
//! The payload holds one field element per byte: the node's column for each
//! stripe, stripes concatenated, so its length is `stripes * r^m`.
//!
//! Packing: each input byte becomes `d` base-`q` digits, most significant
//! first, with `d` the least integer such that `q^d >= 256`. The symbol
//! stream is zero-padded to whole stripes of `k * r^m` symbols; within a
//! stripe systematic column `j` holds symbols `[j * r^m, (j + 1) * r^m)`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::codec::CodecDescriptor;
use crate::error::{Error, Result};
use crate::field::Elem;
use crate::zigzag::Provenance;

pub const MAGIC: &[u8; 4] = b"ZGZ1";
pub const VERSION: u16 = 1;
const FIXED_LEN: usize = 66;
const NO_ZERO_NODE: u8 = 0xFF;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardHeader {
    pub codec: CodecDescriptor,
    pub node: u16,
    pub stripes: u64,
    pub payload_len: u64,
    pub original_len: u64,
    pub pad: u32,
}

fn narrow<T: TryFrom<u64>>(v: u64, what: &str) -> Result<T> {
    T::try_from(v).map_err(|_| Error::Format(format!("{what} = {v} does not fit the header")))
}

impl ShardHeader {
    pub fn header_len(&self) -> usize {
        FIXED_LEN + self.codec.vectors.len() * self.codec.m
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let c = &self.codec;
        let (tag, seed, tries) = match c.provenance {
            Provenance::ClosedForm => (0u8, 0u64, 0u32),
            Provenance::Search { seed, tries } => (1, seed, tries),
            Provenance::Explicit => {
                return Err(Error::Format(
                    "explicit coefficient tables cannot be stored in a shard header".into(),
                ))
            }
        };
        let zero = match c.zero_node {
            Some(z) => narrow::<u8>(z as u64, "zero node").and_then(|z| {
                if z == NO_ZERO_NODE {
                    Err(Error::Format("zero node index too large".into()))
                } else {
                    Ok(z)
                }
            })?,
            None => NO_ZERO_NODE,
        };
        let mut out = Vec::with_capacity(self.header_len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(c.construction);
        out.push(narrow(c.r as u64, "r")?);
        out.push(narrow(c.m as u64, "m")?);
        out.push(narrow(c.k as u64, "k")?);
        out.extend_from_slice(&narrow::<u16>(c.q as u64, "q")?.to_le_bytes());
        out.extend_from_slice(&c.poly.to_le_bytes());
        out.push(tag);
        out.push(c.alpha.unwrap_or(0));
        out.push(zero);
        out.push(narrow(c.vectors.len() as u64, "vector count")?);
        out.extend_from_slice(&seed.to_le_bytes());
        out.extend_from_slice(&tries.to_le_bytes());
        out.extend_from_slice(&self.node.to_le_bytes());
        out.extend_from_slice(&self.stripes.to_le_bytes());
        out.extend_from_slice(&self.payload_len.to_le_bytes());
        out.extend_from_slice(&self.original_len.to_le_bytes());
        out.extend_from_slice(&self.pad.to_le_bytes());
        out.extend_from_slice(
            &narrow::<u32>(self.header_len() as u64, "header length")?.to_le_bytes(),
        );
        for v in &c.vectors {
            if v.len() != c.m {
                return Err(Error::Format(
                    "generator vector length differs from m".into(),
                ));
            }
            for &d in v {
                out.push(narrow(d as u64, "digit")?);
            }
        }
        Ok(out)
    }

    /// Parses a header from the start of `bytes`.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < FIXED_LEN {
            return Err(Error::Format(format!(
                "truncated header: {} bytes",
                bytes.len()
            )));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let version = u16_at(4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let m = bytes[8] as usize;
        let t_len = bytes[19] as usize;
        let header_len = u32_at(62) as usize;
        if header_len != FIXED_LEN + t_len * m || bytes.len() < header_len {
            return Err(Error::Format("header length mismatch".into()));
        }
        let provenance = match bytes[16] {
            0 => Provenance::ClosedForm,
            1 => Provenance::Search {
                seed: u64_at(20),
                tries: u32_at(28),
            },
            t => return Err(Error::Format(format!("unknown provenance tag {t}"))),
        };
        let construction = bytes[6];
        let vectors = bytes[FIXED_LEN..header_len]
            .chunks(m.max(1))
            .take(t_len)
            .map(|c| c.iter().map(|&d| d as u32).collect())
            .collect();
        let codec = CodecDescriptor {
            construction,
            r: bytes[7] as u32,
            m,
            k: bytes[9] as usize,
            q: u16_at(10) as u32,
            poly: u32_at(12),
            vectors,
            provenance,
            alpha: (construction == 2).then_some(bytes[17]),
            zero_node: (bytes[18] != NO_ZERO_NODE).then_some(bytes[18] as usize),
            coefficients: None,
        };
        Ok(Self {
            codec,
            node: u16_at(32),
            stripes: u64_at(34),
            payload_len: u64_at(42),
            original_len: u64_at(50),
            pad: u32_at(58),
        })
    }
}

/// A shard file: header plus one column per stripe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shard {
    pub header: ShardHeader,
    pub payload: Vec<Elem>,
}

impl Shard {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = self.header.to_bytes()?;
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = ShardHeader::parse(bytes)?;
        let payload = bytes[header.header_len()..].to_vec();
        if payload.len() as u64 != header.payload_len {
            return Err(Error::Format(format!(
                "payload is {} bytes, header says {}",
                payload.len(),
                header.payload_len
            )));
        }
        Ok(Self { header, payload })
    }

    /// Column of stripe `s`.
    pub fn column(&self, stripe: usize, rows: usize) -> &[Elem] {
        &self.payload[stripe * rows..(stripe + 1) * rows]
    }
}

pub fn shard_path(dir: &Path, node: usize) -> PathBuf {
    dir.join(format!("shard_{node:03}.zgz"))
}

pub fn write_shard(dir: &Path, shard: &Shard) -> Result<()> {
    let path = shard_path(dir, shard.header.node as usize);
    fs::write(&path, shard.to_bytes()?)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Digits per byte: least `d` with `q^d >= 256`.
pub fn digits_per_byte(q: u32) -> usize {
    let mut d = 0;
    let mut span = 1u32;
    while span < 256 {
        span *= q;
        d += 1;
    }
    d
}

pub fn bytes_to_symbols(data: &[u8], q: u32) -> Vec<Elem> {
    let d = digits_per_byte(q);
    let mut out = Vec::with_capacity(data.len() * d);
    for &b in data {
        let start = out.len();
        let mut x = b as u32;
        out.resize(start + d, 0);
        for slot in out[start..].iter_mut().rev() {
            *slot = (x % q) as Elem;
            x /= q;
        }
    }
    out
}

/// Inverse of [`bytes_to_symbols`] for the first `len` bytes.
pub fn symbols_to_bytes(symbols: &[Elem], q: u32, len: usize) -> Result<Vec<u8>> {
    let d = digits_per_byte(q);
    if symbols.len() < len * d {
        return Err(Error::Format(
            "too few symbols for the recorded length".into(),
        ));
    }
    symbols
        .chunks(d)
        .take(len)
        .map(|c| {
            let v = c.iter().fold(0u32, |acc, &s| acc * q + s as u32);
            u8::try_from(v).map_err(|_| Error::Format(format!("symbol group decodes to {v}")))
        })
        .collect()
}
