//! Flat binary container for measurements and patch sets, and CSV output.
//!
//! Layout, all little-endian: 8-byte magic `MTDMRA01`, `u32` dims (1 or 2),
//! `u32` kind (0 measurement, 1 patches), `u64` L, `u64` M, `f64` sigma,
//! `u64` seed, `u64` value count, then the `f64` values.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mtd_sim::Dim;

pub const MAGIC: &[u8; 8] = b"MTDMRA01";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContainerKind {
    Measurement,
    Patches,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub dim: Dim,
    pub kind: ContainerKind,
    pub l: u64,
    pub m: u64,
    pub sigma: f64,
    pub seed: u64,
    pub values: Vec<f64>,
}

impl Container {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(56 + 8 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(if self.dim == Dim::One { 1u32 } else { 2 }).to_le_bytes());
        out.extend_from_slice(&(self.kind as u32).to_le_bytes());
        out.extend_from_slice(&self.l.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        out.extend_from_slice(&self.sigma.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cur.len() < n {
                return Err(Error::Io("truncated container".into()));
            }
            let (head, tail) = cur.split_at(n);
            cur = tail;
            Ok(head)
        };
        if take(8)? != MAGIC {
            return Err(Error::Io("bad magic".into()));
        }
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes"));
        let u64_at = |b: &[u8]| u64::from_le_bytes(b.try_into().expect("8 bytes"));
        let dim = match u32_at(take(4)?) {
            1 => Dim::One,
            2 => Dim::Two,
            d => return Err(Error::Io(format!("bad dims field {d}"))),
        };
        let kind = match u32_at(take(4)?) {
            0 => ContainerKind::Measurement,
            1 => ContainerKind::Patches,
            k => return Err(Error::Io(format!("bad kind field {k}"))),
        };
        let l = u64_at(take(8)?);
        let m = u64_at(take(8)?);
        let sigma = f64::from_bits(u64_at(take(8)?));
        let seed = u64_at(take(8)?);
        let count = u64_at(take(8)?) as usize;
        let data = take(count.checked_mul(8).ok_or_else(|| Error::Io("count overflow".into()))?)?;
        let values = data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Container {
            dim,
            kind,
            l,
            m,
            sigma,
            seed,
            values,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Container::from_bytes(&buf)
    }
}

/// Writes a header line and rows, comma separated.
pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<&str> = row.iter().map(AsRef::as_ref).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Shortest round-trip formatting of a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn container_round_trip() {
        let c = Container {
            dim: Dim::Two,
            kind: ContainerKind::Patches,
            l: 3,
            m: 4,
            sigma: 0.25,
            seed: 99,
            values: vec![1.0, -0.0, f64::MIN_POSITIVE, 1e300],
        };
        let bytes = c.to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        let back = Container::from_bytes(&bytes).unwrap();
        assert_eq!(back.values.len(), 4);
        assert_eq!(back.values[1].to_bits(), (-0.0f64).to_bits());
        assert_eq!(back, c);
        assert!(Container::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(Container::from_bytes(b"NOTMAGIC").is_err());
    }
}
