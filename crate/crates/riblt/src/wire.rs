//! Byte-exact stream serialization.
//!
//! Stream layout: a [`StreamHeader`] followed by cells in index order. Each
//! cell is `sum` (raw item bytes), `checksum` (8 bytes little-endian), and a
//! compressed count: the receiver knows the sender's set size N and the cell
//! index i, so only the delta `count - round(N * rho(i))` is sent, zigzag
//! mapped and VLQ encoded. Deltas concentrate near zero, so most cells spend
//! one byte on the count.
//!
//! VLQ here is 7 data bits per byte, least significant group first, high bit
//! set on every byte except the last. Rounding of the expected count is
//! ties-to-even. Both conventions are wire constants; see `docs/wire.md`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::mapping::MappingProfile;
use crate::symbol::CodedSymbol;

pub const MAGIC: [u8; 6] = *b"RIBLT1";
pub const VERSION: u8 = 1;
pub const FLAG_IRREGULAR: u8 = 0b0000_0001;

/// Longest legal VLQ for a 64-bit value.
pub const MAX_VLQ_LEN: usize = 10;

/// Stream preamble carrying what the receiver needs to undo the count
/// compression: the item length and the sender's set size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamHeader {
    pub item_len: usize,
    pub set_size: u64,
    pub irregular: bool,
}

pub fn write_vlq<W: Write>(w: &mut W, mut v: u64) -> Result<usize> {
    let mut buf = [0u8; MAX_VLQ_LEN];
    let mut n = 0;
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            buf[n] = byte;
            n += 1;
            break;
        }
        buf[n] = byte | 0x80;
        n += 1;
    }
    w.write_all(&buf[..n])?;
    Ok(n)
}

pub fn read_vlq<R: Read>(r: &mut R) -> Result<u64> {
    let mut value = 0u64;
    let mut shift = 0u32;
    loop {
        let mut byte = [0u8; 1];
        r.read_exact(&mut byte)?;
        let b = byte[0];
        if shift == 63 && (b & 0x7f) > 1 {
            return Err(Error::Malformed("VLQ overflows 64 bits".into()));
        }
        value |= u64::from(b & 0x7f) << shift;
        if b & 0x80 == 0 {
            return Ok(value);
        }
        shift += 7;
        if shift >= 64 {
            return Err(Error::Malformed("VLQ longer than 10 bytes".into()));
        }
    }
}

pub fn zigzag_encode(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

pub fn zigzag_decode(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

/// Expected count of cell `i` for a set of `set_size` items:
/// `round(N * rho(i))`, ties to even. Identical on both sides by contract.
pub fn expected_count(profile: &MappingProfile, i: u64, set_size: u64) -> i64 {
    (set_size as f64 * profile.mapping_probability(i)).round_ties_even() as i64
}

pub fn write_header<W: Write>(w: &mut W, header: &StreamHeader) -> Result<usize> {
    w.write_all(&MAGIC)?;
    w.write_all(&[VERSION])?;
    let flags = if header.irregular { FLAG_IRREGULAR } else { 0 };
    w.write_all(&[flags])?;
    let mut n = MAGIC.len() + 2;
    n += write_vlq(w, header.item_len as u64)?;
    n += write_vlq(w, header.set_size)?;
    Ok(n)
}

pub fn read_header<R: Read>(r: &mut R) -> Result<StreamHeader> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Malformed(format!("bad magic {magic:02x?}")));
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)?;
    if version[0] != VERSION {
        return Err(Error::Malformed(format!("unsupported version {}", version[0])));
    }
    let mut flags = [0u8; 1];
    r.read_exact(&mut flags)?;
    if flags[0] & !FLAG_IRREGULAR != 0 {
        return Err(Error::Malformed(format!("unknown flags {:#04x}", flags[0])));
    }
    let item_len = read_vlq(r)?;
    if item_len == 0 || item_len > u32::MAX as u64 {
        return Err(Error::Malformed(format!("implausible item length {item_len}")));
    }
    let set_size = read_vlq(r)?;
    Ok(StreamHeader {
        item_len: item_len as usize,
        set_size,
        irregular: flags[0] & FLAG_IRREGULAR != 0,
    })
}

/// Serialize the cell at stream index `i`. Returns bytes written.
pub fn write_cell<W: Write>(
    w: &mut W,
    cell: &CodedSymbol,
    i: u64,
    set_size: u64,
    profile: &MappingProfile,
) -> Result<usize> {
    w.write_all(&cell.sum)?;
    w.write_all(&cell.checksum.to_le_bytes())?;
    let delta = cell.count - expected_count(profile, i, set_size);
    let n = write_vlq(w, zigzag_encode(delta))?;
    Ok(cell.sum.len() + 8 + n)
}

/// Parse the cell at stream index `i`; the inverse of [`write_cell`].
pub fn read_cell<R: Read>(
    r: &mut R,
    i: u64,
    set_size: u64,
    item_len: usize,
    profile: &MappingProfile,
) -> Result<CodedSymbol> {
    let mut sum = vec![0u8; item_len];
    r.read_exact(&mut sum)?;
    let mut checksum = [0u8; 8];
    r.read_exact(&mut checksum)?;
    let delta = zigzag_decode(read_vlq(r)?);
    Ok(CodedSymbol {
        sum,
        checksum: u64::from_le_bytes(checksum),
        count: expected_count(profile, i, set_size) + delta,
    })
}
