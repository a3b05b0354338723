//! Set files: binary (VLQ item length, then N*len raw bytes) or `--hex`
//! (newline-delimited hex strings of equal length).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use riblt::symbol::Item;
use riblt::wire;
use riblt::{Error, Result};

pub fn read_set_file(path: &Path, hex: bool) -> Result<(usize, Vec<Item>)> {
    if hex {
        read_hex(path)
    } else {
        read_binary(path)
    }
}

fn read_binary(path: &Path) -> Result<(usize, Vec<Item>)> {
    let mut r = BufReader::new(File::open(path)?);
    let item_len = wire::read_vlq(&mut r)? as usize;
    if item_len == 0 {
        return Err(Error::Malformed("set file declares zero item length".into()));
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if rest.len() % item_len != 0 {
        return Err(Error::Malformed(format!(
            "set file body ({} bytes) is not a multiple of the item length {item_len}",
            rest.len()
        )));
    }
    let items = rest
        .chunks_exact(item_len)
        .map(Item::from)
        .collect();
    Ok((item_len, items))
}

fn read_hex(path: &Path) -> Result<(usize, Vec<Item>)> {
    let r = BufReader::new(File::open(path)?);
    let mut items: Vec<Item> = Vec::new();
    let mut item_len = 0usize;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bytes = from_hex(line).ok_or_else(|| {
            Error::Malformed(format!("line {}: invalid hex", lineno + 1))
        })?;
        if item_len == 0 {
            item_len = bytes.len();
        } else if bytes.len() != item_len {
            return Err(Error::Malformed(format!(
                "line {}: {} bytes, expected {item_len}",
                lineno + 1,
                bytes.len()
            )));
        }
        items.push(Item::new(bytes));
    }
    if item_len == 0 {
        return Err(Error::Malformed(
            "hex set file is empty; the item length cannot be inferred".into(),
        ));
    }
    Ok((item_len, items))
}

pub fn write_set_file(path: &Path, item_len: usize, items: &[Item], hex: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if hex {
        for item in items {
            writeln!(w, "{}", to_hex(item.as_bytes()))?;
        }
    } else {
        wire::write_vlq(&mut w, item_len as u64)?;
        for item in items {
            w.write_all(item.as_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn from_hex(s: &str) -> Option<Vec<u8>> {
    if s.len() % 2 != 0 {
        return None;
    }
    (0..s.len() / 2)
        .map(|i| u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok())
        .collect()
}
