//! `GFLD` binary field files: a 24-byte header followed by little-endian
//! `f64` values in channel-major, row-major order.

use std::io::{Read, Write};
use std::path::Path;

use gino_core::grid::Resolution;
use gino_core::GridField;

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"GFLD";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;
const DTYPE_F64_LE: u8 = 1;
const CHANNELS: u32 = 2;

/// Exact file size for an `n × n` two-channel field.
pub fn file_len(n: usize) -> usize {
    HEADER_LEN + 16 * n * n
}

pub fn encode_field(f: &GridField) -> Vec<u8> {
    let n = f.res().n();
    let mut out = Vec::with_capacity(file_len(n));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&CHANNELS.to_le_bytes());
    out.push(DTYPE_F64_LE);
    out.resize(HEADER_LEN, 0);
    for v in f.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn corrupt(offset: usize, reason: String) -> CliError {
    CliError::CorruptFile {
        offset: offset as u64,
        reason,
    }
}

pub fn decode_field(bytes: &[u8]) -> CliResult<GridField> {
    if bytes.len() < HEADER_LEN {
        return Err(corrupt(
            bytes.len(),
            format!(
                "expected at least {HEADER_LEN} header bytes, found {}",
                bytes.len()
            ),
        ));
    }
    if &bytes[0..4] != MAGIC {
        return Err(corrupt(0, format!("bad magic {:?}", &bytes[0..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(corrupt(4, format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let channels = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes"));
    if channels != CHANNELS {
        return Err(corrupt(
            10,
            format!("expected {CHANNELS} channels, found {channels}"),
        ));
    }
    if bytes[14] != DTYPE_F64_LE {
        return Err(corrupt(14, format!("unknown dtype code {}", bytes[14])));
    }
    let res = Resolution::new(n).map_err(|e| corrupt(6, e.to_string()))?;
    let expected = file_len(n);
    if bytes.len() != expected {
        return Err(corrupt(
            bytes.len().min(expected),
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(GridField::from_vec(res, data)?)
}

pub fn write_field(path: &Path, f: &GridField) -> CliResult<()> {
    std::fs::File::create(path)?.write_all(&encode_field(f))?;
    Ok(())
}

pub fn read_field(path: &Path) -> CliResult<GridField> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_field(&bytes)
}
