//! Named-tensor container used for weights, feature pyramids, and
//! debug dumps.
//!
//! Layout (little-endian): 8-byte magic `PMNTNSR1`, a u32 manifest
//! byte length, the UTF-8 manifest (one `name dtype d0xd1x...` line
//! per tensor), the raw tensor payloads in manifest order, and a
//! trailing CRC-32 (IEEE) of the payload bytes.

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"PMNTNSR1";

fn crc32_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    for (i, slot) in table.iter_mut().enumerate() {
        let mut c = i as u32;
        for _ in 0..8 {
            c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
        }
        *slot = c;
    }
    table
}

/// CRC-32 (IEEE 802.3) of a byte slice.
pub fn crc32(bytes: &[u8]) -> u32 {
    let table = crc32_table();
    let mut c = 0xFFFF_FFFFu32;
    for &b in bytes {
        c = table[((c ^ b as u32) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ 0xFFFF_FFFF
}

/// One named tensor ready for writing.
#[derive(Debug, Clone)]
pub struct Entry {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Entry {
    pub fn from_tensor(name: &str, t: &Tensor) -> Entry {
        Entry {
            name: name.to_string(),
            shape: t.shape().to_vec(),
            values: t.data().to_vec(),
        }
    }

    pub fn into_tensor(self) -> Result<Tensor> {
        Tensor::new(self.shape, self.values)
    }
}

/// Serialize entries to container bytes.
pub fn to_bytes(entries: &[Entry]) -> Result<Vec<u8>> {
    let mut manifest = String::new();
    for e in entries {
        if e.name.contains(char::is_whitespace) || e.name.is_empty() {
            return Err(Error::Format(format!("bad tensor name '{}'", e.name)));
        }
        let count: usize = e.shape.iter().product();
        if count != e.values.len() {
            return Err(Error::Dimension(format!(
                "tensor '{}' shape {:?} != {} values",
                e.name,
                e.shape,
                e.values.len()
            )));
        }
        let dims: Vec<String> = e.shape.iter().map(|d| d.to_string()).collect();
        manifest.push_str(&format!("{} f64 {}\n", e.name, dims.join("x")));
    }
    let mut payload = Vec::new();
    for e in entries {
        for &v in &e.values {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
    out.extend_from_slice(manifest.as_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32(&payload).to_le_bytes());
    Ok(out)
}

/// Parse container bytes back into entries.
pub fn from_bytes(bytes: &[u8]) -> Result<Vec<Entry>> {
    if bytes.len() < 12 {
        return Err(Error::Format("container truncated before header".into()));
    }
    if &bytes[0..8] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, want {:?}",
            &bytes[0..8],
            MAGIC
        )));
    }
    let mlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if bytes.len() < 12 + mlen {
        return Err(Error::Format("container truncated inside manifest".into()));
    }
    let manifest = std::str::from_utf8(&bytes[12..12 + mlen])
        .map_err(|_| Error::Format("manifest is not UTF-8".into()))?;
    let mut entries: Vec<(String, Vec<usize>)> = Vec::new();
    for line in manifest.lines() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(' ').collect();
        if parts.len() != 3 {
            return Err(Error::Format(format!("bad manifest line '{line}'")));
        }
        if parts[1] != "f64" {
            return Err(Error::Format(format!(
                "unsupported dtype '{}' for tensor '{}'",
                parts[1], parts[0]
            )));
        }
        let shape: Result<Vec<usize>> = parts[2]
            .split('x')
            .map(|d| {
                d.parse::<usize>()
                    .map_err(|_| Error::Format(format!("bad dimension '{d}' in '{line}'")))
            })
            .collect();
        entries.push((parts[0].to_string(), shape?));
    }
    let total: usize = entries
        .iter()
        .map(|(_, s)| s.iter().product::<usize>())
        .sum();
    let payload_start = 12 + mlen;
    let payload_end = payload_start + total * 8;
    if bytes.len() < payload_end + 4 {
        return Err(Error::Format(format!(
            "container truncated: payload wants {} bytes plus checksum",
            total * 8
        )));
    }
    let payload = &bytes[payload_start..payload_end];
    let stored = u32::from_le_bytes(bytes[payload_end..payload_end + 4].try_into().unwrap());
    let actual = crc32(payload);
    if stored != actual {
        return Err(Error::Format(format!(
            "payload checksum mismatch: stored {stored:#010x}, computed {actual:#010x}"
        )));
    }
    let mut out = Vec::with_capacity(entries.len());
    let mut off = 0usize;
    for (name, shape) in entries {
        let count: usize = shape.iter().product();
        let mut values = Vec::with_capacity(count);
        for i in 0..count {
            let b = &payload[(off + i) * 8..(off + i + 1) * 8];
            values.push(f64::from_le_bytes(b.try_into().unwrap()));
        }
        off += count;
        out.push(Entry {
            name,
            shape,
            values,
        });
    }
    Ok(out)
}

pub fn write_file(path: &Path, entries: &[Entry]) -> Result<()> {
    let bytes = to_bytes(entries)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<Vec<Entry>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    from_bytes(&bytes).map_err(|e| e.with_context(&path.display().to_string()))
}
