//! Binary checkpoint format for named tensors.
//!
//! Layout: the ASCII magic `DRLR`, a little-endian u32 format version, then
//! one record per tensor until end of file. Each record is a u32 name
//! length, the UTF-8 name, a u32 rank, u32 dimensions, and the values as
//! little-endian f64 words. Values round-trip bit-exactly.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"DRLR";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Sanity bound on name length and tensor rank so a corrupted header cannot
/// trigger an enormous allocation.
const MAX_NAME_LEN: u32 = 4096;
const MAX_RANK: u32 = 16;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o failed: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file: expected magic {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint truncated while reading {context}")]
    Truncated { context: String },
    #[error("checkpoint record malformed: {0}")]
    Malformed(String),
}

pub fn save_checkpoint(
    path: &Path,
    entries: &[(String, &Tensor)],
) -> Result<(), CheckpointError> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    save_checkpoint_to(&mut writer, entries)?;
    writer.flush()?;
    Ok(())
}

pub fn save_checkpoint_to(
    writer: &mut impl Write,
    entries: &[(String, &Tensor)],
) -> Result<(), CheckpointError> {
    writer.write_all(&CHECKPOINT_MAGIC)?;
    writer.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    for (name, tensor) in entries {
        let name_bytes = name.as_bytes();
        writer.write_all(&(name_bytes.len() as u32).to_le_bytes())?;
        writer.write_all(name_bytes)?;
        writer.write_all(&(tensor.rank() as u32).to_le_bytes())?;
        for &dim in tensor.shape() {
            writer.write_all(&(dim as u32).to_le_bytes())?;
        }
        for &value in tensor.data() {
            writer.write_all(&value.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Vec<(String, Tensor)>, CheckpointError> {
    let file = File::open(path)?;
    load_checkpoint_from(&mut BufReader::new(file))
}

pub fn load_checkpoint_from(
    reader: &mut impl Read,
) -> Result<Vec<(String, Tensor)>, CheckpointError> {
    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| CheckpointError::Truncated {
            context: "magic".to_string(),
        })?;
    if magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic {
            expected: CHECKPOINT_MAGIC,
            found: magic,
        });
    }
    let version = read_u32(reader, "version")?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }

    let mut entries = Vec::new();
    loop {
        let mut len_bytes = [0u8; 4];
        match reader.read(&mut len_bytes[..1])? {
            0 => break, // clean end of file between records
            _ => reader
                .read_exact(&mut len_bytes[1..])
                .map_err(|_| CheckpointError::Truncated {
                    context: "record header".to_string(),
                })?,
        }
        let name_len = u32::from_le_bytes(len_bytes);
        if name_len == 0 || name_len > MAX_NAME_LEN {
            return Err(CheckpointError::Malformed(format!(
                "name length {name_len} out of range"
            )));
        }
        let mut name_bytes = vec![0u8; name_len as usize];
        reader
            .read_exact(&mut name_bytes)
            .map_err(|_| CheckpointError::Truncated {
                context: "record name".to_string(),
            })?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| CheckpointError::Malformed("name is not UTF-8".to_string()))?;

        let rank = read_u32(reader, &format!("rank of {name}"))?;
        if rank == 0 || rank > MAX_RANK {
            return Err(CheckpointError::Malformed(format!(
                "rank {rank} of {name} out of range"
            )));
        }
        let mut shape = Vec::with_capacity(rank as usize);
        let mut len = 1usize;
        for d in 0..rank {
            let dim = read_u32(reader, &format!("dimension {d} of {name}"))? as usize;
            if dim == 0 {
                return Err(CheckpointError::Malformed(format!(
                    "zero dimension in {name}"
                )));
            }
            len = len
                .checked_mul(dim)
                .ok_or_else(|| CheckpointError::Malformed(format!("{name} overflows usize")))?;
            shape.push(dim);
        }
        let mut data = vec![0.0f64; len];
        let mut buf = [0u8; 8];
        for v in data.iter_mut() {
            reader
                .read_exact(&mut buf)
                .map_err(|_| CheckpointError::Truncated {
                    context: format!("values of {name}"),
                })?;
            *v = f64::from_le_bytes(buf);
        }
        let tensor = Tensor::from_vec(&shape, data)
            .map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        entries.push((name, tensor));
    }
    Ok(entries)
}

fn read_u32(reader: &mut impl Read, context: &str) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    reader
        .read_exact(&mut buf)
        .map_err(|_| CheckpointError::Truncated {
            context: context.to_string(),
        })?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::uniform_init;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn sample_entries() -> Vec<(String, Tensor)> {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        vec![
            ("conv1.kernel".to_string(), uniform_init(&[2, 5, 1, 4], 0.5, &mut rng)),
            ("lstm.bias".to_string(), uniform_init(&[12], 0.5, &mut rng)),
            ("head.weight".to_string(), uniform_init(&[3, 7], 0.5, &mut rng)),
        ]
    }

    #[test]
    fn round_trip_is_byte_exact() {
        let entries = sample_entries();
        let refs: Vec<(String, &Tensor)> =
            entries.iter().map(|(n, t)| (n.clone(), t)).collect();
        let mut first = Vec::new();
        save_checkpoint_to(&mut first, &refs).unwrap();

        let loaded = load_checkpoint_from(&mut first.as_slice()).unwrap();
        assert_eq!(loaded.len(), entries.len());
        for ((n1, t1), (n2, t2)) in loaded.iter().zip(&entries) {
            assert_eq!(n1, n2);
            assert_eq!(t1.shape(), t2.shape());
            // Bit-level comparison, not numeric closeness.
            for (a, b) in t1.data().iter().zip(t2.data()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        let reloaded_refs: Vec<(String, &Tensor)> =
            loaded.iter().map(|(n, t)| (n.clone(), t)).collect();
        let mut second = Vec::new();
        save_checkpoint_to(&mut second, &reloaded_refs).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let entries = sample_entries();
        let refs: Vec<(String, &Tensor)> =
            entries.iter().map(|(n, t)| (n.clone(), t)).collect();
        let mut bytes = Vec::new();
        save_checkpoint_to(&mut bytes, &refs).unwrap();
        bytes[0] = b'X';
        let err = load_checkpoint_from(&mut bytes.as_slice()).unwrap_err();
        assert!(matches!(err, CheckpointError::BadMagic { .. }));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let entries = sample_entries();
        let refs: Vec<(String, &Tensor)> =
            entries.iter().map(|(n, t)| (n.clone(), t)).collect();
        let mut bytes = Vec::new();
        save_checkpoint_to(&mut bytes, &refs).unwrap();
        bytes.truncate(bytes.len() - 5);
        let err = load_checkpoint_from(&mut bytes.as_slice()).unwrap_err();
        assert!(matches!(err, CheckpointError::Truncated { .. }));
    }

    #[test]
    fn unsupported_version_is_rejected() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&CHECKPOINT_MAGIC);
        bytes.extend_from_slice(&99u32.to_le_bytes());
        let err = load_checkpoint_from(&mut bytes.as_slice()).unwrap_err();
        assert!(matches!(err, CheckpointError::UnsupportedVersion(99)));
    }

    #[test]
    fn file_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let entries = sample_entries();
        let refs: Vec<(String, &Tensor)> =
            entries.iter().map(|(n, t)| (n.clone(), t)).collect();
        save_checkpoint(&path, &refs).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.len(), 3);
        assert_eq!(loaded[0].0, "conv1.kernel");
        assert_eq!(loaded[0].1.shape(), &[2, 5, 1, 4]);
    }
}
