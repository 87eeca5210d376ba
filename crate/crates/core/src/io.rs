//! On-disk formats: a simple seekable binary stream file and JSON
//! metadata.
//!
//! Stream file layout: a 16-byte header (the magic `DBSTRM01`, then the
//! element count as a 64-bit little-endian integer) followed by the keys
//! as 64-bit little-endian unsigned integers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dist::Key;
use crate::error::{Error, Result};
use crate::stream::{StreamBuffer, StreamMetadata};

pub const STREAM_MAGIC: &[u8; 8] = b"DBSTRM01";

pub fn write_stream_file(path: &Path, keys: &[Key]) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    writer.write_all(STREAM_MAGIC)?;
    writer.write_all(&(keys.len() as u64).to_le_bytes())?;
    for key in keys {
        writer.write_all(&key.0.to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_stream_file(path: &Path) -> Result<Vec<Key>> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    reader.read_exact(&mut magic)?;
    if &magic != STREAM_MAGIC {
        return Err(Error::Format(format!(
            "{} is not a stream file (bad magic)",
            path.display()
        )));
    }
    let mut len_bytes = [0u8; 8];
    reader.read_exact(&mut len_bytes)?;
    let n = u64::from_le_bytes(len_bytes);
    let mut keys = Vec::with_capacity(n as usize);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        reader.read_exact(&mut buf)?;
        keys.push(Key(u64::from_le_bytes(buf)));
    }
    if reader.read(&mut buf)? != 0 {
        return Err(Error::Format(format!(
            "{} has trailing bytes beyond the declared {n} keys",
            path.display()
        )));
    }
    Ok(keys)
}

pub fn write_metadata_file(path: &Path, metadata: &StreamMetadata) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut writer, metadata)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

pub fn read_metadata_file(path: &Path) -> Result<StreamMetadata> {
    let reader = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(reader)?)
}

/// Loads a stream and its metadata, checking they describe each other.
pub fn load_stream(stream_path: &Path, metadata_path: &Path) -> Result<StreamBuffer> {
    let keys = read_stream_file(stream_path)?;
    let metadata = read_metadata_file(metadata_path)?;
    if keys.len() as u64 != metadata.n {
        return Err(Error::Format(format!(
            "stream holds {} keys but the metadata declares {}",
            keys.len(),
            metadata.n
        )));
    }
    Ok(StreamBuffer { keys, metadata })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{DistSpec, DriftSpec};

    #[test]
    fn stream_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stream.bin");
        let keys: Vec<Key> = (0..1000u64).map(|i| Key(i * 7 % 31 + 1)).collect();
        write_stream_file(&path, &keys).unwrap();
        assert_eq!(read_stream_file(&path).unwrap(), keys);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("not_a_stream.bin");
        std::fs::write(&path, b"NOTMAGIC\0\0\0\0\0\0\0\0").unwrap();
        assert!(matches!(read_stream_file(&path), Err(Error::Format(_))));
    }

    #[test]
    fn metadata_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metadata.json");
        let md = StreamMetadata::new(
            500,
            16,
            9,
            vec![DriftSpec::abrupt(
                1,
                DistSpec::Zipf {
                    exponent: 1.0,
                    perm_seed: Some(3),
                },
                DistSpec::Zipf {
                    exponent: 2.0,
                    perm_seed: Some(4),
                },
            )],
        );
        write_metadata_file(&path, &md).unwrap();
        assert_eq!(read_metadata_file(&path).unwrap(), md);
    }

    #[test]
    fn load_checks_consistency() {
        let dir = tempfile::tempdir().unwrap();
        let stream_path = dir.path().join("stream.bin");
        let md_path = dir.path().join("metadata.json");
        write_stream_file(&stream_path, &[Key(1), Key(2)]).unwrap();
        let md = StreamMetadata::new(3, 4, 0, vec![]);
        write_metadata_file(&md_path, &md).unwrap();
        assert!(matches!(
            load_stream(&stream_path, &md_path),
            Err(Error::Format(_))
        ));
    }
}
