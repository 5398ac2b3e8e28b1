//! Binary embedding exchange format:
//!
//! ```text
//! "ACTEMB01"  u32 count  u32 dim
//! count x { u32 id_len, id bytes (UTF-8), u32 index, dim x f32 }
//! ```
//!
//! All integers and floats are little-endian.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Embedding, FeatureError, Provider, EMBEDDING_DIM};
use crate::ingest::SnippetRef;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"ACTEMB01";

/// Writes embeddings via a temporary sibling file and an atomic rename.
pub fn write_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    embeddings: &[Embedding<T>],
) -> Result<(), FeatureError> {
    let path = path.as_ref();
    let dim = embeddings.first().map_or(EMBEDDING_DIM, |e| e.vector.len());
    for e in embeddings {
        if e.vector.len() != dim {
            return Err(FeatureError::DimensionMismatch {
                expected: dim,
                found: e.vector.len(),
            });
        }
    }
    let tmp = tmp_sibling(path);
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(MAGIC)?;
        w.write_all(&(embeddings.len() as u32).to_le_bytes())?;
        w.write_all(&(dim as u32).to_le_bytes())?;
        for e in embeddings {
            let id = e.snippet.clip_id.as_bytes();
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id)?;
            w.write_all(&e.snippet.index.to_le_bytes())?;
            for &v in &e.vector {
                w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
            }
        }
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads an exchange file, requiring the standard 1,280 dimensions.
pub fn import_embeddings<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<Embedding<T>>, FeatureError> {
    read_embeddings(path, Some(EMBEDDING_DIM))
}

/// Reads an exchange file. `expected_dim = None` accepts whatever the
/// header declares.
pub fn read_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<Vec<Embedding<T>>, FeatureError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(FeatureError::ParseError("bad magic".into()));
    }
    let count = read_u32(&mut r, "count")? as usize;
    let dim = read_u32(&mut r, "dim")? as usize;
    if let Some(expected) = expected_dim {
        if dim != expected {
            return Err(FeatureError::DimensionMismatch { expected, found: dim });
        }
    }

    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count.min(1 << 20));
    let mut row = vec![0u8; dim * 4];
    for i in 0..count {
        let id_len = read_u32(&mut r, "id length")? as usize;
        if id_len > 1 << 16 {
            return Err(FeatureError::ParseError(format!("row {i}: clip id length {id_len}")));
        }
        let mut id = vec![0u8; id_len];
        read_exact(&mut r, &mut id, "clip id")?;
        let clip_id = String::from_utf8(id)
            .map_err(|_| FeatureError::ParseError(format!("row {i}: clip id is not UTF-8")))?;
        let index = read_u32(&mut r, "snippet index")?;
        read_exact(&mut r, &mut row, "vector")?;
        let vector: Vec<T> = row
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .map(|v| T::from_f32(v).unwrap_or_else(T::nan))
            .collect();
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::ParseError(format!("row {i}: non-finite component")));
        }
        let snippet = SnippetRef::new(clip_id, index);
        if !seen.insert(snippet.clone()) {
            return Err(FeatureError::DuplicateSnippetRef(snippet));
        }
        out.push(Embedding {
            snippet,
            vector,
            provider: Provider::Imported,
        });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(FeatureError::ParseError("trailing bytes after last row".into()));
    }
    Ok(out)
}

fn tmp_sibling(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<(), FeatureError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => FeatureError::ParseError(format!("truncated while reading {what}")),
        _ => FeatureError::Io(e),
    })
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32, FeatureError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(clip: &str, index: u32, dim: usize, seed: f64) -> Embedding {
        Embedding {
            snippet: SnippetRef::new(clip, index),
            vector: (0..dim).map(|i| (i as f64 * 0.25 + seed).sin()).collect(),
            provider: Provider::Reference,
        }
    }

    #[test]
    fn single_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.bin");
        write_embeddings(&p, &[emb("a", 3, 1280, 0.0)]).unwrap();
        let back: Vec<Embedding> = import_embeddings(&p).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].snippet, SnippetRef::new("a", 3));
        assert_eq!(back[0].provider, Provider::Imported);
        assert!((back[0].vector[5] - (1.25f64).sin()).abs() < 1e-7);
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 8 + 4 + 4 + 4 + 1 + 4 + 1280 * 4);
    }

    #[test]
    fn off_by_one_dimension_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.bin");
        write_embeddings(&p, &[emb("a", 0, 1279, 0.0)]).unwrap();
        assert!(matches!(
            import_embeddings::<f64>(&p),
            Err(FeatureError::DimensionMismatch { expected: 1280, found: 1279 })
        ));
        assert_eq!(read_embeddings::<f64>(&p, Some(1279)).unwrap().len(), 1);
    }

    #[test]
    fn duplicates_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.bin");
        write_embeddings(&p, &[emb("a", 0, 8, 0.0), emb("a", 0, 8, 1.0)]).unwrap();
        assert!(matches!(
            read_embeddings::<f64>(&p, None),
            Err(FeatureError::DuplicateSnippetRef(_))
        ));
    }

    #[test]
    fn truncated_and_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.bin");
        write_embeddings(&p, &[emb("a", 0, 8, 0.0)]).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_embeddings::<f64>(&p, None), Err(FeatureError::ParseError(_))));
        std::fs::write(&p, b"NOTMAGIC\0\0\0\0\0\0\0\0").unwrap();
        assert!(matches!(read_embeddings::<f64>(&p, None), Err(FeatureError::ParseError(_))));
    }

    #[test]
    fn many_rows_keep_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.bin");
        let rows: Vec<Embedding> = (0..84_499u32)
            .map(|i| Embedding {
                snippet: SnippetRef::new(format!("c{}", i / 600), i % 600),
                vector: vec![i as f64; 4],
                provider: Provider::Reference,
            })
            .collect();
        write_embeddings(&p, &rows).unwrap();
        let back: Vec<Embedding> = read_embeddings(&p, Some(4)).unwrap();
        assert_eq!(back.len(), 84_499);
        assert!(back.iter().zip(&rows).all(|(a, b)| a.snippet == b.snippet && a.vector == b.vector));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn round_trip_is_f32_exact(values in proptest::collection::vec(-1e6f32..1e6, 1..64)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("e.bin");
            let e = Embedding {
                snippet: SnippetRef::new("clip é", 7),
                vector: values.iter().map(|&v| f64::from(v)).collect::<Vec<f64>>(),
                provider: Provider::Reference,
            };
            write_embeddings(&p, std::slice::from_ref(&e)).unwrap();
            let back: Vec<Embedding> = read_embeddings(&p, None).unwrap();
            proptest::prop_assert_eq!(&back[0].vector, &e.vector);
            proptest::prop_assert_eq!(&back[0].snippet, &e.snippet);
        }
    }
}
