//! On-disk cache of enumerated level clouds.
//!
//! One record per (content hash, level, kind, mode). Records are
//! self-checking: a trailing SHA-256 over the body detects any tampering,
//! and a corrupt record is reported so the caller can recompute and
//! rewrite it transparently. Hits must reproduce the original cloud
//! bit for bit, so native chamber coordinates and the generating words
//! are stored verbatim.

use std::path::{Path, PathBuf};

use jointspec::mat::{GroupFrame, ProjectionKind};
use jointspec::spectrum::{CloudMode, Projection, SpectrumCloud};
use jointspec::words::Letter;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

const MAGIC: &[u8; 8] = b"JSPECC01";
const HEADER_LEN: usize = 8 + 32 + 4 + 1 + 1 + 2 + 4 + 8;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheKey {
    pub content: [u8; 32],
    pub level: u32,
    pub kind: u8,
    pub mode: u8,
}

pub fn kind_byte(kind: ProjectionKind) -> u8 {
    match kind {
        ProjectionKind::Cartan => 0,
        ProjectionKind::Jordan => 1,
    }
}

pub fn mode_byte(mode: CloudMode) -> u8 {
    match mode {
        CloudMode::Full => 0,
        CloudMode::Necklace => 1,
    }
}

impl CacheKey {
    pub fn new(content: [u8; 32], level: u32, kind: ProjectionKind, mode: CloudMode) -> Self {
        Self { content, level, kind: kind_byte(kind), mode: mode_byte(mode) }
    }

    pub fn filename(&self) -> String {
        let hex: String = self.content[..16].iter().map(|b| format!("{b:02x}")).collect();
        format!("{hex}-{}-{}-{}.jsc", self.level, self.kind, self.mode)
    }
}

/// SHA-256 over length-prefixed parts, immune to concatenation ambiguity.
pub fn content_hash(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

/// Serializes a cloud into a cache record for `key`.
pub fn serialize_cloud(key: &CacheKey, cloud: &SpectrumCloud) -> Vec<u8> {
    let cdim = cloud.chamber_dim();
    let count = cloud.len() as u64;
    let coords = cloud.coords_flat();
    let words = cloud.words_flat();
    let mut out = Vec::with_capacity(HEADER_LEN + coords.len() * 8 + words.len() + CHECKSUM_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&key.content);
    out.extend_from_slice(&key.level.to_le_bytes());
    out.push(key.kind);
    out.push(key.mode);
    out.extend_from_slice(&[0u8; 2]);
    out.extend_from_slice(&(cdim as u32).to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for c in coords {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out.extend_from_slice(words);
    let checksum: [u8; 32] = Sha256::digest(&out).into();
    out.extend_from_slice(&checksum);
    out
}

fn corrupt(msg: impl Into<String>) -> CliError {
    CliError::CorruptCache(msg.into())
}

/// Rebuilds the cloud from a record, verifying checksum and key fields.
pub fn deserialize_cloud(
    bytes: &[u8],
    key: &CacheKey,
    frame: &GroupFrame,
    projection: Projection,
) -> CliResult<SpectrumCloud> {
    if bytes.len() < HEADER_LEN + CHECKSUM_LEN {
        return Err(corrupt("record shorter than header"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    let checksum: [u8; 32] = Sha256::digest(body).into();
    if checksum != tail {
        return Err(corrupt("checksum mismatch"));
    }
    if &body[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    if body[8..40] != key.content {
        return Err(corrupt("content hash mismatch"));
    }
    let level = u32::from_le_bytes(body[40..44].try_into().unwrap());
    let kind = body[44];
    let mode = body[45];
    if level != key.level || kind != key.kind || mode != key.mode {
        return Err(corrupt("key fields mismatch"));
    }
    let cdim = u32::from_le_bytes(body[48..52].try_into().unwrap()) as usize;
    if cdim != frame.chamber_dim() {
        return Err(corrupt("chamber dimension mismatch"));
    }
    let count = u64::from_le_bytes(body[52..60].try_into().unwrap()) as usize;
    let coords_bytes = count
        .checked_mul(cdim)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| corrupt("overflowing point count"))?;
    let words_bytes = count * level as usize;
    if body.len() != HEADER_LEN + coords_bytes + words_bytes {
        return Err(corrupt("record length mismatch"));
    }
    let mut coords = Vec::with_capacity(count * cdim);
    let mut off = HEADER_LEN;
    for _ in 0..count * cdim {
        coords.push(f64::from_le_bytes(body[off..off + 8].try_into().unwrap()));
        off += 8;
    }
    let words: Vec<Letter> = body[off..].to_vec();
    let kind = if key.kind == 0 { ProjectionKind::Cartan } else { ProjectionKind::Jordan };
    let mode = if key.mode == 0 { CloudMode::Full } else { CloudMode::Necklace };
    SpectrumCloud::from_parts(level, kind, mode, projection, frame.clone(), coords, words)
        .map_err(|e| corrupt(format!("invalid cloud payload: {e}")))
}

/// Reads a record if present. Missing file: `Ok(None)`. Corrupt record:
/// `Err(CorruptCache)`, so the caller can recompute and rewrite.
pub fn cache_get(
    dir: &Path,
    key: &CacheKey,
    frame: &GroupFrame,
    projection: Projection,
) -> CliResult<Option<SpectrumCloud>> {
    let path = dir.join(key.filename());
    let bytes = match std::fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    deserialize_cloud(&bytes, key, frame, projection).map(Some)
}

/// Writes a record atomically (temp file plus rename) and returns its path.
pub fn cache_put(dir: &Path, key: &CacheKey, cloud: &SpectrumCloud) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(key.filename());
    let tmp = dir.join(format!("{}.tmp", key.filename()));
    std::fs::write(&tmp, serialize_cloud(key, cloud))?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use jointspec::mat::SquareMatrix;
    use jointspec::spectrum::enumerate_level;
    use jointspec::words::Budget;

    fn sample_cloud() -> (SpectrumCloud, GroupFrame) {
        let frame = GroupFrame::gl(2);
        let gens = vec![
            SquareMatrix::diagonal(&[2.0, 1.0]).with_label("a"),
            SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 1.0]]).with_label("b"),
        ];
        let cloud = enumerate_level(
            &gens,
            &frame,
            4,
            ProjectionKind::Jordan,
            CloudMode::Full,
            Projection::Coords(0, 1),
            &mut Budget::unlimited(),
        )
        .unwrap();
        (cloud, frame)
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let (cloud, frame) = sample_cloud();
        let key = CacheKey::new(content_hash(&[b"sample"]), 4, ProjectionKind::Jordan, CloudMode::Full);
        let dir = tempfile::tempdir().unwrap();
        let path = cache_put(dir.path(), &key, &cloud).unwrap();
        assert!(path.exists());
        let back = cache_get(dir.path(), &key, &frame, Projection::Coords(0, 1)).unwrap().unwrap();
        assert_eq!(cloud.coords_flat(), back.coords_flat());
        assert_eq!(cloud.words_flat(), back.words_flat());
        assert_eq!(serialize_cloud(&key, &cloud), serialize_cloud(&key, &back));
    }

    #[test]
    fn missing_record_is_a_clean_miss() {
        let key = CacheKey::new(content_hash(&[b"absent"]), 3, ProjectionKind::Cartan, CloudMode::Full);
        let dir = tempfile::tempdir().unwrap();
        let got = cache_get(dir.path(), &key, &GroupFrame::gl(2), Projection::Coords(0, 1)).unwrap();
        assert!(got.is_none());
    }

    #[test]
    fn any_tampered_byte_is_detected() {
        let (cloud, frame) = sample_cloud();
        let key = CacheKey::new(content_hash(&[b"tamper"]), 4, ProjectionKind::Jordan, CloudMode::Full);
        let dir = tempfile::tempdir().unwrap();
        let path = cache_put(dir.path(), &key, &cloud).unwrap();
        let original = std::fs::read(&path).unwrap();
        for pos in [0, 20, 45, HEADER_LEN + 3, original.len() - 1] {
            let mut bytes = original.clone();
            bytes[pos] ^= 0x01;
            std::fs::write(&path, &bytes).unwrap();
            match cache_get(dir.path(), &key, &frame, Projection::Coords(0, 1)) {
                Err(CliError::CorruptCache(_)) => {}
                other => panic!("byte {pos}: expected corruption, got {other:?}"),
            }
        }
    }

    #[test]
    fn key_filename_distinguishes_level_kind_mode() {
        let h = content_hash(&[b"x"]);
        let a = CacheKey::new(h, 4, ProjectionKind::Jordan, CloudMode::Full).filename();
        let b = CacheKey::new(h, 5, ProjectionKind::Jordan, CloudMode::Full).filename();
        let c = CacheKey::new(h, 4, ProjectionKind::Cartan, CloudMode::Full).filename();
        let d = CacheKey::new(h, 4, ProjectionKind::Jordan, CloudMode::Necklace).filename();
        let set: std::collections::HashSet<_> = [a, b, c, d].into_iter().collect();
        assert_eq!(set.len(), 4);
    }

    #[test]
    fn content_hash_is_length_prefixed() {
        // "ab" + "c" must not collide with "a" + "bc".
        assert_ne!(content_hash(&[b"ab", b"c"]), content_hash(&[b"a", b"bc"]));
    }
}
