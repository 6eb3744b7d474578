//! Versioned binary bundles for trained models.
//!
//! Layout: magic, format version (u32 LE), kind tag (u16 LE length + UTF-8),
//! payload length (u64 LE), SHA-256 of the payload, bincode payload.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{AppError, Result};

pub const MAGIC: &[u8; 8] = b"RCAUDIT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BundleError {
    #[error("not a bundle file")]
    BadMagic,
    #[error("bundle format version {found} is newer than supported version {supported}")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("bundle holds a {found}, expected a {expected}")]
    KindMismatch { found: String, expected: String },
    #[error("bundle is truncated")]
    Truncated,
    #[error("bundle payload digest mismatch")]
    DigestMismatch,
    #[error("bundle payload could not be decoded: {0}")]
    Decode(String),
}

pub fn encode<T: Serialize>(kind: &str, value: &T) -> Result<Vec<u8>> {
    encode_with_version(kind, value, FORMAT_VERSION)
}

/// Encodes under an explicit format version; used to build fixtures.
pub fn encode_with_version<T: Serialize>(kind: &str, value: &T, version: u32) -> Result<Vec<u8>> {
    let payload = bincode::serialize(value).map_err(|e| BundleError::Decode(e.to_string()))?;
    let mut out = Vec::with_capacity(payload.len() + 64);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&version.to_le_bytes());
    let kind_len = u16::try_from(kind.len()).map_err(|_| AppError::data("bundle kind too long"))?;
    out.extend_from_slice(&kind_len.to_le_bytes());
    out.extend_from_slice(kind.as_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&Sha256::digest(&payload));
    out.extend_from_slice(&payload);
    Ok(out)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> std::result::Result<&'a [u8], BundleError> {
    if bytes.len() < n {
        return Err(BundleError::Truncated);
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

pub fn decode<T: DeserializeOwned>(kind: &str, mut bytes: &[u8]) -> std::result::Result<T, BundleError> {
    let magic = take(&mut bytes, MAGIC.len()).map_err(|_| BundleError::BadMagic)?;
    if magic != MAGIC {
        return Err(BundleError::BadMagic);
    }
    let version = u32::from_le_bytes(take(&mut bytes, 4)?.try_into().unwrap());
    if version > FORMAT_VERSION || version == 0 {
        return Err(BundleError::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let kind_len = u16::from_le_bytes(take(&mut bytes, 2)?.try_into().unwrap()) as usize;
    let found = String::from_utf8_lossy(take(&mut bytes, kind_len)?).into_owned();
    if found != kind {
        return Err(BundleError::KindMismatch {
            found,
            expected: kind.to_string(),
        });
    }
    let len = u64::from_le_bytes(take(&mut bytes, 8)?.try_into().unwrap());
    let digest = take(&mut bytes, 32)?;
    let len = usize::try_from(len).map_err(|_| BundleError::Truncated)?;
    if bytes.len() < len {
        return Err(BundleError::Truncated);
    }
    if bytes.len() > len {
        return Err(BundleError::Decode(String::from("trailing bytes after payload")));
    }
    if Sha256::digest(bytes).as_slice() != digest {
        return Err(BundleError::DigestMismatch);
    }
    bincode::deserialize(bytes).map_err(|e| BundleError::Decode(e.to_string()))
}

pub fn save<T: Serialize>(path: &Path, kind: &str, value: &T) -> Result<String> {
    crate::store::write_atomic(path, &encode(kind, value)?)
}

pub fn load<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    Ok(decode(kind, &bytes)?)
}
