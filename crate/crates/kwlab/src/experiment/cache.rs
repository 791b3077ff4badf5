//! Content-addressed cache of torus shell counts, keyed by `(n, r2max)`.
//! Entries are written once and never modified; a corrupt entry is ignored.

use crate::error::Result;
use crate::ladder_sums::LadderEngine;
use crate::spectral_models::{lattice_shell_counts, radius_squared_floor, JointTorusSpectrum, ModelPair};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "KWLAB_CACHE_DIR";

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn entry_name(n: usize, r2max: u64) -> String {
    let key = format!("torus-shell-counts:n={n}:r2max={r2max}");
    format!("{}.bin", hex::encode(&Sha256::digest(key.as_bytes())[..12]))
}

fn encode(counts: &[u32]) -> Vec<u8> {
    let mut body: Vec<u8> = counts.iter().flat_map(|c| c.to_le_bytes()).collect();
    let digest = Sha256::digest(&body);
    body.extend_from_slice(&digest);
    body
}

fn decode(bytes: &[u8], len: usize) -> Option<Vec<u32>> {
    if bytes.len() != 4 * len + 32 {
        return None;
    }
    let (body, digest) = bytes.split_at(4 * len);
    if Sha256::digest(body).as_slice() != digest {
        return None;
    }
    Some(body.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

/// Shell counts `r_n(k)`, `k <= r2max`, through the cache in `dir` if given.
pub fn shell_counts(dir: Option<&Path>, n: usize, r2max: u64) -> Result<Vec<u32>> {
    let Some(dir) = dir else {
        return lattice_shell_counts(n, r2max);
    };
    let path = dir.join(entry_name(n, r2max));
    if let Ok(bytes) = std::fs::read(&path) {
        if let Some(counts) = decode(&bytes, r2max as usize + 1) {
            return Ok(counts);
        }
    }
    let counts = lattice_shell_counts(n, r2max)?;
    std::fs::create_dir_all(dir)?;
    if !path.exists() {
        let tmp = dir.join(format!("{}.tmp{}", entry_name(n, r2max), std::process::id()));
        std::fs::write(&tmp, encode(&counts))?;
        std::fs::rename(&tmp, &path)?;
    }
    Ok(counts)
}

/// A ladder engine, reading torus spectra through the cache.
pub fn engine(pair: ModelPair, lambda_max: f64) -> Result<LadderEngine> {
    match pair.ambient.kind {
        crate::spectral_models::ManifoldKind::Torus => {
            let r2max = radius_squared_floor(lambda_max)?;
            let counts = shell_counts(cache_dir().as_deref(), pair.n(), r2max)?;
            Ok(LadderEngine::from_joint(JointTorusSpectrum::with_shell_counts(pair.n(), pair.d(), r2max, counts)?))
        }
        crate::spectral_models::ManifoldKind::Sphere => LadderEngine::new(pair, lambda_max),
    }
}
