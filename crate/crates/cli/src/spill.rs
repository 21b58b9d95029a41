//! Ensemble spill format: a flat binary of little-endian f64 values in
//! `[path][step][agent]` order, plus a JSON sidecar recording the shape,
//! the seed, and a hash of the generating inputs.

use crate::error::CliError;
use geogame_core::{GameParams, PathEnsemble, StrategyProfile, TimeGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::Path;

/// Sidecar schema for a spilled ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSidecar {
    pub schema_version: u32,
    /// `[n_paths, n_points, n_agents]`.
    pub shape: [usize; 3],
    pub seed: u64,
    pub t_max: f64,
    pub n_steps: usize,
    /// SHA-256 over a canonical rendering of (params, profile, grid, seed).
    pub inputs_sha256: String,
}

/// Canonical hash of the generating inputs, for sidecar integrity.
pub fn inputs_hash(
    params: &GameParams,
    profile: &StrategyProfile,
    grid: &TimeGrid,
    seed: u64,
) -> String {
    let mut canon = String::new();
    canon.push_str(&format!("rho={:.16e};", params.rho()));
    for a in params.agents() {
        canon.push_str(&format!(
            "agent={:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e};",
            a.gamma, a.mu, a.nu, a.theta, a.eta, a.q0
        ));
    }
    for r in profile.rates() {
        canon.push_str(&format!("rate={r:.16e};"));
    }
    canon.push_str(&format!(
        "t_max={:.16e};n_steps={};seed={seed}",
        grid.t_max(),
        grid.n_steps()
    ));
    let mut hasher = Sha256::new();
    hasher.update(canon.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Write `<stem>.bin` and `<stem>.json` into `dir`.
pub fn write_ensemble(
    ensemble: &PathEnsemble,
    params: &GameParams,
    dir: &Path,
    stem: &str,
) -> Result<(), CliError> {
    let sidecar = EnsembleSidecar {
        schema_version: 1,
        shape: [
            ensemble.n_paths(),
            ensemble.grid().n_points(),
            ensemble.n_agents(),
        ],
        seed: ensemble.seed(),
        t_max: ensemble.grid().t_max(),
        n_steps: ensemble.grid().n_steps(),
        inputs_sha256: inputs_hash(params, ensemble.profile(), ensemble.grid(), ensemble.seed()),
    };
    let json_path = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| CliError::Io(format!("sidecar serialization failed: {e}")))?;
    std::fs::write(&json_path, text.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", json_path.display())))?;

    let bin_path = dir.join(format!("{stem}.bin"));
    let file = std::fs::File::create(&bin_path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", bin_path.display())))?;
    let mut writer = std::io::BufWriter::new(file);
    for &v in ensemble.as_slice() {
        writer
            .write_all(&v.to_le_bytes())
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", bin_path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Io(format!("cannot flush {}: {e}", bin_path.display())))
}

/// Read a spilled ensemble back as (sidecar, flat data).
pub fn read_ensemble(dir: &Path, stem: &str) -> Result<(EnsembleSidecar, Vec<f64>), CliError> {
    let json_path = dir.join(format!("{stem}.json"));
    let text = std::fs::read_to_string(&json_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", json_path.display())))?;
    let sidecar: EnsembleSidecar =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    let bin_path = dir.join(format!("{stem}.bin"));
    let file = std::fs::File::open(&bin_path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", bin_path.display())))?;
    let mut reader = std::io::BufReader::new(file);
    let expected = sidecar.shape.iter().product::<usize>();
    let mut data = Vec::with_capacity(expected);
    let mut buf = [0u8; 8];
    loop {
        match reader.read_exact(&mut buf) {
            Ok(()) => data.push(f64::from_le_bytes(buf)),
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => {
                return Err(CliError::Io(format!(
                    "cannot read {}: {e}",
                    bin_path.display()
                )))
            }
        }
    }
    if data.len() != expected {
        return Err(CliError::Invariant(format!(
            "spill shape mismatch: sidecar says {expected} values, file has {}",
            data.len()
        )));
    }
    Ok((sidecar, data))
}
