//! Run manifests: everything needed to re-run a job bit-identically on the
//! same platform, plus wall-clock bookkeeping (which deliberately lives here
//! and not in the report, keeping reports byte-identical across re-runs).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::report_io::atomic_write;
use super::IoError;
use crate::cole_hopf::default_scales;
use crate::experiments::ExperimentSpec;

/// Scales derived from the config, echoed for the record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivedScales {
    pub n: u32,
    pub m: usize,
    pub t_av: f64,
    pub n_av: usize,
}

/// Manifest of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub experiment: String,
    pub seed: u64,
    /// Flat-format snapshot of the config actually used.
    pub config_snapshot: String,
    pub derived: Vec<DerivedScales>,
    pub outputs: Vec<PathBuf>,
    pub platform: String,
    pub created_unix_secs: u64,
    pub runtime_secs: f64,
}

impl RunManifest {
    pub fn new(spec: &ExperimentSpec) -> Self {
        let derived = spec
            .n_grid
            .iter()
            .map(|&n| {
                let scales = default_scales(n, spec.delta_s);
                DerivedScales {
                    n,
                    m: spec.ring_size(n),
                    t_av: scales.t_av,
                    n_av: scales.n_av,
                }
            })
            .collect();
        Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: spec.experiment.name().to_string(),
            seed: spec.seed,
            config_snapshot: super::write_config(spec),
            derived,
            outputs: Vec::new(),
            platform: format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH),
            created_unix_secs: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            runtime_secs: 0.0,
        }
    }

    /// Write `manifest.json`, refusing to clobber an existing one unless
    /// `force` is set.
    pub fn write(&self, dir: &Path, force: bool) -> Result<PathBuf, IoError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        if path.exists() && !force {
            return Err(IoError::WouldOverwrite(path));
        }
        atomic_write(&path, serde_json::to_string_pretty(self)?.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_scales_are_echoed() {
        let spec = ExperimentSpec {
            n_grid: vec![1024],
            delta_s: 0.1,
            ..Default::default()
        };
        let manifest = RunManifest::new(&spec);
        assert_eq!(manifest.derived.len(), 1);
        // 1024^{0.85} = 362.04, rounded up
        assert_eq!(manifest.derived[0].n_av, 363);
        assert!(manifest.config_snapshot.contains("seed = 42"));
    }

    #[test]
    fn refuses_to_overwrite_without_force() {
        let dir = std::env::temp_dir().join(format!("gl-lab-manifest-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let manifest = RunManifest::new(&ExperimentSpec::default());
        manifest.write(&dir, false).unwrap();
        assert!(matches!(
            manifest.write(&dir, false),
            Err(IoError::WouldOverwrite(_))
        ));
        manifest.write(&dir, true).unwrap();
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
