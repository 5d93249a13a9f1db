//! Orchestration: dispatch an experiment and persist its outputs atomically.

use std::path::Path;

use super::{write_report, IoError, RunManifest};
use crate::experiments::{run_experiment, ExperimentSpec, Report};

/// What a run produced.
#[derive(Debug)]
pub struct RunOutput {
    pub report: Option<Report>,
    pub manifest: RunManifest,
}

/// Run the configured experiment and write `report.json`, CSV tables, and
/// `manifest.json` under `dir`. With `dry_run` only the manifest is written
/// (after validation), and no simulation happens.
pub fn run_experiment_to_dir(
    spec: &ExperimentSpec,
    dir: &Path,
    force: bool,
    dry_run: bool,
) -> Result<RunOutput, IoError> {
    spec.validate().map_err(IoError::Experiment)?;
    let mut manifest = RunManifest::new(spec);
    if dry_run {
        let path = manifest.write(dir, force)?;
        manifest.outputs = vec![path];
        return Ok(RunOutput {
            report: None,
            manifest,
        });
    }
    // collision check up front so long runs cannot end in a refusal
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() && !force {
        return Err(IoError::WouldOverwrite(manifest_path));
    }
    let started = std::time::Instant::now();
    let report = run_experiment(spec)?;
    manifest.runtime_secs = started.elapsed().as_secs_f64();
    manifest.outputs = write_report(&report, dir)?;
    let path = manifest.write(dir, true)?;
    manifest.outputs.push(path);
    Ok(RunOutput {
        report: Some(report),
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    fn temp_dir(tag: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("gl-lab-runner-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn dry_run_writes_manifest_only() {
        let dir = temp_dir("dry");
        let spec = ExperimentSpec::default();
        let out = run_experiment_to_dir(&spec, &dir, false, true).unwrap();
        assert!(out.report.is_none());
        assert!(dir.join("manifest.json").exists());
        assert!(!dir.join("report.json").exists());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn reports_are_byte_identical_across_reruns() {
        let dir_a = temp_dir("a");
        let dir_b = temp_dir("b");
        let spec = ExperimentSpec {
            experiment: ExperimentKind::JetSuite,
            betas: vec![1.0, 0.3],
            ..Default::default()
        };
        run_experiment_to_dir(&spec, &dir_a, false, false).unwrap();
        run_experiment_to_dir(&spec, &dir_b, false, false).unwrap();
        let a = std::fs::read(dir_a.join("report.json")).unwrap();
        let b = std::fs::read(dir_b.join("report.json")).unwrap();
        assert_eq!(a, b);
        let a = std::fs::read(dir_a.join("cells.csv")).unwrap();
        let b = std::fs::read(dir_b.join("cells.csv")).unwrap();
        assert_eq!(a, b);
        std::fs::remove_dir_all(&dir_a).unwrap();
        std::fs::remove_dir_all(&dir_b).unwrap();
    }

    #[test]
    fn grid_of_three_scaling_parameters_gives_three_cells() {
        let dir = temp_dir("grid");
        let spec = ExperimentSpec {
            experiment: ExperimentKind::Invariance,
            betas: vec![0.0],
            n_grid: vec![8, 12, 16],
            m: 32,
            horizon: 0.002,
            replicas: 30,
            theta: 0.05,
            ..Default::default()
        };
        let out = run_experiment_to_dir(&spec, &dir, false, false).unwrap();
        assert_eq!(out.report.unwrap().cells.len(), 3);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
