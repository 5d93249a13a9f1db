//! Flat, human-editable configuration: `key = value` lines grouped under
//! `[section]` headers, `#` comments, whitespace-separated lists. Unknown
//! keys are rejected with their line number.
//!
//! ```text
//! experiment = clt-space
//!
//! [model]
//! potential  = gaussian      # or: perturbed
//! kappa_pert = 0.2           # only read for the perturbed family
//! betas      = 1.0 0.3
//! sigma      = 0.0
//!
//! [sim]
//! n        = 512
//! m        = 0               # 0 selects 4N
//! theta    = 0.05
//! horizon  = 0.05
//! replicas = 1000
//! seed     = 42
//!
//! [scales]
//! delta_s = 0.1
//! blocks  = 8 16 32 64 128 256
//! windows = 10 40 160 640
//! ```

use std::path::Path;

use super::IoError;
use crate::experiments::{ExperimentKind, ExperimentSpec};
use crate::potential::PotentialFamily;

fn parse_list<T: std::str::FromStr>(value: &str, line: usize) -> Result<Vec<T>, IoError> {
    value
        .split_whitespace()
        .map(|tok| {
            tok.parse::<T>().map_err(|_| IoError::Parse {
                line,
                message: format!("cannot parse list entry '{tok}'"),
            })
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(value: &str, line: usize) -> Result<T, IoError> {
    value.trim().parse::<T>().map_err(|_| IoError::Parse {
        line,
        message: format!("cannot parse value '{}'", value.trim()),
    })
}

/// Parse a config text into an [`ExperimentSpec`], validating invariants.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, IoError> {
    let mut spec = ExperimentSpec::default();
    let mut have_experiment = false;
    let mut section = String::new();
    let mut kappa: Option<f64> = None;
    let mut family: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(IoError::Parse {
                    line: line_no,
                    message: "unterminated section header".into(),
                });
            }
            section = line[1..line.len() - 1].trim().to_string();
            if !["model", "sim", "scales"].contains(&section.as_str()) {
                return Err(IoError::Parse {
                    line: line_no,
                    message: format!("unknown section '[{section}]'"),
                });
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(IoError::Parse {
                line: line_no,
                message: "expected 'key = value'".into(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        match (section.as_str(), key) {
            ("", "experiment") => {
                spec.experiment =
                    ExperimentKind::parse(value).ok_or_else(|| IoError::Parse {
                        line: line_no,
                        message: format!("unknown experiment '{value}'"),
                    })?;
                have_experiment = true;
            }
            ("model", "potential") => family = Some(value.to_string()),
            ("model", "kappa_pert") => kappa = Some(parse_one(value, line_no)?),
            ("model", "betas") => spec.betas = parse_list(value, line_no)?,
            ("model", "sigma") => spec.sigma = parse_one(value, line_no)?,
            ("sim", "n") => spec.n_grid = parse_list(value, line_no)?,
            ("sim", "m") => spec.m = parse_one(value, line_no)?,
            ("sim", "theta") => spec.theta = parse_one(value, line_no)?,
            ("sim", "horizon") => spec.horizon = parse_one(value, line_no)?,
            ("sim", "replicas") => spec.replicas = parse_one(value, line_no)?,
            ("sim", "seed") => spec.seed = parse_one(value, line_no)?,
            ("scales", "delta_s") => spec.delta_s = parse_one(value, line_no)?,
            ("scales", "blocks") => spec.block_grid = parse_list(value, line_no)?,
            ("scales", "windows") => spec.time_grid = parse_list(value, line_no)?,
            _ => {
                return Err(IoError::UnknownKey {
                    key: if section.is_empty() {
                        key.to_string()
                    } else {
                        format!("{section}.{key}")
                    },
                    line: line_no,
                })
            }
        }
    }
    if !have_experiment {
        return Err(IoError::Invalid("missing top-level 'experiment' key".into()));
    }
    match family.as_deref() {
        None | Some("gaussian") => spec.potential = PotentialFamily::Gaussian,
        Some("perturbed") => {
            spec.potential = PotentialFamily::CosinePerturbed {
                kappa: kappa.unwrap_or(0.2),
            }
        }
        Some(other) => {
            return Err(IoError::Invalid(format!("unknown potential '{other}'")));
        }
    }
    spec.validate().map_err(|e| IoError::Invalid(e.to_string()))?;
    Ok(spec)
}

/// Load and parse a config file.
pub fn load_config(path: &Path) -> Result<ExperimentSpec, IoError> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Serialize a spec back to the flat format; `parse_config` of the output is
/// the identity.
pub fn write_config(spec: &ExperimentSpec) -> String {
    let mut out = String::new();
    let push = |out: &mut String, s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    push(&mut out, format!("experiment = {}", spec.experiment.name()));
    push(&mut out, String::new());
    push(&mut out, "[model]".into());
    match spec.potential {
        PotentialFamily::Gaussian => push(&mut out, "potential = gaussian".into()),
        PotentialFamily::CosinePerturbed { kappa } => {
            push(&mut out, "potential = perturbed".into());
            push(&mut out, format!("kappa_pert = {kappa}"));
        }
    }
    push(
        &mut out,
        format!(
            "betas = {}",
            spec.betas
                .iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ),
    );
    push(&mut out, format!("sigma = {}", spec.sigma));
    push(&mut out, String::new());
    push(&mut out, "[sim]".into());
    push(
        &mut out,
        format!(
            "n = {}",
            spec.n_grid
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ),
    );
    push(&mut out, format!("m = {}", spec.m));
    push(&mut out, format!("theta = {}", spec.theta));
    push(&mut out, format!("horizon = {}", spec.horizon));
    push(&mut out, format!("replicas = {}", spec.replicas));
    push(&mut out, format!("seed = {}", spec.seed));
    push(&mut out, String::new());
    push(&mut out, "[scales]".into());
    push(&mut out, format!("delta_s = {}", spec.delta_s));
    if !spec.block_grid.is_empty() {
        push(
            &mut out,
            format!(
                "blocks = {}",
                spec.block_grid
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
        );
    }
    if !spec.time_grid.is_empty() {
        push(
            &mut out,
            format!(
                "windows = {}",
                spec.time_grid
                    .iter()
                    .map(|w| w.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
        );
    }
    out
}
