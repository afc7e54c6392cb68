//! Resolved run configuration: config file, then flags, then defaults.

use std::path::PathBuf;

use isospec::{FamilySpec, RadialGrid, Stage};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const GRID_PRESET_ENV: &str = "ISOSPEC_GRID_PRESET";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Gen,
    Verify,
    Figure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything a run depends on; written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub family: FamilySpec,
    pub grid: RadialGrid,
    pub levels: usize,
    pub tol: f64,
    pub output_path: PathBuf,
    pub format: Format,
}

/// Config-file form: any subset of [`RunConfig`] fields.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub command: Option<CommandKind>,
    pub family: Option<FamilySpec>,
    pub grid: Option<GridOverride>,
    pub levels: Option<usize>,
    pub tol: Option<f64>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverride {
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub n_points: Option<usize>,
}

impl PartialConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Domain(format!("invalid config {}: {e}", path.display())))
    }
}

/// Named grids selectable through [`GRID_PRESET_ENV`].
pub fn grid_preset(name: &str) -> Result<RadialGrid, CliError> {
    let grid = match name {
        "reference" => RadialGrid::reference(),
        "fast" => RadialGrid::new(2e-3, 150.0, 75_000)?,
        "coarse" => RadialGrid::new(1e-2, 100.0, 10_000)?,
        other => {
            return Err(CliError::Domain(format!(
                "unknown grid preset {other:?} in {GRID_PRESET_ENV} (expected reference, fast or coarse)"
            )))
        }
    };
    Ok(grid)
}

pub fn default_grid() -> Result<RadialGrid, CliError> {
    match std::env::var(GRID_PRESET_ENV) {
        Ok(name) if !name.is_empty() => grid_preset(&name),
        _ => Ok(RadialGrid::reference()),
    }
}

/// Merge grid overrides onto a base grid and validate the result.
pub fn resolve_grid(base: RadialGrid, layers: &[GridOverride]) -> Result<RadialGrid, CliError> {
    let (mut r_min, mut r_max, mut n) = (base.r_min(), base.r_max(), base.len());
    for layer in layers {
        r_min = layer.r_min.unwrap_or(r_min);
        r_max = layer.r_max.unwrap_or(r_max);
        n = layer.n_points.unwrap_or(n);
    }
    Ok(RadialGrid::new(r_min, r_max, n)?)
}

/// Family from flag values: `--ks` or `--k [--m]`, with `--lambdas` or `--lambda`.
pub fn family_from_flags(
    l: Option<u32>,
    k: Option<i32>,
    m: Option<i32>,
    ks: &[i32],
    lambda: Option<f64>,
    lambdas: &[f64],
) -> Result<Option<FamilySpec>, CliError> {
    let stage_ks: Vec<i32> = if !ks.is_empty() {
        if k.is_some() || m.is_some() {
            return Err(CliError::Domain("use either --ks or --k/--m, not both".into()));
        }
        ks.to_vec()
    } else {
        k.into_iter().chain(m).collect()
    };
    if m.is_some() && k.is_none() {
        return Err(CliError::Domain("--m needs --k".into()));
    }
    let stage_lambdas: Vec<f64> = if !lambdas.is_empty() {
        if lambda.is_some() {
            return Err(CliError::Domain("use either --lambda or --lambdas, not both".into()));
        }
        lambdas.to_vec()
    } else {
        lambda.into_iter().collect()
    };
    if l.is_none() && stage_ks.is_empty() && stage_lambdas.is_empty() {
        return Ok(None);
    }
    let l = l.ok_or_else(|| CliError::Domain("--l is required".into()))?;
    if stage_ks.is_empty() {
        return Err(CliError::Domain("at least one factorization index is required (--k or --ks)".into()));
    }
    if stage_ks.len() != stage_lambdas.len() {
        return Err(CliError::Domain(format!(
            "{} factorization indices but {} lambda values",
            stage_ks.len(),
            stage_lambdas.len()
        )));
    }
    Ok(Some(FamilySpec::new(
        l,
        stage_ks
            .into_iter()
            .zip(stage_lambdas)
            .map(|(k, lambda)| Stage { k, lambda })
            .collect(),
    )))
}

/// Precondition checks run before any output is computed.
pub fn validate(config: &RunConfig) -> Result<(), CliError> {
    config.family.validated_seeds()?;
    if config.levels == 0 {
        return Err(CliError::Domain("levels must be >= 1".into()));
    }
    if config.tol.is_nan() || config.tol <= 0.0 || config.tol.is_infinite() {
        return Err(CliError::Domain(format!("tol must be positive, got {}", config.tol)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_combinations() {
        let f = family_from_flags(Some(2), Some(-1), None, &[], Some(2.0), &[]).unwrap().unwrap();
        assert_eq!(f, FamilySpec::first_order(2, -1, 2.0));
        let f = family_from_flags(Some(4), Some(-3), Some(0), &[], None, &[-0.5, 0.5]).unwrap().unwrap();
        assert_eq!(f, FamilySpec::second_order(4, (-3, -0.5), (0, 0.5)));
        let f = family_from_flags(Some(4), None, None, &[0, -1, -2], None, &[0.5, 0.5, 0.5]).unwrap().unwrap();
        assert_eq!(f.order(), 3);
        assert!(family_from_flags(None, None, None, &[], None, &[]).unwrap().is_none());
        assert!(family_from_flags(Some(2), Some(-1), None, &[], None, &[]).is_err());
        assert!(family_from_flags(Some(2), Some(-1), None, &[0], Some(1.0), &[]).is_err());
        assert!(family_from_flags(None, Some(-1), None, &[], Some(2.0), &[]).is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(grid_preset("reference").unwrap(), RadialGrid::reference());
        assert!(grid_preset("fast").unwrap().len() < RadialGrid::reference().len());
        assert!(matches!(grid_preset("huge"), Err(CliError::Domain(_))));
    }

    #[test]
    fn grid_layers() {
        let g = resolve_grid(
            RadialGrid::reference(),
            &[
                GridOverride {
                    r_max: Some(40.0),
                    ..Default::default()
                },
                GridOverride {
                    n_points: Some(4000),
                    ..Default::default()
                },
            ],
        )
        .unwrap();
        assert_eq!((g.r_min(), g.r_max(), g.len()), (1e-3, 40.0, 4000));
    }
}
