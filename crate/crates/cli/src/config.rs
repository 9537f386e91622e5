//! JSON run configuration: strict schema, defaults, and conversion into
//! the numerical-core domain types.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use kschem_core::{Grid, GridSpec, InitialData, ModelParams, Regime, ScalarField, SolverConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub params: ParamsSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub initial_data: InitialDataSection,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default = "default_stride")]
    pub snapshot_stride: u64,
    #[serde(default)]
    pub snapshot_format: SnapshotFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub n: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub chi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub mu: f64,
    /// 1 = fully parabolic, 0 = parabolic-elliptic.
    pub tau: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    pub cg_tol: f64,
    pub newton_tol: f64,
    pub blowup_threshold: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            dt: 1e-6,
            t_end: 2e-5,
            cg_tol: 1e-10,
            newton_tol: 1e-10,
            blowup_threshold: 1e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSection {
    pub u: FieldInit,
    pub v: FieldInit,
    pub w: FieldInit,
}

/// One initial field: a radial gaussian bell, a constant, or raw
/// little-endian f64 node values (x-fastest) from a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldInit {
    Gaussian { amplitude: f64, rate: f64 },
    Constant { value: f64 },
    File { path: String },
}

/// Snapshot encoding: legacy VTK structured-points ASCII, raw
/// little-endian f64 with a JSON sidecar, both, or none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    #[default]
    Vtk,
    Raw,
    Both,
    None,
}

fn default_output_dir() -> String {
    "out".to_string()
}

fn default_stride() -> u64 {
    1
}

impl RunConfig {
    /// Parse and validate a config file.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.params.tau > 1 {
            return Err(CliError::Config(format!(
                "params.tau must be 0 or 1, got {}",
                self.params.tau
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(CliError::Config(
                "snapshot_stride must be at least 1".to_string(),
            ));
        }
        self.model_params().validate().map_err(|e| {
            CliError::Config(format!("params: {e}"))
        })?;
        self.solver_config()
            .validate()
            .map_err(|e| CliError::Config(format!("solver: {e}")))?;
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            lo: self.grid.lo,
            hi: self.grid.hi,
            n: self.grid.n,
        }
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.grid_spec()).map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            chi: self.params.chi,
            alpha: self.params.alpha,
            beta: self.params.beta,
            gamma: self.params.gamma,
            delta: self.params.delta,
            mu: self.params.mu,
            regime: if self.params.tau == 0 {
                Regime::ParabolicElliptic
            } else {
                Regime::FullyParabolic
            },
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut sc = SolverConfig::new(self.solver.dt, self.solver.t_end);
        sc.cg_tol = self.solver.cg_tol;
        sc.newton_tol = self.solver.newton_tol;
        sc.blowup_threshold = self.solver.blowup_threshold;
        sc
    }

    pub fn initial_data(&self, grid: &Grid) -> Result<InitialData, CliError> {
        let u = build_field(grid, &self.initial_data.u, "u")?;
        let v = build_field(grid, &self.initial_data.v, "v")?;
        let w = build_field(grid, &self.initial_data.w, "w")?;
        InitialData::new(u, v, w).map_err(|e| CliError::Config(format!("initial_data: {e}")))
    }
}

fn build_field(grid: &Grid, init: &FieldInit, name: &str) -> Result<ScalarField, CliError> {
    match init {
        FieldInit::Gaussian { amplitude, rate } => {
            if !(*amplitude >= 0.0) || !(*rate > 0.0) {
                return Err(CliError::Config(format!(
                    "initial_data.{name}: gaussian needs amplitude >= 0 and rate > 0"
                )));
            }
            Ok(kschem_core::model::gaussian_data(grid, *amplitude, *rate))
        }
        FieldInit::Constant { value } => Ok(ScalarField::constant(grid, *value)),
        FieldInit::File { path } => {
            let bytes = fs::read(path)
                .map_err(|e| CliError::Config(format!("initial_data.{name}: {path}: {e}")))?;
            if bytes.len() != grid.len() * 8 {
                return Err(CliError::Config(format!(
                    "initial_data.{name}: {path} holds {} bytes, grid needs {}",
                    bytes.len(),
                    grid.len() * 8
                )));
            }
            let values = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            ScalarField::from_values(grid, values)
                .ok_or_else(|| CliError::Config(format!("initial_data.{name}: size mismatch")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn minimal_json() -> serde_json::Value {
        serde_json::json!({
            "grid": {"lo": [-0.5, -0.5, -0.5], "hi": [0.5, 0.5, 0.5], "n": [5, 5, 5]},
            "params": {"chi": 2.0, "alpha": 1.0, "beta": 1.0, "gamma": 1.0, "delta": 1.0, "mu": 1.0, "tau": 1},
            "initial_data": {
                "u": {"kind": "gaussian", "amplitude": 1000.0, "rate": 1000.0},
                "v": {"kind": "gaussian", "amplitude": 500.0, "rate": 500.0},
                "w": {"kind": "constant", "value": 1.0}
            }
        })
    }

    #[test]
    fn defaults_fill_missing_solver_block() {
        let cfg: RunConfig = serde_json::from_value(minimal_json()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.solver.cg_tol, 1e-10);
        assert_eq!(cfg.solver.newton_tol, 1e-10);
        assert_eq!(cfg.solver.blowup_threshold, 1e9);
        assert_eq!(cfg.snapshot_stride, 1);
        assert_eq!(cfg.snapshot_format, SnapshotFormat::Vtk);
        assert_eq!(cfg.output_dir, "out");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut j = minimal_json();
        j["grdi"] = serde_json::json!({});
        assert!(serde_json::from_value::<RunConfig>(j).is_err());

        let mut j = minimal_json();
        j["solver"] = serde_json::json!({"dt": 1e-6, "t_end": 1e-5, "cgtol": 1.0});
        assert!(serde_json::from_value::<RunConfig>(j).is_err());
    }

    #[test]
    fn bad_tau_is_named_in_the_error() {
        let mut j = minimal_json();
        j["params"]["tau"] = serde_json::json!(2);
        let cfg: RunConfig = serde_json::from_value(j).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(format!("{err}").contains("tau"));
    }

    #[test]
    fn round_trips_through_serialization() {
        let cfg: RunConfig = serde_json::from_value(minimal_json()).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn file_initial_data_reads_raw_doubles() {
        let cfg: RunConfig = serde_json::from_value(minimal_json()).unwrap();
        let grid = cfg.grid().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.raw");
        let mut fh = std::fs::File::create(&path).unwrap();
        for i in 0..grid.len() {
            fh.write_all(&(i as f64).to_le_bytes()).unwrap();
        }
        drop(fh);
        let init = FieldInit::File {
            path: path.to_string_lossy().into_owned(),
        };
        let f = build_field(&grid, &init, "u").unwrap();
        assert_eq!(f.values()[7], 7.0);

        // wrong length is a config error
        std::fs::write(&path, [0u8; 16]).unwrap();
        assert!(build_field(&grid, &init, "u").is_err());
    }

    #[test]
    fn negative_parameter_is_a_config_error() {
        let mut j = minimal_json();
        j["params"]["beta"] = serde_json::json!(-1.0);
        let cfg: RunConfig = serde_json::from_value(j).unwrap();
        assert!(cfg.validate().is_err());
    }
}
