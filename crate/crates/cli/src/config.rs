//! Run configuration, stored as TOML.

use std::path::{Path, PathBuf};

use ddmag_core::{default_geometry, BrauerConstants, InductorGeometry, MeshOptions};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub excitation: ExcitationConfig,
    #[serde(default)]
    pub material: MaterialSource,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Reserved; every solver path is deterministic.
    #[serde(default)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            geometry: GeometryConfig::default(),
            mesh: MeshConfig::default(),
            excitation: ExcitationConfig::default(),
            material: MaterialSource::default(),
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
            seed: 0,
        }
    }
}

/// Lengths in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub l_e: f64,
    pub l_c: f64,
    pub l_i: f64,
    pub l_air: f64,
    pub w_e: f64,
    pub w_c: f64,
    pub w_fe: f64,
    pub air_box_half_width: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let g = default_geometry();
        GeometryConfig {
            l_e: g.l_e,
            l_c: g.l_c,
            l_i: g.l_i,
            l_air: g.l_air,
            w_e: g.w_e,
            w_c: g.w_c,
            w_fe: g.w_fe,
            air_box_half_width: g.air_box_half_width,
        }
    }
}

impl GeometryConfig {
    pub fn to_geometry(&self) -> InductorGeometry {
        InductorGeometry {
            l_e: self.l_e,
            l_c: self.l_c,
            l_i: self.l_i,
            l_air: self.l_air,
            w_e: self.w_e,
            w_c: self.w_c,
            w_fe: self.w_fe,
            air_box_half_width: self.air_box_half_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    /// Target element size in the core and near field, m.
    pub h: f64,
    /// Size ratio of consecutive cells towards the outer boundary.
    pub far_growth: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        let o = MeshOptions::default();
        MeshConfig {
            h: o.h,
            far_growth: o.far_growth,
        }
    }
}

impl MeshConfig {
    pub fn options(&self) -> MeshOptions {
        MeshOptions {
            h: self.h,
            far_growth: self.far_growth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcitationConfig {
    /// A
    pub current: f64,
    pub n_coil: u32,
    /// m^2; the coil window area of the geometry when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coil_area: Option<f64>,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        ExcitationConfig {
            current: 50.0,
            n_coil: 66,
            coil_area: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum MaterialSource {
    /// Uniform samples of the Brauer law on `[0, b_max]`.
    Brauer {
        k1: f64,
        k2: f64,
        k3: f64,
        samples: usize,
        b_max: f64,
    },
    /// Two-column `H,B` file; relative paths resolve against the config file.
    Csv { path: PathBuf },
}

impl Default for MaterialSource {
    fn default() -> Self {
        let c = BrauerConstants::TABLE;
        MaterialSource::Brauer {
            k1: c.k1,
            k2: c.k2,
            k3: c.k3,
            samples: 100,
            b_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightModeConfig {
    #[default]
    Switching,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub switch_iteration: usize,
    pub max_iterations: usize,
    pub solver_tol: f64,
    pub stagnation_tol: f64,
    pub state_tol: f64,
    pub newton_tol: f64,
    pub weight_mode: WeightModeConfig,
    /// Localized nearest-state search window, in samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_window: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            switch_iteration: 4,
            max_iterations: 200,
            solver_tol: 1e-10,
            stagnation_tol: 1e-12,
            state_tol: 1e-9,
            newton_tol: 1e-12,
            weight_mode: WeightModeConfig::Switching,
            search_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves a relative CSV path against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let MaterialSource::Csv { path: csv } = &mut cfg.material {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let s = &self.solver;
        for (name, v) in [
            ("solver.solver_tol", s.solver_tol),
            ("solver.stagnation_tol", s.stagnation_tol),
            ("solver.state_tol", s.state_tol),
            ("solver.newton_tol", s.newton_tol),
            ("mesh.h", self.mesh.h),
        ] {
            if !(v > 0.0) {
                return Err(CliError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if s.switch_iteration < 1 || s.max_iterations <= s.switch_iteration {
            return Err(CliError::Config(
                "need 1 <= solver.switch_iteration < solver.max_iterations".into(),
            ));
        }
        if let MaterialSource::Brauer { samples, b_max, .. } = self.material {
            if samples < 2 || !(b_max > 0.0) {
                return Err(CliError::Config(
                    "material.samples must be >= 2 and material.b_max positive".into(),
                ));
            }
        }
        Ok(())
    }
}
