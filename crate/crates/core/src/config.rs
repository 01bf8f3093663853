//! Declarative synthesis configuration, read from TOML.
//!
//! ```toml
//! [geometry]
//! kind = "linear"
//! n = 16
//! spacing = 0.5
//!
//! [coupling]
//! rho = 0.1
//!
//! [[beams]]
//! kind = "sum"
//!
//! [[beams.sidelobes]]
//! intervals = ["[-90, -20]", "[20, 90]"]
//! samples = 60
//! level_db = -10.0
//!
//! [[beams]]
//! kind = "difference"
//! slope = -5.0
//! slope_unit = "per_radian"
//!
//! [reselection]
//! seed = 7
//! ```
//!
//! Unknown keys are rejected; parse errors carry the line and the key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::array::{Angle, ArrayGeometry, Axis, CouplingModel, C64};
use crate::constraints::{BeamKind, BeamSpec, PlaneSampling, SidelobeRegion, SlopeUnit};
use crate::error::{Error, Result};
use crate::io::read_weights;
use crate::reselection::{Init, ReselectionOptions};
use crate::solver::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Linear,
    Planar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: GeometryKind,
    /// Element count of a linear array.
    pub n: Option<usize>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    /// Element spacing in wavelengths.
    #[serde(default = "half_wavelength")]
    pub spacing: f64,
}

fn half_wavelength() -> f64 {
    0.5
}

impl GeometryConfig {
    pub fn build(&self) -> Result<ArrayGeometry> {
        match (self.kind, self.n, self.nx, self.ny) {
            (GeometryKind::Linear, Some(n), None, None) => ArrayGeometry::linear(n, self.spacing),
            (GeometryKind::Planar, None, Some(nx), Some(ny)) => {
                ArrayGeometry::planar(nx, ny, self.spacing)
            }
            (GeometryKind::Linear, ..) => Err(Error::Config(
                "geometry: a linear array takes `n` (and not `nx`/`ny`)".into(),
            )),
            (GeometryKind::Planar, ..) => Err(Error::Config(
                "geometry: a planar array takes `nx` and `ny` (and not `n`)".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default)]
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub kind: BeamKind,
    #[serde(default)]
    pub boresight_az: f64,
    #[serde(default)]
    pub boresight_el: f64,
    /// Boresight gain μ for a sum beam, slope scale for a difference beam.
    #[serde(default = "unit_gain")]
    pub gain: f64,
    pub slope: Option<f64>,
    #[serde(default)]
    pub slope_unit: SlopeUnit,
    #[serde(default)]
    pub slope_axis: Axis,
    #[serde(default)]
    pub plane_sampling: PlaneSampling,
    #[serde(default)]
    pub sidelobes: Vec<SidelobeRegion>,
}

fn unit_gain() -> f64 {
    1.0
}

impl BeamConfig {
    pub fn build(&self) -> BeamSpec {
        BeamSpec {
            kind: self.kind,
            boresight: Angle::new(self.boresight_az, self.boresight_el),
            gain: C64::new(self.gain, 0.0),
            slope: self.slope,
            slope_unit: self.slope_unit,
            slope_axis: self.slope_axis,
            sidelobes: self.sidelobes.clone(),
            plane_sampling: self.plane_sampling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    RandomComplexNormal,
    AllOnes,
    UserSupplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReselectionConfig {
    pub epsilon: f64,
    pub max_outer_iterations: usize,
    pub init: InitMode,
    /// One weights file per beam, for `init = "user_supplied"`. Relative
    /// paths resolve against the config file's directory.
    pub init_weights: Vec<PathBuf>,
    pub seed: u64,
    pub disjoint_cost_threshold: f64,
    pub zero_threshold: Option<f64>,
}

impl Default for ReselectionConfig {
    fn default() -> Self {
        let d = ReselectionOptions::default();
        Self {
            epsilon: d.epsilon,
            max_outer_iterations: d.max_outer_iterations,
            init: InitMode::default(),
            init_weights: Vec::new(),
            seed: d.seed,
            disjoint_cost_threshold: d.disjoint_cost_threshold,
            zero_threshold: d.zero_threshold,
        }
    }
}

/// Trial-and-error loosening of every side-lobe level until the run ends
/// disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationConfig {
    pub step_db: f64,
    pub max_attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    /// Also write `summary.json` and `metrics.json`.
    pub json: bool,
    /// Points of the dense pattern grid over [-90°, 90°].
    pub pattern_points: usize,
    /// How much denser than the constraint grid the off-grid SLL check is.
    pub verification_density: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            json: false,
            pattern_points: 18_001,
            verification_density: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub coupling: CouplingConfig,
    pub beams: Vec<BeamConfig>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub reselection: ReselectionConfig,
    pub relaxation: Option<RelaxationConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A config together with everything derived from it.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: SynthesisConfig,
    pub geometry: ArrayGeometry,
    pub coupling: CouplingModel,
    pub specs: Vec<BeamSpec>,
    /// SHA-256 of the config file bytes, hex encoded.
    pub hash: String,
    pub base_dir: PathBuf,
}

impl SynthesisConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Loaded> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
        let config = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.resolve(hex::encode(Sha256::digest(&bytes)), base_dir)
    }

    pub fn resolve(self, hash: String, base_dir: PathBuf) -> Result<Loaded> {
        let geometry = self.geometry.build()?;
        let coupling = CouplingModel::new(self.coupling.rho, geometry.len())?;
        let specs: Vec<BeamSpec> = self.beams.iter().map(BeamConfig::build).collect();
        if specs.len() < 2 {
            return Err(Error::Config(format!(
                "beams: at least 2 beams are required, got {}",
                specs.len()
            )));
        }
        for (k, s) in specs.iter().enumerate() {
            s.validate()
                .map_err(|e| Error::Config(format!("beams[{k}]: {e}")))?;
        }
        self.solver.validate()?;
        if let Some(r) = self.relaxation {
            if r.step_db.is_nan() || r.step_db <= 0.0 || r.max_attempts == 0 {
                return Err(Error::Config(
                    "relaxation: need step_db > 0 and max_attempts >= 1".into(),
                ));
            }
        }
        if self.output.verification_density == 0 || self.output.pattern_points < 3 {
            return Err(Error::Config(
                "output: need verification_density >= 1 and pattern_points >= 3".into(),
            ));
        }
        let r = &self.reselection;
        if r.init == InitMode::UserSupplied && r.init_weights.len() != specs.len() {
            return Err(Error::Config(format!(
                "reselection.init_weights: need one file per beam ({}), got {}",
                specs.len(),
                r.init_weights.len()
            )));
        }
        let loaded = Loaded {
            config: self,
            geometry,
            coupling,
            specs,
            hash,
            base_dir,
        };
        loaded.options_with(Init::AllOnes).validate()?;
        Ok(loaded)
    }
}

impl Loaded {
    pub fn seed(&self) -> u64 {
        self.config.reselection.seed
    }

    fn options_with(&self, init: Init) -> ReselectionOptions {
        let r = &self.config.reselection;
        ReselectionOptions {
            epsilon: r.epsilon,
            max_outer_iterations: r.max_outer_iterations,
            init,
            seed: r.seed,
            disjoint_cost_threshold: r.disjoint_cost_threshold,
            zero_threshold: r.zero_threshold,
        }
    }

    /// Reselection options; user-supplied initial weights are read from the
    /// files named in `reselection.init_weights`.
    pub fn reselection_options(&self) -> Result<ReselectionOptions> {
        let init = match self.config.reselection.init {
            InitMode::RandomComplexNormal => Init::RandomComplexNormal,
            InitMode::AllOnes => Init::AllOnes,
            InitMode::UserSupplied => {
                let ws = self
                    .init_weight_paths()
                    .iter()
                    .map(|p| read_weights(p))
                    .collect::<Result<Vec<_>>>()?;
                Init::UserSupplied(ws)
            }
        };
        Ok(self.options_with(init))
    }

    pub fn init_weight_paths(&self) -> Vec<PathBuf> {
        self.config
            .reselection
            .init_weights
            .iter()
            .map(|p| self.base_dir.join(p))
            .collect()
    }
}
