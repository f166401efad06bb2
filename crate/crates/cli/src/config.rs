//! Run configuration: a JSON file, validated and resolved against the
//! defaults of each experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sdt_core::flow::FlowProblem;
use sdt_core::transport::{DiffusionModel, TransportProblem};
use sdt_core::verify::{check_compatibility, ContaminantCase, ManufacturedCase, TimeStepRule};
use sdt_core::{Diagonal, MeshParams};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Convergence,
    Compatibility,
    Contaminant,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Full,
    Ci,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagonalSpec {
    Right,
    Crossed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "crossed")]
    pub diagonal: DiagonalSpec,
}

fn crossed() -> DiagonalSpec {
    DiagonalSpec::Crossed
}

impl MeshSpec {
    pub fn params(&self) -> MeshParams {
        let d = match self.diagonal {
            DiagonalSpec::Right => Diagonal::Right,
            DiagonalSpec::Crossed => Diagonal::Crossed,
        };
        MeshParams::new(self.nx, self.ny, d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum KappaSpec {
    Constant(f64),
    /// The heterogeneous aquifer permeability of the contaminant case.
    Heterogeneous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DiffusionSpec {
    Matrix([[f64; 2]; 2]),
    Dispersion { delta: f64, d_m: f64, d_l: f64, d_t: f64 },
}

/// The file format. Every key is optional; absent keys take the defaults
/// of the chosen experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<Experiment>,
    pub preset: Option<Preset>,
    pub mesh: Option<MeshSpec>,
    pub ladder: Option<Vec<usize>>,
    pub k: Option<usize>,
    pub ell: Option<usize>,
    pub beta_f: Option<f64>,
    pub beta_c: Option<f64>,
    pub mu: Option<f64>,
    pub kappa: Option<KappaSpec>,
    pub alpha: Option<f64>,
    pub phi_darcy: Option<f64>,
    pub diffusion: Option<DiffusionSpec>,
    pub dt: Option<f64>,
    pub dt_factor: Option<f64>,
    pub t_final: Option<f64>,
    pub c_tilde: Option<f64>,
    pub inflow_concentration: Option<f64>,
    pub output: Option<PathBuf>,
    pub vtk_stride: Option<usize>,
}

/// A fully resolved, validated configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub mesh: MeshSpec,
    pub ladder: Vec<usize>,
    pub k: usize,
    pub ell: usize,
    pub beta_f: f64,
    pub beta_c: f64,
    pub mu: f64,
    pub kappa: KappaSpec,
    pub alpha: f64,
    pub phi_darcy: f64,
    pub diffusion: DiffusionSpec,
    /// Fixed step, or the cap of the `min(cap, factor h^2)` rule in
    /// convergence studies.
    pub dt: f64,
    pub dt_factor: f64,
    pub t_final: f64,
    pub c_tilde: f64,
    pub inflow_concentration: f64,
    /// Where outputs go; not part of the hash.
    #[serde(skip)]
    pub output: PathBuf,
    /// Snapshot every this many steps; 0 writes only the fixed snapshot
    /// instants.
    pub vtk_stride: usize,
}

/// Ladder used by convergence studies when none is given.
pub const DEFAULT_LADDER: [usize; 4] = [4, 8, 16, 32];

fn positive(key: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be positive and finite (got {v})")))
    }
}

impl RunConfig {
    pub fn resolve(raw: RawConfig) -> Result<Self, ConfigError> {
        let experiment = raw.experiment.ok_or_else(|| invalid("experiment", "missing"))?;
        if raw.preset.is_some() && experiment != Experiment::Contaminant {
            return Err(invalid("preset", "only the contaminant experiment has presets"));
        }
        let manufactured = ManufacturedCase::default();
        let [[a, b], [c, d]] = manufactured.diffusion;
        let table_diffusion = DiffusionSpec::Matrix([[a, b], [c, d]]);
        let contaminant = match raw.preset.unwrap_or(Preset::Full) {
            Preset::Full => ContaminantCase::full(),
            Preset::Ci => ContaminantCase::ci(),
        };
        let river_diffusion = DiffusionSpec::Dispersion {
            delta: contaminant.delta,
            d_m: contaminant.d_m,
            d_l: contaminant.d_l,
            d_t: contaminant.d_t,
        };
        let river_mesh = MeshSpec { nx: contaminant.mesh.nx, ny: contaminant.mesh.ny, diagonal: DiagonalSpec::Crossed };
        let small_mesh = MeshSpec { nx: 12, ny: 12, diagonal: DiagonalSpec::Crossed };

        let (def_k, def_ell) = match experiment {
            Experiment::Contaminant | Experiment::Custom => (contaminant.k, contaminant.ell),
            _ => (2, 1),
        };
        let ell = raw.ell.unwrap_or(match raw.k {
            Some(k) => k.saturating_sub(1).max(1),
            None => def_ell,
        });
        let k = raw.k.unwrap_or(if raw.ell.is_some() { ell + 1 } else { def_k });
        if k == 0 {
            return Err(invalid("k", "flow degree must be at least 1"));
        }
        if ell == 0 {
            return Err(invalid("ell", "transport degree must be at least 1"));
        }
        let river = matches!(experiment, Experiment::Contaminant | Experiment::Custom);
        let cfg = RunConfig {
            experiment,
            mesh: raw.mesh.unwrap_or(if river { river_mesh } else { small_mesh }),
            ladder: raw.ladder.unwrap_or_else(|| DEFAULT_LADDER.to_vec()),
            k,
            ell,
            beta_f: positive("beta_f", raw.beta_f.unwrap_or(10.0 * (k * k) as f64))?,
            beta_c: positive("beta_c", raw.beta_c.unwrap_or(6.0 * (ell * ell) as f64))?,
            mu: positive("mu", raw.mu.unwrap_or(if river { contaminant.mu } else { manufactured.mu }))?,
            kappa: raw.kappa.unwrap_or(if river {
                KappaSpec::Heterogeneous
            } else {
                KappaSpec::Constant(manufactured.kappa)
            }),
            alpha: positive(
                "alpha",
                raw.alpha.unwrap_or(if river { contaminant.alpha } else { manufactured.alpha() }),
            )?,
            phi_darcy: raw.phi_darcy.unwrap_or(if river { contaminant.phi_darcy } else { manufactured.phi }),
            diffusion: raw.diffusion.unwrap_or(if river { river_diffusion } else { table_diffusion }),
            dt: positive("dt", raw.dt.unwrap_or(1e-3))?,
            dt_factor: positive("dt_factor", raw.dt_factor.unwrap_or(TimeStepRule::default().factor))?,
            t_final: positive("t_final", raw.t_final.unwrap_or(if river { contaminant.t_final } else { 1.0 }))?,
            c_tilde: raw.c_tilde.unwrap_or(1.0),
            inflow_concentration: raw.inflow_concentration.unwrap_or(contaminant.inflow_concentration),
            output: raw.output.unwrap_or_else(|| PathBuf::from("out")),
            vtk_stride: raw.vtk_stride.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.phi_darcy > 0.0 && self.phi_darcy <= 1.0) {
            return Err(invalid("phi_darcy", format!("porosity must lie in (0, 1] (got {})", self.phi_darcy)));
        }
        if let KappaSpec::Constant(v) = self.kappa {
            positive("kappa", v)?;
        }
        if !self.c_tilde.is_finite() {
            return Err(invalid("c_tilde", "must be finite"));
        }
        if self.mesh.nx == 0 || self.mesh.ny == 0 || !self.mesh.ny.is_multiple_of(2) {
            return Err(invalid(
                "mesh",
                format!(
                    "need nx, ny > 0 and ny even so the interface is a mesh row (got {} x {})",
                    self.mesh.nx, self.mesh.ny
                ),
            ));
        }
        if self.experiment == Experiment::Convergence {
            if self.ladder.len() < 3 {
                return Err(invalid("ladder", format!("needs at least 3 levels (got {})", self.ladder.len())));
            }
            if self.ladder.windows(2).any(|w| w[1] <= w[0]) || self.ladder.iter().any(|&n| n == 0 || n % 2 != 0) {
                return Err(invalid("ladder", "levels must be even and strictly increasing"));
            }
        }
        let steps = self.t_final / self.dt;
        if self.experiment != Experiment::Convergence && (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(invalid(
                "dt",
                format!("t_final = {} is not a whole number of steps of {}", self.t_final, self.dt),
            ));
        }
        self.diffusion_model().validate().map_err(|e| invalid("diffusion", e.to_string()))?;
        if matches!(self.experiment, Experiment::Convergence | Experiment::Compatibility) {
            let flow = ManufacturedCase::default().flow_problem();
            check_compatibility(&flow, self.k, self.ell).map_err(|e| invalid("ell", e.to_string()))?;
        }
        Ok(())
    }

    pub fn diffusion_model(&self) -> DiffusionModel {
        match self.diffusion {
            DiffusionSpec::Matrix([[a, b], [c, d]]) => {
                DiffusionModel::ConstantMatrix(nalgebra::Matrix2::new(a, b, c, d))
            }
            DiffusionSpec::Dispersion { delta, d_m, d_l, d_t } => {
                DiffusionModel::StokesDarcyDispersion { delta, phi: self.phi_darcy, d_m, d_l, d_t }
            }
        }
    }

    pub fn manufactured_case(&self) -> Result<ManufacturedCase, ConfigError> {
        let KappaSpec::Constant(kappa) = self.kappa else {
            return Err(invalid("kappa", "the manufactured case needs a constant permeability"));
        };
        let [[a, b], [c, d]] = match self.diffusion {
            DiffusionSpec::Matrix(m) => m,
            DiffusionSpec::Dispersion { .. } => {
                return Err(invalid("diffusion", "the manufactured case needs a constant diffusion matrix"))
            }
        };
        Ok(ManufacturedCase { mu: self.mu, kappa, diffusion: [[a, b], [c, d]], phi: self.phi_darcy })
    }

    /// Manufactured flow problem with the configured penalty.
    pub fn manufactured_flow(&self) -> Result<FlowProblem, ConfigError> {
        let mut p = self.manufactured_case()?.flow_problem();
        p.alpha = self.alpha;
        p.beta_f = Some(self.beta_f);
        Ok(p)
    }

    /// River/aquifer case with the configured mesh, degrees and times.
    /// Coefficients are applied by [`Self::river_problems`].
    pub fn river_case(&self) -> ContaminantCase {
        ContaminantCase {
            mesh: self.mesh.params(),
            k: self.k,
            ell: self.ell,
            mu: self.mu,
            alpha: self.alpha,
            phi_darcy: self.phi_darcy,
            inflow_concentration: self.inflow_concentration,
            dt: self.dt,
            t_final: self.t_final,
            ..ContaminantCase::full()
        }
    }

    /// Flow and transport problems of the river/aquifer case with every
    /// configured coefficient applied.
    pub fn river_problems(&self) -> (FlowProblem, TransportProblem) {
        let case = self.river_case();
        let mut flow = case.flow_problem();
        flow.beta_f = Some(self.beta_f);
        if let KappaSpec::Constant(v) = self.kappa {
            flow.kappa = sdt_core::field::constant(v);
        }
        let mut transport = case.transport_problem();
        transport.diffusion = self.diffusion_model();
        transport.beta_c = Some(self.beta_c);
        (flow, transport)
    }

    /// SHA-256 of the canonical JSON form of the resolved configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Header comment lines embedded in every output file.
    pub fn provenance(&self) -> Vec<String> {
        vec![
            format!("config sha256 {}", self.hash()),
            format!("experiment {:?}, k = {}, ell = {}", self.experiment, self.k, self.ell),
            format!(
                "penalties beta_f = {} (default 10 k^2), beta_c = {} (default 6 ell^2); unset keys take the reference setup values",
                self.beta_f, self.beta_c
            ),
        ]
    }
}

pub fn parse_config_str(text: &str, path: &Path) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })?;
    RunConfig::resolve(raw)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    parse_config_str(&text, path)
}
