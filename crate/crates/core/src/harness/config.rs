//! TOML experiment configuration. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Controller, RunConfig, Scheme};
use crate::grid::VelocityField;
use crate::readout::VarModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Burgers1d,
    Fisher2d,
    Cavity,
    KrausCompile,
    RankReport,
    Stencil,
    NoiseSweep,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Burgers1d => "burgers1d",
            ExperimentKind::Fisher2d => "fisher2d",
            ExperimentKind::Cavity => "cavity",
            ExperimentKind::KrausCompile => "kraus-compile",
            ExperimentKind::RankReport => "rank-report",
            ExperimentKind::Stencil => "stencil",
            ExperimentKind::NoiseSweep => "noise-sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: Option<String>,
    pub burgers1d: Option<Burgers1dConfig>,
    pub fisher2d: Option<Fisher2dConfig>,
    pub cavity: Option<CavityConfig>,
    #[serde(rename = "kraus-compile")]
    pub kraus_compile: Option<KrausCompileConfig>,
    #[serde(rename = "rank-report")]
    pub rank_report: Option<RankReportConfig>,
    pub stencil: Option<StencilConfig>,
    #[serde(rename = "noise-sweep")]
    pub noise_sweep: Option<NoiseSweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Euler1,
    Trotter2,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Euler1 => Scheme::Euler1,
            SchemeName::Trotter2 => Scheme::Trotter2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerName {
    Off,
    PaBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarModelName {
    Propagated,
    Constant,
}

/// Time stepping shared by the PDE experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub scheme: SchemeName,
    pub dt: f64,
    /// Defaults to the last save time.
    pub t_end: Option<f64>,
    pub save_times: Vec<f64>,
    pub controller: ControllerName,
    pub epsilon: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeName::Euler1,
            dt: 1e-3,
            t_end: None,
            save_times: vec![0.0, 0.06, 0.12, 0.18, 0.24],
            controller: ControllerName::Off,
            epsilon: 0.1,
        }
    }
}

impl TimeConfig {
    pub fn run_config(&self) -> Result<RunConfig> {
        let last = self.save_times.iter().copied().fold(0.0, f64::max);
        let mut rc = RunConfig::new(self.scheme.into(), self.dt, self.t_end.unwrap_or(last));
        rc.save_times = self.save_times.clone();
        rc.epsilon = self.epsilon;
        rc.controller = match self.controller {
            ControllerName::Off => Controller::Off,
            ControllerName::PaBound => Controller::PaBound,
        };
        rc.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(t) = self.save_times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::Config(format!("save time {t} must be finite and >= 0")));
        }
        Ok(rc)
    }
}

/// Readout sampling shared by the PDE experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutConfig {
    pub shots: usize,
    /// Initial per-point variance (propagated) or the constant variance.
    pub variance: f64,
    pub var_model: VarModelName,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            shots: 10_000,
            variance: 1e-5,
            var_model: VarModelName::Propagated,
        }
    }
}

impl ReadoutConfig {
    pub fn model(&self) -> VarModel {
        match self.var_model {
            VarModelName::Propagated => VarModel::Propagated,
            VarModelName::Constant => VarModel::Constant(self.variance),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.shots < 2 {
            return Err(Error::Config(format!("shots must be >= 2, got {}", self.shots)));
        }
        if !(self.variance.is_finite() && self.variance >= 0.0) {
            return Err(Error::Config(format!("variance must be >= 0, got {}", self.variance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryName {
    Periodic,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Burgers1dConfig {
    pub n: usize,
    pub length: f64,
    pub re: f64,
    pub boundary: BoundaryName,
    /// Ghost values at the left and right ends for Dirichlet boundaries.
    pub boundary_values: [f64; 2],
    /// `background + amplitude · exp(-((x - center) / width)^2)`.
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub background: f64,
    pub time: TimeConfig,
    pub readout: ReadoutConfig,
}

impl Default for Burgers1dConfig {
    fn default() -> Self {
        Self {
            n: 128,
            length: 1.0,
            re: 100.0,
            boundary: BoundaryName::Dirichlet,
            boundary_values: [0.0, 0.0],
            amplitude: 1.0,
            center: 0.3,
            width: 0.1,
            background: 0.0,
            time: TimeConfig::default(),
            readout: ReadoutConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityName {
    Rotational,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fisher2dConfig {
    pub nx: usize,
    pub ny: usize,
    /// Domain `[-half_width, half_width]^2`, so the rotational field swirls about its centre.
    pub half_width: f64,
    pub pe: f64,
    pub da: f64,
    pub velocity: VelocityName,
    /// Components of the uniform velocity.
    pub uniform: [f64; 2],
    pub boundary: BoundaryName,
    /// `background + amplitude · exp(-|r - center|^2 / width^2)`.
    pub amplitude: f64,
    pub center: [f64; 2],
    pub width: f64,
    pub background: f64,
    pub time: TimeConfig,
    pub readout: ReadoutConfig,
}

impl Default for Fisher2dConfig {
    fn default() -> Self {
        Self {
            nx: 64,
            ny: 64,
            half_width: 1.0,
            pe: 200.0,
            da: 1.0,
            velocity: VelocityName::Rotational,
            uniform: [0.0, 0.0],
            boundary: BoundaryName::Periodic,
            amplitude: 0.8,
            center: [0.4, 0.0],
            width: 0.25,
            background: 0.0,
            time: TimeConfig {
                dt: 1e-3,
                save_times: vec![0.02, 0.20, 0.40, 0.80],
                ..TimeConfig::default()
            },
            readout: ReadoutConfig::default(),
        }
    }
}

impl Fisher2dConfig {
    pub fn velocity_field(&self) -> VelocityField {
        match self.velocity {
            VelocityName::Rotational => VelocityField::Rotational,
            VelocityName::Uniform => VelocityField::Uniform {
                vx: self.uniform[0],
                vy: self.uniform[1],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityConfig {
    pub n: usize,
    pub re: f64,
    pub lid_velocity: f64,
    pub dt: f64,
    pub dtau: f64,
    pub tol: f64,
    pub scheme: SchemeName,
    pub max_outer: usize,
    pub max_inner: usize,
    pub inner_tol: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            n: 128,
            re: 1000.0,
            lid_velocity: 1.0,
            dt: 0.005,
            dtau: 5e-6,
            tol: 1e-5,
            scheme: SchemeName::Trotter2,
            max_outer: 200_000,
            max_inner: 20,
            inner_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorSource {
    Zero,
    Burgers,
    GenericLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultInjection {
    None,
    /// Halve every non-post-selected Kraus operator before verification.
    BreakCompleteness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KrausCompileConfig {
    pub modes: usize,
    pub levels: usize,
    pub rank: usize,
    pub dt: f64,
    pub source: GeneratorSource,
    pub spacing: f64,
    pub re: f64,
    pub dim_cap: usize,
    /// Random density-matrix probes in addition to the maximally mixed one.
    pub probes: usize,
    pub magnitudes: bool,
    pub fault: FaultInjection,
}

impl Default for KrausCompileConfig {
    fn default() -> Self {
        Self {
            modes: 4,
            levels: 4,
            rank: 16,
            dt: 0.01,
            source: GeneratorSource::Burgers,
            spacing: 0.25,
            re: 10.0,
            dim_cap: crate::fock::DEFAULT_DIM_CAP,
            probes: 4,
            magnitudes: true,
            fault: FaultInjection::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankReportConfig {
    pub l_values: Vec<usize>,
    pub dims: Vec<usize>,
    pub deriv_orders: Vec<usize>,
    pub degrees: Vec<usize>,
    pub self_coupling: bool,
}

impl Default for RankReportConfig {
    fn default() -> Self {
        Self {
            l_values: vec![8, 16, 32, 64, 128, 256, 512, 1024],
            dims: vec![1],
            deriv_orders: vec![2],
            degrees: vec![1],
            self_coupling: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StencilConfig {
    pub orders: Vec<usize>,
    /// Radii beyond the minimum `⌈K/2⌉` to tabulate as well.
    pub extra_radius: usize,
}

impl Default for StencilConfig {
    fn default() -> Self {
        Self {
            orders: vec![1, 2, 3, 4, 6],
            extra_radius: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSweepConfig {
    pub gammas: Vec<f64>,
    /// `γ̄ = calibration · γ`.
    pub calibration: f64,
    pub richardson_gammas: Vec<f64>,
    pub order: usize,
    pub burgers: Burgers1dConfig,
}

impl Default for NoiseSweepConfig {
    fn default() -> Self {
        Self {
            gammas: vec![0.0, 0.05, 0.1, 0.2],
            calibration: 1.0,
            richardson_gammas: vec![0.05, 0.1, 0.2],
            order: 2,
            burgers: Burgers1dConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Config(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn at_least(name: &str, v: usize, min: usize) -> Result<()> {
    if v < min {
        return Err(Error::Config(format!("{name} must be >= {min}, got {v}")));
    }
    Ok(())
}

impl Burgers1dConfig {
    fn validate(&self) -> Result<()> {
        at_least("n", self.n, 3)?;
        positive("length", self.length)?;
        positive("re", self.re)?;
        positive("width", self.width)?;
        self.time.run_config()?;
        self.readout.validate()
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sections present, by experiment name.
    fn sections(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let present = [
            (self.burgers1d.is_some(), ExperimentKind::Burgers1d),
            (self.fisher2d.is_some(), ExperimentKind::Fisher2d),
            (self.cavity.is_some(), ExperimentKind::Cavity),
            (self.kraus_compile.is_some(), ExperimentKind::KrausCompile),
            (self.rank_report.is_some(), ExperimentKind::RankReport),
            (self.stencil.is_some(), ExperimentKind::Stencil),
            (self.noise_sweep.is_some(), ExperimentKind::NoiseSweep),
        ];
        for (p, k) in present {
            if p {
                out.push(k.name());
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(other) = self.sections().into_iter().find(|s| *s != self.experiment.name()) {
            return Err(Error::Config(format!(
                "section [{other}] does not belong to experiment `{}`",
                self.experiment.name()
            )));
        }
        match self.experiment {
            ExperimentKind::Burgers1d => self.burgers1d().validate(),
            ExperimentKind::Fisher2d => {
                let f = self.fisher2d();
                at_least("nx", f.nx, 3)?;
                at_least("ny", f.ny, 3)?;
                positive("half_width", f.half_width)?;
                positive("pe", f.pe)?;
                positive("width", f.width)?;
                f.time.run_config()?;
                f.readout.validate()
            }
            ExperimentKind::Cavity => {
                let c = self.cavity();
                at_least("n", c.n, 5)?;
                for (name, v) in [("re", c.re), ("dt", c.dt), ("dtau", c.dtau), ("tol", c.tol), ("inner_tol", c.inner_tol)] {
                    positive(name, v)?;
                }
                at_least("max_outer", c.max_outer, 1)?;
                at_least("max_inner", c.max_inner, 1)
            }
            ExperimentKind::KrausCompile => {
                let k = self.kraus_compile();
                at_least("modes", k.modes, 1)?;
                at_least("levels", k.levels, 1)?;
                at_least("rank", k.rank, 2)?;
                positive("dt", k.dt)?;
                positive("spacing", k.spacing)
            }
            ExperimentKind::RankReport => {
                let r = self.rank_report();
                if r.l_values.is_empty() || r.dims.is_empty() || r.deriv_orders.is_empty() || r.degrees.is_empty() {
                    return Err(Error::Config("rank-report sweep lists must be non-empty".into()));
                }
                if r.dims.iter().any(|d| !(1..=2).contains(d)) {
                    return Err(Error::Config("dims must be 1 or 2".into()));
                }
                if r.deriv_orders.contains(&0) || r.degrees.contains(&0) || r.l_values.contains(&0) {
                    return Err(Error::Config("rank-report values must be >= 1".into()));
                }
                Ok(())
            }
            ExperimentKind::Stencil => {
                let s = self.stencil();
                if s.orders.is_empty() || s.orders.contains(&0) {
                    return Err(Error::Config("stencil orders must be non-empty and >= 1".into()));
                }
                Ok(())
            }
            ExperimentKind::NoiseSweep => {
                let n = self.noise_sweep();
                n.burgers.validate()?;
                if n.gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                    return Err(Error::Config("gammas must be >= 0".into()));
                }
                if !(n.calibration.is_finite() && n.calibration >= 0.0) {
                    return Err(Error::Config("calibration must be >= 0".into()));
                }
                self.noise_config().validate().map_err(|e| Error::Config(e.to_string()))
            }
        }
    }

    pub fn burgers1d(&self) -> Burgers1dConfig {
        self.burgers1d.clone().unwrap_or_default()
    }

    pub fn fisher2d(&self) -> Fisher2dConfig {
        self.fisher2d.clone().unwrap_or_default()
    }

    pub fn cavity(&self) -> CavityConfig {
        self.cavity.clone().unwrap_or_default()
    }

    pub fn kraus_compile(&self) -> KrausCompileConfig {
        self.kraus_compile.clone().unwrap_or_default()
    }

    pub fn rank_report(&self) -> RankReportConfig {
        self.rank_report.clone().unwrap_or_default()
    }

    pub fn stencil(&self) -> StencilConfig {
        self.stencil.clone().unwrap_or_default()
    }

    pub fn noise_sweep(&self) -> NoiseSweepConfig {
        self.noise_sweep.clone().unwrap_or_default()
    }

    pub fn noise_config(&self) -> crate::noise::NoiseConfig {
        let n = self.noise_sweep();
        crate::noise::NoiseConfig {
            gamma: n.gammas.iter().copied().fold(0.0, f64::max),
            gamma_bar: n.calibration * n.gammas.iter().copied().fold(0.0, f64::max),
            richardson_gammas: n.richardson_gammas.clone(),
            order: n.order,
        }
    }
}
