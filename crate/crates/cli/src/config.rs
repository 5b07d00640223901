//! TOML run configuration. Every table rejects unknown keys; see
//! `configs/*.toml` for annotated examples.

use serde::Deserialize;
use viscofem::linalg::{SolverMethod, SolverSettings};
use viscofem::material::{MaterialModel, MaxwellArm};
use viscofem::mesh::AnnulusDivisions;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Manufactured-solution error table over an (h, k) sweep.
    Convergence,
    /// Energy ledger of the held-then-released box.
    Conserve,
    /// Contact pressure of the shaft seal over a frequency sweep.
    Seal,
    /// One manufactured run with ledger, errors and VTK frames.
    Single,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Convergence => "convergence",
            Scenario::Conserve => "conserve",
            Scenario::Seal => "seal",
            Scenario::Single => "single",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must match the scenario given on the command line.
    pub scenario: Option<Scenario>,
    pub geometry: Option<Geometry>,
    pub material: Option<MaterialConfig>,
    pub time: Option<TimeConfig>,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub convergence: Option<ConvergenceConfig>,
    pub conserve: Option<ConserveConfig>,
    pub seal: Option<SealSweepConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Geometry {
    Box {
        n: usize,
        #[serde(default = "unit_extent")]
        extent: [f64; 3],
    },
    Annulus {
        r_in: f64,
        r_out: f64,
        length: f64,
        /// Cells in the radial, angular and axial directions.
        divisions: [usize; 3],
    },
}

fn unit_extent() -> [f64; 3] {
    [1.0; 3]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub density: f64,
    pub young: Option<f64>,
    pub poisson: Option<f64>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(default)]
    pub arms: Vec<ArmConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub kappa: f64,
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub k: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    #[serde(default = "default_degree")]
    pub p: usize,
}

fn default_degree() -> usize {
    2
}

impl Default for Discretization {
    fn default() -> Self {
        Self { p: default_degree() }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodConfig {
    Auto,
    Cg,
    Direct,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: MethodConfig,
    pub tolerance: f64,
    pub max_iter_factor: usize,
    pub direct_threshold: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            method: MethodConfig::Auto,
            tolerance: s.tolerance,
            max_iter_factor: s.max_iter_factor,
            direct_threshold: s.direct_threshold,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub csv: bool,
    /// Write a VTK frame every `vtk_stride` steps; 0 disables VTK.
    pub vtk_stride: usize,
    /// Record measured wall time in the convergence CSV; when false the
    /// column is 0 so that repeated runs are byte-identical.
    pub wall_time: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            csv: true,
            vtk_stride: 0,
            wall_time: true,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Cells per axis of the unit cube.
    pub n: Vec<usize>,
    /// Uniform step counts over `[0, t_end]`.
    pub steps: Vec<usize>,
    /// Polynomial degrees; defaults to `discretization.p`.
    pub degrees: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConserveConfig {
    #[serde(default = "default_lift")]
    pub lift: [f64; 3],
    #[serde(default = "default_held_fraction")]
    pub held_fraction: f64,
    #[serde(default = "default_release")]
    pub release: f64,
}

fn default_lift() -> [f64; 3] {
    [0.0, 0.0, 0.2]
}

fn default_held_fraction() -> f64 {
    0.4
}

fn default_release() -> f64 {
    0.1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyRange {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SealSweepConfig {
    /// Explicit list of frequencies in Hz.
    pub frequencies: Option<Vec<f64>>,
    /// Log-spaced frequencies in Hz.
    pub range: Option<FrequencyRange>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_expansion")]
    pub expansion: f64,
    #[serde(default)]
    pub eccentricity: f64,
    #[serde(default = "default_stations")]
    pub stations: Vec<f64>,
    #[serde(default = "default_cycles")]
    pub cycles: usize,
    #[serde(default = "default_measure_cycles")]
    pub measure_cycles: usize,
    #[serde(default = "default_steps_per_cycle")]
    pub steps_per_cycle: usize,
}

fn default_amplitude() -> f64 {
    0.001
}

fn default_expansion() -> f64 {
    0.01
}

fn default_stations() -> Vec<f64> {
    vec![0.0, 0.25, 0.5]
}

fn default_cycles() -> usize {
    3
}

fn default_measure_cycles() -> usize {
    1
}

fn default_steps_per_cycle() -> usize {
    40
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_error(format!("{key} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    /// Checks that the scenario's blocks are present.
    pub fn check(&self, scenario: Scenario) -> Result<(), CliError> {
        if let Some(s) = self.scenario {
            if s != scenario {
                return Err(config_error(format!(
                    "scenario: config is for '{}' but '{}' was requested",
                    s.name(),
                    scenario.name()
                )));
            }
        }
        let need = |present: bool, key: &str| {
            if present {
                Ok(())
            } else {
                Err(config_error(format!("missing [{key}] table required by scenario '{}'", scenario.name())))
            }
        };
        need(self.material.is_some(), "material")?;
        match scenario {
            Scenario::Convergence => {
                need(self.time.is_some(), "time")?;
                need(self.convergence.is_some(), "convergence")
            }
            Scenario::Conserve | Scenario::Single => {
                need(self.time.is_some(), "time")?;
                need(matches!(self.geometry, Some(Geometry::Box { .. })), "geometry (kind = \"box\")")
            }
            Scenario::Seal => {
                need(matches!(self.geometry, Some(Geometry::Annulus { .. })), "geometry (kind = \"annulus\")")?;
                need(self.seal.is_some(), "seal")
            }
        }
    }

    pub fn material(&self) -> Result<MaterialModel, CliError> {
        let m = self.material.as_ref().ok_or_else(|| config_error("missing [material] table"))?;
        let arms = m
            .arms
            .iter()
            .map(|a| MaxwellArm {
                kappa: a.kappa,
                tau: a.tau,
            })
            .collect();
        let model = match (m.young, m.poisson, m.mu, m.lambda) {
            (Some(e), Some(nu), None, None) => MaterialModel::from_engineering(m.density, e, nu, arms),
            (None, None, Some(mu), Some(lambda)) => MaterialModel::new(m.density, mu, lambda, arms),
            _ => {
                return Err(config_error(
                    "material: give either young and poisson, or mu and lambda",
                ))
            }
        };
        model.map_err(|e| config_error(format!("material: {e}")))
    }

    pub fn solver(&self) -> Result<SolverSettings, CliError> {
        let s = &self.solver;
        positive("solver.tolerance", s.tolerance)?;
        if s.max_iter_factor == 0 {
            return Err(config_error("solver.max_iter_factor must be at least 1"));
        }
        Ok(SolverSettings {
            method: match s.method {
                MethodConfig::Auto => SolverMethod::Auto,
                MethodConfig::Cg => SolverMethod::Cg,
                MethodConfig::Direct => SolverMethod::Direct,
            },
            tolerance: s.tolerance,
            max_iter_factor: s.max_iter_factor,
            direct_threshold: s.direct_threshold,
        })
    }

    pub fn t_end(&self) -> Result<f64, CliError> {
        let t = self.time.as_ref().ok_or_else(|| config_error("missing [time] table"))?;
        positive("time.t_end", t.t_end)
    }

    /// Number of uniform steps over `[0, t_end]` from `time.k` or `time.steps`.
    pub fn steps(&self) -> Result<usize, CliError> {
        let t_end = self.t_end()?;
        let t = self.time.as_ref().expect("checked by t_end");
        match (t.k, t.steps) {
            (Some(k), None) => {
                positive("time.k", k)?;
                let n = (t_end / k).round();
                if (n * k - t_end).abs() > 1e-9 * t_end || n < 1.0 {
                    return Err(config_error(format!("time.k = {k} does not divide t_end = {t_end}")));
                }
                Ok(n as usize)
            }
            (None, Some(n)) if n > 0 => Ok(n),
            (None, Some(_)) => Err(config_error("time.steps must be at least 1")),
            _ => Err(config_error("time: give exactly one of k and steps")),
        }
    }

    pub fn degree(&self) -> Result<usize, CliError> {
        check_degree("discretization.p", self.discretization.p)
    }

    pub fn box_geometry(&self) -> Result<(usize, [f64; 3]), CliError> {
        match self.geometry {
            Some(Geometry::Box { n, extent }) => {
                if n == 0 {
                    return Err(config_error("geometry.n must be at least 1"));
                }
                for (i, e) in extent.iter().enumerate() {
                    positive(&format!("geometry.extent[{i}]"), *e)?;
                }
                Ok((n, extent))
            }
            _ => Err(config_error("geometry: expected kind = \"box\"")),
        }
    }

    pub fn annulus(&self) -> Result<(f64, f64, f64, AnnulusDivisions), CliError> {
        match self.geometry {
            Some(Geometry::Annulus {
                r_in,
                r_out,
                length,
                divisions,
            }) => Ok((
                r_in,
                r_out,
                length,
                AnnulusDivisions {
                    radial: divisions[0],
                    angular: divisions[1],
                    axial: divisions[2],
                },
            )),
            _ => Err(config_error("geometry: expected kind = \"annulus\"")),
        }
    }
}

pub fn check_degree(key: &str, p: usize) -> Result<usize, CliError> {
    if (1..=3).contains(&p) {
        Ok(p)
    } else {
        Err(config_error(format!("{key} must be 1, 2 or 3, got {p}")))
    }
}

impl SealSweepConfig {
    pub fn frequencies(&self) -> Result<Vec<f64>, CliError> {
        let list = match (&self.frequencies, &self.range) {
            (Some(f), None) => f.clone(),
            (None, Some(r)) => {
                positive("seal.range.from", r.from)?;
                positive("seal.range.to", r.to)?;
                if r.count == 0 {
                    return Err(config_error("seal.range.count must be at least 1"));
                }
                viscofem::seal::log_spaced(r.from, r.to, r.count)
            }
            _ => return Err(config_error("seal: give exactly one of frequencies and range")),
        };
        if list.is_empty() {
            return Err(config_error("seal.frequencies is empty"));
        }
        for f in &list {
            positive("seal.frequencies", *f)?;
        }
        Ok(list)
    }
}
