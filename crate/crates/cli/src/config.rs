//! Experiment configuration: one TOML file per run, scalar fields
//! overridable from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scatlab::inverse::MagneticGauge;
use scatlab::magnetic::GaugeFunction;
use scatlab::model::spec::{ExpansionSpec, PotentialSpec};
use scatlab::numkit::grid::Grid;
use scatlab::Vec3;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Forward,
    Smatrix,
    Completeness,
    GaugeCheck,
    Uniqueness,
    Reconstruct,
    Dtn,
    Validate,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Forward => "forward",
            Scenario::Smatrix => "smatrix",
            Scenario::Completeness => "completeness",
            Scenario::GaugeCheck => "gauge-check",
            Scenario::Uniqueness => "uniqueness",
            Scenario::Reconstruct => "reconstruct",
            Scenario::Dtn => "dtn",
            Scenario::Validate => "validate",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub side: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    pub dense_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            restart: 80,
            max_iter: 2000,
            dense_limit: 1024,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CachePolicy {
    /// Read hits, write misses.
    #[default]
    Use,
    /// Recompute and overwrite.
    Refresh,
    Off,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CacheConfig {
    pub policy: CachePolicy,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Lippmann–Schwinger solves and far fields.
    #[default]
    Grid,
    /// Partial waves for radial potentials.
    Oracle,
    /// Averaged-solution pairing.
    Representation,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardConfig {
    /// Degree of the direction rule; defaults to `degree`.
    pub directions: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmatrixConfig {
    pub route: Route,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompletenessConfig {
    #[serde(default)]
    pub center: Vec3,
    pub radius: f64,
    /// Increasing degrees; defaults to 0..=degree.
    #[serde(default)]
    pub degrees: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeConfig {
    pub psi: GaugeFunction,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UniquenessConfig {
    /// Pair must agree on |x| >= radius.
    pub radius: f64,
    pub functional: bool,
    /// λ values for the scaling sweep (skipped when empty).
    pub lambdas: Vec<f64>,
    pub gauge: MagneticGauge,
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        Self {
            radius: 1.0,
            functional: true,
            lambdas: vec![],
            gauge: MagneticGauge::Sampled,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructConfig {
    pub radius: f64,
    pub xi_max: f64,
    pub xi_spacing: f64,
    /// τ schedule in units of √E.
    pub tau_factors: Vec<f64>,
    pub regularization: f64,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            radius: 2.5,
            xi_max: 2.0,
            xi_spacing: 1.0,
            tau_factors: scatlab::inverse::cgo::DEFAULT_TAU_FACTORS.to_vec(),
            regularization: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtnConfig {
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub rays: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self { rays: 64 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionPair {
    pub first: ExpansionSpec,
    pub second: ExpansionSpec,
}

fn default_degree() -> usize {
    4
}

fn default_output() -> PathBuf {
    PathBuf::from("scatlab-out")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: Option<Scenario>,
    pub energy: f64,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub cache: CacheConfig,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub second: Option<PotentialSpec>,
    #[serde(default)]
    pub expansions: Option<ExpansionPair>,
    #[serde(default)]
    pub forward: ForwardConfig,
    #[serde(default)]
    pub smatrix: SmatrixConfig,
    #[serde(default)]
    pub completeness: Option<CompletenessConfig>,
    #[serde(default)]
    pub gauge: Option<GaugeConfig>,
    #[serde(default)]
    pub uniqueness: UniquenessConfig,
    #[serde(default)]
    pub reconstruct: ReconstructConfig,
    #[serde(default)]
    pub dtn: Option<DtnConfig>,
    #[serde(default)]
    pub validate: ValidateConfig,
}

/// Scalar fields settable from flags.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Energy E = k².
    #[arg(long)]
    pub energy: Option<f64>,
    /// Harmonic degree L.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Grid cells per axis.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Box side length.
    #[arg(long)]
    pub grid_side: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// GMRES relative tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub cache: Option<CachePolicy>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Schema(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text)
            .map_err(|e| CliError::Schema(format!("config: {}", e.message().trim())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.energy {
            self.energy = v;
        }
        if let Some(v) = o.degree {
            self.degree = v;
        }
        if let Some(v) = o.grid_n {
            self.grid.n = v;
        }
        if let Some(v) = o.grid_side {
            self.grid.side = v;
        }
        if let Some(v) = &o.output {
            self.output = v.clone();
        }
        if let Some(v) = o.tol {
            self.solver.tol = v;
        }
        if let Some(v) = o.cache {
            self.cache.policy = v;
        }
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::with_side(self.grid.dim, self.grid.n, self.grid.side)?)
    }

    pub fn solver_options(&self) -> scatlab::forward::SolverOptions {
        let mut o = scatlab::forward::SolverOptions::default();
        o.gmres.tol = self.solver.tol;
        o.gmres.restart = self.solver.restart;
        o.gmres.max_iter = self.solver.max_iter;
        o.dense_limit = self.solver.dense_limit;
        o
    }

    fn spec<'a>(
        &'a self,
        which: &str,
        s: &'a Option<PotentialSpec>,
    ) -> Result<&'a PotentialSpec, CliError> {
        let s = s
            .as_ref()
            .ok_or_else(|| CliError::Schema(format!("scenario needs a [{which}] table")))?;
        if s.dim != self.grid.dim {
            return Err(CliError::Schema(format!(
                "[{which}] has dimension {} but the grid has {}",
                s.dim, self.grid.dim
            )));
        }
        s.validate()?;
        Ok(s)
    }

    pub fn potential(&self) -> Result<&PotentialSpec, CliError> {
        self.spec("potential", &self.potential)
    }

    pub fn second(&self) -> Result<&PotentialSpec, CliError> {
        self.spec("second", &self.second)
    }

    /// Checks run before any computation.
    pub fn validate(&self, scenario: Scenario) -> Result<(), CliError> {
        if let Some(s) = self.scenario {
            if s != scenario {
                return Err(CliError::Schema(format!(
                    "config is for scenario '{}' but '{}' was requested",
                    s.name(),
                    scenario.name()
                )));
            }
        }
        if !(self.energy > 0.0 && self.energy.is_finite()) {
            return Err(CliError::Schema(format!(
                "energy must be positive, got {}",
                self.energy
            )));
        }
        let s = self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) || s.restart == 0 || s.max_iter == 0 {
            return Err(CliError::Schema("solver settings out of range".into()));
        }
        self.grid()?;
        match scenario {
            Scenario::Forward | Scenario::Smatrix | Scenario::Validate => {
                self.potential()?;
            }
            Scenario::Completeness => {
                self.potential()?;
                let c = self.completeness.as_ref().ok_or_else(|| {
                    CliError::Schema("scenario needs a [completeness] table".into())
                })?;
                if !(c.radius > 0.0) || c.degrees.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CliError::Schema(
                        "completeness needs radius > 0 and increasing degrees".into(),
                    ));
                }
            }
            Scenario::GaugeCheck => {
                self.potential()?;
                if self.gauge.is_none() {
                    return Err(CliError::Schema("scenario needs a [gauge] table".into()));
                }
            }
            Scenario::Uniqueness => {
                if self.expansions.is_none() {
                    self.potential()?;
                    self.second()?;
                }
                let u = &self.uniqueness;
                if !(u.radius > 0.0) || u.lambdas.iter().any(|l| !(*l > 0.0)) {
                    return Err(CliError::Schema(
                        "uniqueness needs radius > 0 and positive λ".into(),
                    ));
                }
            }
            Scenario::Reconstruct => {
                self.potential()?;
                self.second()?;
                let r = &self.reconstruct;
                if self.grid.dim != 3 {
                    return Err(CliError::Schema("reconstruct needs a 3D grid".into()));
                }
                if !(r.radius > 0.0
                    && r.xi_max >= 0.0
                    && r.xi_spacing > 0.0
                    && r.regularization > 0.0)
                    || r.tau_factors.is_empty()
                    || r.tau_factors.iter().any(|t| !(*t > 0.0))
                {
                    return Err(CliError::Schema("reconstruct settings out of range".into()));
                }
            }
            Scenario::Dtn => {
                self.potential()?;
                if self.second.is_some() {
                    self.second()?;
                }
                match self.dtn {
                    Some(d) if d.radius > 0.0 => {}
                    _ => {
                        return Err(CliError::Schema(
                            "scenario needs a [dtn] table with radius > 0".into(),
                        ))
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
energy = 1.0
[grid]
dim = 2
n = 32
side = 8.0
[potential]
dim = 2
decay = { rho = 2.0, c = 10.0, radius = 1.0 }
electric = [{ kind = "well", value = -0.5, radius = 1.0 }]
"#;

    #[test]
    fn parses_and_overrides() {
        let mut c = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(c.degree, 4);
        c.apply(&Overrides {
            energy: Some(2.0),
            grid_n: Some(64),
            ..Default::default()
        });
        assert_eq!(c.energy, 2.0);
        assert_eq!(c.grid.n, 64);
        c.validate(Scenario::Smatrix).unwrap();
    }

    #[test]
    fn schema_errors() {
        let bad = format!("{BASE}\nbogus = 1\n");
        assert!(matches!(
            ExperimentConfig::parse(&bad),
            Err(CliError::Schema(_))
        ));
        let c = ExperimentConfig::parse(BASE).unwrap();
        assert!(matches!(
            c.validate(Scenario::Completeness),
            Err(CliError::Schema(_))
        ));
        let mut c2 = c.clone();
        c2.scenario = Some(Scenario::Dtn);
        assert!(matches!(
            c2.validate(Scenario::Forward),
            Err(CliError::Schema(_))
        ));
    }
}
