//! Run configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, GridDomain, MoldSpec, Pointset};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::newton::NewtonConfig;
use crate::problems::{CubicSemilinear, GuessStrategy, HeleShaw, MongeAmpere, Plateau, Problem};
use crate::trust_region::{JacobianMode, TrsMethod, TrustRegionConfig};

/// One experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Seeds the evaluation set (and anything else not seeded explicitly).
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_eval")]
    pub n_eval: usize,
    pub problem: ProblemConfig,
    pub kernel: KernelConfig,
    pub pointset: PointsetConfig,
    #[serde(default)]
    pub guess: GuessConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_name() -> String {
    "run".into()
}

fn default_n_eval() -> usize {
    2000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Cubic,
    Plateau {
        s: f64,
    },
    HeleShaw {
        gamma: f64,
        /// Motz functions per slit end.
        #[serde(default)]
        motz: u32,
    },
    MongeAmpere {
        dim: usize,
    },
}

impl ProblemConfig {
    pub fn dim(&self) -> usize {
        match self {
            ProblemConfig::MongeAmpere { dim } => *dim,
            _ => 2,
        }
    }

    /// Builds the problem. Hele-Shaw takes its geometry from the pointset
    /// recipe when that is a mold, and from the default mold otherwise.
    pub fn build(&self, pointset: &PointsetConfig) -> Result<Box<dyn Problem>> {
        Ok(match *self {
            ProblemConfig::Cubic => Box::new(CubicSemilinear::new()),
            ProblemConfig::Plateau { s } => Box::new(Plateau::new(s)?),
            ProblemConfig::HeleShaw { gamma, motz } => {
                let mold = match pointset {
                    PointsetConfig::Mold(m) => m.spec(),
                    _ => MoldSpec::default(),
                };
                Box::new(HeleShaw::new(gamma, mold, motz)?)
            }
            ProblemConfig::MongeAmpere { dim } => Box::new(MongeAmpere::new(dim)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(flatten)]
    pub family: KernelFamily,
    /// `c` for MQ, IMQ and Matérn; support radius for WC4.
    pub scale: f64,
    /// Matérn only.
    #[serde(default = "yes")]
    pub normalize: bool,
}

fn yes() -> bool {
    true
}

impl KernelConfig {
    pub fn spec(&self, dim: usize) -> Result<KernelSpec> {
        Ok(KernelSpec::new(self.family, self.scale, dim)?.normalized(self.normalize))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointsetConfig {
    /// `n^d` tensor grid on the unit square or cube.
    Grid { n: usize },
    /// Scattered disc; the radius defaults to the problem's domain.
    Disc {
        n_interior: usize,
        n_boundary: usize,
        #[serde(default)]
        seed: u64,
        radius: Option<f64>,
    },
    Mold(MoldConfig),
    File { path: PathBuf },
}

/// Overrides of the default mold.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoldConfig {
    pub boundary_spacing: Option<f64>,
    pub n_interior: Option<usize>,
    pub pdebc: Option<bool>,
    pub seed: Option<u64>,
}

impl MoldConfig {
    pub fn spec(&self) -> MoldSpec {
        let d = MoldSpec::default();
        MoldSpec {
            boundary_spacing: self.boundary_spacing.unwrap_or(d.boundary_spacing),
            n_interior: self.n_interior.unwrap_or(d.n_interior),
            pdebc: self.pdebc.unwrap_or(d.pdebc),
            seed: self.seed.unwrap_or(d.seed),
            ..d
        }
    }
}

impl PointsetConfig {
    /// Relative file paths resolve against `base`.
    pub fn build(&self, prob: &dyn Problem, base: &Path) -> Result<Pointset> {
        match self {
            PointsetConfig::Grid { n } => {
                let dom = match prob.dim() {
                    2 => GridDomain::UnitSquare,
                    3 => GridDomain::UnitCube,
                    d => return Err(Error::Config(format!("no grid recipe in {d} dimensions"))),
                };
                geometry::generate_grid(dom, *n)
            }
            PointsetConfig::Disc {
                n_interior,
                n_boundary,
                seed,
                radius,
            } => {
                let r = match (radius, prob.domain()) {
                    (Some(r), _) => *r,
                    (None, geometry::Domain::Disc { radius }) => radius,
                    (None, _) => return Err(Error::Config("disc pointset needs a radius".into())),
                };
                geometry::generate_disc(r, *n_interior, *n_boundary, *seed)
            }
            PointsetConfig::Mold(m) => geometry::generate_mold(&m.spec()),
            PointsetConfig::File { path } => geometry::load_pointset(&base.join(path)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuessConfig {
    #[serde(flatten)]
    pub strategy: GuessStrategy,
    /// Standard deviation of a seeded Gaussian added to the guess.
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default)]
    pub perturbation_seed: u64,
}

impl Default for GuessConfig {
    fn default() -> Self {
        GuessConfig {
            strategy: GuessStrategy::Zero,
            perturbation: 0.0,
            perturbation_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverConfig {
    TrustRegion {
        trs: TrsMethod,
        #[serde(default)]
        scaling: bool,
        #[serde(default)]
        jacobian: JacobianMode,
        /// Eliminate the linear rows through a null-space basis. When off,
        /// they stay in the residual and the solve runs on all coefficients.
        #[serde(default = "yes")]
        eliminate: bool,
        max_iter: Option<usize>,
        delta0: Option<f64>,
        /// Radius cap; defaults to `1e3 * delta0`.
        delta_max: Option<f64>,
        eta: Option<f64>,
        window: Option<usize>,
        stagnation_tol: Option<f64>,
    },
    OperatorNewton {
        max_iter: Option<usize>,
        divergence_factor: Option<f64>,
    },
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::TrustRegion {
            trs: TrsMethod::Dogleg,
            scaling: false,
            jacobian: JacobianMode::Analytic,
            eliminate: true,
            max_iter: None,
            delta0: None,
            delta_max: None,
            eta: None,
            window: None,
            stagnation_tol: None,
        }
    }
}

impl SolverConfig {
    pub fn label(&self) -> String {
        match self {
            SolverConfig::TrustRegion {
                trs,
                scaling,
                jacobian,
                eliminate,
                ..
            } => {
                let mut s = trs.label().to_string();
                if *scaling {
                    s.push_str("+scaling");
                }
                if !*eliminate {
                    s.push_str("+full");
                }
                if *jacobian == JacobianMode::ForwardDifference {
                    s.push_str("+fdjac");
                }
                s
            }
            SolverConfig::OperatorNewton { .. } => "operator_newton".into(),
        }
    }

    pub fn trust_region(&self) -> Option<(TrustRegionConfig, JacobianMode)> {
        match *self {
            SolverConfig::TrustRegion {
                trs,
                scaling,
                jacobian,
                max_iter,
                delta0,
                delta_max,
                eta,
                window,
                stagnation_tol,
                ..
            } => {
                let mut c = TrustRegionConfig::new(trs, scaling);
                if let Some(d) = delta0 {
                    c.delta0 = d;
                    c.delta_max = 1e3 * d;
                }
                c.delta_max = delta_max.unwrap_or(c.delta_max);
                c.max_iter = max_iter.unwrap_or(c.max_iter);
                c.eta = eta.unwrap_or(c.eta);
                c.window = window.unwrap_or(c.window);
                c.stagnation_tol = stagnation_tol.unwrap_or(c.stagnation_tol);
                Some((c, jacobian))
            }
            SolverConfig::OperatorNewton { .. } => None,
        }
    }

    /// Whether the linear rows are eliminated before solving.
    pub fn eliminates(&self) -> bool {
        match *self {
            SolverConfig::TrustRegion { eliminate, .. } => eliminate,
            SolverConfig::OperatorNewton { .. } => false,
        }
    }

    pub fn newton(&self) -> Option<NewtonConfig> {
        match *self {
            SolverConfig::OperatorNewton {
                max_iter,
                divergence_factor,
            } => {
                let d = NewtonConfig::default();
                Some(NewtonConfig {
                    max_iter: max_iter.unwrap_or(d.max_iter),
                    divergence_factor: divergence_factor.unwrap_or(d.divergence_factor),
                    ..d
                })
            }
            SolverConfig::TrustRegion { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// CSV file receiving the metrics row.
    pub csv: Option<PathBuf>,
    /// JSON-lines iteration trace.
    pub trace: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_eval == 0 {
            return Err(Error::Config("n_eval must be at least 1".into()));
        }
        if !(self.guess.perturbation >= 0.0 && self.guess.perturbation.is_finite()) {
            return Err(Error::Config("perturbation must be a finite non-negative number".into()));
        }
        self.kernel.spec(self.problem.dim())?;
        if let Some((tr, _)) = self.solver.trust_region() {
            tr.validate()?;
        }
        Ok(())
    }
}

/// A list of runs, written as `[[run]]` tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub run: Vec<RunConfig>,
    /// CSV file for the combined table; stdout when absent.
    pub csv: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for r in &cfg.run {
            r.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}
