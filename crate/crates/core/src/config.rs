//! JSON run configuration: system, relaxation, objective, simulation and
//! reconstruction settings. Unknown keys are rejected everywhere.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::invariance::{Dynamics, NoiseDistribution, NoiseModel, SystemKind, SystemModel};
use crate::moment::SemialgebraicSet;
use crate::objective::{targets_to_map, Addon, MomentTarget, ObjectiveKind, ObjectiveSpec, ReferenceMeasure};
use crate::parse::parse_polynomial;
use crate::polynomial::{Basis, MultiIndex, Polynomial, PolynomialMap};
use crate::reconstruct::{GridSpec, Truncation};
use crate::simulate::TrajectoryConfig;
use crate::solver::SolverOptions;

pub const SCHEMA_VERSION: u32 = 1;

/// A polynomial written in the compact grammar or as an explicit term list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolySpec {
    Text(String),
    Terms(Polynomial),
}

impl PolySpec {
    fn build(&self, n_state: usize, n_noise: usize, key: &str) -> Result<Polynomial> {
        let p = match self {
            PolySpec::Text(s) => parse_polynomial(s, n_state, n_noise).map_err(|e| Error::Config {
                key: key.into(),
                message: e.to_string(),
            })?,
            PolySpec::Terms(p) => p.change_basis(Basis::Monomial),
        };
        if p.dim() != n_state + n_noise {
            return Err(Error::Config {
                key: key.into(),
                message: format!("polynomial has {} variables, expected {}", p.dim(), n_state + n_noise),
            });
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub dim: usize,
    #[serde(default)]
    pub distribution: Option<NoiseDistribution>,
    #[serde(default)]
    pub moments: Option<Vec<MomentTarget>>,
    /// Draw this many samples for the relaxation's noise moments instead of exact ones.
    #[serde(default)]
    pub monte_carlo_samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub kind: SystemKind,
    pub n: usize,
    #[serde(default)]
    pub map: Option<Vec<PolySpec>>,
    #[serde(default)]
    pub drift: Option<Vec<PolySpec>>,
    /// `n` rows of `m` entries.
    #[serde(default)]
    pub diffusion: Option<Vec<Vec<PolySpec>>>,
    /// Use the `1/2` factor in front of the diffusion term.
    #[serde(default)]
    pub diffusion_half: bool,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    /// `[re, im]`.
    #[serde(default)]
    pub eigenvalue: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Extra constraints `g(x) >= 0` inside the box.
    #[serde(default)]
    pub inequalities: Vec<PolySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationConfig {
    pub k: u32,
    #[serde(default = "default_basis")]
    pub basis: Basis,
}

fn default_basis() -> Basis {
    Basis::Chebyshev
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    LeastSquares {
        #[serde(default)]
        targets: Vec<MomentTarget>,
        /// Moments file (`moments` array of `{alpha, value}`), relative to the config.
        #[serde(default)]
        targets_file: Option<PathBuf>,
        /// Restricts targets read from `targets_file` to these indices.
        #[serde(default)]
        select: Option<Vec<MultiIndex>>,
    },
    Minimize {
        coefficients: Vec<MomentTarget>,
    },
    Maximize {
        coefficients: Vec<MomentTarget>,
    },
    Feasibility,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AddonConfig {
    AbsContinuity {
        reference: ReferenceMeasure,
        gamma: f64,
        #[serde(default)]
        degree: Option<u32>,
    },
    TraceBound {
        gamma: f64,
        #[serde(default)]
        degree: Option<u32>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub x0: Vec<f64>,
    pub iterations: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: u64,
    pub degree: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub escape_lower: Option<Vec<f64>>,
    #[serde(default)]
    pub escape_upper: Option<Vec<f64>>,
}

fn default_burn_in() -> u64 {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChristoffelConfig {
    pub d: u32,
    pub confidence: Vec<f64>,
    /// `None` uses `1e-8 * lambda_max`.
    #[serde(default)]
    pub regularization: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub k: u32,
    #[serde(default)]
    pub truncation: Truncation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Points per axis.
    pub points: Vec<usize>,
    /// Defaults to the set's box.
    #[serde(default)]
    pub lower: Option<Vec<f64>>,
    #[serde(default)]
    pub upper: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    #[serde(default)]
    pub christoffel: Option<ChristoffelConfig>,
    #[serde(default)]
    pub density: Option<DensityConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub system: SystemConfig,
    pub set: SetConfig,
    #[serde(default)]
    pub relaxation: Option<RelaxationConfig>,
    #[serde(default)]
    pub objective: Option<ObjectiveConfig>,
    #[serde(default)]
    pub addons: Vec<AddonConfig>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub reconstruct: ReconstructConfig,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Also write `program.txt` when solving.
    #[serde(default)]
    pub dump_program: bool,
}

/// A parsed config with the data needed to stamp outputs.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// Hex SHA-256 of the raw config bytes.
    pub hash: String,
    pub dir: PathBuf,
}

fn config_error(key: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

/// Parses and validates a config document; `dir` resolves relative paths.
pub fn parse_config(text: &str, dir: &Path) -> Result<LoadedConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        config_error(if key == "." { "(root)".to_string() } else { key }, e.into_inner().to_string())
    })?;
    if config.version != SCHEMA_VERSION {
        return Err(config_error(
            "version",
            format!("unsupported schema version {}, expected {SCHEMA_VERSION}", config.version),
        ));
    }
    let loaded = LoadedConfig {
        hash: hex::encode(Sha256::digest(text.as_bytes())),
        dir: dir.to_path_buf(),
        config,
    };
    loaded.model()?;
    if let Some(r) = &loaded.config.relaxation {
        if r.k == 0 {
            return Err(config_error("relaxation.k", "relaxation order must be positive"));
        }
    }
    Ok(loaded)
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error("(file)", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

fn build_map(specs: &Option<Vec<PolySpec>>, key: &str, n: usize, n_noise: usize) -> Result<PolynomialMap> {
    let specs = specs
        .as_ref()
        .ok_or_else(|| config_error(format!("system.{key}"), "missing for this system kind"))?;
    if specs.len() != n {
        return Err(config_error(
            format!("system.{key}"),
            format!("expected {n} components, got {}", specs.len()),
        ));
    }
    let comps = specs
        .iter()
        .enumerate()
        .map(|(i, s)| s.build(n, n_noise, &format!("system.{key}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    PolynomialMap::new(comps).map_err(|e| config_error(format!("system.{key}"), e.to_string()))
}

impl LoadedConfig {
    pub fn relaxation(&self) -> Result<&RelaxationConfig> {
        self.config
            .relaxation
            .as_ref()
            .ok_or_else(|| config_error("relaxation", "missing; needed to build the program"))
    }

    pub fn set(&self) -> Result<SemialgebraicSet> {
        let s = &self.config.set;
        let n = self.config.system.n;
        if s.lower.len() != n || s.upper.len() != n {
            return Err(config_error("set", format!("box bounds must have {n} entries")));
        }
        let ineqs = s
            .inequalities
            .iter()
            .enumerate()
            .map(|(i, p)| p.build(n, 0, &format!("set.inequalities[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let set = if ineqs.is_empty() {
            SemialgebraicSet::from_box(&s.lower, &s.upper)
        } else {
            SemialgebraicSet::new(ineqs, &s.lower, &s.upper)
        };
        set.map_err(|e| config_error("set", e.to_string()))
    }

    /// Noise moments up to the largest degree the order-`k` rows can touch.
    fn noise(&self, cfg: &NoiseConfig, map_degree: u32) -> Result<NoiseModel> {
        let degree = self.config.relaxation.as_ref().map_or(1, |r| r.k) * map_degree;
        let model = match (&cfg.distribution, &cfg.moments) {
            (Some(_), Some(_)) => {
                return Err(config_error("system.noise", "give either `distribution` or `moments`, not both"))
            }
            (Some(dist), None) => {
                if dist.dim() != cfg.dim {
                    return Err(config_error("system.noise.distribution", "dimension does not match `dim`"));
                }
                match cfg.monte_carlo_samples {
                    Some(s) => NoiseModel::monte_carlo(dist.clone(), degree, s, cfg.seed),
                    None => NoiseModel::from_distribution(dist.clone(), degree),
                }
            }
            (None, Some(m)) => NoiseModel::from_moments(cfg.dim, targets_to_map(m)),
            (None, None) => return Err(config_error("system.noise", "needs `distribution` or `moments`")),
        };
        model.map_err(|e| config_error("system.noise", e.to_string()))
    }

    pub fn model(&self) -> Result<SystemModel> {
        let sys = &self.config.system;
        let n = sys.n;
        if n == 0 {
            return Err(config_error("system.n", "state dimension must be positive"));
        }
        let dynamics = match sys.kind {
            SystemKind::Discrete => Dynamics::Discrete {
                map: build_map(&sys.map, "map", n, 0)?,
            },
            SystemKind::Continuous => Dynamics::Continuous {
                drift: build_map(&sys.drift, "drift", n, 0)?,
            },
            SystemKind::DiscreteMarkov => {
                let cfg = sys
                    .noise
                    .as_ref()
                    .ok_or_else(|| config_error("system.noise", "missing for a Markov system"))?;
                let map = build_map(&sys.map, "map", n, cfg.dim)?;
                let noise = self.noise(cfg, map.degree())?;
                Dynamics::DiscreteMarkov { map, noise }
            }
            SystemKind::Sde => {
                let rows = sys
                    .diffusion
                    .as_ref()
                    .ok_or_else(|| config_error("system.diffusion", "missing for an SDE"))?;
                let diffusion = rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        r.iter()
                            .enumerate()
                            .map(|(j, p)| p.build(n, 0, &format!("system.diffusion[{i}][{j}]")))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Dynamics::Sde {
                    drift: build_map(&sys.drift, "drift", n, 0)?,
                    diffusion,
                    diffusion_half: sys.diffusion_half,
                }
            }
            SystemKind::PfEigen => {
                let [re, im] = sys
                    .eigenvalue
                    .ok_or_else(|| config_error("system.eigenvalue", "missing for an eigenmeasure system"))?;
                Dynamics::PfEigen {
                    map: build_map(&sys.map, "map", n, 0)?,
                    eigenvalue: Complex64::new(re, im),
                }
            }
        };
        SystemModel::new(dynamics, self.set()?).map_err(|e| config_error("system", e.to_string()))
    }

    pub fn objective(&self) -> Result<ObjectiveSpec> {
        let n = self.config.system.n;
        let check = |targets: &[MomentTarget], key: &str| -> Result<()> {
            match targets.iter().find(|t| t.alpha.dim() != n) {
                Some(t) => Err(config_error(key, format!("index {:?} does not have {n} entries", t.alpha.exponents()))),
                None => Ok(()),
            }
        };
        let kind = match self.config.objective.as_ref().unwrap_or(&ObjectiveConfig::Feasibility) {
            ObjectiveConfig::LeastSquares {
                targets,
                targets_file,
                select,
            } => {
                let mut map = BTreeMap::new();
                if let Some(file) = targets_file {
                    let (_, from_file) = read_moments_file(&self.dir.join(file))?;
                    for (a, v) in from_file {
                        if select.as_ref().is_none_or(|s| s.contains(&a)) {
                            map.insert(a, v);
                        }
                    }
                }
                check(targets, "objective.targets")?;
                map.extend(targets_to_map(targets));
                if map.is_empty() {
                    return Err(config_error("objective", "least squares needs at least one target"));
                }
                ObjectiveKind::LeastSquares(map)
            }
            ObjectiveConfig::Minimize { coefficients } => {
                check(coefficients, "objective.coefficients")?;
                ObjectiveKind::Linear {
                    coeffs: targets_to_map(coefficients),
                    maximize: false,
                }
            }
            ObjectiveConfig::Maximize { coefficients } => {
                check(coefficients, "objective.coefficients")?;
                ObjectiveKind::Linear {
                    coeffs: targets_to_map(coefficients),
                    maximize: true,
                }
            }
            ObjectiveConfig::Feasibility => ObjectiveKind::Feasibility,
        };
        let addons = self
            .config
            .addons
            .iter()
            .map(|a| match a {
                AddonConfig::AbsContinuity {
                    reference,
                    gamma,
                    degree,
                } => Addon::AbsContinuity {
                    reference: reference.clone(),
                    gamma: *gamma,
                    degree: *degree,
                },
                AddonConfig::TraceBound { gamma, degree } => Addon::TraceBound {
                    gamma: *gamma,
                    degree: *degree,
                },
            })
            .collect();
        Ok(ObjectiveSpec { kind, addons })
    }

    pub fn trajectory(&self) -> Result<TrajectoryConfig> {
        let s = self
            .config
            .simulate
            .as_ref()
            .ok_or_else(|| config_error("simulate", "missing; needed by the simulate command"))?;
        if s.iterations == 0 {
            return Err(config_error("simulate.iterations", "must be positive"));
        }
        if s.iterations <= s.burn_in {
            return Err(config_error("simulate.burn_in", "must be smaller than `iterations`"));
        }
        if s.x0.len() != self.config.system.n {
            return Err(config_error("simulate.x0", "length must equal the state dimension"));
        }
        let mut t = TrajectoryConfig::new(s.x0.clone(), s.iterations, s.degree);
        t.burn_in = s.burn_in;
        t.seed = s.seed;
        t.escape = match (&s.escape_lower, &s.escape_upper) {
            (Some(l), Some(u)) => Some((l.clone(), u.clone())),
            (None, None) => None,
            _ => return Err(config_error("simulate", "give both escape_lower and escape_upper or neither")),
        };
        Ok(t)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let set = self.set()?;
        let n = set.dim();
        let default_points = if n == 1 { 1001 } else { 200 };
        let g = self.config.reconstruct.grid.clone().unwrap_or(GridConfig {
            points: vec![default_points; n],
            lower: None,
            upper: None,
        });
        let spec = GridSpec {
            lower: g.lower.unwrap_or_else(|| set.scaling().lower()),
            upper: g.upper.unwrap_or_else(|| set.scaling().upper()),
            points: g.points,
        };
        if spec.lower.len() != n || spec.upper.len() != n || spec.points.len() != n {
            return Err(config_error("reconstruct.grid", format!("needs {n} entries per field")));
        }
        Ok(spec)
    }
}

/// Moments file written by `solve` or `simulate`: header fields plus a
/// `moments` array of user-frame monomial `{alpha, value}` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentsFile {
    pub moments: Vec<MomentTarget>,
}

/// Reads the `moments` array of a moments file; other fields are ignored.
pub fn read_moments_file(path: &Path) -> Result<(usize, BTreeMap<MultiIndex, f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error("(moments file)", format!("cannot read {}: {e}", path.display())))?;
    let file: MomentsFile = serde_json::from_str(&text)
        .map_err(|e| config_error("(moments file)", format!("{}: {e}", path.display())))?;
    let n = file.moments.first().map_or(0, |t| t.alpha.dim());
    if n == 0 || file.moments.iter().any(|t| t.alpha.dim() != n) {
        return Err(config_error("(moments file)", "moment indices must be nonempty and of equal length"));
    }
    Ok((n, targets_to_map(&file.moments)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOGISTIC: &str = r#"{
        "version": 1,
        "system": {"kind": "discrete", "n": 1, "map": ["2*x1^2 - 1"]},
        "set": {"lower": [-1], "upper": [1]},
        "relaxation": {"k": 4},
        "objective": {"type": "least_squares", "targets": [{"alpha": [1], "value": 0}]}
    }"#;

    #[test]
    fn parses_and_hashes() {
        let c = parse_config(LOGISTIC, Path::new(".")).unwrap();
        assert_eq!(c.hash.len(), 64);
        assert_eq!(c.relaxation().unwrap().basis, Basis::Chebyshev);
        assert!(matches!(c.objective().unwrap().kind, ObjectiveKind::LeastSquares(_)));
    }

    #[test]
    fn unknown_key_is_named() {
        let bad = LOGISTIC.replace("\"n\": 1", "\"n\": 1, \"mapp\": []");
        match parse_config(&bad, Path::new(".")) {
            Err(Error::Config { key, message }) => {
                assert!(key.starts_with("system"), "{key}");
                assert!(message.contains("mapp"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn term_list_polynomials() {
        let text = LOGISTIC.replace(
            "[\"2*x1^2 - 1\"]",
            r#"[{"basis": "chebyshev", "n": 1, "terms": [{"alpha": [2], "c": 1.0}]}]"#,
        );
        let c = parse_config(&text, Path::new(".")).unwrap();
        let m = c.model().unwrap();
        match m.dynamics() {
            Dynamics::Discrete { map } => assert!((map.evaluate(&[0.5])[0] + 0.5).abs() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn bad_polynomial_reports_component() {
        let bad = LOGISTIC.replace("2*x1^2 - 1", "2*y^2");
        match parse_config(&bad, Path::new(".")) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "system.map[0]"),
            other => panic!("{other:?}"),
        }
    }
}
