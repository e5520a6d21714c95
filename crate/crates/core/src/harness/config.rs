use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dist_opt::{AlgorithmConfig, AlgorithmKind, NetworkGraph};
use crate::error::{Error, Result};
use crate::objective::{AgentProblem, ProblemFixture, EXAMPLE_FIXTURE};

/// Bundled configuration for the three-agent example.
pub const EXAMPLE_CONFIG: &str = include_str!("../../fixtures/example_config.json");

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismConfig {
    /// Per-agent slopes; designed slopes are used when absent.
    #[serde(default)]
    pub slopes: Option<Vec<Vec<f64>>>,
    /// Per-agent vicinity radii; defaults depend on the command.
    #[serde(default)]
    pub deltas: Option<Vec<f64>>,
    /// Per-agent slope floors for the floored design.
    #[serde(default)]
    pub slope_floor: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_sample_count() -> usize {
    50
}

fn default_sigma() -> f64 {
    1.0
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            sample_count: default_sample_count(),
            sigma: default_sigma(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_properties")]
    pub properties: Vec<String>,
    #[serde(default = "default_subboxes")]
    pub subboxes: usize,
    #[serde(default = "default_points")]
    pub points_per_box: usize,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
}

fn default_pairs() -> usize {
    100
}

fn default_properties() -> Vec<String> {
    ["privacy_inequality", "inclusion_soundness", "remainder_tightness"]
        .map(String::from)
        .to_vec()
}

fn default_subboxes() -> usize {
    20
}

fn default_points() -> usize {
    10_000
}

fn default_grid() -> usize {
    100_000
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            pairs: default_pairs(),
            properties: default_properties(),
            subboxes: default_subboxes(),
            points_per_box: default_points(),
            grid_points: default_grid(),
        }
    }
}

/// Published figures to compare against; purely informational.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    #[serde(default)]
    pub slopes: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    #[serde(default)]
    pub optimizer: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    /// Undirected edges; the complete graph when absent.
    #[serde(default)]
    pub edges: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Problem fixture, relative to the config file.
    pub problem: PathBuf,
    #[serde(default)]
    pub mechanism: MechanismConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<AlgorithmConfig>,
    #[serde(default = "default_multi_start")]
    pub multi_start: usize,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
}

fn default_algorithms() -> Vec<AlgorithmConfig> {
    AlgorithmKind::ALL.iter().map(|k| AlgorithmConfig::new(*k)).collect()
}

fn default_multi_start() -> usize {
    5
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A parsed config with its problem loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub fixture: ProblemFixture,
    pub problem: AgentProblem,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sampling.sample_count == 0 {
            return Err(Error::usage("sample_count must be at least 1"));
        }
        if !(self.sampling.sigma > 0.0) || !self.sampling.sigma.is_finite() {
            return Err(Error::usage(format!(
                "sigma must be positive, got {}",
                self.sampling.sigma
            )));
        }
        if self.multi_start == 0 {
            return Err(Error::usage("multi_start must be at least 1"));
        }
        let mut kinds: Vec<AlgorithmKind> = self.algorithms.iter().map(|a| a.kind).collect();
        kinds.sort_by_key(|k| *k as u8);
        kinds.dedup();
        if kinds.len() != self.algorithms.len() {
            return Err(Error::usage("each algorithm may appear at most once"));
        }
        Ok(())
    }

    /// Keeps only the named algorithms, adding defaults for missing ones.
    pub fn select_algorithms(&mut self, names: &[String]) -> Result<()> {
        let mut out = Vec::new();
        for name in names {
            let kind = AlgorithmKind::parse(name.trim())?;
            let cfg = self
                .algorithms
                .iter()
                .find(|a| a.kind == kind)
                .cloned()
                .unwrap_or_else(|| AlgorithmConfig::new(kind));
            out.push(cfg);
        }
        self.algorithms = out;
        Ok(())
    }
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(&read(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let problem_path = base.join(&config.problem);
        let fixture: ProblemFixture = serde_json::from_str(&read(&problem_path)?)?;
        Self::assemble(config, fixture)
    }

    /// The bundled example config with its bundled problem.
    pub fn bundled() -> Self {
        let config: ExperimentConfig = serde_json::from_str(EXAMPLE_CONFIG).expect("bundled config parses");
        let fixture: ProblemFixture = serde_json::from_str(EXAMPLE_FIXTURE).expect("bundled fixture parses");
        Self::assemble(config, fixture).expect("bundled config is valid")
    }

    pub fn assemble(config: ExperimentConfig, fixture: ProblemFixture) -> Result<Self> {
        config.validate()?;
        let problem = fixture.to_problem()?;
        let exp = Experiment {
            config,
            fixture,
            problem,
        };
        exp.graph()?;
        Ok(exp)
    }

    pub fn graph(&self) -> Result<NetworkGraph> {
        match &self.config.graph.edges {
            Some(edges) => crate::dist_opt::metropolis_weights(edges, self.problem.agent_count()),
            None => NetworkGraph::complete(self.problem.agent_count()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_loads() {
        let exp = Experiment::bundled();
        assert_eq!(exp.problem.agent_count(), 3);
        assert_eq!(exp.config.sampling.sample_count, 50);
        assert_eq!(exp.config.multi_start, 5);
        assert_eq!(exp.config.algorithms.len(), 3);
        assert_eq!(
            exp.config.mechanism.slopes,
            Some(vec![vec![0.52], vec![0.73], vec![0.38]])
        );
    }

    #[test]
    fn defaults_fill_in() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"problem": "p.json"}"#).unwrap();
        assert_eq!(cfg.sampling, SamplingConfig::default());
        assert_eq!(cfg.verify.pairs, 100);
        assert_eq!(cfg.algorithms.len(), 3);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let mut cfg: ExperimentConfig = serde_json::from_str(r#"{"problem": "p.json"}"#).unwrap();
        cfg.sampling.sigma = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Usage(_))));
        cfg.sampling.sigma = 1.0;
        cfg.sampling.sample_count = 0;
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"problem": "p", "bogus": 1}"#).is_err());
    }

    #[test]
    fn algorithm_selection() {
        let mut cfg: ExperimentConfig = serde_json::from_str(r#"{"problem": "p.json"}"#).unwrap();
        cfg.select_algorithms(&["zo".into(), "dgd".into()]).unwrap();
        let kinds: Vec<_> = cfg.algorithms.iter().map(|a| a.kind).collect();
        assert_eq!(kinds, vec![AlgorithmKind::ZerothOrder, AlgorithmKind::Dgd]);
        assert!(cfg.select_algorithms(&["newton".into()]).is_err());
    }

    #[test]
    fn missing_fixture_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"problem": "nope.json"}"#).unwrap();
        let err = Experiment::load(&path).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert_eq!(err.exit_code(), 2);
    }
}
