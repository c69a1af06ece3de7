//! Experiment configuration: a single versioned JSON document. Unknown
//! keys are rejected everywhere so typos fail loudly instead of being
//! ignored.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ergoperiod_core::noise::{NoiseKind, NoiseSystem, DEFAULT_ALPHA};
use ergoperiod_core::rds::{CircleForcing, Cocycle, RandomPeriodicPath};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Config schema version; must equal [`SCHEMA_VERSION`].
    pub schema: u32,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub experiment: ExperimentSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if config.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema {} not supported; this tool reads schema {SCHEMA_VERSION}",
                config.schema
            )));
        }
        Ok(config)
    }
}

/// Digest of a config document, stable under key reordering: the JSON is
/// canonicalized (sorted object keys) before hashing.
pub fn config_digest(text: &str) -> Result<String, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let canonical = serde_json::to_string(&value).expect("re-serializing parsed JSON");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentSpec {
    NoiseCheck(NoiseCheckParams),
    RdsVerify(RdsVerifyParams),
    EstimateMeasure(EstimateMeasureParams),
    PsErgodic(PsErgodicParams),
    ConditionA(ConditionAParams),
    SublinearInvariance(SublinearInvarianceParams),
    SublinearErgodic(SublinearErgodicParams),
    BirkhoffQs(BirkhoffQsParams),
    WienerShift(WienerShiftParams),
    CanonicalSample(CanonicalSampleParams),
}

impl ExperimentSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ExperimentSpec::NoiseCheck(_) => "noise-check",
            ExperimentSpec::RdsVerify(_) => "rds-verify",
            ExperimentSpec::EstimateMeasure(_) => "estimate-measure",
            ExperimentSpec::PsErgodic(_) => "ps-ergodic",
            ExperimentSpec::ConditionA(_) => "condition-a",
            ExperimentSpec::SublinearInvariance(_) => "sublinear-invariance",
            ExperimentSpec::SublinearErgodic(_) => "sublinear-ergodic",
            ExperimentSpec::BirkhoffQs(_) => "birkhoff-qs",
            ExperimentSpec::WienerShift(_) => "wiener-shift",
            ExperimentSpec::CanonicalSample(_) => "canonical-sample",
        }
    }
}

pub const EXPERIMENT_KINDS: [&str; 10] = [
    "noise-check",
    "rds-verify",
    "estimate-measure",
    "ps-ergodic",
    "condition-a",
    "sublinear-invariance",
    "sublinear-ergodic",
    "birkhoff-qs",
    "wiener-shift",
    "canonical-sample",
];

// ---------------------------------------------------------------------------
// building blocks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSpec {
    IrrationalRotation { alpha: Option<f64> },
    Torus2 { alpha: Option<f64> },
    BernoulliShift { symbols: usize, window: usize },
    WienerGrid { mesh: f64, horizon: f64 },
}

impl NoiseSpec {
    pub fn build(&self) -> Result<NoiseSystem, CliError> {
        match self {
            NoiseSpec::IrrationalRotation { alpha } => Ok(NoiseSystem::irrational_rotation(
                alpha.unwrap_or(DEFAULT_ALPHA),
            )),
            NoiseSpec::Torus2 { alpha } => Ok(NoiseSystem::torus2(alpha.unwrap_or(DEFAULT_ALPHA))),
            NoiseSpec::BernoulliShift { symbols, window } => {
                NoiseSystem::bernoulli(*symbols, *window).map_err(CliError::Module)
            }
            NoiseSpec::WienerGrid { mesh, horizon } => {
                NoiseSystem::wiener_grid(*mesh, *horizon).map_err(CliError::Module)
            }
        }
    }
}

/// Cocycle-and-path bundle: the built-in random periodic systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum RdsSpec {
    /// Circle shift with sinusoidal forcing of the given amplitude (zero
    /// amplitude gives the deterministic rotation path).
    CircleShift { amplitude: f64 },
    /// The rotating-coordinate path over torus or rotation noise.
    TorusCoordinate,
    /// Forward orbit of per-symbol maps on a finite chain.
    ForwardOrbit {
        maps: Vec<Vec<usize>>,
        start: usize,
        tau: f64,
    },
}

impl RdsSpec {
    pub fn build(&self, noise: &NoiseSystem) -> Result<(Cocycle, RandomPeriodicPath), CliError> {
        match self {
            RdsSpec::CircleShift { amplitude } => {
                let forcing = if *amplitude == 0.0 {
                    CircleForcing::Zero
                } else {
                    CircleForcing::Sine {
                        amplitude: *amplitude,
                    }
                };
                Ok((
                    Cocycle::CircleShift { forcing },
                    RandomPeriodicPath::CircleShiftPath { forcing },
                ))
            }
            RdsSpec::TorusCoordinate => {
                let rate = match noise.kind {
                    NoiseKind::IrrationalRotation { alpha } | NoiseKind::Torus2 { alpha } => alpha,
                    _ => {
                        return Err(CliError::Config(
                            "torus-coordinate path needs rotation or torus noise".into(),
                        ))
                    }
                };
                Ok((
                    Cocycle::Rotation { rate },
                    RandomPeriodicPath::TorusCoordinate,
                ))
            }
            RdsSpec::ForwardOrbit { maps, start, tau } => {
                let cocycle = Cocycle::finite(maps.clone()).map_err(CliError::Module)?;
                Ok((
                    cocycle,
                    RandomPeriodicPath::ForwardOrbit {
                        start: *start,
                        tau: *tau,
                    },
                ))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatrixSpec {
    Inline(Vec<Vec<f64>>),
    /// Path to a CSV file: n rows of n comma-separated reals.
    Csv(String),
}

impl MatrixSpec {
    pub fn build(&self) -> Result<ergoperiod_core::markov::StochasticMatrix, CliError> {
        match self {
            MatrixSpec::Inline(rows) => {
                ergoperiod_core::markov::StochasticMatrix::new(rows.clone())
                    .map_err(CliError::Module)
            }
            MatrixSpec::Csv(path) => {
                let text = std::fs::read_to_string(path).map_err(CliError::Io)?;
                ergoperiod_core::markov::StochasticMatrix::from_csv(&text).map_err(CliError::Module)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// per-experiment parameters
// ---------------------------------------------------------------------------

fn default_n_large() -> usize {
    100_000
}
fn default_trials() -> usize {
    1000
}
fn default_tol() -> f64 {
    1e-12
}
fn default_atol() -> f64 {
    1e-12
}
fn default_grid() -> usize {
    16
}
fn default_bins() -> usize {
    64
}
fn default_n_medium() -> usize {
    10_000
}
fn default_window() -> usize {
    16
}
fn default_paths() -> usize {
    200
}
fn default_n_phi() -> usize {
    100
}
fn default_horizons() -> Vec<f64> {
    vec![100.0, 1000.0, 10_000.0]
}
fn default_delta() -> f64 {
    1.0
}
fn default_qs_paths() -> usize {
    100
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_n_target() -> usize {
    50_000
}
fn default_wiener_tau() -> f64 {
    0.25
}
fn default_mesh() -> f64 {
    0.01
}
fn default_lags() -> Vec<usize> {
    vec![2, 3]
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseCheckParams {
    pub noise: NoiseSpec,
    pub t: f64,
    #[serde(default = "default_n_large")]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdsVerifyParams {
    pub noise: NoiseSpec,
    pub rds: RdsSpec,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateMeasureParams {
    pub noise: NoiseSpec,
    pub rds: RdsSpec,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default = "default_n_medium")]
    pub n: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_true")]
    pub check_periodicity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsErgodicParams {
    pub matrix: MatrixSpec,
    pub tau: usize,
    /// When present, the experiment runs on the periodic measure generated
    /// by this section law; otherwise on every extremal periodic measure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_law: Option<Vec<f64>>,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionAParams {
    pub matrix: MatrixSpec,
    pub tau: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_law: Option<Vec<f64>>,
    /// Candidate subsets as state-index lists; defaults to the enumerated
    /// invariant sets of the section law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsets: Option<Vec<Vec<usize>>>,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SublinearInvarianceParams {
    /// Finite-chain mode: exact identity check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_law: Option<Vec<f64>>,
    /// Circle-system mode: z-test against a grid permutation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rds: Option<RdsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default = "default_n_phi")]
    pub n_phi: usize,
    #[serde(default = "default_n_medium")]
    pub n: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SublinearErgodicParams {
    /// Numerator of the rational rotation control.
    pub p: usize,
    /// Circle size of the finite surrogate.
    pub q: usize,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum QsObservable {
    /// `sin(2 pi x)` on the rotating noise coordinate.
    SinNoiseCoordinate,
    /// Indicator of a phase state on finite chains.
    PhaseIndicator { state: usize },
    /// Constant observable; every time average lands on the target.
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirkhoffQsParams {
    pub noise: NoiseSpec,
    pub rds: RdsSpec,
    pub observable: QsObservable,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_qs_paths")]
    pub n_paths: usize,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_n_target")]
    pub n_target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerShiftParams {
    #[serde(default = "default_wiener_tau")]
    pub tau: f64,
    #[serde(default = "default_mesh")]
    pub mesh: f64,
    #[serde(default = "default_n_large")]
    pub n_steps: usize,
    #[serde(default = "default_lags")]
    pub lags: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalSampleParams {
    pub matrix: MatrixSpec,
    pub law: Vec<f64>,
    pub times: Vec<usize>,
    #[serde(default = "default_n_medium")]
    pub n_paths: usize,
    /// When present, also run the shift-invariance z-test with this shift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<usize>,
    /// State whose first-time indicator is the test observable.
    #[serde(default)]
    pub shift_observable_state: usize,
    /// Write the raw tuples as CSV (can be large).
    #[serde(default)]
    pub emit_tuples: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_config() -> ExperimentConfig {
        ExperimentConfig {
            schema: 1,
            seed: 42,
            workers: Some(2),
            experiment: ExperimentSpec::PsErgodic(PsErgodicParams {
                matrix: MatrixSpec::Inline(vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
                tau: 2,
                initial_law: None,
                atol: 1e-12,
            }),
        }
    }

    #[test]
    fn config_round_trip() {
        let config = sample_config();
        let text = serde_json::to_string(&config).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"schema":1,"seed":1,"bogus":3,"experiment":{"wiener-shift":{}}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
        let text = r#"{"schema":1,"seed":1,"experiment":{"wiener-shift":{"bogus":1}}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn seed_is_mandatory() {
        let text = r#"{"schema":1,"experiment":{"wiener-shift":{}}}"#;
        let err = ExperimentConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn schema_version_checked() {
        let text = r#"{"schema":9,"seed":1,"experiment":{"wiener-shift":{}}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn digest_stable_under_key_reordering() {
        let a = r#"{"seed":1,"schema":1,"experiment":{"wiener-shift":{}}}"#;
        let b = r#"{"schema":1,"experiment":{"wiener-shift":{}},"seed":1}"#;
        assert_eq!(config_digest(a).unwrap(), config_digest(b).unwrap());
        let c = r#"{"schema":1,"experiment":{"wiener-shift":{}},"seed":2}"#;
        assert_ne!(config_digest(a).unwrap(), config_digest(c).unwrap());
    }

    #[test]
    fn defaults_fill_in() {
        let text = r#"{"schema":1,"seed":7,"experiment":{"wiener-shift":{}}}"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        match config.experiment {
            ExperimentSpec::WienerShift(p) => {
                assert_eq!(p.tau, 0.25);
                assert_eq!(p.mesh, 0.01);
                assert_eq!(p.n_steps, 100_000);
            }
            _ => panic!("wrong kind"),
        }
    }
}
