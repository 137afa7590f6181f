//! Experiment configs: a JSON envelope with the experiment name, a
//! module-specific `input` object, optional tolerances and a seed.

use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use ghl::covering::GraphSpec;
use ghl::cylinder::CylinderSpec;
use ghl::gamma::OperatorSpec;
use ghl::heat::BallCertificate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    CliffordSelftest,
    Atiyah,
    MckeanSinger,
    Unfolding,
    Decay,
    RelativeDecay,
    Duhamel,
    EtaOracle,
    EtaJump,
    EtaTower,
    CylinderKernels,
    CylinderAps,
    SpectrumBottom,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 13] = [
        Self::CliffordSelftest,
        Self::Atiyah,
        Self::MckeanSinger,
        Self::Unfolding,
        Self::Decay,
        Self::RelativeDecay,
        Self::Duhamel,
        Self::EtaOracle,
        Self::EtaJump,
        Self::EtaTower,
        Self::CylinderKernels,
        Self::CylinderAps,
        Self::SpectrumBottom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CliffordSelftest => "clifford-selftest",
            Self::Atiyah => "atiyah",
            Self::MckeanSinger => "mckean-singer",
            Self::Unfolding => "unfolding",
            Self::Decay => "decay",
            Self::RelativeDecay => "relative-decay",
            Self::Duhamel => "duhamel",
            Self::EtaOracle => "eta-oracle",
            Self::EtaJump => "eta-jump",
            Self::EtaTower => "eta-tower",
            Self::CylinderKernels => "cylinder-kernels",
            Self::CylinderAps => "cylinder-aps",
            Self::SpectrumBottom => "spectrum-bottom",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| ConfigError::new("experiment", format!("unknown experiment `{s}`")))
    }
}

/// A rejected config, with the JSON path of the offending value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "at `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    experiment: String,
    #[serde(default)]
    input: Option<serde_json::Value>,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    output: Option<String>,
    #[serde(default)]
    seed: u64,
}

/// Overrides for the pass/fail bounds; each experiment documents which
/// ones it reads and supplies its own defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Bound on identity residuals.
    pub residual: Option<f64>,
    /// Bound on the eta heat-integral against the sign-sum oracle.
    pub eta: Option<f64>,
    /// Minimal accepted singular-value gap ratio.
    pub rank_gap: Option<f64>,
    /// Bound on on-diagonal heat-kernel differences.
    pub difference: Option<f64>,
}

impl Tolerances {
    fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("residual", self.residual),
            ("eta", self.eta),
            ("rank_gap", self.rank_gap),
            ("difference", self.difference),
        ];
        for (name, v) in fields {
            if let Some(x) = v {
                if !(x.is_finite() && x > 0.0) {
                    return Err(ConfigError::new(
                        format!("tolerances.{name}"),
                        format!("tolerance must be positive and finite, got {x}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn residual_or(&self, default: f64) -> f64 {
        self.residual.unwrap_or(default)
    }

    pub fn eta_or(&self, default: f64) -> f64 {
        self.eta.unwrap_or(default)
    }

    pub fn rank_gap_or(&self, default: f64) -> f64 {
        self.rank_gap.unwrap_or(default)
    }

    pub fn difference_or(&self, default: f64) -> f64 {
        self.difference.unwrap_or(default)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub tolerances: Tolerances,
    pub output: Option<String>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn name(&self) -> ExperimentName {
        self.experiment.name()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    CliffordSelftest(CliffordInput),
    Atiyah(AtiyahInput),
    MckeanSinger(McKeanSingerInput),
    Unfolding(UnfoldingInput),
    Decay(DecayInput),
    RelativeDecay(RelativeDecayInput),
    Duhamel(DuhamelInput),
    EtaOracle(EtaOracleInput),
    EtaJump(EtaJumpInput),
    EtaTower(EtaTowerInput),
    CylinderKernels(CylinderKernelsInput),
    CylinderAps(CylinderApsInput),
    SpectrumBottom(SpectrumBottomInput),
}

impl Experiment {
    pub fn name(&self) -> ExperimentName {
        match self {
            Self::CliffordSelftest(_) => ExperimentName::CliffordSelftest,
            Self::Atiyah(_) => ExperimentName::Atiyah,
            Self::MckeanSinger(_) => ExperimentName::MckeanSinger,
            Self::Unfolding(_) => ExperimentName::Unfolding,
            Self::Decay(_) => ExperimentName::Decay,
            Self::RelativeDecay(_) => ExperimentName::RelativeDecay,
            Self::Duhamel(_) => ExperimentName::Duhamel,
            Self::EtaOracle(_) => ExperimentName::EtaOracle,
            Self::EtaJump(_) => ExperimentName::EtaJump,
            Self::EtaTower(_) => ExperimentName::EtaTower,
            Self::CylinderKernels(_) => ExperimentName::CylinderKernels,
            Self::CylinderAps(_) => ExperimentName::CylinderAps,
            Self::SpectrumBottom(_) => ExperimentName::SpectrumBottom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliffordInput {
    /// Checks `Cl(2l)` and `Cl(2l−1)` for `l = 1..=max_l`.
    #[serde(default = "default_max_l")]
    pub max_l: usize,
    /// Dimension of the random matrix fed to the cylinder trace identity.
    #[serde(default = "default_phi_dim")]
    pub phi_dim: usize,
}

fn default_max_l() -> usize {
    4
}

fn default_phi_dim() -> usize {
    4
}

impl Default for CliffordInput {
    fn default() -> Self {
        Self {
            max_l: default_max_l(),
            phi_dim: default_phi_dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtiyahInput {
    pub graph: GraphSpec,
    /// Lattice moduli of the finite quotient; empty for finite groups.
    #[serde(default)]
    pub moduli: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McKeanSingerInput {
    pub graph: GraphSpec,
    #[serde(default = "default_supertrace_times")]
    pub times: Vec<f64>,
    /// Floquet nodes per lattice direction.
    #[serde(default)]
    pub nodes: Option<usize>,
}

fn default_supertrace_times() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnfoldingInput {
    pub graph: GraphSpec,
    #[serde(default)]
    pub moduli: Vec<u32>,
    #[serde(default = "default_unfolding_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_powers")]
    pub powers: Vec<u32>,
}

fn default_unfolding_times() -> Vec<f64> {
    vec![0.5, 2.0]
}

fn default_powers() -> Vec<u32> {
    vec![0, 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayInput {
    pub graph: GraphSpec,
    pub sources: Vec<usize>,
    #[serde(default = "default_decay_times")]
    pub times: Vec<f64>,
}

fn default_decay_times() -> Vec<f64> {
    vec![1.0, 3.0, 10.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathCycle {
    pub path: usize,
    pub cycle: usize,
    pub radius: usize,
}

/// Either two explicit graphs with a ball certificate, or the built-in
/// path/cycle pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelativeDecayInput {
    #[serde(default)]
    pub graphs: Option<[GraphSpec; 2]>,
    #[serde(default)]
    pub certificate: Option<BallCertificate>,
    #[serde(default)]
    pub path_cycle: Option<PathCycle>,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuhamelInput {
    /// Selfadjoint `T_0`; random when absent.
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    /// Selfadjoint direction `V` of the family `T_0 + uV`; random when absent.
    #[serde(default)]
    pub direction: Option<OperatorSpec>,
    #[serde(default)]
    pub u0: f64,
    #[serde(default = "one")]
    pub time: f64,
    #[serde(default = "default_fd_step")]
    pub step: f64,
}

fn one() -> f64 {
    1.0
}

fn default_fd_step() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaOracleInput {
    /// Operators to test; when empty, `count` random gapped instances.
    #[serde(default)]
    pub operators: Vec<OperatorSpec>,
    #[serde(default = "default_count")]
    pub count: usize,
    /// Spectral gap imposed on random instances.
    #[serde(default = "default_gap")]
    pub gap: f64,
    #[serde(default)]
    pub nodes: Option<usize>,
}

fn default_count() -> usize {
    20
}

fn default_gap() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaJumpCase {
    pub operator: OperatorSpec,
    pub eps: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaJumpInput {
    /// Explicit cases; when empty, `count` random ones.
    #[serde(default)]
    pub cases: Vec<EtaJumpCase>,
    #[serde(default = "default_count")]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleSpec {
    pub sites: usize,
    #[serde(default)]
    pub flux: f64,
    pub potential: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaTowerInput {
    /// A `Z`-equivariant operator, or a periodic circle chain.
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub circle: Option<CircleSpec>,
    pub orders: Vec<u32>,
    #[serde(default = "one")]
    pub heat_time: f64,
    #[serde(default)]
    pub target_nodes: Option<usize>,
    /// Levels at the top of the tower that must approach the target
    /// monotonically.
    #[serde(default = "default_tail")]
    pub monotone_tail: usize,
}

fn default_tail() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderKernelsInput {
    pub model: CylinderSpec,
    pub eps: Vec<f64>,
    /// Fractions of `ε` at which the modified operators are evaluated.
    #[serde(default = "default_u_fractions")]
    pub u_fractions: Vec<f64>,
    /// Also rerun at `2R` and `h/2` and require identical integers.
    #[serde(default = "yes")]
    pub refine: bool,
}

fn default_u_fractions() -> Vec<f64> {
    vec![0.5, 0.25, 0.125]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderApsInput {
    pub model: CylinderSpec,
    pub eps: f64,
    #[serde(default = "default_aps_fractions")]
    pub u_fractions: Vec<f64>,
    /// Boundary operator with the same `Π_ε` content.
    #[serde(default)]
    pub variant_boundary: Option<OperatorSpec>,
}

fn default_aps_fractions() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBottomInput {
    pub model: CylinderSpec,
    pub eps: f64,
    #[serde(default)]
    pub u: f64,
    pub lengths: Vec<f64>,
    pub window: [f64; 2],
    /// Interior swapped in for the rank comparison.
    #[serde(default)]
    pub swap: Option<CylinderSpec>,
}

fn parse_input<T: DeserializeOwned>(value: serde_json::Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { "input".to_string() } else { format!("input.{inner}") };
        ConfigError::new(path, e.into_inner().to_string())
    })
}

fn parse_optional<T: DeserializeOwned + Default>(value: Option<serde_json::Value>) -> Result<T, ConfigError> {
    match value {
        None => Ok(T::default()),
        Some(v) => parse_input(v),
    }
}

fn require(value: Option<serde_json::Value>) -> Result<serde_json::Value, ConfigError> {
    value.ok_or_else(|| ConfigError::new("input", "this experiment needs an `input` object"))
}

/// Parses and validates a config. `expected` is the experiment selected on
/// the command line; the file must agree with it.
pub fn validate_config(raw: &str, expected: Option<ExperimentName>) -> Result<ExperimentConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(raw);
    let env: Envelope = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(path, e.into_inner().to_string())
    })?;
    de.end().map_err(|e| ConfigError::new("", e.to_string()))?;
    let name: ExperimentName = env.experiment.parse()?;
    if let Some(exp) = expected {
        if exp != name {
            return Err(ConfigError::new(
                "experiment",
                format!("config is for `{name}` but `{exp}` was requested"),
            ));
        }
    }
    env.tolerances.validate()?;
    let input = env.input;
    let experiment = match name {
        ExperimentName::CliffordSelftest => Experiment::CliffordSelftest(parse_optional(input)?),
        ExperimentName::Atiyah => Experiment::Atiyah(parse_input(require(input)?)?),
        ExperimentName::MckeanSinger => Experiment::MckeanSinger(parse_input(require(input)?)?),
        ExperimentName::Unfolding => Experiment::Unfolding(parse_input(require(input)?)?),
        ExperimentName::Decay => Experiment::Decay(parse_input(require(input)?)?),
        ExperimentName::RelativeDecay => Experiment::RelativeDecay(parse_input(require(input)?)?),
        ExperimentName::Duhamel => Experiment::Duhamel(parse_input(require(input)?)?),
        ExperimentName::EtaOracle => Experiment::EtaOracle(parse_input(require(input)?)?),
        ExperimentName::EtaJump => Experiment::EtaJump(parse_input(require(input)?)?),
        ExperimentName::EtaTower => Experiment::EtaTower(parse_input(require(input)?)?),
        ExperimentName::CylinderKernels => Experiment::CylinderKernels(parse_input(require(input)?)?),
        ExperimentName::CylinderAps => Experiment::CylinderAps(parse_input(require(input)?)?),
        ExperimentName::SpectrumBottom => Experiment::SpectrumBottom(parse_input(require(input)?)?),
    };
    check_ranges(&experiment)?;
    Ok(ExperimentConfig {
        experiment,
        tolerances: env.tolerances,
        output: env.output,
        seed: env.seed,
    })
}

fn positive_all(path: &str, values: &[f64]) -> Result<(), ConfigError> {
    for (i, &v) in values.iter().enumerate() {
        if !(v.is_finite() && v > 0.0) {
            return Err(ConfigError::new(format!("{path}[{i}]"), format!("must be positive, got {v}")));
        }
    }
    Ok(())
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be positive, got {v}")))
    }
}

fn nonempty<T>(path: &str, v: &[T]) -> Result<(), ConfigError> {
    if v.is_empty() {
        Err(ConfigError::new(path, "must not be empty"))
    } else {
        Ok(())
    }
}

/// Value checks serde cannot express.
fn check_ranges(e: &Experiment) -> Result<(), ConfigError> {
    match e {
        Experiment::CliffordSelftest(c) => {
            if !(1..=6).contains(&c.max_l) {
                return Err(ConfigError::new("input.max_l", "must lie in 1..=6"));
            }
            if c.phi_dim == 0 {
                return Err(ConfigError::new("input.phi_dim", "must be positive"));
            }
        }
        Experiment::Atiyah(_) => {}
        Experiment::MckeanSinger(c) => {
            nonempty("input.times", &c.times)?;
            positive_all("input.times", &c.times)?;
        }
        Experiment::Unfolding(c) => {
            nonempty("input.times", &c.times)?;
            positive_all("input.times", &c.times)?;
        }
        Experiment::Decay(c) => {
            nonempty("input.sources", &c.sources)?;
            nonempty("input.times", &c.times)?;
            positive_all("input.times", &c.times)?;
        }
        Experiment::RelativeDecay(c) => {
            positive("input.time", c.time)?;
            match (&c.graphs, &c.certificate, &c.path_cycle) {
                (Some(_), Some(_), None) | (None, None, Some(_)) => {}
                _ => {
                    return Err(ConfigError::new(
                        "input",
                        "give either `graphs` with `certificate`, or `path_cycle`",
                    ))
                }
            }
        }
        Experiment::Duhamel(c) => {
            positive("input.time", c.time)?;
            positive("input.step", c.step)?;
        }
        Experiment::EtaOracle(c) => {
            positive("input.gap", c.gap)?;
            if c.operators.is_empty() && c.count == 0 {
                return Err(ConfigError::new("input.count", "must be positive without explicit operators"));
            }
        }
        Experiment::EtaJump(c) => {
            if c.cases.is_empty() && c.count == 0 {
                return Err(ConfigError::new("input.count", "must be positive without explicit cases"));
            }
            for (i, case) in c.cases.iter().enumerate() {
                positive(&format!("input.cases[{i}].eps"), case.eps)?;
            }
        }
        Experiment::EtaTower(c) => {
            nonempty("input.orders", &c.orders)?;
            positive("input.heat_time", c.heat_time)?;
            if c.operator.is_some() == c.circle.is_some() {
                return Err(ConfigError::new("input", "give exactly one of `operator` and `circle`"));
            }
        }
        Experiment::CylinderKernels(c) => {
            nonempty("input.eps", &c.eps)?;
            positive_all("input.eps", &c.eps)?;
            nonempty("input.u_fractions", &c.u_fractions)?;
        }
        Experiment::CylinderAps(c) => {
            positive("input.eps", c.eps)?;
            nonempty("input.u_fractions", &c.u_fractions)?;
            positive_all("input.u_fractions", &c.u_fractions)?;
        }
        Experiment::SpectrumBottom(c) => {
            nonempty("input.lengths", &c.lengths)?;
            positive_all("input.lengths", &c.lengths)?;
        }
    }
    Ok(())
}
