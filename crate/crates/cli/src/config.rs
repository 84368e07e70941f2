//! Configuration documents for each subcommand.
//!
//! Every document has a JSON schema generated from its type. Loading runs
//! three gates in order: JSON syntax, the schema, then typed
//! deserialization; semantic checks happen later in the library.

use std::path::Path;

use schemars::{schema_for, JsonSchema, Schema};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toric_credit::calibration::{Backend, CalibrationConfig};
use toric_credit::copula::CopulaSpec;
use toric_credit::io::GraphDocument;
use toric_credit::multiperiod::{calibrated_spec, ChainSpec, TiltConvention};
use toric_credit::pricing::{standard_tranches, CdoContract, TrancheSpec};
use toric_credit::sector::SectorParams;
use toric_credit::smile::{RatingConfig, SmileOptions};

use crate::error::CliError;

/// Graph with 1-based node indices and optional weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub nodes: usize,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eta_node: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eta_edge: Vec<f64>,
}

impl From<&GraphConfig> for GraphDocument {
    fn from(g: &GraphConfig) -> Self {
        GraphDocument {
            nodes: g.nodes,
            edges: g.edges.clone(),
            eta_node: g.eta_node.clone(),
            eta_edge: g.eta_edge.clone(),
        }
    }
}

/// Target marginals: node default probabilities plus, per edge in the
/// graph's order, either joint default probabilities or correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub single: Vec<f64>,
    #[serde(default)]
    pub pair: Option<Vec<f64>>,
    #[serde(default)]
    pub correlation: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum BackendName {
    Ipf,
    MaxentGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub graph: GraphConfig,
    pub target: TargetConfig,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub backend: Option<BackendName>,
}

impl CalibrateConfig {
    pub fn calibration(&self) -> CalibrationConfig {
        let d = CalibrationConfig::default();
        CalibrationConfig {
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            backend: match self.backend {
                Some(BackendName::MaxentGradient) => Backend::MaxEntGradient,
                _ => Backend::Ipf,
            },
        }
    }
}

/// Sector model weights; sector edges are in lexicographic pair order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SectorConfig {
    pub sizes: Vec<usize>,
    pub eta_s: Vec<f64>,
    pub eta_f: Vec<f64>,
    pub eta_fs: Vec<f64>,
    #[serde(default)]
    pub eta_sector_edge: Vec<f64>,
}

impl From<&SectorConfig> for SectorParams {
    fn from(s: &SectorConfig) -> Self {
        SectorParams {
            sizes: s.sizes.clone(),
            eta_s: s.eta_s.clone(),
            eta_f: s.eta_f.clone(),
            eta_fs: s.eta_fs.clone(),
            eta_sector_edge: s.eta_sector_edge.clone(),
        }
    }
}

/// One sector of `n` firms calibrated to default probability `q` and
/// pairwise default correlation `rho` at fixed `eta_fs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SingleSectorTarget {
    pub n: usize,
    pub q: f64,
    pub rho: f64,
    pub eta_fs: f64,
}

/// Exactly one of `sector` and `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LossDistConfig {
    #[serde(default)]
    pub sector: Option<SectorConfig>,
    #[serde(default)]
    pub calibrate: Option<SingleSectorTarget>,
}

/// Inclusive arithmetic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridRange {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0) || !(self.stop >= self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::Validation(format!(
                "grid needs start <= stop and step > 0, got {:?}",
                self
            )));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(CliError::Validation(format!("grid has {count} points; at most 100000 allowed")));
        }
        Ok((0..count).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CorrSurfaceConfig {
    pub q: f64,
    pub n: usize,
    pub eta_s: GridRange,
    pub eta_fs: GridRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum TiltName {
    RemovalFirst,
    PreRemoval,
}

/// Single-sector chain. Give `eta_f` directly, or `q_step` to solve it so
/// that one step has that default probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub n: usize,
    pub eta_s: f64,
    pub eta_fs: f64,
    #[serde(default)]
    pub eta_f: Option<f64>,
    #[serde(default)]
    pub q_step: Option<f64>,
    #[serde(default)]
    pub tilt: Option<TiltName>,
}

impl ChainConfig {
    pub fn spec(&self, p_r: f64) -> Result<ChainSpec, CliError> {
        let spec = match (self.eta_f, self.q_step) {
            (Some(eta_f), None) => ChainSpec::new(self.n, self.eta_s, self.eta_fs, eta_f, p_r),
            (None, Some(q)) => calibrated_spec(self.n, self.eta_s, self.eta_fs, q, p_r)?,
            _ => {
                return Err(CliError::Validation(
                    "chain: give exactly one of eta_f and q_step".into(),
                ))
            }
        };
        let tilt = match self.tilt {
            Some(TiltName::PreRemoval) => TiltConvention::PreRemoval,
            _ => TiltConvention::RemovalFirst,
        };
        let spec = spec.with_tilt(tilt);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MultiLossConfig {
    pub chain: ChainConfig,
    pub k: Vec<usize>,
    pub p_r: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub chain: ChainConfig,
    pub p_r: f64,
    pub k: usize,
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TrancheConfig {
    pub label: String,
    pub k_l: f64,
    pub k_u: f64,
}

/// Payments every `gamma` years to `maturity`, discounted at flat `rate`.
/// Tranches default to 0-3-7-10-15-30%.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ContractConfig {
    #[serde(default = "one")]
    pub notional: f64,
    pub maturity: f64,
    pub gamma: f64,
    pub rate: f64,
    #[serde(default)]
    pub tranches: Option<Vec<TrancheConfig>>,
}

fn one() -> f64 {
    1.0
}

impl ContractConfig {
    pub fn contract(&self) -> Result<CdoContract, CliError> {
        let tranches = match &self.tranches {
            None => standard_tranches(),
            Some(ts) => ts
                .iter()
                .map(|t| TrancheSpec::new(t.label.clone(), t.k_l, t.k_u))
                .collect::<Result<_, _>>()?,
        };
        Ok(CdoContract::flat_rate(self.notional, self.maturity, self.gamma, self.rate, tranches)?)
    }
}

/// Loss model for `price`: a chain, or a CSV term structure with header
/// `k,loss,prob` (payment index from 0, loss as a fraction of notional).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PriceConfig {
    pub contract: ContractConfig,
    #[serde(default)]
    pub chain: Option<ChainConfig>,
    #[serde(default)]
    pub p_r: Option<f64>,
    #[serde(default)]
    pub term_structure_csv: Option<String>,
    /// Recovery used when losses are scaled by `1 - R`.
    #[serde(default)]
    pub recovery: Option<f64>,
    #[serde(default)]
    pub lgd: Option<bool>,
}

/// Copula pool; give `q_one_year` or `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CopulaConfig {
    pub n: usize,
    #[serde(default)]
    pub rho_a: Option<f64>,
    #[serde(default)]
    pub q_one_year: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    pub recovery: f64,
}

impl CopulaConfig {
    pub fn spec(&self, rho_a: f64) -> Result<CopulaSpec, CliError> {
        match (self.q_one_year, self.lambda) {
            (Some(q), None) => Ok(CopulaSpec::from_one_year_probability(self.n, rho_a, q, self.recovery)?),
            (None, Some(l)) => Ok(CopulaSpec::new(self.n, rho_a, l, self.recovery)?),
            _ => Err(CliError::Validation("copula: give exactly one of q_one_year and lambda".into())),
        }
    }

    pub fn rho(&self) -> Result<f64, CliError> {
        self.rho_a.ok_or_else(|| CliError::Validation("copula: rho_a is required".into()))
    }
}

/// Without `paths` the semi-analytic pricer is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CopulaPriceConfig {
    pub copula: CopulaConfig,
    pub contract: ContractConfig,
    #[serde(default)]
    pub paths: Option<usize>,
}

/// Observed spreads, either listed in basis points (one per tranche) or
/// produced by a graphical chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ImpliedCorrConfig {
    pub copula: CopulaConfig,
    pub contract: ContractConfig,
    pub paths: usize,
    #[serde(default)]
    pub observed_bps: Option<Vec<f64>>,
    #[serde(default)]
    pub chain: Option<ChainConfig>,
    #[serde(default)]
    pub p_r: Option<f64>,
    #[serde(default)]
    pub lgd: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum RatingPreset {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SmileBounds {
    pub eta_fs: [f64; 2],
    pub eta_s: [f64; 2],
    pub p_r: [f64; 2],
}

/// Rating class for the smile search: a preset, optionally with fields
/// overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FitSmileConfig {
    #[serde(default)]
    pub preset: Option<RatingPreset>,
    #[serde(default)]
    pub q_one_year: Option<f64>,
    #[serde(default)]
    pub rho_a: Option<f64>,
    #[serde(default)]
    pub recovery: Option<f64>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub maturity: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub lgd: Option<bool>,
    #[serde(default)]
    pub bounds: Option<SmileBounds>,
    /// Starting points `[eta_fs, eta_s, p_r]`.
    #[serde(default)]
    pub starts: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub max_evaluations: Option<usize>,
    #[serde(default)]
    pub polish: Option<bool>,
}

impl FitSmileConfig {
    pub fn rating(&self, lgd_flag: bool) -> RatingConfig {
        let base = match self.preset {
            Some(RatingPreset::Low) => RatingConfig::low_rating(),
            _ => RatingConfig::high_rating(),
        };
        RatingConfig {
            label: base.label.clone(),
            q_one_year: self.q_one_year.unwrap_or(base.q_one_year),
            rho_a: self.rho_a.unwrap_or(base.rho_a),
            recovery: self.recovery.unwrap_or(base.recovery),
            n: self.n.unwrap_or(base.n),
            maturity: self.maturity.unwrap_or(base.maturity),
            gamma: self.gamma.unwrap_or(base.gamma),
            rate: self.rate.unwrap_or(base.rate),
            lgd: self.lgd.unwrap_or(lgd_flag),
        }
    }

    pub fn options(&self) -> SmileOptions {
        let d = SmileOptions::default();
        SmileOptions {
            bounds: self
                .bounds
                .map(|b| [(b.eta_fs[0], b.eta_fs[1]), (b.eta_s[0], b.eta_s[1]), (b.p_r[0], b.p_r[1])])
                .unwrap_or(d.bounds),
            starts: self.starts.clone().unwrap_or(d.starts),
            max_evaluations: self.max_evaluations.unwrap_or(d.max_evaluations),
            polish: self.polish.unwrap_or(d.polish),
        }
    }
}

/// Subcommands that take a configuration document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigKind {
    Calibrate,
    LossDist,
    CorrSurface,
    MultiLoss,
    Simulate,
    Price,
    CopulaPrice,
    ImpliedCorr,
    FitSmile,
}

impl ConfigKind {
    pub const ALL: [ConfigKind; 9] = [
        ConfigKind::Calibrate,
        ConfigKind::LossDist,
        ConfigKind::CorrSurface,
        ConfigKind::MultiLoss,
        ConfigKind::Simulate,
        ConfigKind::Price,
        ConfigKind::CopulaPrice,
        ConfigKind::ImpliedCorr,
        ConfigKind::FitSmile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConfigKind::Calibrate => "calibrate",
            ConfigKind::LossDist => "loss-dist",
            ConfigKind::CorrSurface => "corr-surface",
            ConfigKind::MultiLoss => "multi-loss",
            ConfigKind::Simulate => "simulate",
            ConfigKind::Price => "price",
            ConfigKind::CopulaPrice => "copula-price",
            ConfigKind::ImpliedCorr => "implied-corr",
            ConfigKind::FitSmile => "fit-smile",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn schema(self) -> Schema {
        match self {
            ConfigKind::Calibrate => schema_for!(CalibrateConfig),
            ConfigKind::LossDist => schema_for!(LossDistConfig),
            ConfigKind::CorrSurface => schema_for!(CorrSurfaceConfig),
            ConfigKind::MultiLoss => schema_for!(MultiLossConfig),
            ConfigKind::Simulate => schema_for!(SimulateConfig),
            ConfigKind::Price => schema_for!(PriceConfig),
            ConfigKind::CopulaPrice => schema_for!(CopulaPriceConfig),
            ConfigKind::ImpliedCorr => schema_for!(ImpliedCorrConfig),
            ConfigKind::FitSmile => schema_for!(FitSmileConfig),
        }
    }
}

/// Checks `value` against the schema of `kind`; errors name the offending
/// location as a JSON pointer.
pub fn validate_against_schema(kind: ConfigKind, value: &serde_json::Value) -> Result<(), CliError> {
    let schema = serde_json::to_value(kind.schema()).expect("schemas serialize");
    let validator = jsonschema::validator_for(&schema).expect("generated schemas are valid");
    let mut problems = Vec::new();
    for e in validator.iter_errors(value) {
        leaf_errors(&e, &mut problems);
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{} config does not match its schema: {}",
            kind.name(),
            problems.join("; ")
        )))
    }
}

/// Descends into `anyOf` alternatives so that an optional field reports
/// the failure inside it rather than "not valid under any schema". The
/// alternative that only says the value is not `null` is dropped.
fn leaf_errors(e: &jsonschema::ValidationError<'_>, out: &mut Vec<String>) {
    use jsonschema::error::ValidationErrorKind as K;
    if let K::AnyOf { context } | K::OneOfNotValid { context } = e.kind() {
        let before = out.len();
        for branch in context {
            let only_null = branch.len() == 1
                && branch[0].instance_path() == e.instance_path()
                && matches!(branch[0].kind(), K::Type { .. });
            if !only_null {
                for inner in branch {
                    leaf_errors(inner, out);
                }
            }
        }
        if out.len() > before {
            return;
        }
    }
    let path = e.instance_path().to_string();
    out.push(format!("at {}: {e}", if path.is_empty() { "/" } else { &path }));
}

pub fn parse<T: DeserializeOwned>(kind: ConfigKind, text: &str) -> Result<T, CliError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::Validation(format!("{} config is not valid JSON: {e}", kind.name())))?;
    validate_against_schema(kind, &value)?;
    serde_path_to_error::deserialize(value).map_err(|e| {
        CliError::Validation(format!("{} config at {}: {}", kind.name(), e.path(), e.inner()))
    })
}

pub fn load<T: DeserializeOwned>(kind: ConfigKind, path: Option<&Path>) -> Result<T, CliError> {
    let path = path.ok_or_else(|| CliError::Validation(format!("{} needs --config <path>", kind.name())))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    parse(kind, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive() {
        let g = GridRange {
            start: -1.0,
            stop: 1.0,
            step: 0.5,
        };
        assert_eq!(g.values().unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn schema_rejects_unknown_field_with_path() {
        let err = parse::<CorrSurfaceConfig>(
            ConfigKind::CorrSurface,
            r#"{"q": 0.05, "n": 10, "eta_s": {"start": 0, "stop": 1, "step": 1, "oops": 1}, "eta_fs": {"start": 0, "stop": 1, "step": 1}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("/eta_s"), "{err}");
    }

    #[test]
    fn schema_rejects_wrong_type_with_path() {
        let err = parse::<MultiLossConfig>(
            ConfigKind::MultiLoss,
            r#"{"chain": {"n": "fifty", "eta_s": 1, "eta_fs": 1, "eta_f": -2}, "k": [1], "p_r": [0.5]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("/chain/n"), "{err}");
    }

    #[test]
    fn optional_block_reports_inner_path() {
        let err = parse::<LossDistConfig>(
            ConfigKind::LossDist,
            r#"{"calibrate": {"n": "many", "q": 0.05, "rho": 0.05, "eta_fs": -2.1}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("at /calibrate/n:"), "{err}");
        assert!(!err.to_string().contains("null"), "{err}");
    }
}
