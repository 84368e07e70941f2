//! One function per subcommand. Each renders its artifact in memory and
//! hands it to the sink.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toric_credit::calibration::{fit, Backend};
use toric_credit::copula::{
    implied_correlation_report, mc_tranche_spreads, semi_analytic_spreads, CopulaScenarioSet,
};
use toric_credit::io::{
    write_implied_csv, write_loss_csv, write_mc_spreads_csv, write_multi_loss_csv, write_prices_csv,
    write_surface_csv, GraphDocument, MultiLossBlock,
};
use toric_credit::model::{FirmGraph, MarginalSpec};
use toric_credit::multiperiod::{k_step_loss_with, loss_term_structure, simulate_paths, transition_matrix};
use toric_credit::pricing::{price_all, CdoContract, LossTermStructure};
use toric_credit::sector::{calibrate_to_correlation, correlation_surface, loss_distribution, SectorParams};
use toric_credit::smile::fit_smile_params;

use crate::config::*;
use crate::error::CliError;
use crate::output::{json_bytes, render, Sink};

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: Option<PathBuf>,
    pub sink: Sink,
    pub seed: u64,
    pub lgd: bool,
}

impl Context {
    fn load<T: serde::de::DeserializeOwned>(&self, kind: ConfigKind) -> Result<T, CliError> {
        load(kind, self.config.as_deref())
    }

    /// Resolves a path named inside the config relative to the config file.
    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        match self.config.as_deref().and_then(Path::parent) {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }
}

#[derive(Serialize)]
struct CalibrationReport {
    residual: f64,
    iterations: usize,
    backend: Backend,
    achieved: MarginalSpec,
}

#[derive(Serialize)]
struct CalibrationOutput {
    graph: GraphDocument,
    report: CalibrationReport,
}

pub fn calibrate(ctx: &Context) -> Result<(), CliError> {
    let cfg: CalibrateConfig = ctx.load(ConfigKind::Calibrate)?;
    let graph = GraphDocument::from(&cfg.graph).graph()?;
    let target = target_marginals(&graph, &cfg.target)?;
    let settings = cfg.calibration();
    let result = fit(&graph, &target, &settings)?;
    let out = CalibrationOutput {
        graph: GraphDocument::from_model(&graph, Some(&result.params)),
        report: CalibrationReport {
            residual: result.residual,
            iterations: result.iterations,
            backend: settings.backend,
            achieved: result.achieved,
        },
    };
    ctx.sink.emit(&json_bytes(&out)?)
}

fn target_marginals(graph: &FirmGraph, t: &TargetConfig) -> Result<MarginalSpec, CliError> {
    match (&t.pair, &t.correlation) {
        (Some(p), None) => Ok(MarginalSpec::new(t.single.clone(), p.clone())),
        (None, Some(r)) => Ok(MarginalSpec::from_correlations(graph, t.single.clone(), r)?),
        (None, None) if graph.edge_count() == 0 => Ok(MarginalSpec::new(t.single.clone(), Vec::new())),
        _ => Err(CliError::Validation(
            "target: give exactly one of pair and correlation".into(),
        )),
    }
}

pub fn loss_dist(ctx: &Context) -> Result<(), CliError> {
    let cfg: LossDistConfig = ctx.load(ConfigKind::LossDist)?;
    let params = match (&cfg.sector, &cfg.calibrate) {
        (Some(s), None) => SectorParams::from(s),
        (None, Some(t)) => {
            let c = calibrate_to_correlation(t.q, t.rho, t.n, t.eta_fs)?;
            eprintln!(
                "calibrated eta_S = {}, eta_F = {} (rho = {})",
                c.eta_s, c.eta_f, c.rho
            );
            c.params(t.n)
        }
        _ => {
            return Err(CliError::Validation(
                "loss-dist: give exactly one of sector and calibrate".into(),
            ))
        }
    };
    let dist = loss_distribution(&params)?;
    ctx.sink.emit(&render(|w| write_loss_csv(w, &dist))?)
}

pub fn corr_surface(ctx: &Context) -> Result<(), CliError> {
    let cfg: CorrSurfaceConfig = ctx.load(ConfigKind::CorrSurface)?;
    let points = correlation_surface(cfg.q, cfg.n, &cfg.eta_s.values()?, &cfg.eta_fs.values()?);
    let failed = points.iter().filter(|p| p.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} grid points have no solution", points.len());
    }
    ctx.sink.emit(&render(|w| write_surface_csv(w, &points))?)
}

pub fn multi_loss(ctx: &Context) -> Result<(), CliError> {
    let cfg: MultiLossConfig = ctx.load(ConfigKind::MultiLoss)?;
    let mut blocks = Vec::new();
    for &p_r in &cfg.p_r {
        let kernel = transition_matrix(&cfg.chain.spec(p_r)?)?;
        for &k in &cfg.k {
            blocks.push(MultiLossBlock {
                p_r,
                k,
                dist: k_step_loss_with(&kernel, k),
            });
        }
    }
    ctx.sink.emit(&render(|w| write_multi_loss_csv(w, &blocks))?)
}

/// Empirical laws after every step, in the `multi-loss` layout.
pub fn simulate(ctx: &Context, paths: Option<usize>) -> Result<(), CliError> {
    let cfg: SimulateConfig = ctx.load(ConfigKind::Simulate)?;
    let spec = cfg.chain.spec(cfg.p_r)?;
    let set = simulate_paths(&spec, cfg.k, paths.unwrap_or(cfg.paths), ctx.seed)?;
    let blocks: Vec<MultiLossBlock> = (1..=cfg.k)
        .map(|k| MultiLossBlock {
            p_r: cfg.p_r,
            k,
            dist: set.empirical_loss(k),
        })
        .collect();
    ctx.sink.emit(&render(|w| write_multi_loss_csv(w, &blocks))?)
}

#[derive(Serialize)]
struct Quote {
    spread: f64,
    spread_bps: f64,
}

pub fn price(ctx: &Context) -> Result<(), CliError> {
    let cfg: PriceConfig = ctx.load(ConfigKind::Price)?;
    let contract = cfg.contract.contract()?;
    let lgd = if cfg.lgd.unwrap_or(ctx.lgd) {
        1.0 - cfg.recovery.unwrap_or(0.4)
    } else {
        1.0
    };
    let term = match (&cfg.chain, &cfg.term_structure_csv) {
        (Some(chain), None) => {
            let p_r = cfg
                .p_r
                .ok_or_else(|| CliError::Validation("price: a chain needs p_r".into()))?;
            chain_term_structure(chain, p_r, &contract, lgd)?
        }
        (None, Some(path)) => read_term_structure(&ctx.resolve(path), &contract, lgd)?,
        _ => {
            return Err(CliError::Validation(
                "price: give exactly one of chain and term_structure_csv".into(),
            ))
        }
    };
    let quotes: BTreeMap<String, Quote> = price_all(&contract, &term)?
        .into_iter()
        .map(|p| {
            let q = Quote {
                spread: p.spread,
                spread_bps: p.spread_bps(),
            };
            (p.label, q)
        })
        .collect();
    ctx.sink.emit(&json_bytes(&quotes)?)
}

fn chain_term_structure(chain: &ChainConfig, p_r: f64, contract: &CdoContract, lgd: f64) -> Result<LossTermStructure, CliError> {
    let kernel = transition_matrix(&chain.spec(p_r)?)?;
    let laws = loss_term_structure(&kernel, contract.periods());
    Ok(LossTermStructure::from_default_counts(&laws, chain.n, lgd)?)
}

/// Reads `k,loss,prob` rows. Missing `(k, loss)` pairs have probability 0;
/// losses are scaled by `lgd`.
fn read_term_structure(path: &Path, contract: &CdoContract, lgd: f64) -> Result<LossTermStructure, CliError> {
    #[derive(serde::Deserialize)]
    struct Row {
        k: usize,
        loss: f64,
        prob: f64,
    }
    let bad = |m: String| CliError::Validation(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut rows = Vec::new();
    for (i, r) in reader.deserialize::<Row>().enumerate() {
        let r = r.map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
        if !r.loss.is_finite() || !r.prob.is_finite() {
            return Err(bad(format!("row {}: non-finite value", i + 1)));
        }
        rows.push(r);
    }
    let periods = contract.periods();
    let mut support: Vec<f64> = rows.iter().map(|r| r.loss).collect();
    support.push(0.0);
    support.sort_by(f64::total_cmp);
    support.dedup();
    let mut slices = vec![vec![0.0; support.len()]; periods + 1];
    for r in &rows {
        if r.k > periods {
            return Err(bad(format!("payment index {} beyond the {periods} of the contract", r.k)));
        }
        let j = support.binary_search_by(|c| c.total_cmp(&r.loss)).expect("loss is in the support");
        slices[r.k][j] += r.prob;
    }
    if !rows.iter().any(|r| r.k == 0) {
        slices[0][0] = 1.0;
    }
    let support = support.into_iter().map(|c| c * lgd).collect();
    Ok(LossTermStructure::new(support, slices)?)
}

pub fn copula_price(ctx: &Context) -> Result<(), CliError> {
    let cfg: CopulaPriceConfig = ctx.load(ConfigKind::CopulaPrice)?;
    let spec = cfg.copula.spec(cfg.copula.rho()?)?;
    let contract = cfg.contract.contract()?;
    let bytes = match cfg.paths {
        Some(paths) => {
            let s = mc_tranche_spreads(&spec, &contract, paths, ctx.seed)?;
            render(|w| write_mc_spreads_csv(w, &s))?
        }
        None => {
            let s = semi_analytic_spreads(&spec, &contract)?;
            render(|w| write_prices_csv(w, &s))?
        }
    };
    ctx.sink.emit(&bytes)
}

pub fn implied_corr(ctx: &Context) -> Result<(), CliError> {
    let cfg: ImpliedCorrConfig = ctx.load(ConfigKind::ImpliedCorr)?;
    let base = cfg.copula.spec(0.0)?;
    let contract = cfg.contract.contract()?;
    let observed: Vec<f64> = match (&cfg.observed_bps, &cfg.chain) {
        (Some(bps), None) => bps.iter().map(|b| b / 1e4).collect(),
        (None, Some(chain)) => {
            let p_r = cfg
                .p_r
                .ok_or_else(|| CliError::Validation("implied-corr: a chain needs p_r".into()))?;
            let lgd = if cfg.lgd.unwrap_or(ctx.lgd) {
                1.0 - cfg.copula.recovery
            } else {
                1.0
            };
            let term = chain_term_structure(chain, p_r, &contract, lgd)?;
            price_all(&contract, &term)?.into_iter().map(|p| p.spread).collect()
        }
        _ => {
            return Err(CliError::Validation(
                "implied-corr: give exactly one of observed_bps and chain".into(),
            ))
        }
    };
    let scenarios = CopulaScenarioSet::draw(base.n, cfg.paths, ctx.seed)?;
    let report = implied_correlation_report(&observed, &contract, &base, &scenarios)?;
    for e in report.entries.iter().filter(|e| e.implied_rho_a.is_none()) {
        eprintln!("{}: {}", e.label, e.status);
    }
    ctx.sink.emit(&render(|w| write_implied_csv(w, &report))?)
}

pub fn fit_smile(ctx: &Context) -> Result<(), CliError> {
    let cfg: FitSmileConfig = ctx.load(ConfigKind::FitSmile)?;
    let fit = fit_smile_params(&cfg.rating(ctx.lgd), &cfg.options())?;
    if !fit.feasible {
        eprintln!("no parameters satisfy every spread condition; best found is reported");
    }
    ctx.sink.emit(&json_bytes(&fit)?)
}

pub fn schema(ctx: &Context, name: &str) -> Result<(), CliError> {
    let kind = ConfigKind::from_name(name).ok_or_else(|| {
        let names: Vec<&str> = ConfigKind::ALL.iter().map(|k| k.name()).collect();
        CliError::Usage(format!("no schema for '{name}'; expected one of {}", names.join(", ")))
    })?;
    ctx.sink.emit(&json_bytes(&kind.schema())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use toric_credit::pricing::standard_tranches;

    #[test]
    fn term_structure_csv_fills_inception() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ts.csv");
        std::fs::write(&path, "k,loss,prob\n1,0,0.9\n1,0.05,0.1\n2,0,0.8\n2,0.05,0.2\n").unwrap();
        let contract = CdoContract::flat_rate(1.0, 1.0, 0.5, 0.05, standard_tranches()).unwrap();
        let ts = read_term_structure(&path, &contract, 0.6).unwrap();
        assert_eq!(ts.support(), &[0.0, 0.03]);
        assert_eq!(ts.slice(0), &[1.0, 0.0]);
        assert_eq!(ts.slice(2), &[0.8, 0.2]);
    }

    #[test]
    fn term_structure_beyond_maturity_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ts.csv");
        std::fs::write(&path, "k,loss,prob\n3,0,1\n").unwrap();
        let contract = CdoContract::flat_rate(1.0, 1.0, 0.5, 0.05, standard_tranches()).unwrap();
        assert!(matches!(read_term_structure(&path, &contract, 1.0), Err(CliError::Validation(_))));
    }
}
