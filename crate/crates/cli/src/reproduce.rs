//! Data tables behind the published figures.
//!
//! Each figure writes one or more CSV files into the output directory.

use std::path::Path;

use toric_credit::calibration::solve_eta_f;
use toric_credit::copula::{self, asset_corr_from_default_corr};
use toric_credit::io::{write_multi_loss_csv, write_surface_csv, MultiLossBlock};
use toric_credit::multiperiod::{k_step_loss_with, transition_matrix, ChainSpec};
use toric_credit::sector::{calibrate_to_correlation, correlation_surface, loss_distribution, SectorParams};
use toric_credit::smile::{fit_smile_params, RatingConfig, SmileOptions};

use crate::error::CliError;
use crate::output::{render, write_atomic};

pub const FIGURES: [&str; 8] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

pub fn run(figure: &str, dir: &Path) -> Result<(), CliError> {
    match figure {
        "all" => FIGURES.iter().try_for_each(|f| run(f, dir)),
        "fig2" => fig2(dir),
        "fig3" => surface(dir, "fig3", -1.0, 1.0),
        "fig4" => surface(dir, "fig4", -1.0, -1.0),
        "fig5" => surface(dir, "fig5", 1.0, 1.0),
        "fig6" => surface(dir, "fig6", 1.0, -1.0),
        "fig7" => fig7(dir),
        "fig8" => fig8(dir),
        "fig9" => fig9(dir),
        other => Err(CliError::Usage(format!(
            "unknown figure '{other}'; expected one of {} or all",
            FIGURES.join(", ")
        ))),
    }
}

fn put(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(&dir.join(name), bytes)?;
    eprintln!("wrote {}", dir.join(name).display());
    Ok(())
}

fn table<I>(header: &[&str], rows: I) -> Result<Vec<u8>, CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    render(|buf| {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()
    })
}

/// One sector of 125 firms at `eta_FS = -2.1`, `q = 0.05`, for several
/// target correlations.
fn fig2(dir: &Path) -> Result<(), CliError> {
    let (n, q, eta_fs) = (125, 0.05, -2.1);
    let mut dist_rows = Vec::new();
    let mut param_rows = Vec::new();
    for rho in [0.01, 0.02, 0.05, 0.07] {
        let c = match calibrate_to_correlation(q, rho, n, eta_fs) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("fig2: rho = {rho} skipped: {e}");
                continue;
            }
        };
        let dist = loss_distribution(&c.params(n))?;
        for (m, p) in dist.probabilities().iter().enumerate() {
            dist_rows.push(vec![rho.to_string(), m.to_string(), p.to_string()]);
        }
        param_rows.push(vec![
            rho.to_string(),
            c.eta_s.to_string(),
            c.eta_fs.to_string(),
            c.eta_f.to_string(),
            c.rho.to_string(),
        ]);
    }
    put(dir, "fig2.csv", &table(&["rho", "n", "prob"], dist_rows)?)?;
    put(
        dir,
        "fig2_params.csv",
        &table(&["rho", "eta_S", "eta_FS", "eta_F", "achieved_rho"], param_rows)?,
    )
}

/// Correlation over one quadrant of `(eta_S, eta_FS)` with `eta_F` solved
/// for the marginal.
fn surface(dir: &Path, name: &str, s_sign: f64, fs_sign: f64) -> Result<(), CliError> {
    let eta_s: Vec<f64> = (1..=20).map(|i| s_sign * 0.5 * i as f64).collect();
    let eta_fs: Vec<f64> = (1..=20).map(|i| fs_sign * 0.25 * i as f64).collect();
    for q in [0.01, 0.05] {
        let points = correlation_surface(q, 125, &eta_s, &eta_fs);
        let failed = points.iter().filter(|p| p.error.is_some()).count();
        if failed > 0 {
            eprintln!("{name}: {failed} points without a solution at q = {q}");
        }
        put(dir, &format!("{name}_q{q}.csv"), &render(|w| write_surface_csv(w, &points))?)?;
    }
    Ok(())
}

/// Chain with `N = 50`, `(eta_S, eta_FS) = (5.514, -5)` over a range of
/// removal probabilities. Both quoted values of `eta_F` are produced.
fn fig7(dir: &Path) -> Result<(), CliError> {
    for eta_f in [-2.8, -2.76] {
        let mut blocks = Vec::new();
        for p_r in [0.1, 0.3, 0.5, 0.999] {
            let kernel = transition_matrix(&ChainSpec::new(50, 5.514, -5.0, eta_f, p_r))?;
            for k in [1, 5, 10] {
                blocks.push(MultiLossBlock {
                    p_r,
                    k,
                    dist: k_step_loss_with(&kernel, k),
                });
            }
        }
        put(
            dir,
            &format!("fig7_eta_f_{eta_f}.csv"),
            &render(|w| write_multi_loss_csv(w, &blocks))?,
        )?;
    }
    Ok(())
}

/// Graphical and copula loss laws at equal default correlation.
fn fig8(dir: &Path) -> Result<(), CliError> {
    let (n, q) = (125, 0.05);
    for (rho, eta_fs, eta_s) in [(0.01, -0.95, 9.2), (0.05, -2.1, 15.0)] {
        let eta_f = solve_eta_f(q, n, eta_s, eta_fs)?;
        let graphical = loss_distribution(&SectorParams::single(n, eta_s, eta_fs, eta_f))?;
        let rho_a = asset_corr_from_default_corr(rho, q)?;
        let cop = copula::loss_distribution(q, rho_a, n)?;
        let rows = (0..=n).map(|m| vec![m.to_string(), graphical.prob(m).to_string(), cop.prob(m).to_string()]);
        put(dir, &format!("fig8_rho_{rho}.csv"), &table(&["n", "graphical", "copula"], rows)?)?;
    }
    Ok(())
}

/// Smile search for both rating classes.
fn fig9(dir: &Path) -> Result<(), CliError> {
    let mut spread_rows = Vec::new();
    let mut param_rows = Vec::new();
    for rating in [RatingConfig::high_rating(), RatingConfig::low_rating()] {
        let fit = fit_smile_params(&rating, &SmileOptions::default())?;
        for (i, label) in fit.labels.iter().enumerate() {
            spread_rows.push(vec![
                rating.label.clone(),
                label.clone(),
                (fit.copula[i] * 1e4).to_string(),
                (fit.graphical[i] * 1e4).to_string(),
            ]);
        }
        param_rows.push(vec![
            rating.label.clone(),
            fit.eta_f.to_string(),
            fit.eta_fs.to_string(),
            fit.eta_s.to_string(),
            fit.p_r.to_string(),
            fit.feasible.to_string(),
            fit.mezzanine_relative_error.to_string(),
        ]);
    }
    put(
        dir,
        "fig9_spreads.csv",
        &table(&["rating", "tranche", "copula_bps", "graphical_bps"], spread_rows)?,
    )?;
    put(
        dir,
        "fig9_params.csv",
        &table(
            &["rating", "eta_F", "eta_FS", "eta_S", "p_R", "feasible", "mezzanine_relative_error"],
            param_rows,
        )?,
    )
}
