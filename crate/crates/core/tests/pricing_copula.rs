use proptest::prelude::*;
use toric_credit::copula::{
    asset_corr_from_default_corr, default_correlation, default_correlation_bivariate, implied_correlation,
    loss_distribution as copula_loss, mc_tranche_spreads, semi_analytic_spreads, simulate_default_times,
    ks_statistic_exponential, CopulaScenarioSet, CopulaSpec,
};
use toric_credit::multiperiod::{loss_term_structure, transition_matrix, ChainSpec};
use toric_credit::pricing::{
    legs, price_all, spread, spread_from_kernel, standard_tranches, tranche_loss, CdoContract, LossTermStructure,
    TrancheSpec,
};

fn contract(periods: usize) -> CdoContract {
    CdoContract::flat_rate(1.0, 0.5 * periods as f64, 0.5, 0.05, standard_tranches()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tranche_partition_is_additive(c in 0.0f64..=1.0, cuts in prop::collection::vec(0.001f64..0.999, 1..6)) {
        let mut k: Vec<f64> = cuts;
        k.push(0.0);
        k.push(1.0);
        k.sort_by(f64::total_cmp);
        k.dedup();
        let total: f64 = k
            .windows(2)
            .map(|w| tranche_loss(c, &TrancheSpec::new("p", w[0], w[1]).unwrap()))
            .sum();
        prop_assert!((total - c).abs() <= 8.0 * f64::EPSILON);
    }

    #[test]
    fn kernel_power_route_matches_propagation(
        eta_s in -4.0f64..4.0, eta_fs in -2.0f64..3.0, eta_f in -4.0f64..-1.0, p_r in 0.0f64..=1.0, lgd in 0.3f64..=1.0,
    ) {
        let n = 10;
        let c = contract(6);
        let kernel = transition_matrix(&ChainSpec::new(n, eta_s, eta_fs, eta_f, p_r)).unwrap();
        let term = LossTermStructure::from_default_counts(&loss_term_structure(&kernel, 6), n, lgd).unwrap();
        for t in &c.tranches {
            let a = spread(&c, t, &term).unwrap();
            let b = spread_from_kernel(&c, t, &kernel, lgd).unwrap();
            // the premium leg is built from `width - E[loss]`; its
            // cancellation bounds the attainable relative accuracy
            let outstanding: f64 = (1..=6).map(|k| t.width() - term.expected_tranche_loss(t, k)).sum();
            let cond = (6.0 * t.width() / outstanding).max(1.0);
            prop_assert!((a - b).abs() <= 1e-12 * cond * a.abs().max(1e-12), "{}: {a} vs {b}", t.label);
        }
    }

    #[test]
    fn copula_default_correlation_routes_agree(rho_a in 0.0f64..0.95, q in 0.001f64..0.5) {
        let a = default_correlation(rho_a, q).unwrap();
        let b = default_correlation_bivariate(rho_a, q).unwrap();
        prop_assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn asset_correlation_inverse(rho_a in 0.01f64..0.9, q in 0.005f64..0.3) {
        let rho = default_correlation(rho_a, q).unwrap();
        let back = asset_corr_from_default_corr(rho, q).unwrap();
        prop_assert!((back - rho_a).abs() < 1e-7);
    }
}

#[test]
fn hand_computed_mezzanine_spread() {
    // one period; portfolio loses 5% with probability 0.2
    let c = CdoContract::flat_rate(1.0, 0.5, 0.5, 0.05, vec![]).unwrap();
    let term = LossTermStructure::new(vec![0.0, 0.05], vec![vec![1.0, 0.0], vec![0.8, 0.2]]).unwrap();
    let mezz = TrancheSpec::new("mezzanine", 0.03, 0.07).unwrap();
    let l = legs(&c, &mezz, &term).unwrap();
    let beta = (-0.025f64).exp();
    assert!((l.protection - beta * 0.004).abs() < 1e-16);
    assert!((l.premium - beta * 0.5 * 0.036).abs() < 1e-16);
    assert!((spread(&c, &mezz, &term).unwrap() - 0.004 / 0.018).abs() < 1e-14);
}

#[test]
fn zero_loss_means_zero_spread() {
    let c = contract(10);
    for p in price_all(&c, &LossTermStructure::zero_loss(10)).unwrap() {
        assert_eq!(p.spread, 0.0);
    }
}

#[test]
fn spreads_fall_with_seniority_under_a_chain() {
    let c = contract(10);
    let kernel = transition_matrix(&ChainSpec::new(50, 5.514, -5.0, -2.8, 0.3)).unwrap();
    let term = LossTermStructure::from_default_counts(&loss_term_structure(&kernel, 10), 50, 0.6).unwrap();
    let s: Vec<f64> = price_all(&c, &term).unwrap().iter().map(|p| p.spread).collect();
    assert!(s.windows(2).all(|w| w[0] > w[1]), "{s:?}");
}

#[test]
fn independent_copula_is_binomial() {
    let (n, q) = (40, 0.07);
    let got = copula_loss(q, 0.0, n).unwrap();
    let mut expected = vec![0.0; n + 1];
    expected[0] = (1.0f64 - q).powi(n as i32);
    for k in 1..=n {
        expected[k] = expected[k - 1] * (n - k + 1) as f64 / k as f64 * q / (1.0 - q);
    }
    for (a, b) in got.probabilities().iter().zip(&expected) {
        assert!((a - b).abs() < 1e-13);
    }
}

#[test]
fn copula_loss_law_has_the_right_mean() {
    for rho in [0.05, 0.3, 0.7] {
        let d = copula_loss(0.05, rho, 125).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-10);
        assert!((d.mean() - 125.0 * 0.05).abs() < 1e-8, "rho {rho}: {}", d.mean());
    }
}

#[test]
fn default_correlation_grows_with_asset_correlation() {
    let v: Vec<f64> = [0.0, 0.1, 0.2, 0.4, 0.8].iter().map(|&r| default_correlation(r, 0.05).unwrap()).collect();
    assert_eq!(v[0], 0.0);
    assert!(v.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn default_times_are_exponential() {
    // one firm per path keeps the 10^5 samples independent
    let spec = CopulaSpec::new(1, 0.3, 0.02, 0.4).unwrap();
    let times = simulate_default_times(&spec, 100_000, 5).unwrap();
    let d = ks_statistic_exponential(times.all(), spec.lambda);
    let critical = (-(0.5e-3f64).ln() / 2.0).sqrt() / (times.all().len() as f64).sqrt();
    assert!(d < critical, "D = {d}, critical {critical}");
}

#[test]
fn monte_carlo_matches_semi_analytic() {
    let spec = CopulaSpec::from_one_year_probability(50, 0.3, 0.015, 0.4).unwrap();
    let c = CdoContract::flat_rate(1.0, 5.0, 0.5, 0.05, standard_tranches()).unwrap();
    let exact = semi_analytic_spreads(&spec, &c).unwrap();
    let mc = mc_tranche_spreads(&spec, &c, 40_000, 3).unwrap();
    for (e, m) in exact.iter().zip(&mc) {
        assert!((e.spread - m.spread).abs() < 4.0 * m.stderr, "{}: {} vs {} +- {}", e.label, e.spread, m.spread, m.stderr);
    }
}

#[test]
fn implied_correlation_recovers_the_input() {
    let base = CopulaSpec::from_one_year_probability(50, 0.0, 0.015, 0.4).unwrap();
    let c = CdoContract::flat_rate(1.0, 5.0, 0.5, 0.05, standard_tranches()).unwrap();
    let scenarios = CopulaScenarioSet::draw(50, 4000, 17).unwrap();
    let truth = 0.27;
    let observed = scenarios.spreads(&base.with_rho(truth), &c).unwrap();
    // equity spreads fall and senior spreads rise with correlation, so
    // both ends have a unique crossing
    for idx in [0, 2] {
        let t = &c.tranches[idx];
        let got = implied_correlation(observed[idx].spread, t, &c, &base, &scenarios).unwrap();
        assert!((got - truth).abs() < 2e-3, "{}: {got}", t.label);
    }
}
