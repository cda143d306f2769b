mod common;

use hawkes_cumulants::cumulants::{CumulantDensity, CumulantQuery, DensityOptions};
use hawkes_cumulants::estimate::{
    covariance_density_estimate, empirical_integrated_cumulant, empirical_rates, pair_rate_histogram,
    same_cluster_coincidence, LagBins, PairFilter, DEFAULT_BLOCKS,
};
use hawkes_cumulants::model::renewal_density_default;
use hawkes_cumulants::simulate::{simulate_clusters, simulate_thinning};
use hawkes_cumulants::{build_summary, HawkesError, HawkesModel};

use common::*;

#[test]
fn poisson_rates_from_both_samplers() {
    let model = HawkesModel::poisson(vec![0.5, 2.0]).unwrap();
    let t_obs = 5e4;
    for stream in [simulate_clusters(&model, t_obs, 0.0, 1).unwrap(), simulate_thinning(&model, t_obs, 2).unwrap()] {
        let rates = empirical_rates(&stream, 0.0, t_obs, DEFAULT_BLOCKS).unwrap();
        for (r, mu) in rates.iter().zip(model.mu()) {
            assert!(r.within(*mu, 3.0), "{r:?} vs {mu}");
        }
    }
}

#[test]
fn rates_match_stationary_rates() {
    let model = asymmetric_pair();
    let s = build_summary(&model, 1e-12).unwrap();
    let t_obs = 1e5;
    let stream = simulate_thinning(&model, t_obs, 3).unwrap();
    let rates = empirical_rates(&stream, 0.0, t_obs, DEFAULT_BLOCKS).unwrap();
    for (i, r) in rates.iter().enumerate() {
        assert!(r.within(s.lambda[i], 3.0), "type {i}: {r:?} vs {}", s.lambda[i]);
    }
}

#[test]
fn offspring_counts_match_branching_matrix() {
    let model = asymmetric_pair();
    let s = build_summary(&model, 1e-12).unwrap();
    let t_obs = 1e5;
    let stream = simulate_clusters(&model, t_obs, model.default_burn_in(), 4).unwrap();
    // parents late enough may lose children past the window
    let cutoff = t_obs - model.renewal_horizon(1e-9);
    let mut parents = [0.0f64; 2];
    let mut children = [[0.0f64; 2]; 2];
    for e in &stream.events {
        if e.time >= 0.0 && e.time < cutoff {
            parents[e.kind] += 1.0;
        }
        if let Some(p) = e.lineage.unwrap().parent {
            let parent = &stream.events[p];
            if parent.time >= 0.0 && parent.time < cutoff {
                children[e.kind][parent.kind] += 1.0;
            }
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            let est = children[i][j] / parents[j];
            let se = children[i][j].sqrt() / parents[j];
            assert!((est - s.gbar[(i, j)]).abs() <= 3.0 * se, "G[{i}{j}] {est} +- {se} vs {}", s.gbar[(i, j)]);
        }
    }
}

#[test]
fn same_cluster_equals_all_minus_different() {
    let model = asymmetric_pair();
    let stream = simulate_clusters(&model, 2e4, model.default_burn_in(), 5).unwrap();
    let margin = model.renewal_horizon(1e-3);
    let rates = empirical_rates(&stream, margin, stream.t_obs, DEFAULT_BLOCKS).unwrap();
    let bins = LagBins::uniform(-10.0, 10.0, 5.0).unwrap();
    for (i, j) in [(0, 0), (0, 1), (1, 0)] {
        let all = pair_rate_histogram(&stream, i, j, &bins, PairFilter::All, margin).unwrap();
        let same = pair_rate_histogram(&stream, i, j, &bins, PairFilter::SameCluster, margin).unwrap();
        let diff = pair_rate_histogram(&stream, i, j, &bins, PairFilter::DifferentCluster, margin).unwrap();
        for k in 0..bins.len() {
            assert!((all[k].value - same[k].value - diff[k].value).abs() <= 1e-9 * all[k].value);
            // distinct clusters are independent, so only the rates remain
            let product = rates[i].value * rates[j].value;
            assert!(diff[k].within(product, 3.0), "({i},{j}) bin {k}: {:?} vs {product}", diff[k]);
        }
    }
}

#[test]
fn covariance_density_is_pair_symmetric() {
    let model = asymmetric_pair();
    let stream = simulate_clusters(&model, 5e4, model.default_burn_in(), 6).unwrap();
    let margin = model.renewal_horizon(1e-3);
    let bins = LagBins::uniform(-6.0, 6.0, 1.0).unwrap();
    let ij = covariance_density_estimate(&stream, 0, 1, &bins, margin).unwrap();
    let ji = covariance_density_estimate(&stream, 1, 0, &bins, margin).unwrap();
    let m = bins.len();
    for k in 0..m {
        let (a, b) = (&ij[k], &ji[m - 1 - k]);
        let se = a.se.max(b.se);
        assert!((a.value - b.value).abs() <= 3.0 * se, "bin {k}: {a:?} vs {b:?}");
    }
}

#[test]
fn scalar_covariance_density_matches_analytic() {
    let model = scalar();
    let stream = simulate_clusters(&model, 1e5, model.default_burn_in(), 7).unwrap();
    let margin = model.renewal_horizon(1e-3);
    let renewal = renewal_density_default(&model).unwrap();
    let dens = CumulantDensity::new(&model, &renewal, DensityOptions::default()).unwrap();
    let bins = LagBins::uniform(0.5, 5.5, 0.5).unwrap();
    let est = covariance_density_estimate(&stream, 0, 0, &bins, margin).unwrap();
    for (k, e) in est.iter().enumerate() {
        let lo = bins.edges[k];
        let analytic = (0..10)
            .map(|m| {
                let q = CumulantQuery::from_lags(vec![0, 0], &[lo + 0.025 + 0.05 * m as f64]).unwrap();
                dens.evaluate(&q).unwrap().continuous
            })
            .sum::<f64>()
            / 10.0;
        assert!(e.within(analytic, 3.0), "bin {k}: {e:?} vs {analytic}");
    }
}

#[test]
fn poisson_has_no_same_cluster_pairs() {
    let model = HawkesModel::poisson(vec![1.0, 1.0]).unwrap();
    let stream = simulate_clusters(&model, 1e4, 0.0, 8).unwrap();
    let bins = [LagBins::uniform(-3.0, 3.0, 0.5).unwrap()];
    for types in [[0, 0], [0, 1]] {
        let est = same_cluster_coincidence(&stream, &types, &bins, 0.0).unwrap();
        assert!(est.iter().all(|e| e.value == 0.0 && e.se == 0.0));
    }
}

#[test]
fn coincidence_requires_lineage() {
    let model = scalar();
    let stream = simulate_thinning(&model, 1e3, 9).unwrap();
    let bins = [LagBins::uniform(-1.0, 1.0, 0.5).unwrap()];
    assert!(matches!(same_cluster_coincidence(&stream, &[0, 0], &bins, 0.0), Err(HawkesError::Lineage)));
}

#[test]
fn standard_errors_shrink_with_window() {
    let model = scalar();
    let margin = model.renewal_horizon(1e-3);
    let se = |t_obs: f64, seed: u64| {
        let stream = simulate_clusters(&model, t_obs, model.default_burn_in(), seed).unwrap();
        let k2 = empirical_integrated_cumulant(&stream, &[0, 0], 20.0, margin).unwrap();
        let rate = empirical_rates(&stream, margin, t_obs, DEFAULT_BLOCKS).unwrap()[0];
        (k2.se, rate.se)
    };
    let (k_short, r_short) = se(5e4, 10);
    let (k_long, r_long) = se(1e5, 11);
    // doubling the window divides the error by sqrt 2, up to the noise of
    // a 50-block error estimate
    for ratio in [k_short / k_long, r_short / r_long] {
        assert!((1.1..1.8).contains(&ratio), "SE ratio {ratio}");
    }
}

#[test]
fn window_errors() {
    let model = scalar();
    let stream = simulate_clusters(&model, 100.0, model.default_burn_in(), 12).unwrap();
    assert!(matches!(
        empirical_integrated_cumulant(&stream, &[0, 0], 500.0, 0.0),
        Err(HawkesError::Window(_))
    ));
    let bins = LagBins::uniform(-80.0, 80.0, 1.0).unwrap();
    assert!(matches!(covariance_density_estimate(&stream, 0, 0, &bins, 30.0), Err(HawkesError::Window(_))));
}
