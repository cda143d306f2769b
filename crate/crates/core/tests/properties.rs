mod common;

use hawkes_cumulants::cumulants::{integrated_cumulant, motif_series, CumulantDensity, CumulantQuery, DensityOptions};
use hawkes_cumulants::estimate::{cumulants_from_moments, moments_from_cumulants, product_moments};
use hawkes_cumulants::io::{read_events, write_events};
use hawkes_cumulants::model::renewal_density_default;
use hawkes_cumulants::simulate::{simulate_clusters, simulate_thinning};
use hawkes_cumulants::{build_summary, enumerate_trees, HawkesModel};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashSet;

use common::*;

fn model_from(seed: u64, max_d: usize, max_rho: f64) -> HawkesModel {
    let mut r = rng(seed);
    let d = r.random_range(1..=max_d);
    let rho = r.random_range(0.05..max_rho);
    random_model(&mut r, d, rho)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stationary_rates_solve_balance(seed in any::<u64>()) {
        let model = model_from(seed, 5, 0.95);
        let s = build_summary(&model, 1e-12).unwrap();
        let mu = nalgebra::DVector::from_column_slice(model.mu());
        let residual = &s.lambda - &mu - &s.gbar * &s.lambda;
        prop_assert!(residual.amax() <= 1e-10 * s.lambda.amax());
        prop_assert!(s.lambda.iter().all(|l| *l > 0.0));
        prop_assert!(s.psi.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn neumann_partial_sums_bound(seed in any::<u64>()) {
        let model = model_from(seed, 4, 0.9);
        let s = build_summary(&model, 1e-12).unwrap();
        let d = model.dim();
        let mut power = DMatrix::<f64>::identity(d, d);
        let mut partial = power.clone();
        // non-normal G lets early powers exceed rho^k, so allow the
        // transient constant sup_k |G^k| / rho^k measured along the way
        let mut constant: f64 = 1.0;
        for n in 1..=30 {
            power = &power * &s.gbar;
            partial += &power;
            if power.amax() > 0.0 {
                constant = constant.max(power.amax() / s.rho.powi(n));
            }
            let gap = (&s.resolvent - &partial).amax();
            let bound = constant * d as f64 * s.rho.powi(n + 1) / (1.0 - s.rho);
            prop_assert!(gap <= bound * (1.0 + 1e-9) + 1e-12, "N={} gap {} bound {}", n, gap, bound);
        }
    }

    #[test]
    fn relabeling_types_conjugates_summary(seed in any::<u64>()) {
        let model = model_from(seed, 5, 0.9);
        let d = model.dim();
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut rng(seed ^ 1));
        let s = build_summary(&model, 1e-12).unwrap();
        let p = build_summary(&model.permuted(&perm).unwrap(), 1e-12).unwrap();
        prop_assert!(close(s.rho, p.rho, 1e-9));
        for i in 0..d {
            prop_assert!(close(s.lambda[i], p.lambda[perm[i]], 1e-12));
            for j in 0..d {
                prop_assert!(close(s.resolvent[(i, j)], p.resolvent[(perm[i], perm[j])], 1e-12));
            }
        }
    }

    #[test]
    fn integrated_cumulant_is_exchangeable(seed in any::<u64>(), n in 2usize..=5) {
        let model = model_from(seed, 4, 0.9);
        let s = build_summary(&model, 1e-12).unwrap();
        let mut r = rng(seed ^ 2);
        let types: Vec<usize> = (0..n).map(|_| r.random_range(0..model.dim())).collect();
        let mut shuffled = types.clone();
        shuffled.shuffle(&mut r);
        let a = integrated_cumulant(&s, &types).unwrap();
        let b = integrated_cumulant(&s, &shuffled).unwrap();
        prop_assert!(close(a, b, 1e-12));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn motif_partial_sums_increase_to_limit(seed in any::<u64>(), n in 2usize..=3) {
        let model = model_from(seed, 3, 0.7);
        let s = build_summary(&model, 1e-12).unwrap();
        let mut r = rng(seed ^ 3);
        let types: Vec<usize> = (0..n).map(|_| r.random_range(0..model.dim())).collect();
        let sums = motif_series(&s, &types, 120).unwrap();
        prop_assert!(sums.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(close(*sums.last().unwrap(), integrated_cumulant(&s, &types).unwrap(), 1e-9));
    }

    #[test]
    fn moment_cumulant_duality_is_exact(
        data in (1usize..=4, 3usize..=8).prop_flat_map(|(n, rows)| {
            proptest::collection::vec(proptest::collection::vec((-20i64..20, 1i64..6), rows), n)
        })
    ) {
        let samples: Vec<Vec<BigRational>> = data
            .iter()
            .map(|v| v.iter().map(|(p, q)| BigRational::new(BigInt::from(*p), BigInt::from(*q))).collect())
            .collect();
        let n = samples.len();
        let moments = product_moments(&samples);
        let cumulants = cumulants_from_moments(&moments, n);
        prop_assert_eq!(moments_from_cumulants(&cumulants, n), moments);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn density_is_exchangeable_and_shift_invariant(
        seed in any::<u64>(),
        n in 2usize..=3,
        lags in proptest::collection::vec(-4.0f64..4.0, 2),
        shift in -100.0f64..100.0,
    ) {
        let model = model_from(seed, 3, 0.8);
        let renewal = renewal_density_default(&model).unwrap();
        let dens = CumulantDensity::new(&model, &renewal, DensityOptions::default()).unwrap();
        let mut r = rng(seed ^ 4);
        let types: Vec<usize> = (0..n).map(|_| r.random_range(0..model.dim())).collect();
        let mut times = vec![0.0];
        times.extend_from_slice(&lags[..n - 1]);
        let base = dens.evaluate(&CumulantQuery::new(types.clone(), times.clone()).unwrap()).unwrap();

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        let p_types = order.iter().map(|k| types[*k]).collect();
        let p_times = order.iter().map(|k| times[*k]).collect();
        let permuted = dens.evaluate(&CumulantQuery::new(p_types, p_times).unwrap()).unwrap();
        prop_assert!(close(base.continuous, permuted.continuous, 1e-10), "{} vs {}", base.continuous, permuted.continuous);

        let s_times = times.iter().map(|t| t + shift).collect();
        let shifted = dens.evaluate(&CumulantQuery::new(types, s_times).unwrap()).unwrap();
        // the shift perturbs the lags by rounding only
        prop_assert!(close(base.continuous, shifted.continuous, 1e-6), "{} vs {}", base.continuous, shifted.continuous);
        prop_assert_eq!(base.atoms.len(), shifted.atoms.len());
    }

    #[test]
    fn simulation_is_reproducible(seed in any::<u64>()) {
        let model = model_from(seed, 3, 0.7);
        let a = simulate_clusters(&model, 200.0, model.default_burn_in(), seed).unwrap();
        let b = simulate_clusters(&model, 200.0, model.default_burn_in(), seed).unwrap();
        prop_assert_eq!(&a, &b);
        let c = simulate_thinning(&model, 200.0, seed).unwrap();
        let d = simulate_thinning(&model, 200.0, seed).unwrap();
        prop_assert_eq!(c, d);
    }

    #[test]
    fn lineage_invariants_hold(seed in any::<u64>()) {
        let model = model_from(seed, 3, 0.8);
        let s = simulate_clusters(&model, 300.0, model.default_burn_in(), seed).unwrap();
        let mut roots = std::collections::HashMap::new();
        for (row, e) in s.events.iter().enumerate() {
            prop_assert!(e.time >= -s.burn_in && e.time <= s.t_obs);
            let l = e.lineage.unwrap();
            match l.parent {
                None => {
                    prop_assert_eq!(l.generation, 0);
                    prop_assert!(roots.insert(l.cluster_id, row).is_none());
                }
                Some(p) => {
                    let parent = &s.events[p];
                    let pl = parent.lineage.unwrap();
                    prop_assert!(parent.time < e.time);
                    prop_assert_eq!(pl.generation + 1, l.generation);
                    prop_assert_eq!(pl.cluster_id, l.cluster_id);
                }
            }
        }
        prop_assert!(s.events.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn event_csv_round_trips(seed in any::<u64>(), lineage in any::<bool>()) {
        let model = model_from(seed, 3, 0.7);
        let s = if lineage {
            simulate_clusters(&model, 100.0, model.default_burn_in(), seed).unwrap()
        } else {
            simulate_thinning(&model, 100.0, seed).unwrap()
        };
        let mut buf = Vec::new();
        write_events(&s, &mut buf).unwrap();
        let back = read_events(buf.as_slice(), Some(s.dim), Some(s.t_obs)).unwrap();
        prop_assert_eq!(back.events, s.events);
    }
}

#[test]
fn relabeling_leaves_permutes_the_tree_set() {
    for n in 2..=5 {
        let trees = enumerate_trees(n).unwrap();
        let set: HashSet<_> = trees.iter().cloned().collect();
        let mut r = rng(n as u64);
        for _ in 0..5 {
            let mut perm: Vec<usize> = (1..=n).collect();
            perm.shuffle(&mut r);
            let image: HashSet<_> = trees.iter().map(|t| t.relabeled(&perm).unwrap().canonical_form().unwrap()).collect();
            assert_eq!(image, set, "n={n} perm {perm:?}");
        }
    }
}

#[test]
fn poisson_motif_series_is_constant() {
    let model = HawkesModel::poisson(vec![1.5, 0.5]).unwrap();
    let s = build_summary(&model, 1e-12).unwrap();
    assert_eq!(motif_series(&s, &[1, 1], 5).unwrap(), vec![0.5; 6]);
    assert_eq!(motif_series(&s, &[0, 1, 1], 5).unwrap(), vec![0.0; 6]);
}
