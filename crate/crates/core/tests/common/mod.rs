#![allow(dead_code)]

use hawkes_cumulants::model::spectral_radius;
use hawkes_cumulants::{HawkesModel, Kernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exponential-kernel model with about a quarter of the couplings switched
/// off, rescaled to spectral radius `rho`.
pub fn random_model(rng: &mut ChaCha8Rng, d: usize, rho: f64) -> HawkesModel {
    loop {
        let weights: Vec<f64> =
            (0..d * d).map(|_| if rng.random::<f64>() < 0.25 { 0.0 } else { rng.random_range(0.1..1.0) }).collect();
        let g = nalgebra::DMatrix::from_row_slice(d, d, &weights);
        let r = spectral_radius(&g, 1e-13);
        if r < 1e-6 {
            continue;
        }
        let kernels = weights
            .iter()
            .map(|w| if *w == 0.0 { Kernel::Zero } else { Kernel::exponential(w * rho / r, rng.random_range(0.5..2.0)) })
            .collect();
        let mu = (0..d).map(|_| rng.random_range(0.2..1.5)).collect();
        return HawkesModel::new(mu, kernels).unwrap();
    }
}

pub fn scalar() -> HawkesModel {
    HawkesModel::scalar_exponential(1.0, 0.5, 1.0).unwrap()
}

/// Two types, asymmetric coupling, spectral radius 0.4.
pub fn asymmetric_pair() -> HawkesModel {
    HawkesModel::new(
        vec![0.5, 0.3],
        vec![
            Kernel::exponential(0.3, 1.0),
            Kernel::exponential(0.4, 0.5),
            Kernel::exponential(0.05, 2.0),
            Kernel::exponential(0.2, 1.5),
        ],
    )
    .unwrap()
}

/// Two types mixing a tabulated kernel with exponentials.
pub fn grid_mixture() -> HawkesModel {
    let bump: Vec<f64> = (0..=20).map(|k| 0.3 * (std::f64::consts::PI * k as f64 / 20.0).sin()).collect();
    HawkesModel::new(
        vec![0.8, 0.4],
        vec![Kernel::grid(0.1, bump), Kernel::exponential(0.2, 1.0), Kernel::exponential(0.3, 2.0), Kernel::Zero],
    )
    .unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}
