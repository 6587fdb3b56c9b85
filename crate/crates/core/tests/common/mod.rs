#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selforg::lattice::Statistics;
use selforg::liouvillian::SystemParams;
use selforg::state::DensityMatrix;
use selforg::C64;

pub fn random_matrix(n: usize, seed: u64) -> DMatrix<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

/// Full-rank random density matrix `A A† / tr`.
pub fn random_density(n: usize, seed: u64) -> DensityMatrix {
    let a = random_matrix(n, seed);
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    DensityMatrix::from_matrix(rho / tr)
}

pub fn params(statistics: Statistics, n: usize, m: usize, n_c: usize, n_ph: usize) -> SystemParams {
    SystemParams { n, statistics, n_c: Some(n_c), n_ph: Some(n_ph), m, eta: 0.5, delta_c: -1.75, u0: 0.0, kappa: 1.0 }
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
