//! Seeded inputs shared by the benchmarks.

use nalgebra::DMatrix;
use phipp::datasets::SimulationDesign;
use phipp::densities::Whitening;
use phipp::{PhiSpec, PursuitConfig, PursuitState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` rows of the first simulation design.
pub fn sim1(n: usize, seed: u64) -> DMatrix<f64> {
    SimulationDesign::SIM1.sample(n, &mut rng(seed)).expect("valid design")
}

/// Initial pursuit state on whitened Sim-1 data.
pub fn sim1_state(n: usize, spec: PhiSpec, seed: u64) -> PursuitState {
    let (_, white) = Whitening::full(&sim1(n, seed)).expect("full-rank sample");
    PursuitState::new(&white, spec, PursuitConfig::default(), &mut rng(seed + 1)).expect("state builds")
}
