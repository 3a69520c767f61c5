//! Shared setup for the benchmark targets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use telecov::sample;
use telecov::stretching::{AdaptiveProtocol, ProtocolRound};
use telecov::DensityMatrix;

pub fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(1234)
}

pub fn random_state_pair(d: usize) -> (DensityMatrix, DensityMatrix) {
    let mut rng = rng();
    (
        sample::random_density(d, d, &mut rng),
        sample::random_density(d, d, &mut rng),
    )
}

pub fn random_two_round_protocol() -> AdaptiveProtocol {
    let mut rng = rng();
    let initial = sample::random_cptp_kraus(8, 2, &mut rng);
    let rounds = (0..2)
        .map(|i| ProtocolRound {
            probe_slot: i,
            op: sample::random_cptp_kraus(8, 2, &mut rng),
        })
        .collect();
    AdaptiveProtocol::new(vec![2, 2, 2], initial, rounds).unwrap()
}
