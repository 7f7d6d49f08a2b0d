//! Counter-based random streams keyed by (run seed, iteration, step).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives independent ChaCha8 streams from one 64-bit run seed, so that
/// the draws of iteration `j` do not depend on how many iterations follow it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamSeed(pub u64);

impl StreamSeed {
    pub fn stream(self, iteration: u32, step: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream((u64::from(iteration) << 32) | u64::from(step));
        rng
    }
}
