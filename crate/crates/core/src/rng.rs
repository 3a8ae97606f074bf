//! Seeded randomness.
//!
//! Every stochastic routine takes an explicit `u64` seed. Sub-streams are
//! derived with [`derive_seed`] so that independent evaluations never share a
//! generator and results do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One `Binomial(n, p)` draw; `p` is clamped to `[0, 1]`.
pub fn binomial(n: u64, p: f64, rng: &mut Rng) -> u64 {
    use rand_distr::{Binomial, Distribution};
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

/// Mixes a stream index into a base seed (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A counter-based seed source: the `k`-th call returns `derive_seed(base, k)`.
#[derive(Debug, Clone)]
pub struct SeedStream {
    base: u64,
    next: u64,
}

impl SeedStream {
    pub fn new(base: u64) -> Self {
        Self { base, next: 0 }
    }

    pub fn next_seed(&mut self) -> u64 {
        let s = derive_seed(self.base, self.next);
        self.next += 1;
        s
    }
}
