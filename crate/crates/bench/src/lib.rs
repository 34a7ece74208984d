//! Fixtures shared by the criterion benches.

use fmap_core::harness::generate_instance;
use fmap_core::{MaskKind, Problem};

/// Synthetic problem with `d = 2k`, commutativity mask and `lambda = 100`.
pub fn problem(k: usize, seed: u64) -> Problem {
    generate_instance(k, 2 * k, seed)
        .problem(MaskKind::Commutativity, 100.0)
        .expect("generated instances are well formed")
}
