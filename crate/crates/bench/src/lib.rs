//! Shared inputs for the benchmarks.

use migtriad::synthgen::{generate, SynthConfig};
use migtriad::MigrantRecord;

/// Uniform corpus over `countries` countries, fixed seed.
pub fn corpus(countries: usize, users: usize) -> Vec<MigrantRecord> {
    generate(&SynthConfig::uniform(countries, users, 0xbe_c4)).expect("valid config")
}
