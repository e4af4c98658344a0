//! Shared fixtures for the criterion benchmarks.

use emachine::process::{ProcessSpec, Word};

pub fn preset(name: &str) -> ProcessSpec {
    ProcessSpec::preset(name).expect("known preset")
}

/// A fixed sample used across benchmark runs.
pub fn sample(name: &str, n: usize) -> Word {
    preset(name).sample(n, 12345)
}
