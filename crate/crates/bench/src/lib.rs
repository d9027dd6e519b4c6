//! Shared fixtures for the criterion benchmarks.

use twonn::generators::{generate, Generated, GeneratorKind, GeneratorSpec};

/// Uniform hypercube points without periodic boundaries.
pub fn cube(d: u32, n: usize) -> Generated {
    generate(&GeneratorSpec::new(GeneratorKind::Hypercube, d, n, 11)).expect("valid spec")
}

/// Gaussian points in `d` dimensions.
pub fn gaussian(d: u32, n: usize) -> Generated {
    generate(&GeneratorSpec::new(GeneratorKind::Gaussian, d, n, 11)).expect("valid spec")
}
