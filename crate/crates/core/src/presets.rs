//! Named states used throughout the tests, the acceptance suite and the CLI.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::wavefield::SuperpositionSpec;

/// `Ψ₃,₃ + Ψ₃,₄ + (√2/2) Ψ₄,₅` with `ω₁ = 1, ω₂ = √2/2`: fixed and moving nodes.
pub fn typical() -> SuperpositionSpec {
    SuperpositionSpec::from_real(&[(3, 3), (3, 4), (4, 5)], &[1.0, 1.0, FRAC_1_SQRT_2], 1.0, FRAC_1_SQRT_2)
        .expect("valid preset")
}

/// `Ψ₀,₀ + Ψ₁,₀ + (√2/2) Ψ₁,₁` with `ω₁ = ω₂ = 1`: a single moving node.
pub fn single_node() -> SuperpositionSpec {
    SuperpositionSpec::from_real(&[(0, 0), (1, 0), (1, 1)], &[1.0, 1.0, FRAC_1_SQRT_2], 1.0, 1.0)
        .expect("valid preset")
}

/// `Ψ₀,₀ + Ψ₁,₀ + Ψ₁,₁` with `ω₁ = ω₂ = 1`: periodic flow whose node runs on `x y = ½`.
pub fn equal_weight() -> SuperpositionSpec {
    SuperpositionSpec::from_real(&[(0, 0), (1, 0), (1, 1)], &[1.0, 1.0, 1.0], 1.0, 1.0).expect("valid preset")
}

/// Looks a preset up by name.
pub fn by_name(name: &str) -> Option<SuperpositionSpec> {
    match name {
        "typical" => Some(typical()),
        "single_node" => Some(single_node()),
        "equal_weight" => Some(equal_weight()),
        _ => None,
    }
}
