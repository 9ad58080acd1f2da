//! Closed-form and reduced models: hidden-mass resonators and Love waves.

mod love;
mod resonator;

pub use love::{love_dispersion_roots, love_resonance_scan, LoveProfile, LoveScan, LoveScanOptions};
pub use resonator::{build_resonator_density, effective_mass, AxisResonator, ResonatorSpec};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("evaluated at the resonance pole omega* = {omega_star}")]
    Pole { omega_star: f64 },
    #[error("solve failed: {0}")]
    Solve(String),
}
