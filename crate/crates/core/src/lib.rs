//! Spectral solvers for time-harmonic linear physics written as
//! `J = L E - s` with `Γ₁E = E`, `Γ₁J = 0` on periodic grids.

pub mod fermionic;
pub mod linalg;
pub mod models;
pub mod physics;
pub mod projectors;
pub mod quasiperiodic;
pub mod real;
mod reduce;
pub mod solver;
pub mod tensorfield;
pub mod verify;

pub use real::{clit, Real, C};
pub use tensorfield::{Block, BlockLayout, Field, FieldError, Grid, Representation};

pub type C64 = C<f64>;
pub type Field64 = Field<f64>;
pub type Field32 = Field<f32>;
