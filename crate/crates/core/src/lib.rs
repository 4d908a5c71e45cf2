//! Simulation core for secure location modulation with a near-field
//! reconfigurable intelligent surface: array geometry, field evaluation,
//! focusing, squeeze nulling, time-modulated phase sequences and a symbol-level
//! link simulator.
//!
//! Geometry, field and focusing code is generic over [`Real`] (`f32` or
//! `f64`); the nulling search, sequence library and link layers run in `f64`.

pub mod error;
pub mod field;
pub mod focusing;
pub mod geometry;
pub mod link;
pub mod nulling;
pub mod scalar;
pub mod temporal;

pub use error::{Error, Result};
pub use field::{
    compute_field, compute_field_grid, quantize_2bit, quantize_complex, ChannelVector, FieldSample,
    PhaseMatrix, PhaseState, Scenario,
};
pub use focusing::{focus_matrix, ideal_focus_phase, ideal_focus_phases, reference_field};
pub use geometry::{
    element_position, fraunhofer_distance, path_length, polar_to_cartesian, ArrayConfig,
    CartesianPoint, PolarPoint, SPEED_OF_LIGHT,
};
pub use link::{
    ber, demodulate, modulate, random_guess_ber, secrecy_capacity, simulate_rx, LinkConfig, LinkResult,
    Modulation,
};
pub use nulling::{
    focal_points, null_depth, null_matrix, snm_constraints, solve_snm, NullSpec, SnmConfig,
    SnmSolution, Zone, ZoneLayout, ZoneModel,
};
pub use scalar::Real;

pub type ArrayConfigF32 = ArrayConfig<f32>;
pub type ArrayConfigF64 = ArrayConfig<f64>;
pub type CartesianPointF32 = CartesianPoint<f32>;
pub type CartesianPointF64 = CartesianPoint<f64>;
pub type PolarPointF32 = PolarPoint<f32>;
pub type PolarPointF64 = PolarPoint<f64>;
pub type ScenarioF32 = Scenario<f32>;
pub type ScenarioF64 = Scenario<f64>;
pub type NullSpecF32 = NullSpec<f32>;
pub type NullSpecF64 = NullSpec<f64>;
