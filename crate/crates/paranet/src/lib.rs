//! Simulation and analysis of parametrically coupled resonant-mode networks.
//!
//! A set of modes linked by pump-driven conversion and amplification
//! processes forms an interferometer in frequency space. This crate builds
//! the mode-coupling matrix for an arbitrary such network, computes
//! multi-port scattering parameters and quantum-noise output spectra,
//! locates free-oscillation thresholds, solves the pump-tuning conditions
//! for canonical behaviors (converter, circulator, directional amplifier),
//! and fits model parameters to measured sweeps.
//!
//! All core math is generic over the real scalar type (`f32` or `f64`);
//! concrete `f64` aliases are exported at the crate root.

pub mod device;
pub mod fit;
pub mod frame;
pub mod linalg;
pub mod network;
pub mod noise;
pub mod scalar;
pub mod scattering;
pub mod stability;
pub mod tune;

pub use frame::{assign_frame, coupling_matrix, loop_phase, FrameAssignment};
pub use network::{
    build_network, Bath, CouplingEdge, CouplingKind, Mode, ModeNetwork, NetworkError, Port,
};
pub use scalar::Scalar;
pub use scattering::{
    closed_form_amplifier, closed_form_circulator, closed_form_conversion,
    closed_form_directional_amplifier, scattering_matrix, sweep_detuning, sweep_loop_phase,
    FullScattering, ScatteringError, ScatteringResult, SweepAxis,
};

/// Concrete `f64` aliases for the main domain types.
pub type Mode64 = Mode<f64>;
pub type Edge64 = CouplingEdge<f64>;
pub type Port64 = Port<f64>;
pub type Network64 = ModeNetwork<f64>;
pub type Frame64 = FrameAssignment<f64>;
pub type Scattering64 = ScatteringResult<f64>;

/// `f32` variants, for callers that trade precision for size.
pub type Mode32 = Mode<f32>;
pub type Edge32 = CouplingEdge<f32>;
pub type Network32 = ModeNetwork<f32>;
