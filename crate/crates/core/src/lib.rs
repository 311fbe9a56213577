//! Slow light in a waveguide-QED qubit metamaterial.
//!
//! The crate models a chain of three-level transmon qubits side-coupled to a
//! coplanar waveguide and probed by a weak microwave tone while a second tone
//! dresses the 1→2 transition. It covers
//!
//! * single-qubit dressed scattering and control-power calibration ([`qubit`], [`calibration`]),
//! * transfer-matrix chain spectra and background normalization ([`tmatrix`], [`background`]),
//! * infinite-lattice Bloch bands and delay asymptotes ([`bands`]),
//! * phase-gradient delays, transparency windows and EIT/ATS model selection ([`analysis`], [`aic`]),
//! * time-domain Gaussian pulses through an emulated heterodyne receiver ([`pulse`], [`dsp`]),
//! * config-driven experiment drivers ([`experiments`]).
//!
//! All rates and frequencies are angular (rad/s) internally. Conversion from the
//! cyclic MHz/GHz values used in configuration files happens at the boundary, see [`units`].

pub mod aic;
pub mod analysis;
pub mod background;
pub mod bands;
pub mod calibration;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod pulse;
pub mod qubit;
pub mod spectrum;
pub mod tmatrix;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use qubit::{ControlDrive, FrequencyGrid, TransmonQubit};
pub use spectrum::ComplexSpectrum;
pub use tmatrix::{ChainLayout, PropagationMedium, TransferMatrix};
