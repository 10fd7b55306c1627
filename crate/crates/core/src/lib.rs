//! Circuit-level design and verification toolkit for PCB-embedded multiplexed
//! readout filters: nodal AC analysis, complex eigenmode extraction, filter
//! and unit-cell synthesis, radiative-decay budgeting, and reflection-trace
//! fitting.
//!
//! All numerics are generic over the real scalar type (see [`scalar::Scalar`]);
//! the aliases at the crate root pin `f64`, which is what the CLI uses.

pub mod analysis;
pub mod eigen;
pub mod error;
pub mod io;
pub mod netlist;
pub mod network;
pub mod fit;
pub mod lm;
pub mod purcell;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::{hz_from_omega, omega_from_hz, Scalar, C0};

/// `f64` aliases for the core types.
pub type Netlist = netlist::Netlist<f64>;
pub type NetlistBuilder = netlist::NetlistBuilder<f64>;
pub type FrequencyGrid = netlist::FrequencyGrid<f64>;
pub type Element = netlist::Element<f64>;
pub type Port = netlist::Port<f64>;
pub type ElementKind = netlist::ElementKind<f64>;
pub type QCurve = analysis::QCurve<f64>;
pub type PassbandMetrics = analysis::PassbandMetrics<f64>;
pub type Mode = eigen::Mode<f64>;
pub type SweepTrace = eigen::SweepTrace<f64>;
pub type ReflectionTrace = fit::ReflectionTrace<f64>;
pub type ResonatorFit = fit::ResonatorFit<f64>;
pub type NetlistDocument = io::NetlistDocument<f64>;
pub type FilterParams = synth::FilterParams<f64>;
pub type UnitCellSpec = synth::UnitCellSpec<f64>;
pub type TilingMap = synth::TilingMap<f64>;
