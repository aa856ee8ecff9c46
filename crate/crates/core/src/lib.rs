//! Discrete-event test bed for optical access networks.
//!
//! Three access architectures (point-to-point Ethernet, a TDM PON and a hybrid
//! WDM/TDM PON with a tunable transceiver pool) are driven by web and video
//! traffic. Runs produce quality-of-experience samples, which feed the
//! equivalent circuit rate comparison, and busy intervals, which feed power
//! accounting.

pub mod arch;
pub mod energy;
pub mod sim;
pub mod qoe;
pub mod traffic;
pub mod stats;
pub mod simulation;
pub mod ecr;
