//! Single-photon two-qubit states: a photon's path (`a`/`b`) and its
//! polarization (`H`/`V`) as two qubits.
//!
//! The crate prepares the four single-photon Bell states and the product
//! and superposition alphabets with linear optics, discriminates them with
//! four-port analyzers, and simulates heralded photon counting and a
//! two-basis key exchange on top of that.

pub mod circuits;
pub mod cli;
pub mod detection;
pub mod error;
pub mod optics;
pub mod qkd;
pub mod rng;
pub mod state;

pub use circuits::{
    b_basis_probs, bell_analyzer_probs, bprime_receiver_probs, prepare, settings_for, Analyzer, AnalyzerKind,
    OutcomeDistribution, PortLabel, PrepSettings,
};
pub use detection::{ChannelNoise, CountTable, DetectorModel};
pub use error::{Error, Result};
pub use optics::{compose, hwp, pbs, phase_shifter, OpticalElement};
pub use qkd::{run_qkd, QkdParams, QkdReport};
pub use state::{AlphabetLabel, BPrimeLabel, BellLabel, NamedState, PhotonState, Polarization, SpatialMode};
