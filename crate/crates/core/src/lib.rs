//! Simulation and verification toolkit for entanglement distillation over
//! generalized dephasing channels `rho -> sum_x p(x) Z^x rho Z^x`.
//!
//! The protocol engine tracks Pauli frames over GF(2) and scales to hundreds
//! of qubits; [`dense`] is an exact density-matrix oracle for checking it at
//! a handful of qubits.

pub mod capacity;
pub mod channel;
pub mod dense;
pub mod distill;
pub mod gf2;
pub mod locc;
pub mod par;
pub mod prg;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use capacity::{capacity_report, CapacityReport};
pub use channel::{DistributionSpec, GeneralizedDephasingChannel};
pub use distill::{DistillConfig, DistillProtocol, DistillReport, SyndromeBits, TrialOutcome};
pub use gf2::{BitString, Gf2Matrix, PauliString};
pub use par::Execution;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Independent stream `stream` of the generator seeded by `master`.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}
