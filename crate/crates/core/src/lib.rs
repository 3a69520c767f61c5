//! Precision limits for adaptive noise estimation and channel discrimination
//! on teleportation-covariant channels.
//!
//! The crate computes ultimate metrology and hypothesis-testing bounds from
//! channel Choi matrices, and verifies on small discrete systems that
//! teleportation simulation and protocol stretching hold operation by
//! operation:
//!
//! - [`linalg`]: dense Hermitian linear algebra and state functionals
//!   (fidelity, trace distance, relative entropy, fractional powers);
//! - [`channels`]: Pauli/depolarizing/dephasing/erasure channels, Choi
//!   matrices and the teleportation-covariance check;
//! - [`gaussian`]: two-mode covariance-matrix calculus, finite-energy Choi
//!   approximations and a Fock-truncation oracle;
//! - [`metrology`]: Choi-based quantum Fisher information, closed forms and
//!   the multiparameter QFI matrix;
//! - [`discrimination`]: Helstrom error probabilities, Chernoff bounds and
//!   the single-letter bound chain;
//! - [`stretching`]: executable adaptive protocols, teleportation simulation
//!   and the protocol-collapse identity, plus a randomized no-go fuzzer.

pub mod channels;
pub mod discrimination;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod metrology;
pub mod opt;
pub mod sample;
pub mod specs;
pub mod stretching;

pub use channels::{ChannelLabel, ChoiMatrix, PauliDistribution, QuantumChannel};
pub use error::{Error, Result};
pub use gaussian::{FockTruncation, GaussianChannelParams, GaussianState, SqueezingParameter};
pub use linalg::{CMatrix, CVector, DensityMatrix};
