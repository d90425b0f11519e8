//! Quantum multiple access channels: states, channels, entropies, distance
//! measures, and numerical evaluation of single-letter capacity regions.
//!
//! All logarithms are base 2. Tensor factors are laid out row-major with the
//! leftmost factor varying slowest.

pub mod capacity;
pub mod channels;
pub mod error;
pub mod fuzz;
pub mod info;
pub mod io;
pub mod metrics;
pub mod optimize;
pub mod random;
pub mod region;
pub mod states;
pub mod tensor;
pub mod zoo;

pub use error::{Error, Result};
pub use states::{
    basis_povm, cq_assemble, max_entangled, max_mixed, measure_povm, purify, schmidt, CQState,
    DensityMatrix, Ensemble, Outcome, PureState, Schmidt,
};
pub use tensor::{
    c64, herm_eig, kron, mat_fn, partial_trace, permute_systems, trace_norm, CMatrix, HermEig,
    MatFn, SystemShape, C64,
};
