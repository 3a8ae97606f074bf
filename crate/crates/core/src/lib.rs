//! Statevector toolkit for variational eigensolvers and overlap-based
//! transition amplitudes.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is pure
//! numerics: Pauli algebra, a dense statevector simulator, the RSP and
//! TwoLocal ansätze, classical optimizers, the VQE/SSVQE/MCVQE/VQD drivers,
//! transition-amplitude estimators, readout mitigation and an exact dense
//! reference used to check all of the above. File formats and the command
//! line live in the `qtrans` crate.
//!
//! # Qubit ordering
//!
//! Pauli strings are written with qubit 0 as the **leftmost** character, and
//! qubit 0 is the **most significant** bit of a basis-state index. On three
//! qubits `"XIZ"` is `X` on qubit 0 and `Z` on qubit 2, and basis index
//! `0b100 = 4` is `|100⟩`, i.e. qubit 0 set. Dense matrices are built as
//! `P_0 ⊗ P_1 ⊗ … ⊗ P_{n-1}` with the same convention.

#![no_std]
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments
)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub(crate) mod math;
pub mod rng;

pub mod ansatz;
pub mod eigensolvers;
pub mod fermion;
pub mod mitigation;
pub mod optim;
pub mod oracle;
pub mod pauli;
pub mod statevector;
pub mod transition;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use ansatz::{Ansatz, AnsatzFamily};
pub use mitigation::{ConfusionMatrix, ReadoutChannel};
pub use pauli::{Observable, Pauli, PauliString, Phase};
pub use statevector::{Circuit, Gate, PreparedState, StateVector};
