//! Finite-dimensional cavity-QED model of hydrogen molecule formation and
//! ionization.
//!
//! Two hydrogen atoms sit in optical cavities. Four photon modes drive the
//! electron orbital transitions (one excitation mode and one ionization mode
//! per electron spin), a phonon mode absorbs the covalent-bond energy, and
//! two flags track whether the bond is formed and whether the nuclei share a
//! cavity. The crate builds the truncated composite basis, assembles the
//! rotating-wave Hamiltonian and the jump operators, and integrates the
//! Lindblad master equation with a split-step scheme: an exact step unitary
//! (built once per Hamiltonian and step size by repeated squaring) followed
//! by a first-order Euler application of the dissipator.

extern crate blas_src;

pub mod config;
pub mod hilbert;
pub mod lindblad;
pub mod model;
pub mod operators;
pub mod output;
pub mod propagator;
pub mod scenario;
pub mod sectors;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("seed set is empty; a reachable restriction needs at least one state")]
    EmptySeed,
    #[error("index {0} is out of range for dimension {1}")]
    IndexOutOfRange(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian: max deviation {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error(
        "operator mixes conserved-charge sectors (entry {row} <- {col}); \
         evolve it with sector grading disabled"
    )]
    SectorMixing { row: usize, col: usize },
    #[error(
        "step size too large for dissipator Euler substep: trace drifted to {trace:.12} \
         at t = {time:.6}: defect {defect:.3e} exceeds \
         {tol:.3e}; the dissipator Euler substep needs a smaller dt"
    )]
    TraceDrift {
        time: f64,
        trace: f64,
        defect: f64,
        tol: f64,
    },
    #[error("initial state {state} needs {requirement}")]
    CutoffTooSmall { state: String, requirement: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("linear algebra backend failure: {0}")]
    Lapack(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
