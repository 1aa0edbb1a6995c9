//! Steepest-entropy-ascent (SEAQT) and Lindblad dynamics of perturbed
//! two-qubit Bell-diagonal states.
//!
//! The crate is organised bottom-up: [`qmat`] holds the 2x2/4x4 complex
//! kernel, [`states`] and [`measures`] the physics vocabulary, [`dynamics`]
//! the shared RK4 driver, and [`seaqt`] / [`lindblad`] the two equations of
//! motion. [`perturbation`] builds the initial-state ensembles.

pub mod dynamics;
pub mod error;
pub mod lindblad;
pub mod measures;
pub mod perturbation;
pub mod qmat;
pub mod seaqt;
pub mod states;

pub use dynamics::{EvolutionTrace, IntegrationSettings, Termination};
pub use error::{Error, Result};
pub use measures::{MeasureSet, RelativeEntropy};
pub use qmat::{CMatrix, Subsystem, C64, KERNEL_THRESHOLD};
pub use states::{CConfig, CompositeHamiltonian, DensityMatrix};
