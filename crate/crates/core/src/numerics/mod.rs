//! Dense linear algebra, the seeded RNG, and a finite-difference gradient checker.

mod gradcheck;
mod matrix;
mod rng;

pub use gradcheck::{finite_diff_grad, relative_error};
pub use matrix::{matvec, matvec_t, Matrix, Vector};
pub use rng::SeededRng;
