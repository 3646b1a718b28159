//! Finite-dimensional subproblems: weight optimisation and global
//! minimisation of certificate functions.

pub mod bnb;
pub mod radon;
pub mod weights;

pub use bnb::{bnb_minimize, BnbResult, BnbTask, BoxObjective, Mode};
pub use radon::{prox_l1sq_l1_pos, solve_weights_radon, RadonSolution, WeightProblemRadon};
pub use weights::{solve_weights_d, WeightProblemD, WeightSolution};
