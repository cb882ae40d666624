//! The benchmark problems: scalar Mathieu, matrix Hill with a Pascal
//! perturbation, and the semi-discretized trapped wave equation.

mod hill;
mod mathieu;
mod wave;

pub use hill::{pascal_matrix, HillPascalProblem};
pub use mathieu::MathieuProblem;
pub use wave::{Discretization, WaveProblem};
