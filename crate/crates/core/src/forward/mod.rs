//! Exterior scattering of plane waves: a Nyström boundary-integral solver for
//! smooth closed curves and analytic series for discs and balls.
//!
//! Far fields follow `u^s(x) = e^{ik|x|}/|x|^{(m−1)/2} (u∞(x̂) + O(1/|x|))`.

mod nystrom;
mod series;

pub use nystrom::{
    scattered_normal_trace, solve_2d, FarFieldEvaluator, NystromSolver, ScatteringProblem,
};
pub use series::{ball_series, disc_series, disc_series_with, disc_normal_trace};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    /// `∂u/∂ν = 0`.
    SoundHard,
    /// `u = 0`.
    SoundSoft,
}
