//! Operators on lattice functions: single-scale multiplier operators, the
//! Carleson maximal operator, `TT*` kernels, and numerical inequalities.

mod convolve;
mod inequalities;
mod lattice;
mod maximal;
mod tts;

pub use convolve::{apply_mj, apply_mj_adjoint, apply_sum, convolve_box, linearized_norm};
pub use inequalities::{rm_bound, sobolev_maximal_bound};
pub use lattice::{LambdaGrid, LatticeFunction};
pub use maximal::{carleson_apply, grid_error_bound, norm_ratio_stats, random_trial, CarlesonOutput, NormRatioStats};
pub use tts::{kappa, kappa_forms, kappa_forms_many, power_bound, s_xy, schur_bound, tts_kernel, KappaValue};
