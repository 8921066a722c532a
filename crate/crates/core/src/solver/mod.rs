//! Time-window fixed-point solvers for the reduced mixture system.

mod coefficients;
mod fixed_point;
mod forcing;
mod rhs;
mod steps;

pub use coefficients::{CoeffVariation, Coeffs, Jets, Mixture, Viscosity};
pub use fixed_point::{
    contraction_energy, fixed_point_t, fixed_point_t1, nonlinear_residual, solve, IterationTrace,
    Mode, Problem, Solution, SolverConfig, SweepRecord,
};
pub use forcing::{AnalyticForcing, ForcingField, ForcingSample, ForcingSpec};
pub use rhs::{
    eval_f, eval_f_prime, eval_g, eval_g_prime, f_from_coeffs, flux_divergence, g_from_coeffs,
    Linearization, Perturbation,
};
pub use steps::{
    cfl_substeps, solve_continuity, step_q_parabolic, step_v_parabolic, upwind_step, CFL_LIMIT,
};
