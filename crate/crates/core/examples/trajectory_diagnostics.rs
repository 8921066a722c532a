//! Computes norm surrogates, the blow-up functional and Hölder seminorms of
//! a solved trajectory.

use std::f64::consts::PI;

use mixflow::changevar::{BasisChoice, BasisPair, ChangeOfVariables};
use mixflow::diagnostics::{
    blowup_functional, holder_seminorm, v_norm_surrogate, velocity_exponent,
};
use mixflow::discretization::{Bc, Field, Grid1D, State};
use mixflow::mobility::{OnsagerSpec, ReactionSpec};
use mixflow::solver::{solve, ForcingSpec, Mixture, Problem, SolverConfig, Viscosity};
use mixflow::thermo::{FreeEnergyModel, SpeciesSystem};
use nalgebra::DMatrix;

fn main() -> mixflow::Result<()> {
    let model = FreeEnergyModel::ideal_gas(SpeciesSystem::unit(2)?, 1.0)?;
    let cv = ChangeOfVariables::new(
        model,
        BasisPair::new(2, &BasisChoice::LastSpeciesDifferences)?,
    )?;
    let mixture = Mixture::new(
        cv,
        OnsagerSpec::constant(DMatrix::identity(2, 2))?,
        ReactionSpec::None,
        Viscosity {
            bulk: 0.0,
            shear: 0.5,
        },
    )?;
    let grid = Grid1D::new(1.0, 32)?;
    let state0 = State::new(
        Field::from_fn(&grid, 1, Bc::NeumannZero, |x| vec![0.1 * (PI * x).cos()])?,
        Field::from_fn(&grid, 1, Bc::None, |x| vec![1.0 + 0.1 * (PI * x).cos()])?,
        Field::from_fn(&grid, 1, Bc::DirichletZero, |x| vec![0.05 * (PI * x).sin()])?,
    )?;
    let config = SolverConfig::new(1e-3, 0.05);
    let forcing = ForcingSpec::None;
    let problem = Problem {
        mixture: &mixture,
        grid,
        forcing: &forcing,
        config: &config,
    };
    let traj = solve(&problem, &state0)?.trajectory;
    let p = 4.0;
    let vq = v_norm_surrogate(&traj.q, &grid, traj.dt, p)?;
    let nt = blowup_functional(&traj, 0.5, p)?;
    println!("velocity exponent z({p}) = {:.3}", velocity_exponent(p)?);
    for k in (0..traj.levels()).step_by(10) {
        println!(
            "t = {:.3}: V(q) = {:.5}, N = {:.5}",
            traj.time(k),
            vq.total[k],
            nt[k]
        );
    }
    let h = holder_seminorm(&traj.varrho, &grid, traj.dt, 0.5, 0.25)?;
    println!("Hölder seminorm of varrho (alpha 0.5, beta 0.25) = {h:.5}");
    Ok(())
}
