//! Runs the perturbation formulation around an equilibrium and compares the
//! result with the direct iteration.

use std::f64::consts::PI;

use mixflow::changevar::{BasisChoice, BasisPair, ChangeOfVariables};
use mixflow::discretization::{Bc, Field, Grid1D, State};
use mixflow::mobility::{OnsagerSpec, ReactionSpec};
use mixflow::solver::{
    fixed_point_t, fixed_point_t1, ForcingSpec, Mixture, Problem, SolverConfig, Viscosity,
};
use mixflow::thermo::{FreeEnergyModel, SpeciesSystem};
use nalgebra::DMatrix;

fn main() -> mixflow::Result<()> {
    let model = FreeEnergyModel::ideal_gas(SpeciesSystem::new(vec![1.0, 2.0], 1.0)?, 1.0)?;
    let cv = ChangeOfVariables::new(
        model,
        BasisPair::new(2, &BasisChoice::LastSpeciesDifferences)?,
    )?;
    let mixture = Mixture::new(
        cv,
        OnsagerSpec::constant(DMatrix::identity(2, 2))?,
        ReactionSpec::None,
        Viscosity {
            bulk: 0.2,
            shear: 0.4,
        },
    )?;
    let grid = Grid1D::new(1.0, 32)?;
    let n = grid.len();
    let equilibrium = State::new(
        Field::constant(n, &[0.0], Bc::NeumannZero),
        Field::constant(n, &[1.0], Bc::None),
        Field::zeros(n, 1, Bc::DirichletZero),
    )?;
    let state0 = State::new(
        Field::from_fn(&grid, 1, Bc::NeumannZero, |x| vec![0.05 * (PI * x).cos()])?,
        Field::from_fn(&grid, 1, Bc::None, |x| {
            vec![1.0 + 0.05 * (2.0 * PI * x).cos()]
        })?,
        Field::from_fn(&grid, 1, Bc::DirichletZero, |x| vec![0.02 * (PI * x).sin()])?,
    )?;
    let config = SolverConfig::new(1e-3, 0.05);
    let forcing = ForcingSpec::None;
    let problem = Problem {
        mixture: &mixture,
        grid,
        forcing: &forcing,
        config: &config,
    };
    let t1 = fixed_point_t1(&problem, &equilibrium, &state0)?;
    let t = fixed_point_t(&problem, &state0)?;
    println!(
        "perturbation sweeps: {}, direct sweeps: {}",
        t1.trace.sweeps.len(),
        t.trace.sweeps.len()
    );
    let a = t1.trajectory.last();
    let b = t.trajectory.last();
    println!(
        "final-state difference: q {:.2e}, varrho {:.2e}, v {:.2e}",
        a.q.sub(&b.q).max_abs(),
        a.varrho.sub(&b.varrho).max_abs(),
        a.v.sub(&b.v).max_abs()
    );
    Ok(())
}
