//! Solves the coupled system with the direct fixed-point iteration and
//! prints the sweep-by-sweep contraction record.

use std::f64::consts::PI;

use mixflow::changevar::{BasisChoice, BasisPair, ChangeOfVariables};
use mixflow::discretization::{Bc, Field, Grid1D, State};
use mixflow::mobility::{OnsagerSpec, ReactionSpec};
use mixflow::solver::{solve, ForcingSpec, Mixture, Mode, Problem, SolverConfig, Viscosity};
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
    let grid = Grid1D::new(1.0, 64)?;
    let state0 = State::new(
        Field::from_fn(&grid, 1, Bc::NeumannZero, |x| vec![0.1 * (PI * x).cos()])?,
        Field::from_fn(&grid, 1, Bc::None, |x| vec![1.0 + 0.1 * (PI * x).cos()])?,
        Field::zeros(64, 1, Bc::DirichletZero),
    )?;
    let mut config = SolverConfig::new(1e-3, 0.1);
    config.mode = Mode::DirectT;
    let forcing = ForcingSpec::None;
    let problem = Problem {
        mixture: &mixture,
        grid,
        forcing: &forcing,
        config: &config,
    };
    let sol = solve(&problem, &state0)?;
    for s in &sol.trace.sweeps {
        println!(
            "sweep {:2}: sup diff {:.3e}, ratio {:>10}, energy {:.3e}",
            s.sweep,
            s.sup_diff,
            s.diff_ratio.map_or("-".into(), |r| format!("{r:.4}")),
            s.energy
        );
    }
    let m = sol.trajectory.masses();
    println!(
        "converged: {}, residual {:.2e}",
        sol.trace.converged, sol.trace.residual
    );
    println!("mass drift {:.2e}", (m[m.len() - 1] - m[0]).abs());
    Ok(())
}
