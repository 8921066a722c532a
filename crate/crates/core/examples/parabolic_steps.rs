//! Implicit Euler steps of the coupled diffusion block and the momentum
//! equation, each from a frozen-coefficient state.

use std::f64::consts::PI;

use mixflow::discretization::{Bc, Field, Grid1D};
use mixflow::solver::{step_q_parabolic, step_v_parabolic};
use nalgebra::DMatrix;

fn main() -> mixflow::Result<()> {
    let grid = Grid1D::new(1.0, 64)?;
    let n = grid.len();
    let rq = vec![DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]); n];
    let mt = vec![DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]); n];
    let mut q = Field::from_fn(&grid, 2, Bc::NeumannZero, |x| {
        vec![(PI * x).cos(), 0.5 * (2.0 * PI * x).cos()]
    })?;
    let zero_g = Field::zeros(n, 2, Bc::NeumannZero);
    let dt = 1e-3;
    for _ in 0..100 {
        q = step_q_parabolic(&rq, &mt, &zero_g, &q, &grid, dt)?;
    }
    println!(
        "q after 100 steps: max |q_1| = {:.5}, max |q_2| = {:.5}",
        q.component(0).max_abs(),
        q.component(1).max_abs()
    );
    println!("integral of q (conserved) = {:?}", q.integral(&grid));

    let rho = Field::constant(n, &[1.0], Bc::None);
    let f = Field::constant(n, &[1.0], Bc::DirichletZero);
    let mut v = Field::zeros(n, 1, Bc::DirichletZero);
    for _ in 0..2000 {
        v = step_v_parabolic(&rho, &f, &v, &grid, dt, 1.0)?;
    }
    // steady state of -v'' = 1 with v(0) = v(1) = 0 peaks at 1/8
    println!("v near steady state: max v = {:.5}", v.max());
    Ok(())
}
