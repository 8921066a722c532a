mod common;

use std::f64::consts::PI;

use common::{cell_averages, characteristics_density, observed_orders, rng};
use mixflow::discretization::{d1, d2, solve_tridiagonal, Bc, BlockTridiagonal, Field, Grid1D};
use mixflow::solver::{cfl_substeps, upwind_step, CFL_LIMIT};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn velocity(grid: &Grid1D, a: f64, b: f64) -> Field {
    Field::from_fn(grid, 1, Bc::DirichletZero, |x| {
        vec![a * (PI * x).sin() + b * (2.0 * PI * x).sin()]
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn upwind_conserves_mass_and_positivity(
        n in 8usize..80,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        dt in 1e-4f64..5e-2,
        seed in any::<u64>(),
    ) {
        let grid = Grid1D::new(1.0, n).unwrap();
        let mut r = rng(seed);
        let rho = Field::scalar((0..n).map(|_| r.gen_range(0.1..2.0)).collect(), Bc::None).unwrap();
        let next = upwind_step(&rho, &velocity(&grid, a, b), &grid, dt, 100_000).unwrap();
        let m0 = rho.integral(&grid)[0];
        prop_assert!((next.integral(&grid)[0] - m0).abs() < 1e-13 * m0.max(1.0));
        prop_assert!(next.min() > 0.0);
    }

    #[test]
    fn block_thomas_solves_dominant_systems(n in 2usize..40, b in 1usize..4, seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut sys = BlockTridiagonal::zeros(n, b);
        for j in 0..n {
            let off = DMatrix::from_fn(b, b, |_, _| r.gen_range(-1.0..1.0));
            sys.diag[j] = DMatrix::identity(b, b) * (4.0 * b as f64) + DMatrix::from_fn(b, b, |_, _| r.gen_range(-0.5..0.5));
            if j + 1 < n {
                sys.upper[j] = off.clone();
                sys.lower[j + 1] = off.transpose();
            }
        }
        let rhs: Vec<DVector<f64>> = (0..n).map(|_| DVector::from_fn(b, |_, _| r.gen_range(-1.0..1.0))).collect();
        let x = sys.solve(&rhs).unwrap();
        prop_assert!(sys.relative_residual(&x, &rhs) < 1e-12);
    }

    #[test]
    fn scalar_thomas_matches_block_solver(n in 2usize..40, seed in any::<u64>()) {
        let mut r = rng(seed);
        let lower: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n).map(|_| r.gen_range(3.0..5.0)).collect();
        let rhs: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        let oracle = common::thomas(&lower, &diag, &upper, &rhs);
        for j in 0..n {
            prop_assert!((x[j] - oracle[j]).abs() < 1e-13);
        }
    }
}

#[test]
fn substeps_respect_the_cfl_limit() {
    let grid = Grid1D::new(1.0, 20).unwrap();
    let v = velocity(&grid, 10.0, 0.0);
    let dt = 0.1;
    let m = cfl_substeps(&v, &grid, dt);
    let sub = dt / m as f64;
    let worst = (0..20)
        .map(|j| {
            let right = if j + 1 < 20 {
                0.5 * (v.get(j, 0) + v.get(j + 1, 0)).max(0.0)
            } else {
                0.0
            };
            let left = if j > 0 {
                (-0.5 * (v.get(j - 1, 0) + v.get(j, 0))).max(0.0)
            } else {
                0.0
            };
            (right + left) * sub / grid.dx()
        })
        .fold(0.0, f64::max);
    assert!(worst <= CFL_LIMIT + 1e-12, "{worst}");
    assert!(upwind_step(&Field::constant(20, &[1.0], Bc::None), &v, &grid, dt, 2).is_err());
}

#[test]
fn derivative_stencils_are_second_order() {
    let mut e1 = Vec::new();
    let mut e2 = Vec::new();
    for n in [20, 40, 80] {
        let grid = Grid1D::new(2.0, n).unwrap();
        let k = PI / 2.0;
        let f = Field::from_fn(&grid, 1, Bc::NeumannZero, |x| vec![(k * x).cos()]).unwrap();
        let fx = d1(&f, &grid).unwrap();
        let fxx = d2(&f, &grid).unwrap();
        let ex = Field::from_fn(&grid, 1, Bc::DirichletZero, |x| vec![-k * (k * x).sin()]).unwrap();
        let exx =
            Field::from_fn(&grid, 1, Bc::NeumannZero, |x| vec![-k * k * (k * x).cos()]).unwrap();
        e1.push(fx.sub(&ex).max_abs());
        e2.push(fxx.sub(&exx).max_abs());
        assert_eq!(fx.bc(), Bc::DirichletZero);
    }
    for p in observed_orders(&e1, 2.0) {
        assert!(p > 1.8, "d1 order {p}");
    }
    // the reflected ghost makes the boundary row of d2 first order in sup norm
    for p in observed_orders(&e2, 2.0) {
        assert!(p > 0.9, "d2 order {p}");
    }
}

#[test]
fn characteristics_oracle_is_consistent() {
    // the exact density keeps its mass
    let grid = Grid1D::new(1.0, 400).unwrap();
    let rho0 = |x: f64| 1.0 + x;
    let m0: f64 = cell_averages(&grid, rho0).iter().sum::<f64>() * grid.dx();
    let m1: f64 = cell_averages(&grid, |x| characteristics_density(rho0, 0.7, 0.5, x))
        .iter()
        .sum::<f64>()
        * grid.dx();
    assert!((m0 - m1).abs() < 1e-6, "{m0} vs {m1}");
}
