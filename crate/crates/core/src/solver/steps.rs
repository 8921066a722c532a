//! The three linear sub-problems of one time step: transport of `ϱ`, the
//! parabolic system for `q` and the momentum equation for `v`.

use nalgebra::DMatrix;

use crate::discretization::{solve_tridiagonal, Bc, BlockTridiagonal, Field, Grid1D};
use crate::error::{Error, Result};

/// Largest admissible `dt · (outflow rate)` per upwind sub-step.
pub const CFL_LIMIT: f64 = 0.9;

fn face_velocity(v: &Field, j: usize) -> f64 {
    0.5 * (v.get(j, 0) + v.get(j + 1, 0))
}

/// Number of upwind sub-steps needed to advance by `dt` with velocity `v`.
pub fn cfl_substeps(v: &Field, grid: &Grid1D, dt: f64) -> usize {
    let n = v.len();
    let mut rate = 0.0_f64;
    for j in 0..n {
        let right = if j + 1 < n {
            face_velocity(v, j).max(0.0)
        } else {
            0.0
        };
        let left = if j > 0 {
            (-face_velocity(v, j - 1)).max(0.0)
        } else {
            0.0
        };
        rate = rate.max((right + left) / grid.dx());
    }
    ((dt * rate / CFL_LIMIT).ceil() as usize).max(1)
}

/// One conservative first-order upwind step of `∂_t ϱ + (ϱ v)_x = 0` with
/// face velocities `½(v_j + v_{j+1})` and no flux through the boundary,
/// sub-stepped so that every sub-step keeps `ϱ` positive.
pub fn upwind_step(
    rho: &Field,
    v: &Field,
    grid: &Grid1D,
    dt: f64,
    max_substeps: usize,
) -> Result<Field> {
    let n = rho.len();
    if v.len() != n {
        return Err(Error::Shape("velocity and density differ in length".into()));
    }
    let steps = cfl_substeps(v, grid, dt);
    if steps > max_substeps {
        return Err(Error::StepSize {
            needed: steps,
            cap: max_substeps,
        });
    }
    let h = dt / steps as f64 / grid.dx();
    let faces: Vec<f64> = (0..n - 1).map(|j| face_velocity(v, j)).collect();
    let mut cur = rho.data().to_vec();
    let mut flux = vec![0.0; n - 1];
    for _ in 0..steps {
        for (j, (fl, vf)) in flux.iter_mut().zip(&faces).enumerate() {
            *fl = if *vf > 0.0 {
                vf * cur[j]
            } else {
                vf * cur[j + 1]
            };
        }
        for (j, fl) in flux.iter().enumerate() {
            cur[j] -= h * fl;
            cur[j + 1] += h * fl;
        }
    }
    Field::scalar(cur, Bc::None)
}

/// `ϱ(t_k)` for `k = 0, …, K` where step `k → k+1` is driven by `v[k]`.
pub fn solve_continuity(
    rho0: &Field,
    velocities: &[Field],
    grid: &Grid1D,
    dt: f64,
    max_substeps: usize,
) -> Result<Vec<Field>> {
    let mut out = Vec::with_capacity(velocities.len() + 1);
    out.push(rho0.clone().with_bc(Bc::None));
    for v in velocities {
        let next = upwind_step(out.last().expect("non-empty"), v, grid, dt, max_substeps)?;
        out.push(next);
    }
    Ok(out)
}

/// One implicit Euler step of `R_q ∂_t q − (M̃ q_x)_x = g` with zero-flux
/// boundaries: `R_q (q − q_prev) − dt div(M̃ ∇q) = dt g`.
pub fn step_q_parabolic(
    rq: &[DMatrix<f64>],
    mt: &[DMatrix<f64>],
    g: &Field,
    q_prev: &Field,
    grid: &Grid1D,
    dt: f64,
) -> Result<Field> {
    let n = q_prev.len();
    let b = q_prev.comps();
    if rq.len() != n || mt.len() != n || g.len() != n || g.comps() != b {
        return Err(Error::Shape("q-step inputs differ in size".into()));
    }
    let c = dt / (grid.dx() * grid.dx());
    let mut sys = BlockTridiagonal::zeros(n, b);
    let mut rhs = Vec::with_capacity(n);
    sys.diag.clone_from_slice(rq);
    for j in 0..n {
        if j + 1 < n {
            let face = (&mt[j] + &mt[j + 1]) * (0.5 * c);
            sys.diag[j] += &face;
            sys.upper[j] = -&face;
            sys.diag[j + 1] += &face;
            sys.lower[j + 1] = -face;
        }
        rhs.push(&rq[j] * q_prev.cell_vec(j) + g.cell_vec(j) * dt);
    }
    let x = sys.solve(&rhs)?;
    Field::from_cells(&x, Bc::NeumannZero)
}

/// One implicit Euler step of `ϱ ∂_t v − μ v_xx = f` with `v = 0` on the
/// boundary.
pub fn step_v_parabolic(
    rho: &Field,
    f: &Field,
    v_prev: &Field,
    grid: &Grid1D,
    dt: f64,
    viscosity: f64,
) -> Result<Field> {
    let n = v_prev.len();
    if rho.len() != n || f.len() != n {
        return Err(Error::Shape("v-step inputs differ in size".into()));
    }
    if let Some(j) = (0..n).find(|&j| !(rho.get(j, 0) > 0.0)) {
        return Err(Error::Domain {
            index: j,
            value: rho.get(j, 0),
        });
    }
    let c = dt * viscosity / (grid.dx() * grid.dx());
    let lower = vec![-c; n];
    let upper = vec![-c; n];
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for j in 0..n {
        let ghosts = usize::from(j == 0) + usize::from(j + 1 == n);
        diag[j] = rho.get(j, 0) + c * (2.0 + ghosts as f64);
        rhs[j] = rho.get(j, 0) * v_prev.get(j, 0) + dt * f.get(j, 0);
    }
    let x = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    Field::scalar(x, Bc::DirichletZero)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resting_fluid_is_not_transported() {
        let grid = Grid1D::new(1.0, 10).unwrap();
        let rho = Field::scalar((0..10).map(|j| 1.0 + j as f64).collect(), Bc::None).unwrap();
        let v = Field::zeros(10, 1, Bc::DirichletZero);
        assert_eq!(cfl_substeps(&v, &grid, 1.0), 1);
        assert_eq!(
            upwind_step(&rho, &v, &grid, 1.0, 1).unwrap().data(),
            rho.data()
        );
    }

    #[test]
    fn continuity_returns_every_level() {
        let grid = Grid1D::new(1.0, 10).unwrap();
        let rho = Field::constant(10, &[1.0], Bc::None);
        let v = Field::from_fn(&grid, 1, Bc::DirichletZero, |x| vec![x * (1.0 - x)]).unwrap();
        let out = solve_continuity(&rho, &[v.clone(), v], &grid, 0.01, 100).unwrap();
        assert_eq!(out.len(), 3);
        assert!((out[2].integral(&grid)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn step_cap_is_enforced() {
        let grid = Grid1D::new(1.0, 10).unwrap();
        let v =
            Field::from_fn(&grid, 1, Bc::DirichletZero, |x| vec![100.0 * x * (1.0 - x)]).unwrap();
        let err =
            upwind_step(&Field::constant(10, &[1.0], Bc::None), &v, &grid, 1.0, 3).unwrap_err();
        assert!(matches!(err, Error::StepSize { cap: 3, .. }));
    }

    #[test]
    fn v_step_reaches_poiseuille_profile() {
        let grid = Grid1D::new(1.0, 40).unwrap();
        let rho = Field::constant(40, &[2.0], Bc::None);
        let f = Field::constant(40, &[1.0], Bc::DirichletZero);
        let mut v = Field::zeros(40, 1, Bc::DirichletZero);
        for _ in 0..200 {
            v = step_v_parabolic(&rho, &f, &v, &grid, 1.0, 0.5).unwrap();
        }
        for j in 0..40 {
            let x = grid.x(j);
            assert!((v.get(j, 0) - x * (1.0 - x)).abs() < grid.dx() * grid.dx());
        }
    }

    #[test]
    fn q_step_keeps_constants() {
        let grid = Grid1D::new(1.0, 6).unwrap();
        let q = Field::constant(6, &[0.3, -0.2], Bc::NeumannZero);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.0]);
        let g = Field::zeros(6, 2, Bc::NeumannZero);
        let out = step_q_parabolic(&vec![m.clone(); 6], &vec![m; 6], &g, &q, &grid, 0.1).unwrap();
        assert!(out.sub(&q).max_abs() < 1e-15);
    }
}
