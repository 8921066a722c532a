//! The fixed-point maps `𝒯` and `𝒯¹` over a whole time window, contraction
//! monitoring and the residual of the nonlinear scheme.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::coefficients::{Coeffs, Mixture};
use super::forcing::{ForcingSample, ForcingSpec};
use super::rhs::{f_from_coeffs, flux_divergence, g_from_coeffs, Linearization, Perturbation};
use super::steps::{solve_continuity, step_q_parabolic, step_v_parabolic, upwind_step};
use crate::diagnostics::{blowup_functional, v_norm_surrogate};
use crate::discretization::{d1, d2, Bc, Field, Grid1D, State, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Freeze coefficients at the previous iterate.
    DirectT,
    /// Iterate on the perturbation around the initial-data extension.
    PerturbationT1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Stop once the sup-norm difference of two sweeps is below this.
    pub fp_tol: f64,
    pub fp_max_sweeps: usize,
    /// Window length for the contraction energy.
    pub t1: f64,
    pub k0: f64,
    pub p0: f64,
    pub mode: Mode,
    /// Densities below this abort the run.
    pub rho_floor: f64,
    /// Cap on upwind sub-steps per time step.
    pub max_substeps: usize,
    /// Tolerance of the per-step iteration of the perturbation map.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Integrability exponent used by the per-sweep diagnostics.
    pub diag_p: f64,
    /// Hölder exponent used by the per-sweep diagnostics.
    pub diag_alpha: f64,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            fp_tol: 1e-10,
            fp_max_sweeps: 60,
            t1: t_end,
            k0: 1.0,
            p0: 1.0,
            mode: Mode::DirectT,
            rho_floor: 1e-8,
            max_substeps: 10_000,
            inner_tol: 1e-13,
            inner_max_iter: 100,
            diag_p: 4.0,
            diag_alpha: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("t_end", self.t_end),
            ("fp_tol", self.fp_tol),
            ("t1", self.t1),
            ("k0", self.k0),
            ("p0", self.p0),
            ("inner_tol", self.inner_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.rho_floor >= 0.0) {
            return Err(Error::Parameter("rho_floor must be nonnegative".into()));
        }
        if self.fp_max_sweeps == 0 || self.max_substeps == 0 || self.inner_max_iter == 0 {
            return Err(Error::Parameter("iteration caps must be positive".into()));
        }
        if !(self.diag_p > 3.0) {
            return Err(Error::Parameter(format!(
                "diag_p = {} must exceed 3",
                self.diag_p
            )));
        }
        if !(0.0..=1.0).contains(&self.diag_alpha) {
            return Err(Error::Parameter("diag_alpha must lie in [0, 1]".into()));
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) || steps.round() < 1.0 {
            return Err(Error::Parameter(format!(
                "t_end = {} is not a positive multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// One sweep of a fixed-point iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    /// Sup-norm difference to the previous iterate.
    pub sup_diff: f64,
    pub energy: f64,
    /// `Eⁿ / Eⁿ⁻¹`, only when `Eⁿ⁻¹ > 0`.
    pub energy_ratio: Option<f64>,
    pub diff_ratio: Option<f64>,
    /// `𝒱(T; q) + 𝒱(T; v)`.
    pub v_norm: f64,
    /// `𝒩(T)`.
    pub blowup: f64,
    pub density_min: f64,
    pub density_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub mode: Mode,
    pub sweeps: Vec<SweepRecord>,
    pub converged: bool,
    /// Residual of the nonlinear scheme at the returned trajectory.
    pub residual: f64,
}

impl IterationTrace {
    /// Largest sweep-to-sweep difference ratio from sweep `from` on.
    pub fn max_diff_ratio(&self, from: usize) -> Option<f64> {
        self.sweeps
            .iter()
            .filter(|s| s.sweep >= from)
            .filter_map(|s| s.diff_ratio)
            .reduce(f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub trace: IterationTrace,
}

/// Everything a run needs besides the initial state.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub mixture: &'a Mixture,
    pub grid: Grid1D,
    pub forcing: &'a ForcingSpec,
    pub config: &'a SolverConfig,
}

impl Problem<'_> {
    fn samples(&self) -> Result<Vec<ForcingSample>> {
        let nq = self.mixture.num_q();
        (0..=self.config.steps())
            .map(|k| {
                self.forcing
                    .sample(&self.grid, nq, k as f64 * self.config.dt)
            })
            .collect()
    }

    fn check(&self, state0: &State) -> Result<()> {
        self.config.validate()?;
        if state0.len() != self.grid.len() {
            return Err(Error::Shape("initial state does not match the grid".into()));
        }
        if state0.q.comps() != self.mixture.num_q() {
            return Err(Error::Shape(format!(
                "q has {} components, expected {}",
                state0.q.comps(),
                self.mixture.num_q()
            )));
        }
        self.forcing
            .validate(self.grid.length(), self.mixture.num_q())
    }

    fn continuity(&self, rho0: &Field, v: &[Field]) -> Result<Vec<Field>> {
        let rho = solve_continuity(
            rho0,
            &v[1..],
            &self.grid,
            self.config.dt,
            self.config.max_substeps,
        )?;
        for (k, r) in rho.iter().enumerate() {
            for j in 0..r.len() {
                let value = r.get(j, 0);
                if !(value >= self.config.rho_floor) || value <= 0.0 {
                    return Err(Error::PositivityLoss {
                        time: k as f64 * self.config.dt,
                        cell: j,
                        value,
                        floor: self.config.rho_floor,
                    });
                }
            }
        }
        Ok(rho)
    }

    fn record(
        &self,
        sweep: usize,
        prev: &Trajectory,
        cur: &Trajectory,
        last: Option<&SweepRecord>,
    ) -> Result<SweepRecord> {
        let cfg = self.config;
        let sup_diff = cur.sup_difference(prev);
        let energy = contraction_energy(prev, cur, cfg.t1, cfg.k0, cfg.p0)?;
        let ratio = |a: f64, b: Option<f64>| b.filter(|b| *b > 0.0).map(|b| a / b);
        let vq = v_norm_surrogate(&cur.q, &cur.grid, cur.dt, cfg.diag_p)?;
        let vv = v_norm_surrogate(&cur.v, &cur.grid, cur.dt, cfg.diag_p)?;
        let blowup = blowup_functional(cur, cfg.diag_alpha, cfg.diag_p)?;
        Ok(SweepRecord {
            sweep,
            sup_diff,
            energy,
            energy_ratio: ratio(energy, last.map(|l| l.energy)),
            diff_ratio: ratio(sup_diff, last.map(|l| l.sup_diff)),
            v_norm: vq.total.last().copied().unwrap_or(0.0)
                + vv.total.last().copied().unwrap_or(0.0),
            blowup: blowup.last().copied().unwrap_or(0.0),
            density_min: cur
                .varrho
                .iter()
                .map(Field::min)
                .fold(f64::INFINITY, f64::min),
            density_max: cur
                .varrho
                .iter()
                .map(Field::max)
                .fold(f64::NEG_INFINITY, f64::max),
        })
    }

    fn finish(
        &self,
        trajectory: Trajectory,
        sweeps: Vec<SweepRecord>,
        converged: bool,
    ) -> Result<Solution> {
        let residual = nonlinear_residual(self, &trajectory)?;
        Ok(Solution {
            trajectory,
            trace: IterationTrace {
                mode: self.config.mode,
                sweeps,
                converged,
                residual,
            },
        })
    }
}

fn split(c: &[Coeffs]) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    (
        c.iter().map(|c| c.r_q.clone()).collect(),
        c.iter().map(|c| c.mt.clone()).collect(),
    )
}

fn diverged(diff: f64) -> bool {
    !diff.is_finite() || diff > 1e8
}

/// Runs the mode selected in the configuration.
pub fn solve(problem: &Problem<'_>, state0: &State) -> Result<Solution> {
    match problem.config.mode {
        Mode::DirectT => fixed_point_t(problem, state0),
        Mode::PerturbationT1 => {
            let n = state0.len() as f64;
            let mean = |f: &Field| -> Vec<f64> {
                (0..f.comps())
                    .map(|c| (0..f.len()).map(|j| f.get(j, c)).sum::<f64>() / n)
                    .collect()
            };
            let equilibrium = State::new(
                Field::constant(state0.len(), &mean(&state0.q), Bc::NeumannZero),
                Field::constant(state0.len(), &mean(&state0.varrho), Bc::None),
                Field::zeros(state0.len(), 1, Bc::DirichletZero),
            )?;
            fixed_point_t1(problem, &equilibrium, state0)
        }
    }
}

/// Iterates `(qⁿ⁺¹, vⁿ⁺¹) = 𝒯(qⁿ, vⁿ)` starting from the extension of the
/// initial data that is constant in time.
pub fn fixed_point_t(problem: &Problem<'_>, state0: &State) -> Result<Solution> {
    problem.check(state0)?;
    let cfg = problem.config;
    let mix = problem.mixture;
    let grid = problem.grid;
    let k_levels = cfg.steps();
    let samples = problem.samples()?;
    let mu = mix.viscosity.effective();

    let mut cur = Trajectory::constant(grid, cfg.dt, state0, k_levels + 1);
    let mut sweeps: Vec<SweepRecord> = Vec::new();
    for sweep in 1..=cfg.fp_max_sweeps {
        let rho = problem.continuity(&state0.varrho, &cur.v)?;
        let mut next = Trajectory::constant(grid, cfg.dt, state0, k_levels + 1);
        next.varrho = rho;
        let mut warm: Option<Vec<Coeffs>> = None;
        for k in 0..k_levels {
            let frozen = State {
                q: cur.q[k + 1].clone(),
                varrho: next.varrho[k + 1].clone(),
                v: cur.v[k + 1].clone(),
            };
            let coeffs = mix.coeff_field(&frozen.varrho, &frozen.q, warm.as_deref())?;
            let g = g_from_coeffs(&coeffs, &grid, &frozen, &samples[k + 1])?;
            let f = f_from_coeffs(&coeffs, &grid, &frozen, &samples[k + 1])?;
            let (rq, mt) = split(&coeffs);
            next.q[k + 1] = step_q_parabolic(&rq, &mt, &g, &next.q[k], &grid, cfg.dt)?;
            next.v[k + 1] = step_v_parabolic(&frozen.varrho, &f, &next.v[k], &grid, cfg.dt, mu)?;
            warm = Some(coeffs);
        }
        let rec = problem.record(sweep, &cur, &next, sweeps.last())?;
        let diff = rec.sup_diff;
        sweeps.push(rec);
        cur = next;
        if diff <= cfg.fp_tol {
            return problem.finish(cur, sweeps, true);
        }
        if diverged(diff) {
            break;
        }
    }
    problem.finish(cur, sweeps, false)
}

/// Iterates the perturbation map `(r*, w*) ↦ (r, w)` around the extension
/// `û⁰` of the initial data and returns `û⁰ + (r, σ, w)`.
///
/// `equilibrium` is only used to check admissibility: it must be a constant
/// state at rest.
pub fn fixed_point_t1(
    problem: &Problem<'_>,
    equilibrium: &State,
    state0: &State,
) -> Result<Solution> {
    problem.check(state0)?;
    if equilibrium.v.max_abs() != 0.0 {
        return Err(Error::Parameter("equilibrium velocity must vanish".into()));
    }
    let cfg = problem.config;
    let mix = problem.mixture;
    let grid = problem.grid;
    let dt = cfg.dt;
    let k_levels = cfg.steps();
    let samples = problem.samples()?;
    let mu = mix.viscosity.effective();
    let n = grid.len();
    let nq = mix.num_q();

    let qhat = state0.q.clone();
    let vhat = state0.v.clone();
    let vhat_series = vec![vhat.clone(); k_levels + 1];
    let rhohat = problem.continuity(&state0.varrho, &vhat_series)?;
    let hat = |k: usize| State {
        q: qhat.clone(),
        varrho: rhohat[k].clone(),
        v: vhat.clone(),
    };
    let visc_hat = d2(&vhat, &grid)?.scale(mu);
    let mut g0 = Vec::with_capacity(k_levels + 1);
    let mut f0 = Vec::with_capacity(k_levels + 1);
    let mut warm: Option<Vec<Coeffs>> = None;
    for (k, sample) in samples.iter().enumerate() {
        let u = hat(k);
        let c = mix.coeff_field(&u.varrho, &u.q, warm.as_deref())?;
        let (_, mt) = split(&c);
        g0.push(
            g_from_coeffs(&c, &grid, &u, sample)?.axpy(1.0, &flux_divergence(&mt, &qhat, &grid)),
        );
        f0.push(f_from_coeffs(&c, &grid, &u, sample)?.axpy(1.0, &visc_hat));
        warm = Some(c);
    }

    let assemble = |pert: &[Perturbation]| Trajectory {
        grid,
        dt,
        q: pert
            .iter()
            .map(|p| qhat.axpy(1.0, &p.r).with_bc(Bc::NeumannZero))
            .collect(),
        varrho: pert
            .iter()
            .zip(&rhohat)
            .map(|(p, rh)| rh.axpy(1.0, &p.sigma).with_bc(Bc::None))
            .collect(),
        v: pert
            .iter()
            .map(|p| vhat.axpy(1.0, &p.w).with_bc(Bc::DirichletZero))
            .collect(),
    };

    let mut pert = vec![Perturbation::zeros(n, nq); k_levels + 1];
    let mut cur = assemble(&pert);
    let mut sweeps: Vec<SweepRecord> = Vec::new();
    for sweep in 1..=cfg.fp_max_sweeps {
        let vstar: Vec<Field> = pert.iter().map(|p| vhat.axpy(1.0, &p.w)).collect();
        let rhostar = problem.continuity(&state0.varrho, &vstar)?;
        let mut next = vec![Perturbation::zeros(n, nq); k_levels + 1];
        let mut warm: Option<Vec<Coeffs>> = None;
        for k in 0..k_levels {
            let ustar = State {
                q: qhat.axpy(1.0, &pert[k + 1].r).with_bc(Bc::NeumannZero),
                varrho: rhostar[k + 1].clone(),
                v: vstar[k + 1].clone(),
            };
            let coeffs = mix.coeff_field(&ustar.varrho, &ustar.q, warm.as_deref())?;
            let (rq, mt) = split(&coeffs);
            let lin = Linearization::new(
                mix,
                &grid,
                &ustar,
                &hat(k + 1),
                samples[k + 1].clone(),
                Some(&qhat),
            )?;
            let prev = next[k].clone();
            let mut guess = prev.clone();
            let mut change = f64::INFINITY;
            let mut iterations = 0;
            while change > cfg.inner_tol && iterations < cfg.inner_max_iter {
                let (gp, fp) = lin.apply(&guess)?;
                let r = step_q_parabolic(&rq, &mt, &g0[k + 1].axpy(1.0, &gp), &prev.r, &grid, dt)?;
                let w = step_v_parabolic(
                    &rhostar[k + 1],
                    &f0[k + 1].axpy(1.0, &fp),
                    &prev.w,
                    &grid,
                    dt,
                    mu,
                )?;
                let moved = upwind_step(&prev.sigma, &vstar[k + 1], &grid, dt, cfg.max_substeps)?;
                let pushed =
                    upwind_step(&rhohat[k], &vhat.axpy(1.0, &w), &grid, dt, cfg.max_substeps)?;
                let sigma = moved.axpy(1.0, &pushed.sub(&rhohat[k + 1]));
                let new = Perturbation::new(r, sigma, w)?;
                change = new
                    .r
                    .sub(&guess.r)
                    .max_abs()
                    .max(new.sigma.sub(&guess.sigma).max_abs())
                    .max(new.w.sub(&guess.w).max_abs());
                let scale = 1.0 + new.sup();
                guess = new;
                iterations += 1;
                change /= scale;
            }
            if change > cfg.inner_tol {
                return Err(Error::Convergence {
                    what: "perturbation step",
                    iterations,
                    residual: change,
                });
            }
            next[k + 1] = guess;
            warm = Some(coeffs);
        }
        let traj = assemble(&next);
        let rec = problem.record(sweep, &cur, &traj, sweeps.last())?;
        let diff = rec.sup_diff;
        sweeps.push(rec);
        cur = traj;
        pert = next;
        if diff <= cfg.fp_tol {
            return problem.finish(cur, sweeps, true);
        }
        if diverged(diff) {
            break;
        }
    }
    problem.finish(cur, sweeps, false)
}

/// `Eⁿ = k₀ sup_τ (‖|r| + |w|‖² + ‖σ‖²) + p₀ ∫∫ (|r_x|² + |w_x|²)` over
/// windows of length `t1`, maximised over window positions, where
/// `(r, σ, w)` is the difference of the two sweeps.
pub fn contraction_energy(
    prev: &Trajectory,
    cur: &Trajectory,
    t1: f64,
    k0: f64,
    p0: f64,
) -> Result<f64> {
    if prev.levels() != cur.levels() || prev.grid != cur.grid || prev.dt != cur.dt {
        return Err(Error::Shape(
            "sweeps live on different grids or windows".into(),
        ));
    }
    let grid = cur.grid;
    let dx = grid.dx();
    let levels = cur.levels();
    let mut pointwise = Vec::with_capacity(levels);
    let mut dissipation = Vec::with_capacity(levels);
    for k in 0..levels {
        let r = cur.q[k].sub(&prev.q[k]);
        let s = cur.varrho[k].sub(&prev.varrho[k]);
        let w = cur.v[k].sub(&prev.v[k]);
        if r.len() != grid.len() || s.len() != grid.len() || w.len() != grid.len() {
            return Err(Error::Shape("field length differs from grid".into()));
        }
        let mut a = 0.0;
        for j in 0..grid.len() {
            let rn = r.cell(j).iter().map(|x| x * x).sum::<f64>().sqrt();
            a += (rn + w.get(j, 0).abs()).powi(2) + s.get(j, 0).powi(2);
        }
        pointwise.push(a * dx);
        let rx = d1(&r.with_bc(Bc::NeumannZero), &grid)?;
        let wx = d1(&w.with_bc(Bc::DirichletZero), &grid)?;
        dissipation.push(rx.l2_squared(&grid) + wx.l2_squared(&grid));
    }
    let m = ((t1 / cur.dt).round() as usize).clamp(1, levels.saturating_sub(1).max(1));
    let mut best = 0.0_f64;
    for start in 0..levels.saturating_sub(m).max(1) {
        let end = (start + m).min(levels - 1);
        let sup = pointwise[start..=end].iter().copied().fold(0.0, f64::max);
        let integral: f64 = dissipation[start + 1..=end].iter().sum::<f64>() * cur.dt;
        best = best.max(k0 * sup + p0 * integral);
    }
    Ok(best)
}

/// Sup-norm residual of the nonlinear implicit scheme, in the units of the
/// per-step update: `q_{k+1} − q_k − dt R_q⁻¹(div(M̃∇q) + g)`,
/// `v_{k+1} − v_k − dt ϱ⁻¹(μ v_xx + f)` and `ϱ − 𝒞(v)`.
pub fn nonlinear_residual(problem: &Problem<'_>, traj: &Trajectory) -> Result<f64> {
    let cfg = problem.config;
    let mix = problem.mixture;
    let grid = problem.grid;
    let samples = problem.samples()?;
    if traj.levels() != samples.len() {
        return Err(Error::Shape(
            "trajectory does not span the configured window".into(),
        ));
    }
    let mu = mix.viscosity.effective();
    let rho = solve_continuity(
        &traj.varrho[0],
        &traj.v[1..],
        &grid,
        cfg.dt,
        cfg.max_substeps,
    )?;
    let mut worst = 0.0_f64;
    for (a, b) in rho.iter().zip(&traj.varrho) {
        worst = worst.max(a.sub(b).max_abs());
    }
    let mut warm: Option<Vec<Coeffs>> = None;
    for k in 0..traj.levels() - 1 {
        let u = traj.state(k + 1);
        let c = mix.coeff_field(&u.varrho, &u.q, warm.as_deref())?;
        let g = g_from_coeffs(&c, &grid, &u, &samples[k + 1])?;
        let f = f_from_coeffs(&c, &grid, &u, &samples[k + 1])?;
        let (_, mt) = split(&c);
        let div = flux_divergence(&mt, &u.q, &grid);
        let vxx = d2(&u.v, &grid)?;
        for (j, cj) in c.iter().enumerate() {
            let rhs = div.cell_vec(j) + g.cell_vec(j);
            let dq = cj
                .r_q
                .clone()
                .cholesky()
                .ok_or_else(|| Error::NotSpd {
                    context: "R_q in residual".into(),
                    eigenvalue: f64::NAN,
                })?
                .solve(&rhs);
            let res_q = u.q.cell_vec(j) - traj.q[k].cell_vec(j) - dq * cfg.dt;
            worst = worst.max(res_q.amax());
            let res_v = u.v.get(j, 0)
                - traj.v[k].get(j, 0)
                - cfg.dt * (mu * vxx.get(j, 0) + f.get(j, 0)) / u.varrho.get(j, 0);
            worst = worst.max(res_v.abs());
        }
        warm = Some(c);
    }
    Ok(worst)
}
