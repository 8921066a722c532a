//! Discrete norms, Hölder seminorms, the continuation functional `𝒩(t)` and
//! density-bound certificates for computed trajectories.

use serde::{Deserialize, Serialize};

use crate::discretization::{d1, d2, Field, Grid1D, Trajectory};
use crate::error::{Error, Result};

/// Norms of a field series `f(·, t_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub p: f64,
    pub times: Vec<f64>,
    pub lp: Vec<f64>,
    pub lp_x: Vec<f64>,
    pub lp_xx: Vec<f64>,
    /// `‖f_t(t_k)‖_p` from backward differences; absent for a single snapshot.
    pub lp_t: Option<Vec<f64>>,
    /// `sup_{s ≤ t} ‖f(s)‖_{W^{1,p}}`.
    pub w1p_sup: Vec<f64>,
    /// `‖f‖_{W^{2,1}_p(Q_t)}`.
    pub w21p: Vec<f64>,
    /// `𝒱(t) = ‖f‖_{W^{2,1}_p(Q_t)} + sup_{s ≤ t} ‖f(s)‖_{W^{1,p}}`.
    pub total: Vec<f64>,
}

fn cell_norm(f: &Field, j: usize) -> f64 {
    f.cell(j).iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `Σ_j |f_j|^p dx` with the Euclidean norm in each cell.
fn lp_power(f: &Field, grid: &Grid1D, p: f64) -> f64 {
    (0..f.len()).map(|j| cell_norm(f, j).powf(p)).sum::<f64>() * grid.dx()
}

fn sup_norm(f: &Field) -> f64 {
    (0..f.len()).map(|j| cell_norm(f, j)).fold(0.0, f64::max)
}

/// The `𝒱` surrogate with `W^{1,p}` in place of the trace space.
pub fn v_norm_surrogate(series: &[Field], grid: &Grid1D, dt: f64, p: f64) -> Result<NormReport> {
    if series.is_empty() {
        return Err(Error::Shape("empty field series".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("p = {p} must be at least 1")));
    }
    let levels = series.len();
    let mut report = NormReport {
        p,
        times: (0..levels).map(|k| k as f64 * dt).collect(),
        lp: Vec::with_capacity(levels),
        lp_x: Vec::with_capacity(levels),
        lp_xx: Vec::with_capacity(levels),
        lp_t: (levels > 1).then(|| Vec::with_capacity(levels)),
        w1p_sup: Vec::with_capacity(levels),
        w21p: Vec::with_capacity(levels),
        total: Vec::with_capacity(levels),
    };
    let mut running = 0.0;
    let mut sup = 0.0_f64;
    for (k, f) in series.iter().enumerate() {
        let a = lp_power(f, grid, p);
        let b = lp_power(&d1(f, grid)?, grid, p);
        let c = lp_power(&d2(f, grid)?, grid, p);
        report.lp.push(a.powf(1.0 / p));
        report.lp_x.push(b.powf(1.0 / p));
        report.lp_xx.push(c.powf(1.0 / p));
        if let Some(lp_t) = report.lp_t.as_mut() {
            let e = if k == 0 {
                0.0
            } else {
                lp_power(&f.sub(&series[k - 1]).scale(1.0 / dt), grid, p)
            };
            lp_t.push(e.powf(1.0 / p));
            if k > 0 {
                running += dt * (a + b + c + e);
            }
        }
        sup = sup.max((a + b).powf(1.0 / p));
        report.w1p_sup.push(sup);
        report.w21p.push(running.powf(1.0 / p));
        report.total.push(running.powf(1.0 / p) + sup);
    }
    Ok(report)
}

/// `[f(·, t)]_{C^α}` with the Euclidean norm in each cell.
pub fn spatial_seminorm(f: &Field, grid: &Grid1D, alpha: f64) -> f64 {
    let n = f.len();
    let mut best = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = f
                .cell(i)
                .iter()
                .zip(f.cell(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            best = best.max(d / ((j - i) as f64 * grid.dx()).powf(alpha));
        }
    }
    best
}

/// `sup_x [f(x, ·)]_{C^β}` restricted to `t ≤ t_k`, for every `k`.
fn temporal_seminorms(series: &[Field], dt: f64, beta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let mut best = 0.0_f64;
    for (k, fk) in series.iter().enumerate() {
        for (s, fs) in series[..k].iter().enumerate() {
            let scale = ((k - s) as f64 * dt).powf(beta);
            for j in 0..fk.len() {
                let d: f64 = fk
                    .cell(j)
                    .iter()
                    .zip(fs.cell(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                best = best.max(d / scale);
            }
        }
        out.push(best);
    }
    out
}

/// `[f]_{C^{α,β}(Q_T)} = sup_t [f(·,t)]_{C^α} + sup_x [f(x,·)]_{C^β}`, the
/// maximum over all pairs of grid points.
pub fn holder_seminorm(
    series: &[Field],
    grid: &Grid1D,
    dt: f64,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::Parameter(
            "Hölder exponents must lie in [0, 1]".into(),
        ));
    }
    let space = series
        .iter()
        .map(|f| spatial_seminorm(f, grid, alpha))
        .fold(0.0, f64::max);
    let time = temporal_seminorms(series, dt, beta)
        .last()
        .copied()
        .unwrap_or(0.0);
    Ok(space + time)
}

/// The exponent `z(p)` of the velocity norm in `𝒩`.
pub fn velocity_exponent(p: f64) -> Result<f64> {
    if !(p > 3.0) {
        return Err(Error::Parameter(format!("p = {p} must exceed 3")));
    }
    Ok(if p < 5.0 {
        3.0 / (p - 2.0)
    } else if p == 5.0 {
        1.01
    } else {
        1.0
    })
}

/// `𝒩(t) = ‖q‖_{C^{α,α/2}(Q_t)} + ‖q_x‖_{L^{∞,p}(Q_t)} + ‖v‖_{L^{zp,p}(Q_t)} + ∫₀ᵗ [v_x(s)]_{C^α} ds`
/// at every time level. Time integrals use the
/// right-endpoint rule, so the series is nondecreasing.
pub fn blowup_functional(traj: &Trajectory, alpha: f64, p: f64) -> Result<Vec<f64>> {
    let z = velocity_exponent(p)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(
            "Hölder exponent must lie in [0, 1]".into(),
        ));
    }
    let grid = &traj.grid;
    let dt = traj.dt;
    let temporal = temporal_seminorms(&traj.q, dt, alpha / 2.0);
    let mut out = Vec::with_capacity(traj.levels());
    let (mut q_sup, mut q_space) = (0.0_f64, 0.0_f64);
    let (mut qx_int, mut v_int, mut vx_int) = (0.0, 0.0, 0.0);
    for (k, (q, t_semi)) in traj.q.iter().zip(&temporal).enumerate() {
        q_sup = q_sup.max(sup_norm(q));
        q_space = q_space.max(spatial_seminorm(q, grid, alpha));
        if k > 0 {
            let qx = d1(q, grid)?;
            qx_int += dt * sup_norm(&qx).powf(p);
            let v = &traj.v[k];
            v_int += dt * lp_power(v, grid, z * p).powf(1.0 / z);
            vx_int += dt * spatial_seminorm(&d1(v, grid)?, grid, alpha);
        }
        out.push(q_sup + q_space + t_semi + qx_int.powf(1.0 / p) + v_int.powf(1.0 / p) + vx_int);
    }
    Ok(out)
}

/// Outcome of checking `m₀ φ⁻¹ ≤ ϱ ≤ M₀ φ` with
/// `φ(t) = exp(√3 ‖v_x‖_{L^{∞,1}(Q_t)})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCertificate {
    pub passed: bool,
    pub phi: Vec<f64>,
    /// `min (ϱ − m₀/φ)` over space and time.
    pub lower_margin: f64,
    /// `min (M₀ φ − ϱ)` over space and time.
    pub upper_margin: f64,
}

/// The step `t_k → t_{k+1}` is charged with the velocity `v[k + 1]`, the one
/// that drives it in the solvers. The slope is the divergence of the face
/// velocities, `|v_x|` of the Dirichlet difference.
pub fn density_bound_certificate(
    rho: &[Field],
    v: &[Field],
    grid: &Grid1D,
    dt: f64,
    m0: f64,
    big_m0: f64,
) -> Result<DensityCertificate> {
    if rho.len() != v.len() || rho.is_empty() {
        return Err(Error::Shape(
            "density and velocity series differ in length".into(),
        ));
    }
    let mut phi = Vec::with_capacity(rho.len());
    let mut integral = 0.0;
    let (mut lower, mut upper) = (f64::INFINITY, f64::INFINITY);
    for (k, r) in rho.iter().enumerate() {
        if k > 0 {
            let vx = d1(
                &v[k]
                    .clone()
                    .with_bc(crate::discretization::Bc::DirichletZero),
                grid,
            )?;
            integral += dt * vx.max_abs();
        }
        let f = (3f64.sqrt() * integral).exp();
        phi.push(f);
        lower = lower.min(r.min() - m0 / f);
        upper = upper.min(big_m0 * f - r.max());
    }
    Ok(DensityCertificate {
        passed: lower >= 0.0 && upper >= 0.0,
        phi,
        lower_margin: lower,
        upper_margin: upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Bc;

    #[test]
    fn zero_series_has_zero_norms() {
        let g = Grid1D::new(1.0, 8).unwrap();
        let s = vec![Field::zeros(8, 2, Bc::NeumannZero); 3];
        let r = v_norm_surrogate(&s, &g, 0.1, 4.0).unwrap();
        assert!(r.total.iter().all(|v| *v == 0.0));
        assert_eq!(holder_seminorm(&s, &g, 0.1, 0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn single_snapshot_has_no_time_derivative() {
        let g = Grid1D::new(1.0, 8).unwrap();
        let s = vec![Field::constant(8, &[2.0], Bc::NeumannZero)];
        let r = v_norm_surrogate(&s, &g, 0.1, 4.0).unwrap();
        assert!(r.lp_t.is_none());
        // ‖2‖_{L⁴(0,1)} = 2
        assert!((r.total[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lipschitz_slope() {
        let g = Grid1D::new(1.0, 16).unwrap();
        let f = Field::from_fn(&g, 1, Bc::None, |x| vec![x]).unwrap();
        assert!((spatial_seminorm(&f, &g, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn velocity_exponent_branches() {
        assert!(velocity_exponent(3.0).is_err());
        assert_eq!(velocity_exponent(4.0).unwrap(), 1.5);
        assert_eq!(velocity_exponent(5.0).unwrap(), 1.01);
        assert_eq!(velocity_exponent(6.0).unwrap(), 1.0);
    }

    #[test]
    fn resting_density_passes_certificate() {
        let g = Grid1D::new(1.0, 8).unwrap();
        let rho = vec![Field::from_fn(&g, 1, Bc::None, |x| vec![1.0 + x]).unwrap(); 4];
        let v = vec![Field::zeros(8, 1, Bc::DirichletZero); 4];
        let c = density_bound_certificate(&rho, &v, &g, 0.1, rho[0].min(), rho[0].max()).unwrap();
        assert!(c.passed);
        assert!(c.phi.iter().all(|p| *p == 1.0));
    }
}
