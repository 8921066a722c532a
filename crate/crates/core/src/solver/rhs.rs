//! Right-hand sides `g`, `f` of the reduced system and their linearizations.

use nalgebra::{DMatrix, DVector};

use super::coefficients::{Coeffs, Jets, Mixture};
use super::forcing::{ForcingSample, ForcingSpec};
use crate::discretization::{d1, Bc, Field, Grid1D, State};
use crate::error::{Error, Result};

/// A perturbation `ū = (r, σ, w)`; `σ` may change sign.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub r: Field,
    pub sigma: Field,
    pub w: Field,
}

impl Perturbation {
    pub fn new(r: Field, sigma: Field, w: Field) -> Result<Self> {
        let n = sigma.len();
        if r.len() != n || w.len() != n || sigma.comps() != 1 || w.comps() != 1 {
            return Err(Error::Shape("perturbation fields do not match".into()));
        }
        Ok(Self {
            r: r.with_bc(Bc::NeumannZero),
            sigma: sigma.with_bc(Bc::None),
            w: w.with_bc(Bc::DirichletZero),
        })
    }

    pub fn zeros(n: usize, nq: usize) -> Self {
        Self {
            r: Field::zeros(n, nq, Bc::NeumannZero),
            sigma: Field::zeros(n, 1, Bc::None),
            w: Field::zeros(n, 1, Bc::DirichletZero),
        }
    }

    /// `u − u*`.
    pub fn between(u: &State, ustar: &State) -> Result<Self> {
        Self::new(
            u.q.sub(&ustar.q),
            u.varrho.sub(&ustar.varrho),
            u.v.sub(&ustar.v),
        )
    }

    pub fn sup(&self) -> f64 {
        self.r
            .max_abs()
            .max(self.sigma.max_abs())
            .max(self.w.max_abs())
    }
}

/// Spatial derivatives of a state.
#[derive(Debug, Clone)]
pub(crate) struct Gradients {
    pub q_x: Field,
    pub varrho_x: Field,
    pub v_x: Field,
}

impl Gradients {
    pub fn of(state: &State, grid: &Grid1D) -> Result<Self> {
        Ok(Self {
            q_x: d1(&state.q, grid)?,
            varrho_x: d1(&state.varrho, grid)?,
            v_x: d1(&state.v, grid)?,
        })
    }
}

fn check_coeffs(c: &[Coeffs], state: &State) -> Result<()> {
    if c.len() != state.len() {
        return Err(Error::Shape(format!(
            "{} coefficient cells for {} grid cells",
            c.len(),
            state.len()
        )));
    }
    Ok(())
}

/// `g` from precomputed coefficients: `(R_ϱ ϱ − R) v_x − R_q q_x v
/// − M̃_ϱ ϱ_x b̃ − Σ_j M̃_{q_j} q_{j,x} b̃ − M̃ b̃_x + r̃`.
pub fn g_from_coeffs(
    c: &[Coeffs],
    grid: &Grid1D,
    state: &State,
    s: &ForcingSample,
) -> Result<Field> {
    check_coeffs(c, state)?;
    let dq = Gradients::of(state, grid)?;
    let nq = state.q.comps();
    let mut out = Field::zeros(state.len(), nq, Bc::None);
    for (j, cj) in c.iter().enumerate() {
        let varrho = state.varrho.get(j, 0);
        let v = state.v.get(j, 0);
        let q_x = dq.q_x.cell_vec(j);
        let mut g = (&cj.r_rho * varrho - &cj.r) * dq.v_x.get(j, 0) - &cj.r_q * &q_x * v + &cj.rt;
        if !s.is_zero() {
            let b = s.btilde.cell_vec(j);
            let mut dm = &cj.mt_rho * dq.varrho_x.get(j, 0);
            for (k, m) in cj.mt_q.iter().enumerate() {
                dm += m * q_x[k];
            }
            g -= dm * &b + &cj.mt * s.btilde_x.cell_vec(j);
        }
        out.cell_mut(j).copy_from_slice(g.as_slice());
    }
    Ok(out)
}

/// `f` from precomputed coefficients: `−P_ϱ ϱ_x − P_q·q_x − ϱ v v_x + R·b̃ + ϱ b̄`.
pub fn f_from_coeffs(
    c: &[Coeffs],
    grid: &Grid1D,
    state: &State,
    s: &ForcingSample,
) -> Result<Field> {
    check_coeffs(c, state)?;
    let dq = Gradients::of(state, grid)?;
    let mut out = Field::zeros(state.len(), 1, Bc::None);
    for (j, cj) in c.iter().enumerate() {
        let varrho = state.varrho.get(j, 0);
        let v = state.v.get(j, 0);
        let mut f = -cj.p_rho * dq.varrho_x.get(j, 0)
            - cj.p_q.dot(&dq.q_x.cell_vec(j))
            - varrho * v * dq.v_x.get(j, 0);
        if !s.is_zero() {
            f += cj.r.dot(&s.btilde.cell_vec(j)) + varrho * s.bbar.get(j, 0);
        }
        out.cell_mut(j)[0] = f;
    }
    Ok(out)
}

/// `g` at a state and time, coefficients evaluated from scratch.
pub fn eval_g(
    mix: &Mixture,
    grid: &Grid1D,
    state: &State,
    forcing: &ForcingSpec,
    t: f64,
) -> Result<Field> {
    let c = mix.coeff_field(&state.varrho, &state.q, None)?;
    let s = forcing.sample(grid, mix.num_q(), t)?;
    g_from_coeffs(&c, grid, state, &s)
}

/// `f` at a state and time, coefficients evaluated from scratch.
pub fn eval_f(
    mix: &Mixture,
    grid: &Grid1D,
    state: &State,
    forcing: &ForcingSpec,
    t: f64,
) -> Result<Field> {
    let c = mix.coeff_field(&state.varrho, &state.q, None)?;
    let s = forcing.sample(grid, mix.num_q(), t)?;
    f_from_coeffs(&c, grid, state, &s)
}

/// Conservative `div(M̃ ∇q)` with face-averaged `M̃` and zero boundary flux.
pub fn flux_divergence(mt: &[DMatrix<f64>], q: &Field, grid: &Grid1D) -> Field {
    let n = q.len();
    let dx2 = grid.dx() * grid.dx();
    let mut out = Field::zeros(n, q.comps(), Bc::None);
    for j in 0..n.saturating_sub(1) {
        let face = (&mt[j] + &mt[j + 1]) * 0.5;
        let jump = q.cell_vec(j + 1) - q.cell_vec(j);
        let flux = face * jump / dx2;
        for (c, fl) in flux.iter().enumerate() {
            out.cell_mut(j)[c] += fl;
            out.cell_mut(j + 1)[c] -= fl;
        }
    }
    out
}

const GAUSS_NODES: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

struct Node {
    weight: f64,
    state: State,
    grads: Gradients,
    coeffs: Vec<Coeffs>,
    jets: Vec<Jets>,
}

/// `∫₀¹ D(g, f)((1 − θ) u* + θ u) dθ` by three-point Gauss quadrature,
/// ready to be applied to perturbations. With `qhat` set, the flux term
/// `div(M̃ ∇q̂)` is included in the `g` part.
pub struct Linearization {
    grid: Grid1D,
    sample: ForcingSample,
    qhat: Option<Field>,
    nodes: Vec<Node>,
}

impl Linearization {
    pub fn new(
        mix: &Mixture,
        grid: &Grid1D,
        u: &State,
        ustar: &State,
        sample: ForcingSample,
        qhat: Option<&Field>,
    ) -> Result<Self> {
        let mut nodes = Vec::with_capacity(3);
        let mut warm: Option<Vec<Coeffs>> = None;
        for (theta, weight) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
            let state = State {
                q: ustar.q.axpy(*theta, &u.q.sub(&ustar.q)),
                varrho: ustar.varrho.axpy(*theta, &u.varrho.sub(&ustar.varrho)),
                v: ustar.v.axpy(*theta, &u.v.sub(&ustar.v)),
            };
            let coeffs = mix.coeff_field(&state.varrho, &state.q, warm.as_deref())?;
            let jets = coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| mix.jets(state.varrho.get(j, 0), &state.q.cell_vec(j), c))
                .collect::<Result<Vec<_>>>()?;
            let grads = Gradients::of(&state, grid)?;
            warm = Some(coeffs.clone());
            nodes.push(Node {
                weight,
                state,
                grads,
                coeffs,
                jets,
            });
        }
        Ok(Self {
            grid: *grid,
            sample,
            qhat: qhat.cloned(),
            nodes,
        })
    }

    /// `(g′ ū, f′ ū)`.
    pub fn apply(&self, ubar: &Perturbation) -> Result<(Field, Field)> {
        let n = ubar.sigma.len();
        let nq = ubar.r.comps();
        let r_x = d1(&ubar.r, &self.grid)?;
        let sigma_x = d1(&ubar.sigma, &self.grid)?;
        let w_x = d1(&ubar.w, &self.grid)?;
        let forced = !self.sample.is_zero();
        let mut gout = Field::zeros(n, nq, Bc::None);
        let mut fout = Field::zeros(n, 1, Bc::None);
        let mut dir = vec![0.0; nq + 1];
        let mut dmt: Vec<DMatrix<f64>> = Vec::with_capacity(n);
        for node in &self.nodes {
            dmt.clear();
            for j in 0..n {
                let c = &node.coeffs[j];
                let varrho = node.state.varrho.get(j, 0);
                let v = node.state.v.get(j, 0);
                let varrho_x = node.grads.varrho_x.get(j, 0);
                let v_x = node.grads.v_x.get(j, 0);
                let q_x = node.grads.q_x.cell_vec(j);
                let sigma = ubar.sigma.get(j, 0);
                let r = ubar.r.cell_vec(j);
                let w = ubar.w.get(j, 0);
                let rx = r_x.cell_vec(j);
                let sx = sigma_x.get(j, 0);
                let wx = w_x.get(j, 0);
                dir[0] = sigma;
                dir[1..].copy_from_slice(r.as_slice());
                let d = node.jets[j].along(&dir);

                let mut g = (&d.r_rho * varrho - &c.r_q * &r) * v_x
                    + (&c.r_rho * varrho - &c.r) * wx
                    - &d.r_q * &q_x * v
                    - &c.r_q * (&rx * v + &q_x * w)
                    + &c.rt_rho * sigma
                    + &c.rt_q * &r;
                let delta_mt = c.delta_mt(sigma, r.as_slice());
                if forced {
                    let b = self.sample.btilde.cell_vec(j);
                    let mut dm = &d.mt_rho * varrho_x + &c.mt_rho * sx;
                    for k in 0..nq {
                        dm += &d.mt_q[k] * q_x[k] + &c.mt_q[k] * rx[k];
                    }
                    g -= dm * &b + &delta_mt * self.sample.btilde_x.cell_vec(j);
                }
                dmt.push(delta_mt);

                let mut f = -(d.p_rho * varrho_x + c.p_rho * sx)
                    - (d.p_q.dot(&q_x) + c.p_q.dot(&rx))
                    - (sigma * v * v_x + varrho * w * v_x + varrho * v * wx);
                if forced {
                    let b = self.sample.btilde.cell_vec(j);
                    let dr: DVector<f64> = &c.r_rho * sigma + &c.r_q * &r;
                    f += dr.dot(&b) + sigma * self.sample.bbar.get(j, 0);
                }

                for (o, gi) in gout.cell_mut(j).iter_mut().zip(g.iter()) {
                    *o += node.weight * gi;
                }
                fout.cell_mut(j)[0] += node.weight * f;
            }
            if let Some(qhat) = &self.qhat {
                let div = flux_divergence(&dmt, qhat, &self.grid);
                gout = gout.axpy(node.weight, &div);
            }
        }
        Ok((gout, fout))
    }
}

/// `g′(u, u*) ū`.
#[allow(clippy::too_many_arguments)]
pub fn eval_g_prime(
    mix: &Mixture,
    grid: &Grid1D,
    u: &State,
    ustar: &State,
    ubar: &Perturbation,
    forcing: &ForcingSpec,
    t: f64,
) -> Result<Field> {
    let s = forcing.sample(grid, mix.num_q(), t)?;
    Ok(Linearization::new(mix, grid, u, ustar, s, None)?
        .apply(ubar)?
        .0)
}

/// `f′(u, u*) ū`.
#[allow(clippy::too_many_arguments)]
pub fn eval_f_prime(
    mix: &Mixture,
    grid: &Grid1D,
    u: &State,
    ustar: &State,
    ubar: &Perturbation,
    forcing: &ForcingSpec,
    t: f64,
) -> Result<Field> {
    let s = forcing.sample(grid, mix.num_q(), t)?;
    Ok(Linearization::new(mix, grid, u, ustar, s, None)?
        .apply(ubar)?
        .1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::changevar::{BasisChoice, BasisPair, ChangeOfVariables};
    use crate::mobility::{OnsagerSpec, ReactionSpec};
    use crate::solver::Viscosity;
    use crate::thermo::{FreeEnergyModel, SpeciesSystem};

    fn mixture() -> Mixture {
        let model = FreeEnergyModel::ideal_gas(SpeciesSystem::unit(2).unwrap(), 1.0).unwrap();
        let cv = ChangeOfVariables::new(
            model,
            BasisPair::new(2, &BasisChoice::LastSpeciesDifferences).unwrap(),
        )
        .unwrap();
        Mixture::new(
            cv,
            OnsagerSpec::constant(DMatrix::identity(2, 2)).unwrap(),
            ReactionSpec::None,
            Viscosity {
                bulk: 0.0,
                shear: 0.5,
            },
        )
        .unwrap()
    }

    fn rest(n: usize) -> State {
        State::new(
            Field::constant(n, &[0.2], Bc::NeumannZero),
            Field::constant(n, &[1.5], Bc::None),
            Field::zeros(n, 1, Bc::DirichletZero),
        )
        .unwrap()
    }

    #[test]
    fn rest_state_has_zero_right_hand_sides() {
        let grid = Grid1D::new(1.0, 8).unwrap();
        let mix = mixture();
        let u = rest(8);
        assert!(
            eval_g(&mix, &grid, &u, &ForcingSpec::None, 0.0)
                .unwrap()
                .max_abs()
                < 1e-14
        );
        assert!(
            eval_f(&mix, &grid, &u, &ForcingSpec::None, 0.0)
                .unwrap()
                .max_abs()
                < 1e-14
        );
    }

    #[test]
    fn zero_perturbation_has_zero_image() {
        let grid = Grid1D::new(1.0, 8).unwrap();
        let u = rest(8);
        let lin = Linearization::new(
            &mixture(),
            &grid,
            &u,
            &u,
            ForcingSample::zeros(8, 1),
            Some(&u.q),
        )
        .unwrap();
        let (g, f) = lin.apply(&Perturbation::zeros(8, 1)).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert_eq!(f.max_abs(), 0.0);
    }

    #[test]
    fn perturbation_shapes_are_checked() {
        let r = Field::zeros(8, 1, Bc::NeumannZero);
        assert!(Perturbation::new(
            r.clone(),
            Field::zeros(7, 1, Bc::None),
            Field::zeros(8, 1, Bc::None)
        )
        .is_err());
        let p = Perturbation::new(
            r,
            Field::zeros(8, 1, Bc::NeumannZero),
            Field::zeros(8, 1, Bc::None),
        )
        .unwrap();
        assert_eq!(p.sigma.bc(), Bc::None);
        assert_eq!(p.w.bc(), Bc::DirichletZero);
    }

    #[test]
    fn flux_divergence_of_cosine() {
        let grid = Grid1D::new(1.0, 64).unwrap();
        let q = Field::from_fn(&grid, 1, Bc::NeumannZero, |x| {
            vec![(std::f64::consts::PI * x).cos()]
        })
        .unwrap();
        let mt = vec![DMatrix::from_element(1, 1, 2.0); 64];
        let div = flux_divergence(&mt, &q, &grid);
        let pi2 = std::f64::consts::PI.powi(2);
        for j in 1..63 {
            assert!((div.get(j, 0) + 2.0 * pi2 * q.get(j, 0)).abs() < 2e-2);
        }
    }
}
