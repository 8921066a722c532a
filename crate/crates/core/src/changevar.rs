//! Relative chemical potentials.
//!
//! With a basis `ξ¹,…,ξᴺ` of `R^N` such that `ξᴺ = 1ᴺ` and its dual basis
//! `η¹,…,ηᴺ`, every chemical potential splits as
//! `μ = Σ_ℓ q_ℓ ξ^ℓ + 𝓜 1ᴺ` with `q_ℓ = η^ℓ·μ`. Given the total density `ϱ`
//! and `q`, the shift `𝓜(ϱ, q)` is fixed by `1ᴺ·∇h*(μ) = ϱ`, so that
//! `(ϱ, q) ∈ R₊ × R^{N−1}` parametrises all strictly positive compositions.
//!
//! `D²h*` is never formed from a conjugate expression: by the inverse function
//! theorem it is the inverse of `D²h` at the reconstructed `ρ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::thermo::{ChemicalPotentials, Composition, FreeEnergyModel, NewtonOptions};

/// How the first `N − 1` basis vectors are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisChoice {
    /// `ξ^ℓ = e^ℓ − (1/N) 1ᴺ`, whose dual vectors are `η^ℓ = e^ℓ − eᴺ` and
    /// `ηᴺ = (1/N) 1ᴺ`; `q_ℓ = μ_ℓ − μ_N`.
    LastSpeciesDifferences,
    /// Explicit `ξ¹,…,ξ^{N−1}`; `ξᴺ = 1ᴺ` is appended.
    Custom(Vec<Vec<f64>>),
}

/// Dual bases `ξ`, `η` together with the projection matrices `Q` and `𝒫`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPair {
    xi: DMatrix<f64>,
    eta: DMatrix<f64>,
    q: DMatrix<f64>,
    proj: DMatrix<f64>,
}

impl BasisPair {
    pub fn new(n: usize, choice: &BasisChoice) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("need N ≥ 2 species, got {n}")));
        }
        let mut xi = DMatrix::zeros(n, n);
        match choice {
            BasisChoice::LastSpeciesDifferences => {
                for l in 0..n - 1 {
                    for i in 0..n {
                        xi[(i, l)] = if i == l { 1.0 } else { 0.0 } - 1.0 / n as f64;
                    }
                }
            }
            BasisChoice::Custom(cols) => {
                if cols.len() != n - 1 {
                    return Err(Error::Parameter(format!(
                        "custom basis needs {} vectors, got {}",
                        n - 1,
                        cols.len()
                    )));
                }
                for (l, col) in cols.iter().enumerate() {
                    if col.len() != n {
                        return Err(Error::Parameter(format!(
                            "custom basis vector {l} has length {}, expected {n}",
                            col.len()
                        )));
                    }
                    for (i, x) in col.iter().enumerate() {
                        xi[(i, l)] = *x;
                    }
                }
            }
        }
        for i in 0..n {
            xi[(i, n - 1)] = 1.0;
        }
        let sv = xi.singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        let condition = if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        };
        if !(condition < 1e12) {
            return Err(Error::Basis { condition });
        }
        let eta = xi
            .transpose()
            .lu()
            .solve(&DMatrix::identity(n, n))
            .ok_or(Error::Basis { condition })?;
        let q = xi.columns(0, n - 1).into_owned();
        let ones = DVector::from_element(n, 1.0);
        let proj = DMatrix::identity(n, n) - (&ones * ones.transpose()) / n as f64;
        Ok(Self { xi, eta, q, proj })
    }

    pub fn num_species(&self) -> usize {
        self.xi.nrows()
    }

    /// Columns `ξ¹,…,ξᴺ`.
    pub fn xi(&self) -> &DMatrix<f64> {
        &self.xi
    }

    /// Columns `η¹,…,ηᴺ`.
    pub fn eta(&self) -> &DMatrix<f64> {
        &self.eta
    }

    /// `Q_{jℓ} = ξ^ℓ_j`, an `N × (N−1)` matrix.
    pub fn q_matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `𝒫 = Id − (1/N) 1ᴺ ⊗ 1ᴺ`.
    pub fn projector(&self) -> &DMatrix<f64> {
        &self.proj
    }

    /// `(q, 𝓜)` with `q_ℓ = η^ℓ·μ` and `𝓜 = ηᴺ·μ`.
    pub fn decompose(&self, mu: &ChemicalPotentials) -> (DVector<f64>, f64) {
        let n = self.num_species();
        let all = self.eta.transpose() * &mu.0;
        (all.rows(0, n - 1).into_owned(), all[n - 1])
    }

    /// `μ = Σ_ℓ q_ℓ ξ^ℓ + shift · 1ᴺ`.
    pub fn compose(&self, q: &DVector<f64>, shift: f64) -> ChemicalPotentials {
        let mut mu = &self.q * q;
        mu.add_scalar_mut(shift);
        ChemicalPotentials(mu)
    }

    /// Linear map `q ↦ q'` taking relative potentials in this basis to those
    /// of `other` (both describe the same `μ` up to the shift).
    pub fn transition_to(&self, other: &BasisPair) -> DMatrix<f64> {
        let n = self.num_species();
        other.eta.columns(0, n - 1).transpose() * &self.q
    }
}

/// The reduced unknowns `(ϱ, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub varrho: f64,
    pub q: DVector<f64>,
}

impl ReducedState {
    pub fn new(varrho: f64, q: DVector<f64>) -> Self {
        Self { varrho, q }
    }
}

/// Warm start for the nested Newton solves, carried from cell to cell.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub rho: DVector<f64>,
    pub shift: f64,
}

/// Everything the reduced system needs at one state `(ϱ, q)`.
#[derive(Debug, Clone)]
pub struct ReducedPoint {
    pub shift: f64,
    pub rho: DVector<f64>,
    pub mu: DVector<f64>,
    /// `D²h*(μ) = (D²h(ρ))⁻¹`.
    pub hess_conj: DMatrix<f64>,
    /// `R_k = ξ^k·ρ`.
    pub r: DVector<f64>,
    pub r_rho: DVector<f64>,
    pub r_q: DMatrix<f64>,
    pub p: f64,
    pub p_rho: f64,
    pub p_q: DVector<f64>,
    /// `∂ρ/∂ϱ`.
    pub drho_dvarrho: DVector<f64>,
    /// `∂ρ/∂q`, an `N × (N−1)` matrix.
    pub drho_dq: DMatrix<f64>,
}

impl ReducedPoint {
    pub fn warm_start(&self) -> WarmStart {
        WarmStart {
            rho: self.rho.clone(),
            shift: self.shift,
        }
    }
}

/// The change of variables `ρ ↔ (ϱ, q)` for a given free energy and basis.
#[derive(Debug, Clone)]
pub struct ChangeOfVariables {
    model: FreeEnergyModel,
    basis: BasisPair,
    pub newton: NewtonOptions,
    pub shift_tol: f64,
    pub shift_max_iter: usize,
}

impl ChangeOfVariables {
    pub fn new(model: FreeEnergyModel, basis: BasisPair) -> Result<Self> {
        if model.num_species() != basis.num_species() {
            return Err(Error::Shape(format!(
                "{}-species model with a basis of R^{}",
                model.num_species(),
                basis.num_species()
            )));
        }
        Ok(Self {
            model,
            basis,
            newton: NewtonOptions::default(),
            shift_tol: 1e-12,
            shift_max_iter: 100,
        })
    }

    pub fn model(&self) -> &FreeEnergyModel {
        &self.model
    }

    pub fn basis(&self) -> &BasisPair {
        &self.basis
    }

    pub fn num_species(&self) -> usize {
        self.model.num_species()
    }

    /// Solves `1ᴺ·∇h*(Σ q_ℓ ξ^ℓ + 𝓜 1ᴺ) = ϱ` for `𝓜`. Returns `(𝓜, ρ)`.
    ///
    /// Newton is applied to `ln(1ᴺ·ρ(𝓜)) − ln ϱ`, increasing in `𝓜`, with a
    /// bisection fallback once the root is bracketed.
    pub fn solve_shift(
        &self,
        state: &ReducedState,
        warm: Option<&WarmStart>,
    ) -> Result<(f64, DVector<f64>)> {
        let n = self.num_species();
        if !(state.varrho > 0.0) || !state.varrho.is_finite() {
            return Err(Error::Domain {
                index: 0,
                value: state.varrho,
            });
        }
        if state.q.len() != n - 1 {
            return Err(Error::Shape(format!(
                "q has {} components, expected {}",
                state.q.len(),
                n - 1
            )));
        }
        let base = &self.basis.q * &state.q;
        let (mut shift, mut rho) = match warm {
            Some(w) => (w.shift, w.rho.clone()),
            None => {
                let rho0 = DVector::from_element(n, state.varrho / n as f64);
                let mu0 = self.model.mu_raw(&rho0);
                let s0 = self.basis.eta.column(n - 1).dot(&mu0);
                (s0 - self.basis.eta.column(n - 1).dot(&base), rho0)
            }
        };
        let target = state.varrho.ln();
        let tol = self.shift_tol * state.varrho.max(1.0);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut last = f64::INFINITY;
        for _ in 0..self.shift_max_iter {
            let mut mu = base.clone();
            mu.add_scalar_mut(shift);
            // rescaling the warm start towards the target total mass keeps the
            // inner Newton short
            let total = rho.sum();
            if total > 0.0 && total.is_finite() {
                rho *= state.varrho / total;
            }
            rho = self.model.invert_raw(&mu, rho, self.newton)?;
            let total = rho.sum();
            last = (total - state.varrho).abs();
            if last <= tol {
                return Ok((shift, rho));
            }
            let g = total.ln() - target;
            if g < 0.0 {
                lo = lo.max(shift);
            } else {
                hi = hi.min(shift);
            }
            let hess = self.model.hess_raw(&rho);
            let ones = DVector::from_element(n, 1.0);
            let a = solve_spd(&hess, &ones)?;
            let slope = ones.dot(&a) / total;
            let mut next = shift - (g / slope).clamp(-20.0, 20.0);
            if !(next > lo && next < hi) {
                if lo.is_finite() && hi.is_finite() {
                    next = 0.5 * (lo + hi);
                } else if next <= lo {
                    next = lo + 1.0;
                } else {
                    next = hi - 1.0;
                }
            }
            shift = next;
        }
        Err(Error::Convergence {
            what: "potential shift",
            iterations: self.shift_max_iter,
            residual: last,
        })
    }

    /// `ρ = ∇h*(Σ q_ℓ ξ^ℓ + 𝓜(ϱ, q) 1ᴺ)`.
    pub fn reconstruct(&self, state: &ReducedState) -> Result<Composition> {
        let (_, rho) = self.solve_shift(state, None)?;
        Composition::new(rho)
    }

    /// `(ϱ, q)` of a composition.
    pub fn reduce(&self, rho: &Composition) -> Result<ReducedState> {
        let mu = self.model.chemical_potentials(rho)?;
        let (q, _) = self.basis.decompose(&mu);
        Ok(ReducedState::new(rho.total(), q))
    }

    /// Full evaluation at `(ϱ, q)`: reconstruction, `R`, `P` and their first
    /// derivatives.
    pub fn evaluate(&self, state: &ReducedState, warm: Option<&WarmStart>) -> Result<ReducedPoint> {
        let n = self.num_species();
        let (shift, rho) = self.solve_shift(state, warm)?;
        let mut mu = &self.basis.q * &state.q;
        mu.add_scalar_mut(shift);
        let hess = self.model.hess_raw(&rho);
        let hess_conj = invert_spd(&hess)?;
        let ones = DVector::from_element(n, 1.0);
        let qm = &self.basis.q;
        let a = &hess_conj * &ones;
        let c = ones.dot(&a);
        let b = qm.transpose() * &a;
        let r = qm.transpose() * &rho;
        let r_rho = &b / c;
        let r_q = qm.transpose() * &hess_conj * qm - (&b * b.transpose()) / c;
        let total = rho.sum();
        let p = rho.dot(&mu) - self.model.h_raw(&rho);
        let p_rho = total / c;
        let p_q = &r - total * &r_rho;
        let drho_dvarrho = &a / c;
        let drho_dq = &hess_conj * qm - (&a * b.transpose()) / c;
        Ok(ReducedPoint {
            shift,
            rho,
            mu,
            hess_conj,
            r,
            r_rho,
            r_q,
            p,
            p_rho,
            p_q,
            drho_dvarrho,
            drho_dq,
        })
    }

    /// `(R, R_q, R_ϱ)`.
    pub fn r_bundle(
        &self,
        state: &ReducedState,
    ) -> Result<(DVector<f64>, DMatrix<f64>, DVector<f64>)> {
        let pt = self.evaluate(state, None)?;
        Ok((pt.r, pt.r_q, pt.r_rho))
    }

    /// `(P, P_ϱ, P_q)`.
    pub fn p_bundle(&self, state: &ReducedState) -> Result<(f64, f64, DVector<f64>)> {
        let pt = self.evaluate(state, None)?;
        Ok((pt.p, pt.p_rho, pt.p_q))
    }

    /// `∂𝓜/∂ϱ = 1 / (D²h* 1ᴺ·1ᴺ)`.
    pub fn shift_derivative_varrho(&self, state: &ReducedState) -> Result<f64> {
        let pt = self.evaluate(state, None)?;
        Ok(1.0 / pt.hess_conj.sum())
    }
}

pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    match a.clone().cholesky() {
        Some(ch) => Ok(ch.solve(b)),
        None => a.clone().lu().solve(b).ok_or_else(|| Error::Singular {
            context: "Hessian solve".into(),
        }),
    }
}

pub(crate) fn invert_spd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = match a.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => a.clone().try_inverse().ok_or_else(|| Error::Singular {
            context: "Hessian inversion".into(),
        })?,
    };
    // symmetrise away rounding
    Ok((&inv + inv.transpose()) * 0.5)
}
