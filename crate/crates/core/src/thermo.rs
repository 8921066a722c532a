//! Free-energy densities of Legendre type on the open positive orthant and
//! their convex conjugates.
//!
//! A [`FreeEnergyModel`] provides `h(ρ)`, the chemical potentials
//! `μ = ∇h(ρ)` and the Hessian `D²h(ρ)` in closed form. The conjugate side
//! (`∇h*`, `h*`) is realised numerically: [`FreeEnergyModel::invert_gradient`]
//! solves `∇h(ρ) = μ` with a damped Newton iteration that never leaves the
//! orthant, and the pressure follows from the Euler relation
//! `p = −h(ρ) + ρ·μ = h*(μ)`.
//!
//! The Boltzmann constant and the (fixed) temperature only ever appear as the
//! product `k_B θ`, stored as [`SpeciesSystem::kt`].

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Species count, molecular masses and the thermal energy scale `k_B θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSystem {
    masses: Vec<f64>,
    kt: f64,
}

impl SpeciesSystem {
    pub fn new(masses: Vec<f64>, kt: f64) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::Parameter(format!(
                "need at least two species, got {}",
                masses.len()
            )));
        }
        if let Some((i, m)) = masses.iter().enumerate().find(|(_, m)| !(**m > 0.0)) {
            return Err(Error::Parameter(format!(
                "molecular mass m[{i}] = {m} must be > 0"
            )));
        }
        if !(kt > 0.0) || !kt.is_finite() {
            return Err(Error::Parameter(format!(
                "thermal scale k_B θ = {kt} must be > 0"
            )));
        }
        Ok(Self { masses, kt })
    }

    /// `N` species of unit mass at `k_B θ = 1`.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n], 1.0)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn kt(&self) -> f64 {
        self.kt
    }
}

/// Partial mass densities `ρ_1, …, ρ_N`, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition(DVector<f64>);

impl Composition {
    pub fn new(rho: DVector<f64>) -> Result<Self> {
        check_positive(rho.as_slice())?;
        Ok(Self(rho))
    }

    pub fn from_slice(rho: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(rho))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total mass density `ϱ = Σ ρ_i`.
    pub fn total(&self) -> f64 {
        self.0.sum()
    }
}

/// Chemical potentials `μ_i = ∂h/∂ρ_i`; unconstrained in `R^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChemicalPotentials(pub DVector<f64>);

impl ChemicalPotentials {
    pub fn from_slice(mu: &[f64]) -> Self {
        Self(DVector::from_column_slice(mu))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }
}

pub(crate) fn check_positive(rho: &[f64]) -> Result<()> {
    match rho
        .iter()
        .enumerate()
        .find(|(_, r)| !(**r > 0.0) || !r.is_finite())
    {
        Some((index, &value)) => Err(Error::Domain { index, value }),
        None => Ok(()),
    }
}

/// A strictly convex scalar function on `(0, ∞)` given with its first two
/// derivatives. Used for the volume-extension term of the elastic mixture.
pub trait ConvexScalar: fmt::Debug + Send + Sync {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
    fn second_derivative(&self, t: f64) -> f64;
}

/// `F(t) = t ln t`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EntropyLike;

impl ConvexScalar for EntropyLike {
    fn value(&self, t: f64) -> f64 {
        t * t.ln()
    }
    fn derivative(&self, t: f64) -> f64 {
        t.ln() + 1.0
    }
    fn second_derivative(&self, t: f64) -> f64 {
        1.0 / t
    }
}

/// `F(t) = k (t − ln t − 1) + t ln t`, stiffer against compression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StiffEntropy {
    pub k: f64,
}

impl ConvexScalar for StiffEntropy {
    fn value(&self, t: f64) -> f64 {
        self.k * (t - t.ln() - 1.0) + t * t.ln()
    }
    fn derivative(&self, t: f64) -> f64 {
        self.k * (1.0 - 1.0 / t) + t.ln() + 1.0
    }
    fn second_derivative(&self, t: f64) -> f64 {
        self.k / (t * t) + 1.0 / t
    }
}

/// The shipped free-energy families.
#[derive(Debug, Clone)]
pub enum FreeEnergyKind {
    /// `h = k_Bθ Σ n_i ln(n_i / n_ref)`.
    IdealGas { n_ref: f64 },
    /// `h = K F(Σ n_i v̄_i) + k_Bθ Σ n_i ln(n_i / n)`.
    ElasticMixture {
        bulk: f64,
        v_ref: Vec<f64>,
        volume: Arc<dyn ConvexScalar>,
    },
    /// `h = Σ K_i s_i (s_i^{α_i − 1} + ln s_i) + k_Bθ Σ n_i ln(n_i / n)` with
    /// `s_i = n_i v̄_i`.
    PowerLaw {
        k: Vec<f64>,
        alpha: Vec<f64>,
        v_ref: Vec<f64>,
    },
}

/// Stopping rule for the Newton inversion of `∇h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
        }
    }
}

/// A convex free-energy density `h(ρ)` of Legendre type.
#[derive(Debug, Clone)]
pub struct FreeEnergyModel {
    species: SpeciesSystem,
    kind: FreeEnergyKind,
}

impl FreeEnergyModel {
    pub fn new(species: SpeciesSystem, kind: FreeEnergyKind) -> Result<Self> {
        let n = species.len();
        let check_vec = |name: &str, v: &[f64], min: f64, strict: bool| -> Result<()> {
            if v.len() != n {
                return Err(Error::Parameter(format!(
                    "{name} has {} entries, expected {n}",
                    v.len()
                )));
            }
            for (i, x) in v.iter().enumerate() {
                let ok = if strict { *x > min } else { *x >= min };
                if !ok || !x.is_finite() {
                    return Err(Error::Parameter(format!("{name}[{i}] = {x} out of range")));
                }
            }
            Ok(())
        };
        match &kind {
            FreeEnergyKind::IdealGas { n_ref } => {
                if !(*n_ref > 0.0) {
                    return Err(Error::Parameter(format!("n_ref = {n_ref} must be > 0")));
                }
            }
            FreeEnergyKind::ElasticMixture { bulk, v_ref, .. } => {
                if !(*bulk > 0.0) {
                    return Err(Error::Parameter(format!(
                        "bulk modulus K = {bulk} must be > 0"
                    )));
                }
                check_vec("v_ref", v_ref, 0.0, true)?;
            }
            FreeEnergyKind::PowerLaw { k, alpha, v_ref } => {
                check_vec("K", k, 0.0, true)?;
                check_vec("alpha", alpha, 1.0, false)?;
                check_vec("v_ref", v_ref, 0.0, true)?;
            }
        }
        Ok(Self { species, kind })
    }

    pub fn ideal_gas(species: SpeciesSystem, n_ref: f64) -> Result<Self> {
        Self::new(species, FreeEnergyKind::IdealGas { n_ref })
    }

    pub fn species(&self) -> &SpeciesSystem {
        &self.species
    }

    pub fn kind(&self) -> &FreeEnergyKind {
        &self.kind
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    /// A strictly positive default starting point: one particle per unit volume.
    pub fn default_guess(&self) -> DVector<f64> {
        DVector::from_column_slice(self.species.masses())
    }

    /// The free-energy density `h(ρ)`.
    pub fn free_energy(&self, rho: &Composition) -> Result<f64> {
        self.check_len(rho.len())?;
        Ok(self.h_raw(rho.values()))
    }

    /// `μ = ∇h(ρ)`.
    pub fn chemical_potentials(&self, rho: &Composition) -> Result<ChemicalPotentials> {
        self.check_len(rho.len())?;
        Ok(ChemicalPotentials(self.mu_raw(rho.values())))
    }

    /// `D²h(ρ)`, symmetric positive definite.
    pub fn hessian(&self, rho: &Composition) -> Result<DMatrix<f64>> {
        self.check_len(rho.len())?;
        Ok(self.hess_raw(rho.values()))
    }

    /// Thermodynamic pressure from the Euler relation `p = −h + ρ·∇h`.
    pub fn pressure(&self, rho: &Composition) -> Result<f64> {
        self.check_len(rho.len())?;
        let r = rho.values();
        Ok(r.dot(&self.mu_raw(r)) - self.h_raw(r))
    }

    /// Solves `∇h(ρ) = μ`, i.e. evaluates `∇h*(μ)`.
    pub fn invert_gradient(
        &self,
        mu: &ChemicalPotentials,
        guess: &Composition,
        opts: NewtonOptions,
    ) -> Result<Composition> {
        self.check_len(mu.0.len())?;
        self.check_len(guess.len())?;
        let rho = self.invert_raw(&mu.0, guess.values().clone(), opts)?;
        Ok(Composition(rho))
    }

    /// The convex conjugate `h*(μ) = ρ·μ − h(ρ)` with `ρ = ∇h*(μ)`.
    pub fn conjugate(
        &self,
        mu: &ChemicalPotentials,
        guess: &Composition,
        opts: NewtonOptions,
    ) -> Result<f64> {
        let rho = self.invert_gradient(mu, guess, opts)?;
        Ok(rho.values().dot(&mu.0) - self.h_raw(rho.values()))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_species() {
            return Err(Error::Shape(format!(
                "vector of length {len} for a {}-species model",
                self.num_species()
            )));
        }
        Ok(())
    }

    pub(crate) fn h_raw(&self, rho: &DVector<f64>) -> f64 {
        let m = self.species.masses();
        let kt = self.species.kt();
        match &self.kind {
            FreeEnergyKind::IdealGas { n_ref } => rho
                .iter()
                .zip(m)
                .map(|(r, mi)| {
                    let ni = r / mi;
                    kt * ni * (ni / n_ref).ln()
                })
                .sum(),
            FreeEnergyKind::ElasticMixture {
                bulk,
                v_ref,
                volume,
            } => {
                let s: f64 = rho
                    .iter()
                    .zip(m)
                    .zip(v_ref)
                    .map(|((r, mi), v)| r * v / mi)
                    .sum();
                bulk * volume.value(s) + self.mixing_h(rho)
            }
            FreeEnergyKind::PowerLaw { k, alpha, v_ref } => {
                let mut h = self.mixing_h(rho);
                for i in 0..rho.len() {
                    let s = rho[i] * v_ref[i] / m[i];
                    h += k[i] * (s.powf(alpha[i]) + s * s.ln());
                }
                h
            }
        }
    }

    pub(crate) fn mu_raw(&self, rho: &DVector<f64>) -> DVector<f64> {
        let m = self.species.masses();
        let kt = self.species.kt();
        match &self.kind {
            FreeEnergyKind::IdealGas { n_ref } => DVector::from_iterator(
                rho.len(),
                rho.iter()
                    .zip(m)
                    .map(|(r, mi)| kt / mi * (1.0 + (r / mi / n_ref).ln())),
            ),
            FreeEnergyKind::ElasticMixture {
                bulk,
                v_ref,
                volume,
            } => {
                let mut mu = self.mixing_mu(rho);
                let s: f64 = rho
                    .iter()
                    .zip(m)
                    .zip(v_ref)
                    .map(|((r, mi), v)| r * v / mi)
                    .sum();
                let fp = bulk * volume.derivative(s);
                for i in 0..rho.len() {
                    mu[i] += fp * v_ref[i] / m[i];
                }
                mu
            }
            FreeEnergyKind::PowerLaw { k, alpha, v_ref } => {
                let mut mu = self.mixing_mu(rho);
                for i in 0..rho.len() {
                    let vi = v_ref[i] / m[i];
                    let s = rho[i] * vi;
                    mu[i] += k[i] * vi * (alpha[i] * s.powf(alpha[i] - 1.0) + s.ln() + 1.0);
                }
                mu
            }
        }
    }

    pub(crate) fn hess_raw(&self, rho: &DVector<f64>) -> DMatrix<f64> {
        let m = self.species.masses();
        let kt = self.species.kt();
        let n = rho.len();
        match &self.kind {
            FreeEnergyKind::IdealGas { .. } => DMatrix::from_diagonal(&DVector::from_iterator(
                n,
                rho.iter().zip(m).map(|(r, mi)| kt / (mi * r)),
            )),
            FreeEnergyKind::ElasticMixture {
                bulk,
                v_ref,
                volume,
            } => {
                let mut hess = self.mixing_hess(rho);
                let v: Vec<f64> = v_ref.iter().zip(m).map(|(v, mi)| v / mi).collect();
                let s: f64 = rho.iter().zip(&v).map(|(r, vi)| r * vi).sum();
                let fpp = bulk * volume.second_derivative(s);
                for i in 0..n {
                    for j in 0..n {
                        hess[(i, j)] += fpp * v[i] * v[j];
                    }
                }
                hess
            }
            FreeEnergyKind::PowerLaw { k, alpha, v_ref } => {
                let mut hess = self.mixing_hess(rho);
                for i in 0..n {
                    let vi = v_ref[i] / m[i];
                    let s = rho[i] * vi;
                    hess[(i, i)] += k[i]
                        * vi
                        * vi
                        * (alpha[i] * (alpha[i] - 1.0) * s.powf(alpha[i] - 2.0) + 1.0 / s);
                }
                hess
            }
        }
    }

    fn mixing_h(&self, rho: &DVector<f64>) -> f64 {
        let m = self.species.masses();
        let n_tot: f64 = rho.iter().zip(m).map(|(r, mi)| r / mi).sum();
        self.species.kt()
            * rho
                .iter()
                .zip(m)
                .map(|(r, mi)| {
                    let ni = r / mi;
                    ni * (ni / n_tot).ln()
                })
                .sum::<f64>()
    }

    fn mixing_mu(&self, rho: &DVector<f64>) -> DVector<f64> {
        let m = self.species.masses();
        let kt = self.species.kt();
        let n_tot: f64 = rho.iter().zip(m).map(|(r, mi)| r / mi).sum();
        DVector::from_iterator(
            rho.len(),
            rho.iter()
                .zip(m)
                .map(|(r, mi)| kt / mi * (r / mi / n_tot).ln()),
        )
    }

    fn mixing_hess(&self, rho: &DVector<f64>) -> DMatrix<f64> {
        let m = self.species.masses();
        let kt = self.species.kt();
        let n = rho.len();
        let n_tot: f64 = rho.iter().zip(m).map(|(r, mi)| r / mi).sum();
        DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { m[j] / rho[j] } else { 0.0 };
            kt / (m[i] * m[j]) * (diag - 1.0 / n_tot)
        })
    }

    /// Damped Newton for `∇h(ρ) = μ`, minimising the strictly convex merit
    /// `h(ρ) − μ·ρ`. Steps are halved until the iterate stays in the orthant
    /// and the merit does not increase.
    pub(crate) fn invert_raw(
        &self,
        mu: &DVector<f64>,
        mut rho: DVector<f64>,
        opts: NewtonOptions,
    ) -> Result<DVector<f64>> {
        check_positive(rho.as_slice())?;
        let floor = 64.0 * f64::EPSILON * (1.0 + mu.amax());
        let tol = opts.tol.max(floor);
        let mut residual = self.mu_raw(&rho) - mu;
        let mut res_norm = residual.amax();
        let mut merit = self.h_raw(&rho) - mu.dot(&rho);
        for _ in 0..opts.max_iter {
            if res_norm <= tol {
                return Ok(rho);
            }
            let hess = self.hess_raw(&rho);
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&residual)),
                None => hess
                    .lu()
                    .solve(&(-&residual))
                    .ok_or_else(|| Error::Singular {
                        context: "free-energy Hessian in Newton inversion".into(),
                    })?,
            };
            let slope = residual.dot(&step);
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-14 {
                let trial = &rho + t * &step;
                if trial.iter().all(|r| *r > 0.0) {
                    let trial_merit = self.h_raw(&trial) - mu.dot(&trial);
                    let slack = 1e-13 * (merit.abs() + 1.0);
                    if trial_merit <= merit + 1e-4 * t * slope + slack {
                        accepted = Some((trial, trial_merit));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((next, next_merit)) = accepted else {
                return Err(Error::Convergence {
                    what: "chemical potential inversion (line search)",
                    iterations: opts.max_iter,
                    residual: res_norm,
                });
            };
            rho = next;
            merit = next_merit;
            residual = self.mu_raw(&rho) - mu;
            res_norm = residual.amax();
        }
        if res_norm <= tol {
            return Ok(rho);
        }
        Err(Error::Convergence {
            what: "chemical potential inversion",
            iterations: opts.max_iter,
            residual: res_norm,
        })
    }
}
