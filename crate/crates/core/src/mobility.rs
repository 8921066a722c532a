//! Onsager mobility `M = 𝒫ᵀ M⁰ 𝒫`, its reduction `M̃ = Qᵀ M Q`, species
//! reactions and the spectral decomposition of products of SPD matrices.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::changevar::{BasisPair, ReducedPoint};
use crate::error::{Error, Result};
use crate::thermo::Composition;

/// A user supplied density-dependent SPD base matrix `M⁰(ρ)`.
pub trait DensityMatrix: fmt::Debug + Send + Sync {
    fn value(&self, rho: &DVector<f64>) -> DMatrix<f64>;

    /// `∂M⁰/∂ρ_i` when known in closed form.
    fn derivative(&self, _rho: &DVector<f64>, _i: usize) -> Option<DMatrix<f64>> {
        None
    }
}

#[derive(Debug, Clone)]
pub enum BaseMobility {
    Constant(DMatrix<f64>),
    /// `M⁰(ρ) = diag(d_i n_i)` with `n_i = ρ_i / m_i`.
    DiagonalNumberWeighted {
        d: Vec<f64>,
        masses: Vec<f64>,
    },
    Custom(Arc<dyn DensityMatrix>),
}

/// Recipe for the mobility matrix.
#[derive(Debug, Clone)]
pub struct OnsagerSpec {
    base: BaseMobility,
    n: usize,
    proj: DMatrix<f64>,
    /// Relative step for finite differences of `M⁰` in `ρ`.
    pub fd_step: f64,
}

/// `M̃` and its first derivatives at one reduced state.
#[derive(Debug, Clone)]
pub struct MobilityBundle {
    pub mt: DMatrix<f64>,
    pub mt_rho: DMatrix<f64>,
    /// `∂M̃/∂q_j` for `j = 1,…,N−1`.
    pub mt_q: Vec<DMatrix<f64>>,
}

impl OnsagerSpec {
    pub fn new(n: usize, base: BaseMobility) -> Result<Self> {
        match &base {
            BaseMobility::Constant(m0) => {
                if m0.nrows() != n || m0.ncols() != n {
                    return Err(Error::Shape(format!(
                        "M⁰ is {}×{}, expected {n}×{n}",
                        m0.nrows(),
                        m0.ncols()
                    )));
                }
                check_spd(m0, "M⁰")?;
            }
            BaseMobility::DiagonalNumberWeighted { d, masses } => {
                if d.len() != n || masses.len() != n {
                    return Err(Error::Shape(
                        "diagonal mobility needs N coefficients".into(),
                    ));
                }
                if let Some(x) = d.iter().chain(masses).find(|x| !(**x > 0.0)) {
                    return Err(Error::Parameter(format!(
                        "mobility coefficient {x} must be > 0"
                    )));
                }
            }
            BaseMobility::Custom(_) => {}
        }
        let ones = DVector::from_element(n, 1.0);
        let proj = DMatrix::identity(n, n) - (&ones * ones.transpose()) / n as f64;
        Ok(Self {
            base,
            n,
            proj,
            fd_step: 1e-6,
        })
    }

    pub fn constant(m0: DMatrix<f64>) -> Result<Self> {
        let n = m0.nrows();
        Self::new(n, BaseMobility::Constant(m0))
    }

    pub fn base(&self) -> &BaseMobility {
        &self.base
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.base, BaseMobility::Constant(_))
    }

    pub fn base_matrix(&self, rho: &DVector<f64>) -> DMatrix<f64> {
        match &self.base {
            BaseMobility::Constant(m0) => m0.clone(),
            BaseMobility::DiagonalNumberWeighted { d, masses } => DMatrix::from_diagonal(
                &DVector::from_iterator(self.n, (0..self.n).map(|i| d[i] * rho[i] / masses[i])),
            ),
            BaseMobility::Custom(f) => f.value(rho),
        }
    }

    /// `∂M⁰/∂ρ_i`, analytic when available, central differences otherwise.
    pub fn base_derivative(&self, rho: &DVector<f64>, i: usize) -> DMatrix<f64> {
        match &self.base {
            BaseMobility::Constant(_) => DMatrix::zeros(self.n, self.n),
            BaseMobility::DiagonalNumberWeighted { d, masses } => {
                let mut out = DMatrix::zeros(self.n, self.n);
                out[(i, i)] = d[i] / masses[i];
                out
            }
            BaseMobility::Custom(f) => f.derivative(rho, i).unwrap_or_else(|| {
                let h = self.fd_step * rho[i].max(1.0);
                // keep the lower stencil point inside the orthant
                let h = h.min(0.5 * rho[i]);
                let mut plus = rho.clone();
                let mut minus = rho.clone();
                plus[i] += h;
                minus[i] -= h;
                (f.value(&plus) - f.value(&minus)) / (2.0 * h)
            }),
        }
    }

    /// `M(ρ) = 𝒫ᵀ M⁰(ρ) 𝒫`: symmetric, positive semidefinite, kernel `1ᴺ`.
    pub fn build(&self, rho: &Composition) -> Result<DMatrix<f64>> {
        if rho.len() != self.n {
            return Err(Error::Shape(format!("composition of length {}", rho.len())));
        }
        let m0 = self.base_matrix(rho.values());
        check_spd(&m0, "M⁰(ρ)")?;
        Ok(&self.proj * m0 * &self.proj)
    }

    /// `M̃ = Qᵀ M Q` and its derivatives in `(ϱ, q)` by the chain rule through
    /// `∂ρ/∂ϱ` and `∂ρ/∂q`.
    pub fn reduced(&self, basis: &BasisPair, point: &ReducedPoint) -> Result<MobilityBundle> {
        let pq = &self.proj * basis.q_matrix();
        let m0 = self.base_matrix(&point.rho);
        let mt = pq.transpose() * &m0 * &pq;
        let nq = self.n - 1;
        if self.is_constant() {
            return Ok(MobilityBundle {
                mt,
                mt_rho: DMatrix::zeros(nq, nq),
                mt_q: vec![DMatrix::zeros(nq, nq); nq],
            });
        }
        let dm0: Vec<DMatrix<f64>> = (0..self.n)
            .map(|i| self.base_derivative(&point.rho, i))
            .collect();
        let along = |dir: &DVector<f64>| {
            let mut acc = DMatrix::zeros(self.n, self.n);
            for (i, d) in dm0.iter().enumerate() {
                acc += d * dir[i];
            }
            pq.transpose() * acc * &pq
        };
        let mt_rho = along(&point.drho_dvarrho);
        let mt_q = (0..nq)
            .map(|j| along(&point.drho_dq.column(j).into_owned()))
            .collect();
        Ok(MobilityBundle { mt, mt_rho, mt_q })
    }
}

/// A species production rate `r(ρ)` with `Σ_i r_i = 0`.
pub trait SpeciesRate: fmt::Debug + Send + Sync {
    fn rate(&self, rho: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, rho: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Default)]
pub enum ReactionSpec {
    #[default]
    None,
    /// Constant rates; must sum to zero.
    Constant(DVector<f64>),
    /// `r_i = −k (ρ_i − ϱ/N)`, relaxation towards equal partial densities.
    LinearRelaxation {
        rate: f64,
    },
    Custom(Arc<dyn SpeciesRate>),
}

/// `r̃ = Qᵀ r(ρ)` and its derivatives in `(ϱ, q)`.
#[derive(Debug, Clone)]
pub struct ReactionBundle {
    pub rt: DVector<f64>,
    pub rt_rho: DVector<f64>,
    pub rt_q: DMatrix<f64>,
}

impl ReactionSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        if let ReactionSpec::Constant(c) = self {
            if c.len() != n {
                return Err(Error::Shape(format!(
                    "reaction vector of length {}",
                    c.len()
                )));
            }
            if c.sum().abs() > 1e-12 * (1.0 + c.amax()) {
                return Err(Error::Parameter(format!(
                    "reaction rates sum to {} instead of 0",
                    c.sum()
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ReactionSpec::None)
    }

    pub fn rate(&self, rho: &DVector<f64>) -> DVector<f64> {
        let n = rho.len();
        match self {
            ReactionSpec::None => DVector::zeros(n),
            ReactionSpec::Constant(c) => c.clone(),
            ReactionSpec::LinearRelaxation { rate } => {
                let mean = rho.sum() / n as f64;
                rho.map(|r| -rate * (r - mean))
            }
            ReactionSpec::Custom(f) => f.rate(rho),
        }
    }

    pub fn jacobian(&self, rho: &DVector<f64>) -> DMatrix<f64> {
        let n = rho.len();
        match self {
            ReactionSpec::None | ReactionSpec::Constant(_) => DMatrix::zeros(n, n),
            ReactionSpec::LinearRelaxation { rate } => {
                (DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64)) * -*rate
            }
            ReactionSpec::Custom(f) => f.jacobian(rho),
        }
    }

    pub fn reduced(&self, basis: &BasisPair, point: &ReducedPoint) -> ReactionBundle {
        let q = basis.q_matrix();
        let nq = q.ncols();
        if self.is_zero() {
            return ReactionBundle {
                rt: DVector::zeros(nq),
                rt_rho: DVector::zeros(nq),
                rt_q: DMatrix::zeros(nq, nq),
            };
        }
        let jac = self.jacobian(&point.rho);
        ReactionBundle {
            rt: q.transpose() * self.rate(&point.rho),
            rt_rho: q.transpose() * &jac * &point.drho_dvarrho,
            rt_q: q.transpose() * &jac * &point.drho_dq,
        }
    }
}

/// Eigen-decomposition of `A B` for SPD `A`, `B`.
#[derive(Debug, Clone)]
pub struct SpdProductEigen {
    /// Real, strictly positive, ascending.
    pub values: DVector<f64>,
    /// Columns `ξ^i = A^{1/2} v^i`, eigenvectors of `A B`.
    pub vectors: DMatrix<f64>,
}

/// Spectrum of `A B` through the symmetric matrix `C = A^{1/2} B A^{1/2}`.
pub fn spd_product_eigs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<SpdProductEigen> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::Shape(
            "spd_product_eigs needs square matrices of equal size".into(),
        ));
    }
    let a_sqrt = spd_sqrt(a, "A")?;
    check_spd(b, "B")?;
    let c = &a_sqrt * b * &a_sqrt;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let v = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok(SpdProductEigen {
        values,
        vectors: a_sqrt * v,
    })
}

/// Symmetric square root of an SPD matrix.
pub fn spd_sqrt(a: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.min();
    if !(min > 0.0) {
        return Err(Error::NotSpd {
            context: name.to_string(),
            eigenvalue: min,
        });
    }
    let d = eig.eigenvalues.map(f64::sqrt);
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose())
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eig_range(a: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new((a + a.transpose()) * 0.5);
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

fn check_spd(m: &DMatrix<f64>, name: &str) -> Result<()> {
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * (1.0 + m.amax()) {
        return Err(Error::NotSpd {
            context: format!("{name} is not symmetric (asymmetry {asym:e})"),
            eigenvalue: f64::NAN,
        });
    }
    if m.clone().cholesky().is_none() {
        let (min, _) = eig_range(m);
        return Err(Error::NotSpd {
            context: name.to_string(),
            eigenvalue: min,
        });
    }
    Ok(())
}
