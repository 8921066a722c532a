//! Cellwise coefficients of the reduced system and their second-order jets.

use nalgebra::{DMatrix, DVector};

use crate::changevar::{ChangeOfVariables, ReducedState, WarmStart};
use crate::discretization::Field;
use crate::error::{Error, Result};
use crate::mobility::{OnsagerSpec, ReactionSpec};

/// Newtonian stress in 1D reduces to `(λ + 2η) v_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viscosity {
    pub bulk: f64,
    pub shear: f64,
}

impl Viscosity {
    pub fn effective(&self) -> f64 {
        self.bulk + 2.0 * self.shear
    }
}

/// The constitutive data of a mixture in reduced variables.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub cv: ChangeOfVariables,
    pub mobility: OnsagerSpec,
    pub reaction: ReactionSpec,
    pub viscosity: Viscosity,
    /// Relative step of the central differences used for second derivatives.
    pub jet_step: f64,
}

/// `R, P, M̃, r̃` and their first derivatives at one `(ϱ, q)`.
#[derive(Debug, Clone)]
pub struct Coeffs {
    pub rho: DVector<f64>,
    pub p: f64,
    pub r: DVector<f64>,
    pub r_rho: DVector<f64>,
    pub r_q: DMatrix<f64>,
    pub p_rho: f64,
    pub p_q: DVector<f64>,
    pub mt: DMatrix<f64>,
    pub mt_rho: DMatrix<f64>,
    pub mt_q: Vec<DMatrix<f64>>,
    pub rt: DVector<f64>,
    pub rt_rho: DVector<f64>,
    pub rt_q: DMatrix<f64>,
    pub warm: WarmStart,
}

/// Partial derivatives of the first-derivative coefficients with respect to
/// each coordinate of `(ϱ, q_1, …, q_{N−1})`.
#[derive(Debug, Clone)]
pub struct Jets {
    pub r_rho: Vec<DVector<f64>>,
    pub r_q: Vec<DMatrix<f64>>,
    pub p_rho: Vec<f64>,
    pub p_q: Vec<DVector<f64>>,
    pub mt_rho: Vec<DMatrix<f64>>,
    pub mt_q: Vec<Vec<DMatrix<f64>>>,
}

/// Directional derivatives of the first-derivative coefficients.
#[derive(Debug, Clone)]
pub struct CoeffVariation {
    pub r_rho: DVector<f64>,
    pub r_q: DMatrix<f64>,
    pub p_rho: f64,
    pub p_q: DVector<f64>,
    pub mt_rho: DMatrix<f64>,
    pub mt_q: Vec<DMatrix<f64>>,
}

impl Mixture {
    pub fn new(
        cv: ChangeOfVariables,
        mobility: OnsagerSpec,
        reaction: ReactionSpec,
        viscosity: Viscosity,
    ) -> Result<Self> {
        let n = cv.num_species();
        reaction.validate(n)?;
        if !(viscosity.effective() > 0.0) || viscosity.shear < 0.0 {
            return Err(Error::Parameter(format!(
                "effective viscosity {} must be positive",
                viscosity.effective()
            )));
        }
        Ok(Self {
            cv,
            mobility,
            reaction,
            viscosity,
            jet_step: 1e-4,
        })
    }

    pub fn num_species(&self) -> usize {
        self.cv.num_species()
    }

    pub fn num_q(&self) -> usize {
        self.cv.num_species() - 1
    }

    pub fn coeffs(
        &self,
        varrho: f64,
        q: &DVector<f64>,
        warm: Option<&WarmStart>,
    ) -> Result<Coeffs> {
        let state = ReducedState::new(varrho, q.clone());
        let pt = self.cv.evaluate(&state, warm)?;
        let mob = self.mobility.reduced(self.cv.basis(), &pt)?;
        let react = self.reaction.reduced(self.cv.basis(), &pt);
        Ok(Coeffs {
            warm: pt.warm_start(),
            rho: pt.rho,
            p: pt.p,
            r: pt.r,
            r_rho: pt.r_rho,
            r_q: pt.r_q,
            p_rho: pt.p_rho,
            p_q: pt.p_q,
            mt: mob.mt,
            mt_rho: mob.mt_rho,
            mt_q: mob.mt_q,
            rt: react.rt,
            rt_rho: react.rt_rho,
            rt_q: react.rt_q,
        })
    }

    /// Coefficients in every cell. `warm` supplies per-cell starting points,
    /// typically the coefficients of the previous time level.
    pub fn coeff_field(
        &self,
        varrho: &Field,
        q: &Field,
        warm: Option<&[Coeffs]>,
    ) -> Result<Vec<Coeffs>> {
        let n = varrho.len();
        if q.len() != n || q.comps() != self.num_q() {
            return Err(Error::Shape(
                "q field does not match ϱ field or species count".into(),
            ));
        }
        let mut out: Vec<Coeffs> = Vec::with_capacity(n);
        for j in 0..n {
            let start = match warm {
                Some(w) => Some(&w[j].warm),
                None => out.last().map(|c| &c.warm),
            };
            out.push(self.coeffs(varrho.get(j, 0), &q.cell_vec(j), start)?);
        }
        Ok(out)
    }

    /// Second derivatives by central differences of the analytic first
    /// derivatives.
    pub fn jets(&self, varrho: f64, q: &DVector<f64>, base: &Coeffs) -> Result<Jets> {
        let nq = self.num_q();
        let mut jets = Jets {
            r_rho: Vec::with_capacity(nq + 1),
            r_q: Vec::with_capacity(nq + 1),
            p_rho: Vec::with_capacity(nq + 1),
            p_q: Vec::with_capacity(nq + 1),
            mt_rho: Vec::with_capacity(nq + 1),
            mt_q: Vec::with_capacity(nq + 1),
        };
        for i in 0..=nq {
            let (plus, minus, h) = if i == 0 {
                let h = (self.jet_step * varrho.max(1.0)).min(0.5 * varrho);
                (
                    self.coeffs(varrho + h, q, Some(&base.warm))?,
                    self.coeffs(varrho - h, q, Some(&base.warm))?,
                    h,
                )
            } else {
                let h = self.jet_step * q[i - 1].abs().max(1.0);
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[i - 1] += h;
                qm[i - 1] -= h;
                (
                    self.coeffs(varrho, &qp, Some(&base.warm))?,
                    self.coeffs(varrho, &qm, Some(&base.warm))?,
                    h,
                )
            };
            let s = 0.5 / h;
            jets.r_rho.push((&plus.r_rho - &minus.r_rho) * s);
            jets.r_q.push((&plus.r_q - &minus.r_q) * s);
            jets.p_rho.push((plus.p_rho - minus.p_rho) * s);
            jets.p_q.push((&plus.p_q - &minus.p_q) * s);
            jets.mt_rho.push((&plus.mt_rho - &minus.mt_rho) * s);
            jets.mt_q.push(
                plus.mt_q
                    .iter()
                    .zip(&minus.mt_q)
                    .map(|(a, b)| (a - b) * s)
                    .collect(),
            );
        }
        Ok(jets)
    }
}

impl Coeffs {
    /// `δM̃ = M̃_ϱ σ + Σ_j M̃_{q_j} r_j`.
    pub fn delta_mt(&self, sigma: f64, r: &[f64]) -> DMatrix<f64> {
        let mut out = &self.mt_rho * sigma;
        for (m, rj) in self.mt_q.iter().zip(r) {
            out += m * *rj;
        }
        out
    }
}

impl Jets {
    /// `Σ_i dir_i ∂_i X` with `dir = (σ, r_1, …, r_{N−1})`.
    pub fn along(&self, dir: &[f64]) -> CoeffVariation {
        let mut v = CoeffVariation {
            r_rho: &self.r_rho[0] * dir[0],
            r_q: &self.r_q[0] * dir[0],
            p_rho: self.p_rho[0] * dir[0],
            p_q: &self.p_q[0] * dir[0],
            mt_rho: &self.mt_rho[0] * dir[0],
            mt_q: self.mt_q[0].iter().map(|m| m * dir[0]).collect(),
        };
        for (i, d) in dir.iter().enumerate().skip(1) {
            v.r_rho += &self.r_rho[i] * *d;
            v.r_q += &self.r_q[i] * *d;
            v.p_rho += self.p_rho[i] * d;
            v.p_q += &self.p_q[i] * *d;
            v.mt_rho += &self.mt_rho[i] * *d;
            for (acc, m) in v.mt_q.iter_mut().zip(&self.mt_q[i]) {
                *acc += m * *d;
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::changevar::{BasisChoice, BasisPair};
    use crate::thermo::{FreeEnergyModel, SpeciesSystem};

    fn mixture() -> Mixture {
        let model =
            FreeEnergyModel::ideal_gas(SpeciesSystem::new(vec![1.0, 2.0, 3.0], 1.0).unwrap(), 1.0)
                .unwrap();
        let cv = ChangeOfVariables::new(
            model,
            BasisPair::new(3, &BasisChoice::LastSpeciesDifferences).unwrap(),
        )
        .unwrap();
        Mixture::new(
            cv,
            OnsagerSpec::constant(DMatrix::identity(3, 3)).unwrap(),
            ReactionSpec::LinearRelaxation { rate: 0.5 },
            Viscosity {
                bulk: 0.5,
                shear: 0.25,
            },
        )
        .unwrap()
    }

    #[test]
    fn effective_viscosity() {
        assert_eq!(
            Viscosity {
                bulk: 0.5,
                shear: 0.25
            }
            .effective(),
            1.0
        );
    }

    #[test]
    fn rejects_nonpositive_viscosity() {
        let m = mixture();
        assert!(Mixture::new(
            m.cv.clone(),
            m.mobility.clone(),
            ReactionSpec::None,
            Viscosity {
                bulk: 0.0,
                shear: 0.0
            }
        )
        .is_err());
    }

    #[test]
    fn jets_match_finite_differences_of_coefficients() {
        let m = mixture();
        let q = DVector::from_vec(vec![0.2, -0.1]);
        let base = m.coeffs(1.4, &q, None).unwrap();
        let jets = m.jets(1.4, &q, &base).unwrap();
        let dir = [0.3, -0.5, 0.7];
        let d = jets.along(&dir);
        let h = 1e-5;
        let at = |s: f64| {
            let qs = &q + DVector::from_vec(vec![dir[1], dir[2]]) * s;
            m.coeffs(1.4 + s * dir[0], &qs, None).unwrap()
        };
        let (p, n) = (at(h), at(-h));
        let fd_rq = (&p.r_q - &n.r_q) / (2.0 * h);
        assert!((fd_rq - &d.r_q).amax() < 1e-6);
        assert!(((p.p_rho - n.p_rho) / (2.0 * h) - d.p_rho).abs() < 1e-6);
        let fd_mt = (&p.mt_rho - &n.mt_rho) / (2.0 * h);
        assert!((fd_mt - &d.mt_rho).amax() < 1e-6);
    }

    #[test]
    fn delta_mt_is_the_directional_derivative() {
        let m = mixture();
        let q = DVector::from_vec(vec![0.1, 0.3]);
        let c = m.coeffs(0.9, &q, None).unwrap();
        let h = 1e-6;
        let p = m
            .coeffs(0.9 + 2.0 * h, &(&q + DVector::from_vec(vec![-h, h])), None)
            .unwrap();
        let fd = (&p.mt - &c.mt) / h;
        assert!((fd - c.delta_mt(2.0, &[-1.0, 1.0])).amax() < 1e-5);
    }
}
