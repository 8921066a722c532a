//! External body forces projected onto the reduced variables.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::discretization::{Bc, Field, Grid1D};
use crate::error::{Error, Result};

/// A user supplied force in reduced form.
pub trait ForcingField: fmt::Debug + Send + Sync {
    /// `b̃(x, t) ∈ R^{N−1}`, zero at both endpoints.
    fn btilde(&self, x: f64, t: f64) -> DVector<f64>;
    fn btilde_x(&self, x: f64, t: f64) -> DVector<f64>;
    /// `b̄(x, t)`.
    fn bbar(&self, x: f64, t: f64) -> f64;
}

/// Sine families on `[0, L]`:
/// `b̃ = a sin(kπx/L)` and `b̄ = c + β sin(k̄πx/L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticForcing {
    pub btilde_amplitude: Vec<f64>,
    pub btilde_mode: u32,
    pub bbar_constant: f64,
    pub bbar_amplitude: f64,
    pub bbar_mode: u32,
}

#[derive(Debug, Clone, Default)]
pub enum ForcingSpec {
    #[default]
    None,
    Analytic(AnalyticForcing),
    Custom(Arc<dyn ForcingField>),
}

/// Forcing sampled on a grid at one time.
#[derive(Debug, Clone)]
pub struct ForcingSample {
    pub btilde: Field,
    pub btilde_x: Field,
    pub bbar: Field,
    zero: bool,
}

impl ForcingSample {
    pub fn zeros(n: usize, nq: usize) -> Self {
        Self {
            btilde: Field::zeros(n, nq, Bc::DirichletZero),
            btilde_x: Field::zeros(n, nq, Bc::None),
            bbar: Field::zeros(n, 1, Bc::None),
            zero: true,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }
}

impl ForcingSpec {
    pub fn is_zero(&self) -> bool {
        match self {
            ForcingSpec::None => true,
            ForcingSpec::Analytic(a) => {
                a.btilde_amplitude.iter().all(|v| *v == 0.0)
                    && a.bbar_constant == 0.0
                    && a.bbar_amplitude == 0.0
            }
            ForcingSpec::Custom(_) => false,
        }
    }

    /// Checks dimensions and that `b̃` vanishes at the endpoints.
    pub fn validate(&self, length: f64, nq: usize) -> Result<()> {
        match self {
            ForcingSpec::None => Ok(()),
            ForcingSpec::Analytic(a) => {
                if a.btilde_amplitude.len() != nq {
                    return Err(Error::Parameter(format!(
                        "b̃ amplitude has {} components, expected {nq}",
                        a.btilde_amplitude.len()
                    )));
                }
                let finite = a
                    .btilde_amplitude
                    .iter()
                    .chain([&a.bbar_constant, &a.bbar_amplitude])
                    .all(|v| v.is_finite());
                if !finite {
                    return Err(Error::Parameter("forcing parameters must be finite".into()));
                }
                Ok(())
            }
            ForcingSpec::Custom(f) => {
                for x in [0.0, length] {
                    let b = f.btilde(x, 0.0);
                    if b.len() != nq {
                        return Err(Error::Parameter(format!(
                            "b̃ has {} components, expected {nq}",
                            b.len()
                        )));
                    }
                    if b.amax() > 1e-12 {
                        return Err(Error::Parameter(format!(
                            "b̃ must vanish at the boundary, |b̃({x})| = {:e}",
                            b.amax()
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn sample(&self, grid: &Grid1D, nq: usize, t: f64) -> Result<ForcingSample> {
        let n = grid.len();
        match self {
            ForcingSpec::None => Ok(ForcingSample::zeros(n, nq)),
            ForcingSpec::Analytic(a) => {
                let k = a.btilde_mode as f64 * PI / grid.length();
                let kb = a.bbar_mode as f64 * PI / grid.length();
                let btilde = Field::from_fn(grid, nq, Bc::DirichletZero, |x| {
                    a.btilde_amplitude
                        .iter()
                        .map(|c| c * (k * x).sin())
                        .collect()
                })?;
                let btilde_x = Field::from_fn(grid, nq, Bc::None, |x| {
                    a.btilde_amplitude
                        .iter()
                        .map(|c| c * k * (k * x).cos())
                        .collect()
                })?;
                let bbar = Field::from_fn(grid, 1, Bc::None, |x| {
                    vec![a.bbar_constant + a.bbar_amplitude * (kb * x).sin()]
                })?;
                Ok(ForcingSample {
                    btilde,
                    btilde_x,
                    bbar,
                    zero: self.is_zero(),
                })
            }
            ForcingSpec::Custom(f) => {
                let btilde = Field::from_fn(grid, nq, Bc::DirichletZero, |x| {
                    f.btilde(x, t).iter().copied().collect()
                })?;
                let btilde_x = Field::from_fn(grid, nq, Bc::None, |x| {
                    f.btilde_x(x, t).iter().copied().collect()
                })?;
                let bbar = Field::from_fn(grid, 1, Bc::None, |x| vec![f.bbar(x, t)])?;
                Ok(ForcingSample {
                    btilde,
                    btilde_x,
                    bbar,
                    zero: false,
                })
            }
        }
    }
}
