//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mixflow::changevar::{BasisChoice, BasisPair, ChangeOfVariables};
use mixflow::discretization::{Bc, Field, Grid1D, State};
use mixflow::mobility::{BaseMobility, OnsagerSpec, ReactionSpec};
use mixflow::scenario::{load_scenario, Scenario};
use mixflow::solver::{Mixture, Viscosity};
use mixflow::thermo::{
    Composition, EntropyLike, FreeEnergyKind, FreeEnergyModel, SpeciesSystem, StiffEntropy,
};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"))
}

pub fn shipped(name: &str) -> Scenario {
    load_scenario(&scenario_path(name)).expect("shipped scenario loads")
}

pub const REGRESSION: [&str; 3] = ["equilibrium", "perturbation", "ternary"];

pub fn masses(n: usize) -> Vec<f64> {
    (0..n).map(|i| 1.0 + 0.5 * i as f64).collect()
}

/// The three families with `n` species and fixed, admissible parameters.
pub fn models(n: usize) -> Vec<(&'static str, FreeEnergyModel)> {
    let species = SpeciesSystem::new(masses(n), 1.3).unwrap();
    let v_ref: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + 0.3 * i as f64)).collect();
    vec![
        (
            "ideal_gas",
            FreeEnergyModel::new(species.clone(), FreeEnergyKind::IdealGas { n_ref: 0.7 }).unwrap(),
        ),
        (
            "elastic_mixture",
            FreeEnergyModel::new(
                species.clone(),
                FreeEnergyKind::ElasticMixture {
                    bulk: 1.5,
                    v_ref: v_ref.clone(),
                    volume: Arc::new(EntropyLike),
                },
            )
            .unwrap(),
        ),
        (
            "elastic_stiff",
            FreeEnergyModel::new(
                species.clone(),
                FreeEnergyKind::ElasticMixture {
                    bulk: 0.8,
                    v_ref: v_ref.clone(),
                    volume: Arc::new(StiffEntropy { k: 0.5 }),
                },
            )
            .unwrap(),
        ),
        (
            "power_law",
            FreeEnergyModel::new(
                species,
                FreeEnergyKind::PowerLaw {
                    k: (0..n).map(|i| 0.5 + 0.25 * i as f64).collect(),
                    alpha: (0..n).map(|i| 1.5 + 0.5 * i as f64).collect(),
                    v_ref,
                },
            )
            .unwrap(),
        ),
    ]
}

/// Log-uniform components in `[0.05, 5]`.
pub fn random_composition(rng: &mut StdRng, n: usize) -> Composition {
    Composition::new(DVector::from_fn(n, |_, _| {
        (rng.gen_range(0.05f64.ln()..5f64.ln())).exp()
    }))
    .unwrap()
}

/// `B Bᵀ + δ I` with uniform entries of `B`.
pub fn random_spd(rng: &mut StdRng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(n, n) * rng.gen_range(0.05..1.0)
}

pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = a
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn ideal_mixture(n: usize, shear: f64) -> Mixture {
    let model =
        FreeEnergyModel::ideal_gas(SpeciesSystem::new(masses(n), 1.0).unwrap(), 1.0).unwrap();
    let cv = ChangeOfVariables::new(
        model,
        BasisPair::new(n, &BasisChoice::LastSpeciesDifferences).unwrap(),
    )
    .unwrap();
    Mixture::new(
        cv,
        OnsagerSpec::constant(DMatrix::identity(n, n)).unwrap(),
        ReactionSpec::None,
        Viscosity { bulk: 0.0, shear },
    )
    .unwrap()
}

/// Elastic mixture with density-dependent mobility and a relaxation
/// reaction, exercising every coefficient derivative.
pub fn rich_mixture(n: usize) -> Mixture {
    let species = SpeciesSystem::new(masses(n), 1.0).unwrap();
    let model = FreeEnergyModel::new(
        species,
        FreeEnergyKind::ElasticMixture {
            bulk: 1.2,
            v_ref: (0..n).map(|i| 1.0 / (1.0 + 0.2 * i as f64)).collect(),
            volume: Arc::new(StiffEntropy { k: 0.3 }),
        },
    )
    .unwrap();
    let cv = ChangeOfVariables::new(
        model,
        BasisPair::new(n, &BasisChoice::LastSpeciesDifferences).unwrap(),
    )
    .unwrap();
    let mobility = OnsagerSpec::new(
        n,
        BaseMobility::DiagonalNumberWeighted {
            d: (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect(),
            masses: masses(n),
        },
    )
    .unwrap();
    Mixture::new(
        cv,
        mobility,
        ReactionSpec::LinearRelaxation { rate: 0.3 },
        Viscosity {
            bulk: 0.1,
            shear: 0.3,
        },
    )
    .unwrap()
}

/// A smooth random state satisfying the boundary conditions.
pub fn random_state(rng: &mut StdRng, grid: &Grid1D, nq: usize, amp: f64) -> State {
    let l = grid.length();
    let qa: Vec<(f64, f64)> = (0..nq)
        .map(|_| (rng.gen_range(-0.3..0.3), rng.gen_range(-amp..amp)))
        .collect();
    let ra = (
        rng.gen_range(0.8..1.5),
        rng.gen_range(-amp..amp),
        rng.gen_range(-amp..amp),
    );
    let va = (rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
    let q = Field::from_fn(grid, nq, Bc::NeumannZero, |x| {
        qa.iter()
            .enumerate()
            .map(|(k, (o, a))| o + a * ((k + 1) as f64 * PI * x / l).cos())
            .collect()
    })
    .unwrap();
    let varrho = Field::from_fn(grid, 1, Bc::None, |x| {
        vec![ra.0 + ra.1 * (PI * x / l).cos() + ra.2 * (2.0 * PI * x / l).sin()]
    })
    .unwrap();
    let v = Field::from_fn(grid, 1, Bc::DirichletZero, |x| {
        vec![va.0 * (PI * x / l).sin() + va.1 * (2.0 * PI * x / l).sin()]
    })
    .unwrap();
    State::new(q, varrho, v).unwrap()
}

/// Cell averages of `fine` on a grid coarser by an integer factor.
pub fn restrict(fine: &Field, coarse_len: usize) -> Field {
    let factor = fine.len() / coarse_len;
    assert_eq!(factor * coarse_len, fine.len());
    let comps = fine.comps();
    let mut data = vec![0.0; coarse_len * comps];
    for j in 0..fine.len() {
        for c in 0..comps {
            data[(j / factor) * comps + c] += fine.get(j, c) / factor as f64;
        }
    }
    Field::new(comps, data, fine.bc()).unwrap()
}

pub fn state_distance(a: &State, b: &State) -> f64 {
    a.q.sub(&b.q)
        .max_abs()
        .max(a.varrho.sub(&b.varrho).max_abs())
        .max(a.v.sub(&b.v).max_abs())
}

pub fn restrict_state(s: &State, coarse_len: usize) -> State {
    State {
        q: restrict(&s.q, coarse_len),
        varrho: restrict(&s.varrho, coarse_len),
        v: restrict(&s.v, coarse_len),
    }
}

/// Exact solution of `ρ_t + (a sin(πx) ρ)_x = 0` on `[0, 1]` by
/// characteristics: `tan(πx/2) = tan(πx₀/2) e^{aπt}`, `ρ = ρ₀(x₀) ∂x₀/∂x`.
pub fn characteristics_density(rho0: impl Fn(f64) -> f64, a: f64, t: f64, x: f64) -> f64 {
    let s = (PI * x / 2.0).tan();
    let e = (-a * PI * t).exp();
    let x0 = 2.0 / PI * (s * e).atan();
    rho0(x0) * e * (1.0 + s * s) / (1.0 + s * s * e * e)
}

/// Cell averages of `f` by four-point Gauss quadrature.
pub fn cell_averages(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Vec<f64> {
    const NODES: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const WEIGHTS: [f64; 4] = [
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ];
    let h = grid.dx();
    (0..grid.len())
        .map(|j| {
            let c = grid.x(j);
            NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(s, w)| 0.5 * w * f(c + 0.5 * h * s))
                .sum()
        })
        .collect()
}

/// Plain Thomas algorithm, kept separate from the library solver.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Observed orders `log(e_i / e_{i+1}) / log(ratio)`.
pub fn observed_orders(errors: &[f64], ratio: f64) -> Vec<f64> {
    errors
        .windows(2)
        .map(|e| (e[0] / e[1]).ln() / ratio.ln())
        .collect()
}
