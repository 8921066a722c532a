//! TOML scenario files: schema, validation and assembly into solver inputs.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::changevar::{BasisChoice, BasisPair, ChangeOfVariables};
use crate::discretization::{Bc, Field, Grid1D, State};
use crate::error::{Error, Result};
use crate::mobility::{BaseMobility, OnsagerSpec, ReactionSpec};
use crate::solver::{AnalyticForcing, ForcingSpec, Mixture, Mode, SolverConfig, Viscosity};
use crate::thermo::{
    ConvexScalar, EntropyLike, FreeEnergyKind, FreeEnergyModel, SpeciesSystem, StiffEntropy,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub species: SpeciesBlock,
    pub free_energy: FreeEnergyBlock,
    #[serde(default)]
    pub basis: BasisBlock,
    pub mobility: MobilityBlock,
    #[serde(default)]
    pub reaction: ReactionBlock,
    #[serde(default)]
    pub forcing: ForcingBlock,
    pub viscosity: ViscosityBlock,
    pub grid: GridBlock,
    pub time: TimeBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    pub initial: InitialBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesBlock {
    pub masses: Vec<f64>,
    /// Temperature scale `k_B θ`.
    #[serde(default = "one")]
    pub kt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FreeEnergyBlock {
    IdealGas {
        #[serde(default = "one")]
        n_ref: f64,
    },
    ElasticMixture {
        bulk: f64,
        v_ref: Vec<f64>,
        #[serde(default)]
        volume: VolumeFunction,
    },
    PowerLaw {
        k: Vec<f64>,
        alpha: Vec<f64>,
        v_ref: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VolumeFunction {
    /// `F(t) = t ln t`.
    #[default]
    EntropyLike,
    /// `F(t) = k (t − ln t − 1) + t ln t`.
    Stiff { k: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisBlock {
    #[default]
    LastSpeciesDifferences,
    Custom {
        vectors: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MobilityBlock {
    Constant { matrix: Vec<Vec<f64>> },
    DiagonalNumberWeighted { d: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionBlock {
    #[default]
    None,
    Constant {
        rates: Vec<f64>,
    },
    LinearRelaxation {
        rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingBlock {
    #[serde(default)]
    pub btilde_amplitude: Vec<f64>,
    #[serde(default = "one_u32")]
    pub btilde_mode: u32,
    #[serde(default)]
    pub bbar_constant: f64,
    #[serde(default)]
    pub bbar_amplitude: f64,
    #[serde(default = "one_u32")]
    pub bbar_mode: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscosityBlock {
    #[serde(default)]
    pub bulk: f64,
    pub shear: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub length: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBlock {
    pub dt: f64,
    pub t_end: f64,
    /// Contraction-energy window; defaults to `t_end`.
    pub t1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub mode: Mode,
    pub fp_tol: f64,
    pub fp_max_sweeps: usize,
    pub k0: f64,
    pub p0: f64,
    pub rho_floor: f64,
    pub max_substeps: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub diag_p: f64,
    pub diag_alpha: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let d = SolverConfig::new(1.0, 1.0);
        Self {
            mode: d.mode,
            fp_tol: d.fp_tol,
            fp_max_sweeps: d.fp_max_sweeps,
            k0: d.k0,
            p0: d.p0,
            rho_floor: d.rho_floor,
            max_substeps: d.max_substeps,
            inner_tol: d.inner_tol,
            inner_max_iter: d.inner_max_iter,
            diag_p: d.diag_p,
            diag_alpha: d.diag_alpha,
        }
    }
}

/// Named analytic profiles on `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `base + amplitude · exp(−(x − center)² / (2 width²))`.
    GaussianBump {
        #[serde(default)]
        base: f64,
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `offset + amplitude · sin(mode π x / L)`.
    Sine {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        #[serde(default = "one_u32")]
        mode: u32,
    },
    /// `offset + amplitude · cos(mode π x / L)`.
    Cosine {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        #[serde(default = "one_u32")]
        mode: u32,
    },
}

impl Profile {
    pub fn value(&self, x: f64, length: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::GaussianBump {
                base,
                amplitude,
                center,
                width,
            } => base + amplitude * (-(x - center).powi(2) / (2.0 * width * width)).exp(),
            Profile::Sine {
                offset,
                amplitude,
                mode,
            } => offset + amplitude * (mode as f64 * PI * x / length).sin(),
            Profile::Cosine {
                offset,
                amplitude,
                mode,
            } => offset + amplitude * (mode as f64 * PI * x / length).cos(),
        }
    }

    pub fn derivative(&self, x: f64, length: f64) -> f64 {
        match *self {
            Profile::Constant { .. } => 0.0,
            Profile::GaussianBump {
                amplitude,
                center,
                width,
                ..
            } => {
                -amplitude * (x - center) / (width * width)
                    * (-(x - center).powi(2) / (2.0 * width * width)).exp()
            }
            Profile::Sine {
                amplitude, mode, ..
            } => {
                let k = mode as f64 * PI / length;
                amplitude * k * (k * x).cos()
            }
            Profile::Cosine {
                amplitude, mode, ..
            } => {
                let k = mode as f64 * PI / length;
                -amplitude * k * (k * x).sin()
            }
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            Profile::Constant { value } => value.abs(),
            Profile::GaussianBump {
                base, amplitude, ..
            } => base.abs() + amplitude.abs(),
            Profile::Sine {
                offset, amplitude, ..
            }
            | Profile::Cosine {
                offset, amplitude, ..
            } => offset.abs() + amplitude.abs(),
        }
    }

    fn check(&self, what: &str, issues: &mut Vec<String>) {
        if let Profile::GaussianBump { width, .. } = self {
            if !(*width > 0.0) {
                issues.push(format!("{what}: gaussian_bump width must be positive"));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    /// One profile per component of `q⁰`.
    pub q: Vec<Profile>,
    pub varrho: Profile,
    pub v: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    /// Directory below the output root.
    pub dir: String,
    /// Write every `stride`-th time level (the last level is always written).
    pub stride: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: String::new(),
            stride: 10,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

/// Inputs for the solver assembled from a scenario.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub mixture: Mixture,
    pub grid: Grid1D,
    pub forcing: ForcingSpec,
    pub config: SolverConfig,
    pub initial: State,
    /// `min ϱ⁰` and `max ϱ⁰` on the grid.
    pub m0: f64,
    pub big_m0: f64,
}

const COMPAT_TOL: f64 = 1e-10;

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn num_species(&self) -> usize {
        self.species.masses.len()
    }

    /// Every violated requirement, empty when the scenario is admissible.
    pub fn violations(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let n = self.num_species();
        if n < 2 {
            issues.push(format!("species: need at least 2 species, got {n}"));
        }
        if let Err(e) = SpeciesSystem::new(self.species.masses.clone(), self.species.kt) {
            issues.push(format!("species: {e}"));
        }
        if let Err(e) = self.free_energy_kind().and_then(|k| {
            SpeciesSystem::new(self.species.masses.clone(), self.species.kt)
                .and_then(|s| FreeEnergyModel::new(s, k))
        }) {
            issues.push(format!("free_energy: {e}"));
        }
        if n >= 2 {
            if let Err(e) = BasisPair::new(n, &self.basis_choice()) {
                issues.push(format!("basis: {e}"));
            }
            if let Err(e) = self.onsager() {
                issues.push(format!("mobility: {e}"));
            }
            if let Err(e) = self.reaction_spec().validate(n) {
                issues.push(format!("reaction: {e}"));
            }
            if let Err(e) = self.forcing_spec().validate(self.grid.length, n - 1) {
                issues.push(format!("forcing: {e}"));
            }
        }
        let visc = self.viscosity.bulk + 2.0 * self.viscosity.shear;
        if !(visc > 0.0) || self.viscosity.shear < 0.0 {
            issues.push(format!(
                "viscosity: effective viscosity {visc} must be positive"
            ));
        }
        let grid = Grid1D::new(self.grid.length, self.grid.cells);
        if let Err(e) = &grid {
            issues.push(format!("grid: {e}"));
        }
        if let Err(e) = self.solver_config().validate() {
            issues.push(format!("time/solver: {e}"));
        }
        if self.output.stride == 0 {
            issues.push("output: stride must be at least 1".into());
        }

        let l = self.grid.length;
        if self.initial.q.len() + 1 != n {
            issues.push(format!(
                "initial: q needs {} profiles, got {}",
                n.saturating_sub(1),
                self.initial.q.len()
            ));
        }
        for (i, p) in self.initial.q.iter().enumerate() {
            p.check(&format!("initial.q[{i}]"), &mut issues);
            for x in [0.0, l] {
                let d = p.derivative(x, l);
                if d.abs() > COMPAT_TOL * (1.0 + p.scale()) {
                    issues.push(format!(
                        "initial.q[{i}]: compatibility condition ∂ₓq⁰ = 0 on the boundary violated (∂ₓq⁰({x}) = {d:e})"
                    ));
                }
            }
        }
        self.initial.v.check("initial.v", &mut issues);
        for x in [0.0, l] {
            let v = self.initial.v.value(x, l);
            if v.abs() > COMPAT_TOL * (1.0 + self.initial.v.scale()) {
                issues.push(format!(
                    "initial.v: compatibility condition v⁰ = 0 on the boundary violated (v⁰({x}) = {v:e})"
                ));
            }
        }
        self.initial.varrho.check("initial.varrho", &mut issues);
        if l > 0.0 && l.is_finite() {
            let samples = 4 * self.grid.cells.max(64);
            let m0 = (0..=samples)
                .map(|i| self.initial.varrho.value(l * i as f64 / samples as f64, l))
                .fold(f64::INFINITY, f64::min);
            if !(m0 > 0.0) {
                issues.push(format!(
                    "initial.varrho: requires ϱ⁰ ≥ m₀ > 0, but min ϱ⁰ = {m0:e}"
                ));
            }
        }
        issues
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.violations();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues.join("\n")))
        }
    }

    fn free_energy_kind(&self) -> Result<FreeEnergyKind> {
        Ok(match &self.free_energy {
            FreeEnergyBlock::IdealGas { n_ref } => FreeEnergyKind::IdealGas { n_ref: *n_ref },
            FreeEnergyBlock::ElasticMixture {
                bulk,
                v_ref,
                volume,
            } => {
                let volume: Arc<dyn ConvexScalar> = match volume {
                    VolumeFunction::EntropyLike => Arc::new(EntropyLike),
                    VolumeFunction::Stiff { k } => {
                        if !(*k >= 0.0) {
                            return Err(Error::Parameter(format!("stiffness k = {k} must be ≥ 0")));
                        }
                        Arc::new(StiffEntropy { k: *k })
                    }
                };
                FreeEnergyKind::ElasticMixture {
                    bulk: *bulk,
                    v_ref: v_ref.clone(),
                    volume,
                }
            }
            FreeEnergyBlock::PowerLaw { k, alpha, v_ref } => FreeEnergyKind::PowerLaw {
                k: k.clone(),
                alpha: alpha.clone(),
                v_ref: v_ref.clone(),
            },
        })
    }

    fn basis_choice(&self) -> BasisChoice {
        match &self.basis {
            BasisBlock::LastSpeciesDifferences => BasisChoice::LastSpeciesDifferences,
            BasisBlock::Custom { vectors } => BasisChoice::Custom(vectors.clone()),
        }
    }

    fn onsager(&self) -> Result<OnsagerSpec> {
        let n = self.num_species();
        match &self.mobility {
            MobilityBlock::Constant { matrix } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Shape(format!("M⁰ must be {n}×{n}")));
                }
                let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
                OnsagerSpec::new(n, BaseMobility::Constant(m))
            }
            MobilityBlock::DiagonalNumberWeighted { d } => OnsagerSpec::new(
                n,
                BaseMobility::DiagonalNumberWeighted {
                    d: d.clone(),
                    masses: self.species.masses.clone(),
                },
            ),
        }
    }

    fn reaction_spec(&self) -> ReactionSpec {
        match &self.reaction {
            ReactionBlock::None => ReactionSpec::None,
            ReactionBlock::Constant { rates } => {
                ReactionSpec::Constant(DVector::from_vec(rates.clone()))
            }
            ReactionBlock::LinearRelaxation { rate } => {
                ReactionSpec::LinearRelaxation { rate: *rate }
            }
        }
    }

    fn forcing_spec(&self) -> ForcingSpec {
        let f = &self.forcing;
        let nq = self.num_species().saturating_sub(1);
        let amplitude = if f.btilde_amplitude.is_empty() {
            vec![0.0; nq]
        } else {
            f.btilde_amplitude.clone()
        };
        let spec = ForcingSpec::Analytic(AnalyticForcing {
            btilde_amplitude: amplitude,
            btilde_mode: f.btilde_mode,
            bbar_constant: f.bbar_constant,
            bbar_amplitude: f.bbar_amplitude,
            bbar_mode: f.bbar_mode,
        });
        if spec.is_zero() {
            ForcingSpec::None
        } else {
            spec
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            dt: self.time.dt,
            t_end: self.time.t_end,
            fp_tol: s.fp_tol,
            fp_max_sweeps: s.fp_max_sweeps,
            t1: self.time.t1.unwrap_or(self.time.t_end),
            k0: s.k0,
            p0: s.p0,
            mode: s.mode,
            rho_floor: s.rho_floor,
            max_substeps: s.max_substeps,
            inner_tol: s.inner_tol,
            inner_max_iter: s.inner_max_iter,
            diag_p: s.diag_p,
            diag_alpha: s.diag_alpha,
        }
    }

    /// Validates and builds the solver inputs.
    pub fn assemble(&self) -> Result<Assembled> {
        self.validate()?;
        let n = self.num_species();
        let species = SpeciesSystem::new(self.species.masses.clone(), self.species.kt)?;
        let model = FreeEnergyModel::new(species, self.free_energy_kind()?)?;
        let basis = BasisPair::new(n, &self.basis_choice())?;
        let cv = ChangeOfVariables::new(model, basis)?;
        let mixture = Mixture::new(
            cv,
            self.onsager()?,
            self.reaction_spec(),
            Viscosity {
                bulk: self.viscosity.bulk,
                shear: self.viscosity.shear,
            },
        )?;
        let grid = Grid1D::new(self.grid.length, self.grid.cells)?;
        let l = grid.length();
        let q = Field::from_fn(&grid, n - 1, Bc::NeumannZero, |x| {
            self.initial.q.iter().map(|p| p.value(x, l)).collect()
        })?;
        let varrho = Field::from_fn(&grid, 1, Bc::None, |x| {
            vec![self.initial.varrho.value(x, l)]
        })?;
        let v = Field::from_fn(&grid, 1, Bc::DirichletZero, |x| {
            vec![self.initial.v.value(x, l)]
        })?;
        let m0 = varrho.min();
        let big_m0 = varrho.max();
        Ok(Assembled {
            mixture,
            grid,
            forcing: self.forcing_spec(),
            config: self.solver_config(),
            initial: State::new(q, varrho, v)?,
            m0,
            big_m0,
        })
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut scenario: Scenario =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if scenario.name.is_empty() {
        scenario.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    scenario
        .validate()
        .map_err(|e| Error::Config(format!("{}:\n{e}", path.display())))?;
    Ok(scenario)
}
