//! Uniform cell-centred 1D mesh, discrete fields with boundary conditions,
//! difference operators and a block-tridiagonal direct solver.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[0, L]` with `n` cells and centres `x_j = (j + ½) dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    length: f64,
    n: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::Grid(format!("need at least 4 cells, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Grid(format!(
                "domain length {length} must be positive"
            )));
        }
        Ok(Self {
            length,
            n,
            dx: length / n as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }
}

/// Boundary condition attached to a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bc {
    /// Zero normal derivative; ghosts mirror the boundary cell.
    NeumannZero,
    /// Zero value on the boundary face; ghosts are odd reflections.
    DirichletZero,
    /// No condition; one-sided stencils at the ends.
    None,
}

/// Cell values with `comps` components per cell, stored cell by cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    comps: usize,
    data: Vec<f64>,
    bc: Bc,
}

impl Field {
    pub fn new(comps: usize, data: Vec<f64>, bc: Bc) -> Result<Self> {
        if comps == 0 || !data.len().is_multiple_of(comps) {
            return Err(Error::Shape(format!(
                "{} values cannot hold {comps} components per cell",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("non-finite entry at index {i}")));
        }
        Ok(Self { comps, data, bc })
    }

    pub fn zeros(n: usize, comps: usize, bc: Bc) -> Self {
        Self {
            comps,
            data: vec![0.0; n * comps],
            bc,
        }
    }

    pub fn constant(n: usize, value: &[f64], bc: Bc) -> Self {
        let mut data = Vec::with_capacity(n * value.len());
        for _ in 0..n {
            data.extend_from_slice(value);
        }
        Self {
            comps: value.len(),
            data,
            bc,
        }
    }

    pub fn scalar(data: Vec<f64>, bc: Bc) -> Result<Self> {
        Self::new(1, data, bc)
    }

    /// Samples `f(x)` at the cell centres.
    pub fn from_fn(
        grid: &Grid1D,
        comps: usize,
        bc: Bc,
        f: impl Fn(f64) -> Vec<f64>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(grid.len() * comps);
        for j in 0..grid.len() {
            let v = f(grid.x(j));
            if v.len() != comps {
                return Err(Error::Shape(format!(
                    "profile returned {} components",
                    v.len()
                )));
            }
            data.extend(v);
        }
        Self::new(comps, data, bc)
    }

    pub fn from_cells(cells: &[DVector<f64>], bc: Bc) -> Result<Self> {
        let comps = cells.first().map_or(1, |c| c.len());
        let data = cells.iter().flat_map(|c| c.iter().copied()).collect();
        Self::new(comps, data, bc)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.comps
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn bc(&self) -> Bc {
        self.bc
    }

    pub fn with_bc(mut self, bc: Bc) -> Self {
        self.bc = bc;
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        &self.data[j * self.comps..(j + 1) * self.comps]
    }

    pub fn cell_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.comps..(j + 1) * self.comps]
    }

    pub fn cell_vec(&self, j: usize) -> DVector<f64> {
        DVector::from_column_slice(self.cell(j))
    }

    pub fn get(&self, j: usize, c: usize) -> f64 {
        self.data[j * self.comps + c]
    }

    /// Component `c` as its own scalar field.
    pub fn component(&self, c: usize) -> Field {
        Field {
            comps: 1,
            data: (0..self.len()).map(|j| self.get(j, c)).collect(),
            bc: self.bc,
        }
    }

    /// Value at ghost index `j ∈ {−1, n}` or interior index.
    fn at(&self, j: isize, c: usize) -> f64 {
        let n = self.len() as isize;
        if (0..n).contains(&j) {
            return self.get(j as usize, c);
        }
        let mirror = if j < 0 { -1 - j } else { 2 * n - 1 - j } as usize;
        match self.bc {
            Bc::NeumannZero => self.get(mirror, c),
            Bc::DirichletZero => -self.get(mirror, c),
            Bc::None => {
                unreachable!("ghost value requested for a field without boundary condition")
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            comps: self.comps,
            data: self.data.iter().map(|v| f(*v)).collect(),
            bc: self.bc,
        }
    }

    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        assert_eq!(self.data.len(), other.data.len(), "field size mismatch");
        Field {
            comps: self.comps,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| x + a * y)
                .collect(),
            bc: self.bc,
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Σ_j f_j dx` per component.
    pub fn integral(&self, grid: &Grid1D) -> Vec<f64> {
        let mut out = vec![0.0; self.comps];
        for j in 0..self.len() {
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.get(j, c);
            }
        }
        out.iter().map(|s| s * grid.dx()).collect()
    }

    /// Discrete `L²` norm squared, summing over components.
    pub fn l2_squared(&self, grid: &Grid1D) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>() * grid.dx()
    }
}

/// The unknowns `(q, ϱ, v)` at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: Field,
    pub varrho: Field,
    pub v: Field,
}

impl State {
    /// Checks lengths, boundary conditions and strict positivity of `ϱ`.
    pub fn new(q: Field, varrho: Field, v: Field) -> Result<Self> {
        let n = varrho.len();
        if q.len() != n || v.len() != n {
            return Err(Error::Shape("q, ϱ and v must live on the same grid".into()));
        }
        if varrho.comps() != 1 || v.comps() != 1 {
            return Err(Error::Shape("ϱ and v are scalar fields in 1D".into()));
        }
        if let Some(j) = (0..n).find(|&j| !(varrho.get(j, 0) > 0.0)) {
            return Err(Error::Domain {
                index: j,
                value: varrho.get(j, 0),
            });
        }
        Ok(Self {
            q: q.with_bc(Bc::NeumannZero),
            varrho: varrho.with_bc(Bc::None),
            v: v.with_bc(Bc::DirichletZero),
        })
    }

    pub fn len(&self) -> usize {
        self.varrho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.varrho.is_empty()
    }
}

/// Fields at the time levels `t_k = k dt`, `k = 0, …, K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid1D,
    pub dt: f64,
    pub q: Vec<Field>,
    pub varrho: Vec<Field>,
    pub v: Vec<Field>,
}

impl Trajectory {
    /// `levels` copies of `state`.
    pub fn constant(grid: Grid1D, dt: f64, state: &State, levels: usize) -> Self {
        Self {
            grid,
            dt,
            q: vec![state.q.clone(); levels],
            varrho: vec![state.varrho.clone(); levels],
            v: vec![state.v.clone(); levels],
        }
    }

    pub fn levels(&self) -> usize {
        self.varrho.len()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn state(&self, k: usize) -> State {
        State {
            q: self.q[k].clone(),
            varrho: self.varrho[k].clone(),
            v: self.v[k].clone(),
        }
    }

    pub fn last(&self) -> State {
        self.state(self.levels() - 1)
    }

    /// Largest cellwise difference of all fields over all levels.
    pub fn sup_difference(&self, other: &Trajectory) -> f64 {
        let sup = |a: &[Field], b: &[Field]| {
            a.iter()
                .zip(b)
                .fold(0.0_f64, |m, (x, y)| m.max(x.sub(y).max_abs()))
        };
        sup(&self.q, &other.q)
            .max(sup(&self.varrho, &other.varrho))
            .max(sup(&self.v, &other.v))
    }

    /// Total mass `Σ_j ϱ_j dx` per level.
    pub fn masses(&self) -> Vec<f64> {
        self.varrho
            .iter()
            .map(|r| r.integral(&self.grid)[0])
            .collect()
    }
}

fn derivative_bc(bc: Bc) -> Bc {
    match bc {
        Bc::NeumannZero => Bc::DirichletZero,
        Bc::DirichletZero => Bc::NeumannZero,
        Bc::None => Bc::None,
    }
}

fn check_grid(field: &Field, grid: &Grid1D) -> Result<()> {
    if field.len() != grid.len() {
        return Err(Error::Shape(format!(
            "field has {} cells, grid has {}",
            field.len(),
            grid.len()
        )));
    }
    Ok(())
}

/// Central first difference. The result carries the boundary condition of
/// the derivative (Neumann and Dirichlet swap).
pub fn d1(field: &Field, grid: &Grid1D) -> Result<Field> {
    check_grid(field, grid)?;
    let n = field.len();
    let dx = grid.dx();
    let mut out = Field::zeros(n, field.comps, derivative_bc(field.bc));
    for c in 0..field.comps {
        for j in 0..n {
            let v = match field.bc {
                Bc::None if j == 0 => {
                    (-3.0 * field.get(0, c) + 4.0 * field.get(1, c) - field.get(2, c)) / (2.0 * dx)
                }
                Bc::None if j == n - 1 => {
                    (3.0 * field.get(n - 1, c) - 4.0 * field.get(n - 2, c) + field.get(n - 3, c))
                        / (2.0 * dx)
                }
                _ => {
                    let j = j as isize;
                    (field.at(j + 1, c) - field.at(j - 1, c)) / (2.0 * dx)
                }
            };
            out.data[j * field.comps + c] = v;
        }
    }
    Ok(out)
}

/// Central second difference with ghost cells from the boundary condition.
pub fn d2(field: &Field, grid: &Grid1D) -> Result<Field> {
    check_grid(field, grid)?;
    let n = field.len();
    let dx2 = grid.dx() * grid.dx();
    let mut out = Field::zeros(n, field.comps, field.bc);
    for c in 0..field.comps {
        for j in 0..n {
            let f = |k: usize| field.get(k, c);
            let v = match field.bc {
                Bc::None if j == 0 => (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / dx2,
                Bc::None if j == n - 1 => {
                    (2.0 * f(n - 1) - 5.0 * f(n - 2) + 4.0 * f(n - 3) - f(n - 4)) / dx2
                }
                _ => {
                    let j = j as isize;
                    (field.at(j + 1, c) - 2.0 * field.at(j, c) + field.at(j - 1, c)) / dx2
                }
            };
            out.data[j * field.comps + c] = v;
        }
    }
    Ok(out)
}

/// Block-tridiagonal matrix with square blocks of size `b`: row `j` reads
/// `lower[j] x_{j−1} + diag[j] x_j + upper[j] x_{j+1}`.
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    pub lower: Vec<DMatrix<f64>>,
    pub diag: Vec<DMatrix<f64>>,
    pub upper: Vec<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn zeros(n: usize, b: usize) -> Self {
        Self {
            lower: vec![DMatrix::zeros(b, b); n],
            diag: vec![DMatrix::zeros(b, b); n],
            upper: vec![DMatrix::zeros(b, b); n],
        }
    }

    pub fn identity(n: usize, b: usize) -> Self {
        let mut m = Self::zeros(n, b);
        for d in &mut m.diag {
            *d = DMatrix::identity(b, b);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.diag.len()
    }

    pub fn block_size(&self) -> usize {
        self.diag.first().map_or(0, |d| d.nrows())
    }

    pub fn apply(&self, x: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let n = self.rows();
        (0..n)
            .map(|j| {
                let mut y = &self.diag[j] * &x[j];
                if j > 0 {
                    y += &self.lower[j] * &x[j - 1];
                }
                if j + 1 < n {
                    y += &self.upper[j] * &x[j + 1];
                }
                y
            })
            .collect()
    }

    /// Block-Thomas elimination.
    pub fn solve(&self, rhs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        let n = self.rows();
        if rhs.len() != n {
            return Err(Error::Shape(format!(
                "rhs has {} rows, system has {n}",
                rhs.len()
            )));
        }
        let mut c_prime: Vec<DMatrix<f64>> = Vec::with_capacity(n);
        let mut d_prime: Vec<DVector<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let (pivot, d) = if j == 0 {
                (self.diag[0].clone(), rhs[0].clone())
            } else {
                (
                    &self.diag[j] - &self.lower[j] * &c_prime[j - 1],
                    &rhs[j] - &self.lower[j] * &d_prime[j - 1],
                )
            };
            let inv = invert_pivot(pivot, j)?;
            c_prime.push(&inv * &self.upper[j]);
            d_prime.push(inv * d);
        }
        let mut x = d_prime;
        for j in (0..n.saturating_sub(1)).rev() {
            let correction = &c_prime[j] * &x[j + 1];
            x[j] -= correction;
        }
        Ok(x)
    }

    /// `‖A x − b‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)`.
    pub fn relative_residual(&self, x: &[DVector<f64>], rhs: &[DVector<f64>]) -> f64 {
        let ax = self.apply(x);
        let res = ax
            .iter()
            .zip(rhs)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).amax()));
        let norm_a = (0..self.rows())
            .map(|j| {
                let row = |m: &DMatrix<f64>| {
                    (0..m.nrows())
                        .map(|r| m.row(r).iter().map(|v| v.abs()).sum::<f64>())
                        .collect::<Vec<_>>()
                };
                let (l, d, u) = (row(&self.lower[j]), row(&self.diag[j]), row(&self.upper[j]));
                (0..l.len()).map(|r| l[r] + d[r] + u[r]).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let norm_x = x.iter().fold(0.0_f64, |m, v| m.max(v.amax()));
        let norm_b = rhs.iter().fold(0.0_f64, |m, v| m.max(v.amax()));
        let scale = norm_a * norm_x + norm_b;
        if scale == 0.0 {
            0.0
        } else {
            res / scale
        }
    }
}

/// Scalar tridiagonal solve (Thomas algorithm) with rows
/// `lower[j] x_{j−1} + diag[j] x_j + upper[j] x_{j+1} = rhs[j]`.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::Shape("tridiagonal bands of unequal length".into()));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for j in 0..n {
        let (pivot, r) = if j == 0 {
            (diag[0], rhs[0])
        } else {
            (diag[j] - lower[j] * c[j - 1], rhs[j] - lower[j] * d[j - 1])
        };
        let scale = diag[j].abs() + lower[j].abs() + upper[j].abs();
        if !(pivot.abs() > 1e-14 * scale) {
            return Err(Error::SingularPivot { row: j });
        }
        c[j] = upper[j] / pivot;
        d[j] = r / pivot;
    }
    for j in (0..n.saturating_sub(1)).rev() {
        d[j] -= c[j] * d[j + 1];
    }
    Ok(d)
}

fn invert_pivot(pivot: DMatrix<f64>, row: usize) -> Result<DMatrix<f64>> {
    let scale = pivot.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::SingularPivot { row });
    }
    let lu = pivot.lu();
    let u = lu.u();
    let min_diag = u
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min_diag <= 1e-14 * scale {
        return Err(Error::SingularPivot { row });
    }
    lu.try_inverse().ok_or(Error::SingularPivot { row })
}
