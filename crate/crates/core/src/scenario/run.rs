//! Running a scenario and persisting snapshots and the JSON summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Assembled, Scenario};
use crate::diagnostics::{
    blowup_functional, density_bound_certificate, v_norm_surrogate, DensityCertificate,
};
use crate::discretization::Trajectory;
use crate::error::{Error, Result};
use crate::solver::{solve, Mixture, Mode, Problem, Solution, SweepRecord};

/// Environment variable naming the directory that receives all output.
pub const OUTPUT_ROOT_ENV: &str = "MIXFLOW_OUTPUT_ROOT";

/// The output root from the environment, `mixflow-output` otherwise.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("mixflow-output"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    ConfigError,
    PositivityLoss,
    NotContractive,
    SolverFailure,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Converged => 0,
            RunStatus::ConfigError => 1,
            RunStatus::PositivityLoss => 2,
            RunStatus::NotContractive => 3,
            RunStatus::SolverFailure => 4,
        }
    }

    pub fn from_error(e: &Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Parameter(_)
            | Error::Grid(_)
            | Error::Shape(_)
            | Error::Basis { .. } => RunStatus::ConfigError,
            Error::PositivityLoss { .. } => RunStatus::PositivityLoss,
            _ => RunStatus::SolverFailure,
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub mode: Mode,
    pub status: RunStatus,
    pub exit_code: i32,
    pub message: Option<String>,
    pub converged: bool,
    pub residual: Option<f64>,
    pub sweeps: Vec<SweepRecord>,
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub mass_drift: Option<f64>,
    pub blowup: Vec<f64>,
    pub v_norm_q: Vec<f64>,
    pub v_norm_v: Vec<f64>,
    pub density_certificate: Option<DensityCertificate>,
    pub snapshots: Vec<String>,
}

/// A finished run held in memory.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub solution: Option<Solution>,
}

impl Outcome {
    pub fn status(&self) -> RunStatus {
        self.summary.status
    }
}

fn empty_summary(scenario: &Scenario, status: RunStatus, message: Option<String>) -> Summary {
    Summary {
        name: scenario.name.clone(),
        mode: scenario.solver.mode,
        status,
        exit_code: status.exit_code(),
        message,
        converged: false,
        residual: None,
        sweeps: Vec::new(),
        times: Vec::new(),
        mass: Vec::new(),
        mass_drift: None,
        blowup: Vec::new(),
        v_norm_q: Vec::new(),
        v_norm_v: Vec::new(),
        density_certificate: None,
        snapshots: Vec::new(),
    }
}

fn summarize(scenario: &Scenario, a: &Assembled, sol: &Solution) -> Result<Summary> {
    let traj = &sol.trajectory;
    let cfg = &a.config;
    let status = if sol.trace.converged {
        RunStatus::Converged
    } else {
        RunStatus::NotContractive
    };
    let mass = traj.masses();
    let drift = mass.iter().map(|m| (m - mass[0]).abs()).fold(0.0, f64::max);
    let cert =
        density_bound_certificate(&traj.varrho, &traj.v, &traj.grid, traj.dt, a.m0, a.big_m0)?;
    Ok(Summary {
        converged: sol.trace.converged,
        residual: Some(sol.trace.residual),
        sweeps: sol.trace.sweeps.clone(),
        times: (0..traj.levels()).map(|k| traj.time(k)).collect(),
        mass,
        mass_drift: Some(drift),
        blowup: blowup_functional(traj, cfg.diag_alpha, cfg.diag_p)?,
        v_norm_q: v_norm_surrogate(&traj.q, &traj.grid, traj.dt, cfg.diag_p)?.total,
        v_norm_v: v_norm_surrogate(&traj.v, &traj.grid, traj.dt, cfg.diag_p)?.total,
        density_certificate: Some(cert),
        message: (!sol.trace.converged).then(|| {
            format!(
                "fixed-point iteration stopped after {} sweeps without reaching fp_tol",
                sol.trace.sweeps.len()
            )
        }),
        ..empty_summary(scenario, status, None)
    })
}

/// Runs a scenario without touching the filesystem.
pub fn simulate(scenario: &Scenario) -> Outcome {
    let assembled = match scenario.assemble() {
        Ok(a) => a,
        Err(e) => {
            return Outcome {
                summary: empty_summary(scenario, RunStatus::ConfigError, Some(e.to_string())),
                solution: None,
            }
        }
    };
    let problem = Problem {
        mixture: &assembled.mixture,
        grid: assembled.grid,
        forcing: &assembled.forcing,
        config: &assembled.config,
    };
    let result = solve(&problem, &assembled.initial).and_then(|sol| {
        let summary = summarize(scenario, &assembled, &sol)?;
        Ok((summary, sol))
    });
    match result {
        Ok((summary, sol)) => Outcome {
            summary,
            solution: Some(sol),
        },
        Err(e) => Outcome {
            summary: empty_summary(scenario, RunStatus::from_error(&e), Some(e.to_string())),
            solution: None,
        },
    }
}

/// One CSV snapshot: `x, varrho, q_1…q_{N−1}, v, rho_1…rho_N, p`.
pub fn snapshot_csv(mixture: &Mixture, traj: &Trajectory, level: usize) -> Result<String> {
    let state = traj.state(level);
    let nq = state.q.comps();
    let coeffs = mixture.coeff_field(&state.varrho, &state.q, None)?;
    let mut out = String::from("x,varrho");
    for i in 1..=nq {
        let _ = write!(out, ",q_{i}");
    }
    out.push_str(",v");
    for i in 1..=nq + 1 {
        let _ = write!(out, ",rho_{i}");
    }
    out.push_str(",p\n");
    for (j, c) in coeffs.iter().enumerate() {
        let _ = write!(
            out,
            "{:.16e},{:.16e}",
            traj.grid.x(j),
            state.varrho.get(j, 0)
        );
        for value in state.q.cell(j) {
            let _ = write!(out, ",{value:.16e}");
        }
        let _ = write!(out, ",{:.16e}", state.v.get(j, 0));
        for value in c.rho.iter() {
            let _ = write!(out, ",{value:.16e}");
        }
        let _ = writeln!(out, ",{:.16e}", c.p);
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Runs a scenario and writes `snapshot_*.csv` and `summary.json` into
/// `<root>/<output.dir or name>/`.
pub fn run(scenario: &Scenario, root: &Path) -> Result<(Outcome, PathBuf)> {
    let sub = if scenario.output.dir.is_empty() {
        &scenario.name
    } else {
        &scenario.output.dir
    };
    let dir = root.join(sub);
    fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut outcome = simulate(scenario);
    if let Some(sol) = &outcome.solution {
        let mixture = scenario.assemble()?.mixture;
        let traj = &sol.trajectory;
        let last = traj.levels() - 1;
        let stride = scenario.output.stride.max(1);
        let mut levels: Vec<usize> = (0..=last).step_by(stride).collect();
        if levels.last() != Some(&last) {
            levels.push(last);
        }
        for k in levels {
            let file = format!("snapshot_{k:06}.csv");
            write_file(&dir.join(&file), &snapshot_csv(&mixture, traj, k)?)?;
            outcome.summary.snapshots.push(file);
        }
    }
    let json =
        serde_json::to_string_pretty(&outcome.summary).map_err(|e| Error::Io(e.to_string()))?;
    write_file(&dir.join("summary.json"), &json)?;
    Ok((outcome, dir))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let all = [
            RunStatus::Converged,
            RunStatus::ConfigError,
            RunStatus::PositivityLoss,
            RunStatus::NotContractive,
            RunStatus::SolverFailure,
        ];
        let codes: Vec<i32> = all.iter().map(|s| s.exit_code()).collect();
        assert_eq!(codes, vec![0, 1, 2, 3, 4]);
        assert_eq!(
            RunStatus::from_error(&Error::Config("x".into())),
            RunStatus::ConfigError
        );
        assert_eq!(
            RunStatus::from_error(&Error::SingularPivot { row: 0 }),
            RunStatus::SolverFailure
        );
    }
}
