//! Parameter sweeps over a scenario template with observed convergence
//! orders.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::Scenario;
use super::run::{simulate, RunStatus};
use crate::discretization::{Field, State};
use crate::error::{Error, Result};

/// One axis of a sweep: a dotted key into the scenario file and its values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

/// Parses `key=v1,v2;other.key=w1,w2`. Whitespace is ignored; an empty
/// string gives no axes.
pub fn parse_grid(spec: &str) -> Result<Vec<GridAxis>> {
    let mut axes = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("sweep axis `{part}` lacks `=`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!(
                "sweep axis `{part}` has an empty key"
            )));
        }
        let values = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(parse_value)
            .collect::<Vec<_>>();
        if values.is_empty() {
            return Err(Error::Config(format!("sweep axis `{key}` has no values")));
        }
        axes.push(GridAxis {
            key: key.to_string(),
            values,
        });
    }
    Ok(axes)
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut node = root;
    for p in parts {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{key}` does not name a table entry")))?;
        node = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    node.as_table_mut()
        .ok_or_else(|| Error::Config(format!("`{key}` does not name a table entry")))?
        .insert(last.to_string(), value);
    Ok(())
}

/// `template` with every `(key, value)` applied.
pub fn apply_overrides(
    template: &Scenario,
    overrides: &[(String, toml::Value)],
) -> Result<Scenario> {
    let mut value = toml::Value::try_from(template).map_err(|e| Error::Config(e.to_string()))?;
    for (k, v) in overrides {
        set_path(&mut value, k, v.clone())?;
    }
    value
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub parameters: Vec<(String, String)>,
    pub status: RunStatus,
    pub exit_code: i32,
    pub message: Option<String>,
    pub sweeps: usize,
    pub max_diff_ratio: Option<f64>,
    pub max_energy_ratio: Option<f64>,
    pub residual: Option<f64>,
    pub mass_drift: Option<f64>,
}

/// Observed order from successive differences of final states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub parameter: String,
    pub field: String,
    pub values: Vec<f64>,
    /// `‖u_i − u_{i+1}‖∞` for consecutive refinements.
    pub differences: Vec<f64>,
    pub orders: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub orders: Vec<OrderEstimate>,
}

fn cartesian(axes: &[GridAxis]) -> Vec<Vec<(String, toml::Value)>> {
    if axes.is_empty() {
        return Vec::new();
    }
    let mut points: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

/// Cell averages of `fine` on a grid coarser by an integer factor.
fn restrict(fine: &Field, coarse_len: usize) -> Option<Field> {
    let factor = fine.len() / coarse_len;
    if factor == 0 || factor * coarse_len != fine.len() {
        return None;
    }
    let comps = fine.comps();
    let mut data = vec![0.0; coarse_len * comps];
    for j in 0..fine.len() {
        for c in 0..comps {
            data[(j / factor) * comps + c] += fine.get(j, c) / factor as f64;
        }
    }
    Field::new(comps, data, fine.bc()).ok()
}

fn field_of<'a>(s: &'a State, name: &str) -> &'a Field {
    match name {
        "q" => &s.q,
        "varrho" => &s.varrho,
        _ => &s.v,
    }
}

fn orders_for(key: &str, runs: &[(f64, State)]) -> Vec<OrderEstimate> {
    let spatial = key == "grid.cells";
    let mut runs = runs.to_vec();
    // coarse to fine
    if spatial {
        runs.sort_by(|a, b| a.0.total_cmp(&b.0));
    } else {
        runs.sort_by(|a, b| b.0.total_cmp(&a.0));
    }
    let mut out = Vec::new();
    for name in ["q", "varrho", "v"] {
        let mut differences = Vec::new();
        for pair in runs.windows(2) {
            let coarse = field_of(&pair[0].1, name);
            let fine = field_of(&pair[1].1, name);
            let fine = if spatial {
                match restrict(fine, coarse.len()) {
                    Some(f) => f,
                    None => return Vec::new(),
                }
            } else {
                fine.clone()
            };
            if fine.len() != coarse.len() {
                return Vec::new();
            }
            differences.push(coarse.sub(&fine).max_abs());
        }
        let orders = differences
            .windows(2)
            .enumerate()
            .map(|(i, d)| {
                let ratio = if spatial {
                    runs[i + 2].0 / runs[i + 1].0
                } else {
                    runs[i + 1].0 / runs[i + 2].0
                };
                (d[0] / d[1]).ln() / ratio.ln()
            })
            .collect();
        out.push(OrderEstimate {
            parameter: key.to_string(),
            field: name.to_string(),
            values: runs.iter().map(|r| r.0).collect(),
            differences,
            orders,
        });
    }
    out
}

/// Runs every point of the grid (concurrently) and aggregates the results.
/// Failed runs are recorded and do not stop the sweep. Orders are reported
/// for single-axis sweeps over `time.dt` or `grid.cells`.
pub fn sweep(template: &Scenario, axes: &[GridAxis]) -> SweepReport {
    let points = cartesian(axes);
    let results: Vec<(SweepEntry, Option<(f64, State)>)> = points
        .par_iter()
        .map(|point| {
            let parameters = point
                .iter()
                .map(|(k, v)| (k.clone(), v.to_string()))
                .collect();
            let scenario = match apply_overrides(template, point) {
                Ok(s) => s,
                Err(e) => {
                    return (
                        SweepEntry {
                            parameters,
                            status: RunStatus::ConfigError,
                            exit_code: RunStatus::ConfigError.exit_code(),
                            message: Some(e.to_string()),
                            sweeps: 0,
                            max_diff_ratio: None,
                            max_energy_ratio: None,
                            residual: None,
                            mass_drift: None,
                        },
                        None,
                    )
                }
            };
            let outcome = simulate(&scenario);
            let s = &outcome.summary;
            let entry = SweepEntry {
                parameters,
                status: s.status,
                exit_code: s.exit_code,
                message: s.message.clone(),
                sweeps: s.sweeps.len(),
                max_diff_ratio: s
                    .sweeps
                    .iter()
                    .skip(1)
                    .filter_map(|r| r.diff_ratio)
                    .reduce(f64::max),
                max_energy_ratio: s
                    .sweeps
                    .iter()
                    .skip(1)
                    .filter_map(|r| r.energy_ratio)
                    .reduce(f64::max),
                residual: s.residual,
                mass_drift: s.mass_drift,
            };
            let value = point
                .first()
                .and_then(|(_, v)| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)));
            let last = match (&outcome.solution, value) {
                (Some(sol), Some(x)) if s.status == RunStatus::Converged => {
                    Some((x, sol.trajectory.last()))
                }
                _ => None,
            };
            (entry, last)
        })
        .collect();
    let mut report = SweepReport::default();
    let mut finals = Vec::new();
    for (entry, last) in results {
        report.entries.push(entry);
        finals.push(last);
    }
    if let [axis] = axes {
        let key = axis.key.as_str();
        if (key == "time.dt" || key == "grid.cells")
            && finals.len() >= 3
            && finals.iter().all(Option::is_some)
        {
            let runs: Vec<(f64, State)> = finals.into_iter().flatten().collect();
            report.orders = orders_for(key, &runs);
        }
    }
    report
}
