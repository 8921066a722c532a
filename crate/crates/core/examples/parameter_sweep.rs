//! Sweeps the grid resolution of a scenario and prints the observed spatial
//! convergence order of each field.

use std::path::Path;

use mixflow::scenario::{load_scenario, parse_grid, sweep};

fn main() -> mixflow::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/perturbation.toml");
    let template = load_scenario(&path)?;
    let axes = parse_grid("grid.cells=32,64,128")?;
    let report = sweep(&template, &axes);
    for e in &report.entries {
        println!("{:?}: {:?}, {} sweeps", e.parameters, e.status, e.sweeps);
    }
    for o in &report.orders {
        println!("{} order in {}: {:?}", o.field, o.parameter, o.orders);
    }
    Ok(())
}
