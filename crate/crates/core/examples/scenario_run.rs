//! Loads a shipped scenario file, runs it and writes CSV snapshots and a JSON
//! summary below the output root (`MIXFLOW_OUTPUT_ROOT`, default
//! `mixflow-output`).

use std::path::Path;

use mixflow::scenario::{load_scenario, output_root, run};

fn main() -> mixflow::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/perturbation.toml");
    let scenario = load_scenario(&path)?;
    let (outcome, dir) = run(&scenario, &output_root())?;
    let s = &outcome.summary;
    println!("{}: {:?} (exit code {})", s.name, s.status, s.exit_code);
    println!(
        "sweeps {}, residual {:.2e}, mass drift {:.2e}",
        s.sweeps.len(),
        s.residual.unwrap_or(f64::NAN),
        s.mass_drift.unwrap_or(f64::NAN)
    );
    println!("{} snapshots in {}", s.snapshots.len(), dir.display());
    Ok(())
}
