// Noise sweep through the scenario-file interface, producing the sweep and
// pole-scatter tables used for plotting.

use pole_recovery::cli::{cmd_generate, cmd_sweep, scatter_path, Overrides};
use pole_recovery::model::ScenarioKind;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let scenario = dir.path().join("complex8.json");
    cmd_generate(ScenarioKind::Complex8, 0, &scenario)?;

    let out = dir.path().join("sweep.csv");
    let rows = cmd_sweep(&scenario, &[0.0, 1e-6, 1e-5, 1e-4], &[0, 1, 2], &out, &Overrides::default())?;
    print!("{}", std::fs::read_to_string(&out)?);
    let scatter = std::fs::read_to_string(scatter_path(&out))?;
    println!("{} rows, {} scatter points", rows.len(), scatter.lines().count() - 1);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
