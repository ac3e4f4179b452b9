//! Drives a full experiment from a config: every (solver, seed) pair runs
//! against a shared evaluation state set, then the metrics files are
//! aggregated into a comparison table. Mirrors `freshcontract run` +
//! `freshcontract summarize`.
//!
//! Run: `cargo run --release --example run_experiment`

use freshcontract::experiment::{render_summary, run_experiment, summarize, ExperimentConfig};

fn main() -> freshcontract::Result<()> {
    let bundled = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke.toml");
    let text = std::fs::read_to_string(bundled)?;
    let out_dir = std::env::temp_dir().join("freshcontract_example_run");
    let _ = std::fs::remove_dir_all(&out_dir);
    let patched = text.replace(
        "output_dir = \"runs/smoke\"",
        &format!("output_dir = \"{}\"", out_dir.to_string_lossy()),
    );
    let config = ExperimentConfig::from_toml(&patched)?;

    println!("running the bundled smoke experiment ({} solvers)...", config.solvers.len());
    let outputs = run_experiment(&config)?;
    let mut metrics = Vec::new();
    for output in &outputs {
        println!(
            "  {:>14} seed {} -> final eval {:>10.4}",
            output.solver.to_string(),
            output.seed,
            output.final_eval
        );
        metrics.push(output.metrics_path.clone());
    }
    println!("\n{}", render_summary(&summarize(&metrics)?));
    println!("artifacts under {}", out_dir.display());
    Ok(())
}
