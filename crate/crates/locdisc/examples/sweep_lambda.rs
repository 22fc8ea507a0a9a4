//! Trace retrieval quality along a lambda grid, the same computation the
//! `sweep` subcommand writes as a curve CSV.
//!
//! ```text
//! cargo run --example sweep_lambda
//! ```

use locdisc::data::make_gaussian_blobs;
use locdisc::eval::{run_experiment, ExperimentParams, Method};
use locdisc::kernel::KernelConfig;

fn main() -> locdisc::Result<()> {
    // Overlapping blobs with a small label budget: the supervised graph
    // alone underdetermines the transform, and the clique term supplies
    // the missing cluster structure as lambda grows.
    let ds = make_gaussian_blobs(3, 50, 3, 2.0, 11)?;
    let mut params = ExperimentParams::defaults(KernelConfig::Rbf { gamma: Some(0.05) }, 3);
    println!("blobs, {} samples, 3 labels per class", ds.len());
    println!("{:>8}  {:>9}  {:>9}", "lambda", "mean MAP", "std");
    for lambda in [0.0, 0.01, 0.1, 1.0, 10.0, 100.0] {
        params.lambda = lambda;
        let report = run_experiment(&ds, &params, Method::Ours, 5, 0)?;
        println!(
            "{lambda:>8}  {:>9.4}  {:>9.4}",
            report.mean_map, report.std_map
        );
    }
    Ok(())
}
