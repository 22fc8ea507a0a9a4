//! Benchmark the learned transform against unsupervised kernel PCA and the
//! lambda = 0 ablation on well-separated Gaussian blobs, where every
//! method should do well and the baseline ordering is visible.
//!
//! ```text
//! cargo run --example kpca_comparison
//! ```

use locdisc::data::make_gaussian_blobs;
use locdisc::eval::{run_experiment, ExperimentParams, Method};
use locdisc::kernel::KernelConfig;

fn main() -> locdisc::Result<()> {
    let ds = make_gaussian_blobs(3, 50, 3, 1.0, 11)?;
    let params = ExperimentParams::defaults(KernelConfig::Rbf { gamma: Some(0.05) }, 10);
    println!(
        "{} samples, 3 classes, 10 labels per class, 5 repeated splits",
        ds.len()
    );
    println!("{:>14}  {:>9}  {:>9}", "method", "mean MAP", "std");
    for method in [Method::Ours, Method::OursLambda0, Method::Kpca] {
        let report = run_experiment(&ds, &params, method, 5, 0)?;
        println!(
            "{:>14}  {:>9.4}  {:>9.4}",
            method.as_str(),
            report.mean_map,
            report.std_map
        );
    }
    Ok(())
}
