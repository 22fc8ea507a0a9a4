//! Kernel evaluations, Gram matrices, the median-bandwidth heuristic, and
//! the cross-Gram used to project held-out samples.
//!
//! ```text
//! cargo run --example kernels
//! ```

use locdisc::data::make_gaussian_blobs;
use locdisc::kernel::{
    cross_gram, gram_matrix, kernel_eval, median_heuristic_gamma, KernelSpec,
};
use nalgebra::{DMatrix, DVector};

fn main() -> locdisc::Result<()> {
    let x = DVector::from_vec(vec![1.0, 0.0]);
    let y = DVector::from_vec(vec![0.0, 1.0]);
    for spec in [
        KernelSpec::rbf(0.5)?,
        KernelSpec::chi_squared(0.5, 1e-10)?,
        KernelSpec::Linear,
    ] {
        let value = kernel_eval(x.as_view(), y.as_view(), &spec)?;
        println!("{spec:?}: k(e1, e2) = {value:.6}");
    }

    let ds = make_gaussian_blobs(2, 8, 2, 1.0, 7)?;
    let gamma = median_heuristic_gamma(ds.samples())?;
    println!("median-heuristic gamma for the blobs: {gamma:.6}");

    let spec = KernelSpec::rbf(gamma)?;
    let gram = gram_matrix(ds.samples(), &spec)?;
    let values = gram.values();
    println!(
        "gram: {}x{}, unit diagonal {}, symmetric {}",
        gram.len(),
        gram.len(),
        (0..gram.len()).all(|i| (values[(i, i)] - 1.0).abs() < 1e-12),
        values == &values.transpose()
    );
    let min_eig = values
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    println!("smallest gram eigenvalue: {min_eig:.3e} (PSD up to rounding)");

    // The cross-Gram of the training set against itself is the Gram.
    let cross = cross_gram(ds.samples(), ds.samples(), &spec)?;
    let diff: DMatrix<f64> = cross - values;
    println!("cross-gram of train vs train matches the gram to {:.1e}", diff.amax());
    Ok(())
}
