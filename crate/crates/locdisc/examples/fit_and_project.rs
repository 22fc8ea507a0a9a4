//! Fit the kernel transform on partially labeled data, inspect the solver
//! diagnostics, persist the model to its text format, and project both the
//! training samples and new out-of-sample points.
//!
//! ```text
//! cargo run --example fit_and_project
//! ```

use locdisc::data::{
    make_gaussian_blobs, reorder_labeled_first, sample_labels_per_class,
};
use locdisc::graph::{assemble_clique_laplacian, build_supervised_laplacian, knn_cliques};
use locdisc::kernel::{cross_gram, gram_matrix, median_heuristic_gamma, KernelSpec};
use locdisc::solver::{fit, load_model, save_model, transform_test, transform_train};

fn main() -> locdisc::Result<()> {
    // Fully labeled blobs; reveal 3 labels per class and hide the rest.
    let full = make_gaussian_blobs(2, 12, 2, 0.8, 9)?;
    let split = sample_labels_per_class(&full, 3, 0)?;
    let masked = full.mask_labels(&split)?;
    let (train, _) = reorder_labeled_first(&masked);
    println!(
        "training on {} samples, {} labeled",
        train.len(),
        train.labeled_count()
    );

    let spec = KernelSpec::rbf(median_heuristic_gamma(train.samples())?)?;
    let gram = gram_matrix(train.samples(), &spec)?;
    let l_w = build_supervised_laplacian(train.labels())?;
    let cliques = knn_cliques(train.samples(), 3)?;
    let laplacian = assemble_clique_laplacian(&cliques, train.samples(), 1.0)?;

    let out = fit(&gram, &l_w, &laplacian, 1.0, 2, 1e-10)?;
    println!(
        "kernel rank {}, objective {:.3e}, constraint residual {:.1e}",
        out.rank, out.objective, out.constraint_residual
    );

    let features = transform_train(&gram, &out.model)?;
    println!("first training features (class, f1, f2):");
    for j in [0, 1, 6, 7] {
        println!(
            "  sample {j}: {:?} {:+.4} {:+.4}",
            train.labels()[j],
            features[(0, j)],
            features[(1, j)]
        );
    }

    // Persist and reload; the text format round-trips exactly.
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("model.txt");
    save_model(&out.model, &path)?;
    let reloaded = load_model(&path)?;
    assert_eq!(reloaded.a(), out.model.a(), "model round trip is exact");
    println!("model round-tripped through {}", path.display());

    // Project points the model never saw.
    let fresh = make_gaussian_blobs(2, 2, 2, 0.8, 77)?;
    let cross = cross_gram(fresh.samples(), train.samples(), &spec)?;
    let projected = transform_test(&cross, &reloaded)?;
    println!("projections of 4 fresh samples:");
    for j in 0..fresh.len() {
        println!(
            "  class {:?}: {:+.4} {:+.4}",
            fresh.labels()[j],
            projected[(0, j)],
            projected[(1, j)]
        );
    }
    Ok(())
}
