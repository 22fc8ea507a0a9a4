//! The two graph Laplacians behind the objective: the supervised same-class
//! graph over labeled samples and the assembled clique Laplacian that
//! encodes local discriminant structure.
//!
//! ```text
//! cargo run --example laplacians
//! ```

use locdisc::graph::{assemble_clique_laplacian, build_supervised_laplacian, knn_cliques};
use nalgebra::DMatrix;

fn main() -> locdisc::Result<()> {
    // Six points on a line: two labeled pairs up front, two unlabeled.
    let x = DMatrix::from_row_slice(1, 6, &[0.0, 0.2, 3.0, 3.3, 0.1, 3.1]);
    let labels = vec![Some(0), Some(0), Some(1), Some(1), None, None];

    let l_w = build_supervised_laplacian(&labels)?;
    println!("supervised laplacian (same-class graph, labeled block only):");
    print_matrix(l_w.matrix());

    let cliques = knn_cliques(&x, 3)?;
    println!("cliques (anchor + 2 nearest neighbors):");
    for (i, clique) in cliques.cliques().iter().enumerate() {
        println!("  sample {i}: {clique:?}");
    }

    let laplacian = assemble_clique_laplacian(&cliques, &x, 1.0)?;
    println!("clique laplacian (theta = 1):");
    print_matrix(laplacian.matrix());

    let ones = DMatrix::from_element(6, 1, 1.0);
    println!(
        "constants are annihilated: max |L_w 1| = {:.1e}, max |L 1| = {:.1e}",
        (l_w.matrix() * &ones).amax(),
        (laplacian.matrix() * &ones).amax()
    );
    let min_eig = laplacian
        .matrix()
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    println!("smallest clique-laplacian eigenvalue: {min_eig:.1e} (PSD)");
    Ok(())
}

fn print_matrix(m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:+.3}", m[(i, j)])).collect();
        println!("  [{}]", row.join(", "));
    }
}
