//! Supervised and clique Laplacian construction.
//!
//! Two graphs drive the learned transform: a supervised same-class graph
//! over the labeled block, and a sum of per-clique local discriminant
//! operators built from each sample's k-nearest-neighbor clique. Both are
//! dense `n x n` symmetric PSD matrices.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};

/// Laplacian of the same-class adjacency graph, zero-padded over the
/// unlabeled block.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedLaplacian {
    matrix: DMatrix<f64>,
}

impl SupervisedLaplacian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Each sample's clique: itself plus its `k - 1` nearest neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueSet {
    k: usize,
    cliques: Vec<Vec<usize>>,
}

impl CliqueSet {
    /// Validated constructor: `cliques[i]` has exactly `k` distinct indices
    /// in `[0, n)` and starts with its own anchor `i`.
    pub fn new(cliques: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        let n = cliques.len();
        if k == 0 {
            return Err(Error::InvalidParam("clique size must be >= 1".into()));
        }
        for (i, clique) in cliques.iter().enumerate() {
            if clique.len() != k {
                return Err(Error::Shape(format!(
                    "clique {i} has {} members, expected {k}",
                    clique.len()
                )));
            }
            if clique[0] != i {
                return Err(Error::InvalidParam(format!(
                    "clique {i} must start with its anchor, found {}",
                    clique[0]
                )));
            }
            let mut seen = vec![false; n];
            for &p in clique {
                if p >= n {
                    return Err(Error::InvalidParam(format!(
                        "clique {i} references sample {p}, out of range for n={n}"
                    )));
                }
                if seen[p] {
                    return Err(Error::InvalidParam(format!(
                        "clique {i} repeats sample {p}"
                    )));
                }
                seen[p] = true;
            }
        }
        Ok(Self { k, cliques })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }
}

/// Sum of selection-conjugated local discriminant operators.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueLaplacian {
    matrix: DMatrix<f64>,
    theta: f64,
    k: usize,
}

impl CliqueLaplacian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Build the supervised Laplacian `D - W` where `W[i][j] = 1` iff samples
/// `i` and `j` are both labeled with the same class. The diagonal is
/// included, so every singleton class contributes nothing: with one label
/// per class the whole matrix is zero.
pub fn build_supervised_laplacian(labels: &[Option<usize>]) -> Result<SupervisedLaplacian> {
    let n = labels.len();
    let m = labels.iter().filter(|l| l.is_some()).count();
    if labels[..m].iter().any(|l| l.is_none()) {
        return Err(Error::InvalidParam(
            "supervised laplacian requires labeled samples in the leading columns".into(),
        ));
    }
    let mut class_sizes = std::collections::HashMap::new();
    for label in labels.iter().flatten() {
        *class_sizes.entry(*label).or_insert(0usize) += 1;
    }
    let mut matrix = DMatrix::zeros(n, n);
    for i in 0..m {
        let t = labels[i].expect("labeled block");
        let size = class_sizes[&t] as f64;
        for j in 0..m {
            if labels[j] == Some(t) {
                // D contributes `size` on the diagonal; W subtracts 1 per pair.
                matrix[(i, j)] = if i == j { size - 1.0 } else { -1.0 };
            }
        }
    }
    Ok(SupervisedLaplacian { matrix })
}

/// Exact brute-force k-nearest-neighbor cliques over all training samples,
/// labeled and unlabeled alike, using Euclidean distance in the input space.
///
/// Ties are broken by smaller index; each clique lists the anchor first and
/// neighbors in ascending (distance, index) order.
pub fn knn_cliques(x: &DMatrix<f64>, k: usize) -> Result<CliqueSet> {
    let n = x.ncols();
    if k == 0 || k > n {
        return Err(Error::InvalidParam(format!(
            "clique size must satisfy 1 <= k <= n, got k={k} with n={n}"
        )));
    }
    let mut cliques = Vec::with_capacity(n);
    for i in 0..n {
        let mut order: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| ((x.column(i) - x.column(j)).norm_squared(), j))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut clique = Vec::with_capacity(k);
        clique.push(i);
        clique.extend(order.iter().take(k - 1).map(|&(_, j)| j));
        cliques.push(clique);
    }
    CliqueSet::new(cliques, k)
}

/// Centering matrix `H = I - (1/k) 11^T`; symmetric, idempotent, and it
/// annihilates the constant vector.
pub fn centering_matrix(k: usize) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(Error::InvalidParam("centering size must be >= 1".into()));
    }
    let share = 1.0 / k as f64;
    Ok(DMatrix::from_fn(k, k, |i, j| {
        if i == j { 1.0 - share } else { -share }
    }))
}

/// Local discriminant operator of one clique:
/// `H (Xbar^T Xbar + theta I)^{-1} H` with `Xbar = X_i H`.
///
/// The inner matrix is SPD for any `theta > 0`, so a failed Cholesky
/// factorization signals non-finite input rather than rank deficiency.
pub fn clique_laplacian_term(x_i: &DMatrix<f64>, theta: f64) -> Result<DMatrix<f64>> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParam(format!(
            "theta must be finite and > 0, got {theta}"
        )));
    }
    if x_i.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("clique data contains non-finite values".into()));
    }
    let k = x_i.ncols();
    let h = centering_matrix(k)?;
    let centered = x_i * &h;
    let mut inner = centered.transpose() * &centered;
    for i in 0..k {
        inner[(i, i)] += theta;
    }
    let chol = Cholesky::new(inner).ok_or_else(|| {
        Error::Numeric("clique operator factorization failed on finite input".into())
    })?;
    let solved = chol.solve(&h);
    let term = &h * solved;
    Ok(symmetrize(&term))
}

/// Accumulate all clique operators into the global `n x n` Laplacian.
///
/// Accumulation order is fixed (ascending clique index, row-major inside
/// each term) so the result is bit-identical run to run.
pub fn assemble_clique_laplacian(
    cliques: &CliqueSet,
    x: &DMatrix<f64>,
    theta: f64,
) -> Result<CliqueLaplacian> {
    let n = x.ncols();
    if cliques.len() != n {
        return Err(Error::Shape(format!(
            "clique set covers {} samples but data has {n}",
            cliques.len()
        )));
    }
    let k = cliques.k();
    let mut matrix = DMatrix::zeros(n, n);
    for clique in cliques.cliques() {
        let x_i = x.select_columns(clique.iter());
        let term = clique_laplacian_term(&x_i, theta)?;
        for a in 0..k {
            for b in 0..k {
                matrix[(clique[a], clique[b])] += term[(a, b)];
            }
        }
    }
    Ok(CliqueLaplacian { matrix, theta, k })
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// Brute-force reference implementations used by the test suites. These
/// favor literal transcription over efficiency and are not part of the
/// production path.
pub mod oracle {
    use super::*;

    /// Assemble the global Laplacian by materializing each selection matrix
    /// `S_i` (entry `(p, q) = 1` iff sample `p` is the `q`-th clique member)
    /// and summing the dense products `S_i L_i S_i^T`.
    pub fn selection_assembly(
        cliques: &CliqueSet,
        terms: &[DMatrix<f64>],
        n: usize,
    ) -> Result<DMatrix<f64>> {
        if terms.len() != cliques.len() {
            return Err(Error::Shape(format!(
                "{} terms for {} cliques",
                terms.len(),
                cliques.len()
            )));
        }
        let k = cliques.k();
        let mut total = DMatrix::zeros(n, n);
        for (clique, term) in cliques.cliques().iter().zip(terms) {
            let mut s = DMatrix::zeros(n, k);
            for (q, &p) in clique.iter().enumerate() {
                if p >= n {
                    return Err(Error::InvalidParam(format!(
                        "clique member {p} out of range for n={n}"
                    )));
                }
                s[(p, q)] = 1.0;
            }
            total += &s * term * s.transpose();
        }
        Ok(total)
    }

    /// Literal dense evaluation of the regularized local Fisher criterion
    /// `Tr(G^T H G - G^T Xbar^T (Xbar Xbar^T + theta I)^{-1} Xbar G)`.
    pub fn local_fisher_score(x_i: &DMatrix<f64>, g_i: &DMatrix<f64>, theta: f64) -> Result<f64> {
        let k = x_i.ncols();
        if g_i.nrows() != k {
            return Err(Error::Shape(format!(
                "assignment rows {} do not match clique size {k}",
                g_i.nrows()
            )));
        }
        let h = centering_matrix(k)?;
        let centered = x_i * &h;
        let d = x_i.nrows();
        let mut outer = &centered * centered.transpose();
        for i in 0..d {
            outer[(i, i)] += theta;
        }
        let inv = outer
            .try_inverse()
            .ok_or_else(|| Error::Numeric("singular regularized scatter".into()))?;
        let first = g_i.transpose() * &h * g_i;
        let second = g_i.transpose() * centered.transpose() * inv * &centered * g_i;
        Ok((first - second).trace())
    }
}
