//! Eigendecomposition solver for the constrained trace minimization
//! `min Tr(a^T K (L_w + lambda L) K a)` subject to `a^T K a = I`.
//!
//! The kernel matrix is eigendecomposed as `K = V Lambda V^T` with the
//! numerical null space discarded; the problem then reduces to a standard
//! symmetric eigenproblem for `M = Lambda^{1/2} V^T (L_w + lambda L) V
//! Lambda^{1/2}` whose bottom eigenvectors yield the transform columns via
//! `a = V Lambda^{-1/2} omega`. The null-space component of `a` is fixed to
//! zero: it affects neither the objective nor the constraint.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{CliqueLaplacian, SupervisedLaplacian};
use crate::kernel::{GramMatrix, KernelSpec};

/// Default relative threshold below which kernel eigenvalues are treated
/// as numerical null space.
pub const DEFAULT_DROP_TOLERANCE: f64 = 1e-10;

/// Truncated eigendecomposition of a training Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEigen {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
    drop_tolerance: f64,
}

impl KernelEigen {
    /// Kept eigenvectors, one column per eigenvalue, descending order.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Kept eigenvalues, descending, all strictly positive.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Numerical rank after dropping.
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn drop_tolerance(&self) -> f64 {
        self.drop_tolerance
    }

    /// Rank-truncated reconstruction `V Lambda V^T`; the Gram matrix the
    /// solver effectively operates on.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let lambda = DMatrix::from_diagonal(&DVector::from_row_slice(&self.values));
        &self.vectors * lambda * self.vectors.transpose()
    }
}

/// Mean statistics of a training Gram, kept by baseline models so held-out
/// cross-kernels can be centered consistently with the training centering.
#[derive(Debug, Clone, PartialEq)]
pub struct KpcaCentering {
    pub col_means: Vec<f64>,
    pub total_mean: f64,
}

/// What a model's columns mean and which extra state projection needs.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// Output of [`fit`]: discriminant directions under the Gram constraint.
    Learned {
        lambda_reg: f64,
        theta: f64,
        k: usize,
        /// The r smallest eigenvalues of the reduced problem, ascending.
        /// Empty on models restored from disk; diagnostics are not persisted.
        eigenvalues_of_m: Vec<f64>,
    },
    /// Kernel PCA directions; projection double-centers its input first.
    KpcaBaseline {
        centering: KpcaCentering,
        /// Top eigenvalues of the centered Gram, descending.
        eigenvalues: Vec<f64>,
    },
}

/// Learned transformation: each output feature is a kernel expansion over
/// the training samples with coefficient column `a[:, l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformModel {
    a: DMatrix<f64>,
    kernel: KernelSpec,
    kind: ModelKind,
}

impl TransformModel {
    pub fn learned(
        a: DMatrix<f64>,
        kernel: KernelSpec,
        lambda_reg: f64,
        theta: f64,
        k: usize,
        eigenvalues_of_m: Vec<f64>,
    ) -> Result<Self> {
        if a.ncols() == 0 || a.nrows() == 0 {
            return Err(Error::Shape("transform matrix must be non-empty".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("transform matrix has non-finite entries".into()));
        }
        if !(lambda_reg.is_finite() && lambda_reg >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "lambda must be finite and >= 0, got {lambda_reg}"
            )));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParam(format!(
                "theta must be finite and > 0, got {theta}"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidParam("clique size must be >= 1".into()));
        }
        if !eigenvalues_of_m.is_empty() && eigenvalues_of_m.len() != a.ncols() {
            return Err(Error::Shape(format!(
                "{} recorded eigenvalues for {} columns",
                eigenvalues_of_m.len(),
                a.ncols()
            )));
        }
        Ok(Self {
            a,
            kernel,
            kind: ModelKind::Learned {
                lambda_reg,
                theta,
                k,
                eigenvalues_of_m,
            },
        })
    }

    pub fn kpca(
        a: DMatrix<f64>,
        kernel: KernelSpec,
        centering: KpcaCentering,
        eigenvalues: Vec<f64>,
    ) -> Result<Self> {
        if a.ncols() == 0 || a.nrows() == 0 {
            return Err(Error::Shape("transform matrix must be non-empty".into()));
        }
        if centering.col_means.len() != a.nrows() {
            return Err(Error::Shape(format!(
                "{} column means for {} training samples",
                centering.col_means.len(),
                a.nrows()
            )));
        }
        Ok(Self {
            a,
            kernel,
            kind: ModelKind::KpcaBaseline {
                centering,
                eigenvalues,
            },
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Number of training samples the model expands over.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Output dimensionality.
    pub fn r(&self) -> usize {
        self.a.ncols()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn is_baseline(&self) -> bool {
        matches!(self.kind, ModelKind::KpcaBaseline { .. })
    }
}

/// Result of [`fit`] with the diagnostics callers are expected to log.
/// `objective` and `constraint_residual` are evaluated against the
/// rank-truncated Gram the solver actually saw.
#[derive(Debug, Clone)]
pub struct FitOutput {
    pub model: TransformModel,
    /// Numerical rank of the kernel after dropping.
    pub rank: usize,
    pub objective: f64,
    pub constraint_residual: f64,
}

/// Full symmetric eigendecomposition of the Gram with the numerical null
/// space discarded: eigenpairs with value `<= drop_tolerance * max` (or
/// non-positive) are removed, the rest sorted descending.
pub fn eigendecompose_kernel(k: &GramMatrix, drop_tolerance: f64) -> Result<KernelEigen> {
    if !(drop_tolerance.is_finite() && drop_tolerance >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "drop tolerance must be finite and >= 0, got {drop_tolerance}"
        )));
    }
    let (values, vectors) = sorted_symmetric_eigen(k.values().clone(), false);
    let max = values[0];
    if !(max > 0.0) {
        return Err(Error::Numeric(
            "kernel matrix has no positive eigenvalue".into(),
        ));
    }
    let threshold = drop_tolerance * max;
    let kept = values.iter().take_while(|&&v| v > threshold && v > 0.0).count();
    let mut vectors = vectors.columns(0, kept).clone_owned();
    for j in 0..kept {
        fix_column_sign(&mut vectors, j);
    }
    Ok(KernelEigen {
        vectors,
        values: values[..kept].to_vec(),
        drop_tolerance,
    })
}

/// Solve the constrained trace minimization for an `r`-dimensional
/// transform.
pub fn fit(
    k: &GramMatrix,
    l_w: &SupervisedLaplacian,
    l: &CliqueLaplacian,
    lambda_reg: f64,
    r: usize,
    drop_tolerance: f64,
) -> Result<FitOutput> {
    if !(lambda_reg.is_finite() && lambda_reg >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "lambda must be finite and >= 0, got {lambda_reg}"
        )));
    }
    if r == 0 {
        return Err(Error::InvalidParam("r must be >= 1".into()));
    }
    let n = k.len();
    for (name, m) in [("supervised laplacian", l_w.matrix()), ("clique laplacian", l.matrix())] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Shape(format!(
                "{name} is {}x{}, expected {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("{name} has non-finite entries")));
        }
    }
    let eigen = eigendecompose_kernel(k, drop_tolerance)?;
    let rho = eigen.rank();
    if r > rho {
        return Err(Error::InvalidParam(format!(
            "r={r} exceeds the kernel's numerical rank; at most r={rho} is feasible"
        )));
    }

    let combined = l_w.matrix() + lambda_reg * l.matrix();
    let projected = eigen.vectors().transpose() * &combined * eigen.vectors();
    let sqrt_values: Vec<f64> = eigen.values().iter().map(|v| v.sqrt()).collect();
    let mut m = DMatrix::from_fn(rho, rho, |i, j| {
        sqrt_values[i] * sqrt_values[j] * projected[(i, j)]
    });
    m = symmetrize(&m);
    let (m_values, mut m_vectors) = sorted_symmetric_eigen(m, true);

    let mut a = DMatrix::zeros(n, r);
    for j in 0..r {
        fix_column_sign(&mut m_vectors, j);
        let beta = DVector::from_fn(rho, |i, _| m_vectors[(i, j)] / sqrt_values[i]);
        // Column-by-column product keeps each column's value independent of r.
        let column = eigen.vectors() * beta;
        a.set_column(j, &column);
    }

    // The analytic whitening satisfies the constraint only up to an error
    // that grows with the kernel's condition number, which near the drop
    // threshold can exceed the 1e-8 contract. One triangular
    // re-normalization in the truncated-K metric brings it back to
    // rounding level; it right-multiplies a, so the learned span and the
    // column nesting across r are unchanged.
    let truncated = eigen.reconstruct();
    let a = renormalize_in_metric(a, &truncated)?;

    let model = TransformModel::learned(
        a,
        k.spec().clone(),
        lambda_reg,
        l.theta(),
        l.k(),
        m_values[..r].to_vec(),
    )?;
    let (objective, _) =
        objective_value(model.a(), &truncated, l_w.matrix(), l.matrix(), lambda_reg)?;
    let metric = metric_gram(model.a(), &truncated);
    let mut constraint_residual = 0.0f64;
    for i in 0..r {
        for j in 0..r {
            let target = if i == j { 1.0 } else { 0.0 };
            constraint_residual = constraint_residual.max((metric[(i, j)] - target).abs());
        }
    }
    Ok(FitOutput {
        model,
        rank: rho,
        objective,
        constraint_residual,
    })
}

#[inline]
fn accumulate(sum: &mut f64, comp: &mut f64, value: f64) {
    let t = *sum + value;
    if sum.abs() >= value.abs() {
        *comp += (*sum - t) + value;
    } else {
        *comp += (value - t) + *sum;
    }
    *sum = t;
}

/// `a^T k a` with exact-product compensated accumulation. The plain gemm
/// is useless here: when the kernel's condition number approaches the drop
/// threshold, a's columns scale like 1/sqrt(lambda_min) and the
/// cancellation in the ordinary product buries the residual we are trying
/// to control. Entry (i, j) depends only on columns i and j of `a`.
fn metric_gram(a: &DMatrix<f64>, k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let r = a.ncols();
    let mut ka = DMatrix::zeros(n, r);
    for j in 0..r {
        for s in 0..n {
            let (mut sum, mut comp) = (0.0, 0.0);
            for u in 0..n {
                let product = k[(s, u)] * a[(u, j)];
                let error = k[(s, u)].mul_add(a[(u, j)], -product);
                accumulate(&mut sum, &mut comp, product);
                accumulate(&mut sum, &mut comp, error);
            }
            ka[(s, j)] = sum + comp;
        }
    }
    DMatrix::from_fn(r, r, |i, j| {
        let (mut sum, mut comp) = (0.0, 0.0);
        for s in 0..n {
            let product = a[(s, i)] * ka[(s, j)];
            let error = a[(s, i)].mul_add(ka[(s, j)], -product);
            accumulate(&mut sum, &mut comp, product);
            accumulate(&mut sum, &mut comp, error);
        }
        sum + comp
    })
}

/// Replace `a` by `a R^{-1}` where `a^T K a = R^T R`, so the result is
/// K-orthonormal to rounding accuracy. The Cholesky factor and the
/// substitution are hand-rolled in a fixed leading-block order: column `j`
/// of the output depends only on columns `0..=j` of the input, which keeps
/// models bitwise nested across r.
fn renormalize_in_metric(a: DMatrix<f64>, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = a.ncols();
    let b = metric_gram(&a, k);
    let mut lower = DMatrix::zeros(r, r);
    for j in 0..r {
        let mut diag = b[(j, j)];
        for s in 0..j {
            diag -= lower[(j, s)] * lower[(j, s)];
        }
        if !(diag > 0.0) {
            return Err(Error::Numeric(
                "constraint Gram lost positive definiteness during normalization".into(),
            ));
        }
        lower[(j, j)] = diag.sqrt();
        for i in (j + 1)..r {
            let mut off = b[(i, j)];
            for s in 0..j {
                off -= lower[(i, s)] * lower[(j, s)];
            }
            lower[(i, j)] = off / lower[(j, j)];
        }
    }
    let n = a.nrows();
    let mut refined = DMatrix::zeros(n, r);
    for j in 0..r {
        let mut column = a.column(j).clone_owned();
        for i in 0..j {
            column -= lower[(j, i)] * refined.column(i);
        }
        column /= lower[(j, j)];
        refined.set_column(j, &column);
    }
    Ok(refined)
}

/// Evaluate `Tr(a^T K (L_w + lambda L) K a)` and the constraint residual
/// `max |a^T K a - I|` for diagnostics.
pub fn objective_value(
    a: &DMatrix<f64>,
    k: &DMatrix<f64>,
    l_w: &DMatrix<f64>,
    l: &DMatrix<f64>,
    lambda_reg: f64,
) -> Result<(f64, f64)> {
    let n = k.nrows();
    if a.nrows() != n
        || k.ncols() != n
        || l_w.nrows() != n
        || l_w.ncols() != n
        || l.nrows() != n
        || l.ncols() != n
    {
        return Err(Error::Shape(
            "objective operands must share the training size".into(),
        ));
    }
    let ka = k * a;
    let combined = l_w + lambda_reg * l;
    let objective = (ka.transpose() * combined * &ka).trace();
    let constraint = a.transpose() * k * a;
    let residual = (&constraint - DMatrix::identity(a.ncols(), a.ncols())).amax();
    Ok((objective, residual))
}

/// Project the training samples: returns the `r x n` feature matrix
/// `a^T K` (with `K` double-centered first for baseline models).
pub fn transform_train(k: &GramMatrix, model: &TransformModel) -> Result<DMatrix<f64>> {
    if k.len() != model.n() {
        return Err(Error::Shape(format!(
            "gram size {} does not match model size {}",
            k.len(),
            model.n()
        )));
    }
    match model.kind() {
        ModelKind::Learned { .. } => Ok(model.a().transpose() * k.values()),
        ModelKind::KpcaBaseline { .. } => {
            let centered = double_center(k.values());
            Ok(model.a().transpose() * centered)
        }
    }
}

/// Project held-out samples from their `t x n` cross-Gram against the
/// training set (training order must match the fit).
pub fn transform_test(k_cross: &DMatrix<f64>, model: &TransformModel) -> Result<DMatrix<f64>> {
    if k_cross.ncols() != model.n() {
        return Err(Error::Shape(format!(
            "cross-gram has {} training columns, model expects {}",
            k_cross.ncols(),
            model.n()
        )));
    }
    match model.kind() {
        ModelKind::Learned { .. } => Ok(model.a().transpose() * k_cross.transpose()),
        ModelKind::KpcaBaseline { centering, .. } => {
            let centered = center_cross(k_cross, centering);
            Ok(model.a().transpose() * centered.transpose())
        }
    }
}

/// `J K J` with `J = I - (1/n) 1 1^T`.
pub fn double_center(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let col_means: Vec<f64> = (0..n).map(|j| k.column(j).sum() / n as f64).collect();
    let total_mean = col_means.iter().sum::<f64>() / n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / n as f64).collect();
    DMatrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - col_means[j] + total_mean)
}

fn center_cross(k_cross: &DMatrix<f64>, centering: &KpcaCentering) -> DMatrix<f64> {
    let t = k_cross.nrows();
    let n = k_cross.ncols();
    let row_means: Vec<f64> = (0..t).map(|j| k_cross.row(j).sum() / n as f64).collect();
    DMatrix::from_fn(t, n, |j, i| {
        k_cross[(j, i)] - row_means[j] - centering.col_means[i] + centering.total_mean
    })
}

/// Serialize a learned model to the plain-text `locdisc-model v1` format.
/// Coefficients are printed with 17 significant digits, so reload is exact.
pub fn save_model(model: &TransformModel, path: &Path) -> Result<()> {
    let ModelKind::Learned {
        lambda_reg,
        theta,
        k,
        ..
    } = model.kind()
    else {
        return Err(Error::InvalidParam(
            "baseline models are projection-only and cannot be serialized".into(),
        ));
    };
    let mut out = String::new();
    out.push_str("locdisc-model v1\n");
    let _ = writeln!(out, "n {}", model.n());
    let _ = writeln!(out, "r {}", model.r());
    let _ = writeln!(out, "lambda {lambda_reg:.16e}");
    let _ = writeln!(out, "theta {theta:.16e}");
    let _ = writeln!(out, "k {k}");
    match model.kernel() {
        KernelSpec::Rbf { gamma } => {
            let _ = writeln!(out, "kernel rbf {gamma:.16e}");
        }
        KernelSpec::ChiSquared { gamma, epsilon } => {
            let _ = writeln!(out, "kernel chi2 {gamma:.16e} {epsilon:.16e}");
        }
        KernelSpec::Linear => out.push_str("kernel linear\n"),
        KernelSpec::Precomputed { path } => {
            let _ = writeln!(out, "kernel precomputed {}", path.display());
        }
    }
    out.push_str("a\n");
    for i in 0..model.n() {
        let row: Vec<String> = (0..model.r())
            .map(|j| format!("{:.16e}", model.a()[(i, j)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Restore a model written by [`save_model`]. Solver diagnostics (the
/// eigenvalues of the reduced problem) are not part of the format.
pub fn load_model(path: &Path) -> Result<TransformModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let mut next = |expect: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, line)) => Ok((i + 1, line.to_string())),
            None => Err(Error::parse(path, 0, format!("missing {expect}"))),
        }
    };

    let (lineno, header) = next("header")?;
    if header.trim() != "locdisc-model v1" {
        return Err(Error::parse(path, lineno, "expected header `locdisc-model v1`"));
    }
    let n = parse_field::<usize>(path, &mut next, "n")?;
    let r = parse_field::<usize>(path, &mut next, "r")?;
    let lambda_reg = parse_field::<f64>(path, &mut next, "lambda")?;
    let theta = parse_field::<f64>(path, &mut next, "theta")?;
    let k = parse_field::<usize>(path, &mut next, "k")?;

    let (lineno, kernel_line) = next("kernel line")?;
    let kernel = parse_kernel_line(path, lineno, &kernel_line)?;

    let (lineno, marker) = next("matrix marker")?;
    if marker.trim() != "a" {
        return Err(Error::parse(path, lineno, "expected matrix marker `a`"));
    }
    let mut a = DMatrix::zeros(n, r);
    for i in 0..n {
        let (lineno, line) = next("matrix row")?;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != r {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {r} coefficients, got {}", cells.len()),
            ));
        }
        for (j, cell) in cells.iter().enumerate() {
            a[(i, j)] = cell.trim().parse().map_err(|_| {
                Error::parse(path, lineno, format!("non-numeric coefficient {cell:?}"))
            })?;
        }
    }
    TransformModel::learned(a, kernel, lambda_reg, theta, k, Vec::new())
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    next: &mut impl FnMut(&str) -> Result<(usize, String)>,
    key: &str,
) -> Result<T> {
    let (lineno, line) = next(key)?;
    let rest = line
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| Error::parse(path, lineno, format!("expected `{key} <value>`")))?;
    rest.trim()
        .parse()
        .map_err(|_| Error::parse(path, lineno, format!("bad value for {key}: {rest:?}")))
}

fn parse_kernel_line(path: &Path, lineno: usize, line: &str) -> Result<KernelSpec> {
    let rest = line
        .strip_prefix("kernel ")
        .ok_or_else(|| Error::parse(path, lineno, "expected `kernel <spec>`"))?;
    let mut parts = rest.split_whitespace();
    match parts.next() {
        Some("rbf") => {
            let gamma: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(path, lineno, "rbf kernel needs a gamma"))?;
            KernelSpec::rbf(gamma)
        }
        Some("chi2") => {
            let gamma: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(path, lineno, "chi2 kernel needs a gamma"))?;
            let epsilon: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(path, lineno, "chi2 kernel needs an epsilon"))?;
            KernelSpec::chi_squared(gamma, epsilon)
        }
        Some("linear") => Ok(KernelSpec::Linear),
        Some("precomputed") => {
            let raw = rest.strip_prefix("precomputed").unwrap_or("").trim();
            if raw.is_empty() {
                return Err(Error::parse(path, lineno, "precomputed kernel needs a path"));
            }
            Ok(KernelSpec::Precomputed {
                path: PathBuf::from(raw),
            })
        }
        other => Err(Error::parse(
            path,
            lineno,
            format!("unknown kernel kind {other:?}"),
        )),
    }
}

/// Deterministic sign convention: flip a column so its entry of largest
/// absolute value (lowest index on ties) is nonnegative.
fn fix_column_sign(vectors: &mut DMatrix<f64>, j: usize) {
    let mut best = 0;
    let mut best_abs = vectors[(0, j)].abs();
    for i in 1..vectors.nrows() {
        let a = vectors[(i, j)].abs();
        if a > best_abs {
            best = i;
            best_abs = a;
        }
    }
    if vectors[(best, j)] < 0.0 {
        for i in 0..vectors.nrows() {
            vectors[(i, j)] = -vectors[(i, j)];
        }
    }
}

/// Eigenpairs of a symmetric matrix sorted by value with index tie-break.
fn sorted_symmetric_eigen(m: DMatrix<f64>, ascending: bool) -> (Vec<f64>, DMatrix<f64>) {
    let eigen = m.symmetric_eigen();
    let count = eigen.eigenvalues.len();
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&i, &j| {
        let cmp = eigen.eigenvalues[i].total_cmp(&eigen.eigenvalues[j]);
        let cmp = if ascending { cmp } else { cmp.reverse() };
        cmp.then(i.cmp(&j))
    });
    let values: Vec<f64> = order.iter().map(|&i| eigen.eigenvalues[i]).collect();
    let vectors = eigen.eigenvectors.select_columns(order.iter());
    (values, vectors)
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::data::{make_gaussian_blobs, sample_labels_per_class};
    use crate::graph::{assemble_clique_laplacian, build_supervised_laplacian, knn_cliques};
    use crate::kernel::gram_matrix;

    fn identity_gram(n: usize) -> GramMatrix {
        GramMatrix::from_values(DMatrix::identity(n, n), KernelSpec::Linear).unwrap()
    }

    /// A small end-to-end problem instance on blob data.
    fn blob_instance(
        n_per_class: usize,
        classes: usize,
        p: usize,
        seed: u64,
    ) -> (GramMatrix, SupervisedLaplacian, CliqueLaplacian) {
        let ds = make_gaussian_blobs(classes, n_per_class, 2, 1.0, seed).unwrap();
        let split = sample_labels_per_class(&ds, p, seed + 1).unwrap();
        let masked = ds.mask_labels(&split).unwrap();
        let (ordered, _) = crate::data::reorder_labeled_first(&masked);
        let k = gram_matrix(ordered.samples(), &KernelSpec::rbf(0.5).unwrap()).unwrap();
        let l_w = build_supervised_laplacian(ordered.labels()).unwrap();
        let cliques = knn_cliques(ordered.samples(), 3.min(ordered.len())).unwrap();
        let l = assemble_clique_laplacian(&cliques, ordered.samples(), 1.0).unwrap();
        (k, l_w, l)
    }

    #[test]
    fn eigen_identity_kernel() {
        let eigen = eigendecompose_kernel(&identity_gram(3), 1e-10).unwrap();
        assert_eq!(eigen.rank(), 3);
        assert_eq!(eigen.values(), &[1.0, 1.0, 1.0]);
        let vtv = eigen.vectors().transpose() * eigen.vectors();
        assert!((&vtv - DMatrix::identity(3, 3)).amax() <= 1e-10);
    }

    #[test]
    fn eigen_rank_one_kernel() {
        let k = GramMatrix::from_values(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            KernelSpec::Linear,
        )
        .unwrap();
        let eigen = eigendecompose_kernel(&k, 1e-10).unwrap();
        assert_eq!(eigen.rank(), 1);
        assert!((eigen.values()[0] - 2.0).abs() <= 1e-12);
        let expected = 1.0 / 2.0_f64.sqrt();
        // Sign convention resolves the eigenvector to the positive choice.
        assert!((eigen.vectors()[(0, 0)] - expected).abs() <= 1e-12);
        assert!((eigen.vectors()[(1, 0)] - expected).abs() <= 1e-12);
    }

    #[test]
    fn eigen_reconstructs_full_rank_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let a = DMatrix::from_fn(20, 10, |_, _| rng.random_range(-1.0..1.0));
        let mut k = &a * a.transpose();
        for i in 0..20 {
            k[(i, i)] += 1.0;
        }
        let k = GramMatrix::from_values(symmetrize(&k), KernelSpec::Linear).unwrap();
        let eigen = eigendecompose_kernel(&k, 1e-10).unwrap();
        assert_eq!(eigen.rank(), 20);
        assert!((eigen.reconstruct() - k.values()).amax() <= 1e-9);
    }

    #[test]
    fn eigen_drops_null_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let a = DMatrix::from_fn(12, 4, |_, _| rng.random_range(-1.0..1.0));
        let k = GramMatrix::from_values(symmetrize(&(&a * a.transpose())), KernelSpec::Linear)
            .unwrap();
        let eigen = eigendecompose_kernel(&k, 1e-10).unwrap();
        assert_eq!(eigen.rank(), 4);
        let max = eigen.values()[0];
        for window in eigen.values().windows(2) {
            assert!(window[0] >= window[1], "values must be descending");
        }
        assert!(eigen.values().iter().all(|&v| v > 1e-10 * max));
        let vtv = eigen.vectors().transpose() * eigen.vectors();
        assert!((&vtv - DMatrix::identity(4, 4)).amax() <= 1e-10);
    }

    #[test]
    fn eigen_rejects_zero_kernel() {
        let k = GramMatrix::from_values(DMatrix::zeros(3, 3), KernelSpec::Linear).unwrap();
        assert!(eigendecompose_kernel(&k, 1e-10).is_err());
    }

    #[test]
    fn fit_degenerate_objective_is_zero() {
        // Every sample its own class: the supervised term vanishes; with
        // lambda = 0 the whole objective is zero and any feasible a works.
        let ds = make_gaussian_blobs(4, 1, 2, 1.0, 77).unwrap();
        let k = gram_matrix(ds.samples(), &KernelSpec::rbf(1.0).unwrap()).unwrap();
        let l_w = build_supervised_laplacian(ds.labels()).unwrap();
        assert!(l_w.matrix().iter().all(|&v| v == 0.0));
        let cliques = knn_cliques(ds.samples(), 2).unwrap();
        let l = assemble_clique_laplacian(&cliques, ds.samples(), 1.0).unwrap();
        let out = fit(&k, &l_w, &l, 0.0, 2, 1e-10).unwrap();
        assert!(out.objective.abs() <= 1e-10);
        assert!(out.constraint_residual <= 1e-8);
    }

    #[test]
    fn fit_objective_equals_sum_of_smallest_eigenvalues() {
        for seed in 0..5 {
            let (k, l_w, l) = blob_instance(8, 2, 3, 100 + seed);
            let out = fit(&k, &l_w, &l, 1.0, 2, 1e-10).unwrap();
            let ModelKind::Learned {
                eigenvalues_of_m, ..
            } = out.model.kind()
            else {
                panic!("fit returns learned models");
            };
            assert!(eigenvalues_of_m.windows(2).all(|w| w[0] <= w[1]));
            let sum: f64 = eigenvalues_of_m.iter().sum();
            assert!(
                (out.objective - sum).abs() <= 1e-8,
                "objective {} vs eigenvalue sum {sum}",
                out.objective
            );
        }
    }

    #[test]
    fn fit_beats_random_competitors() {
        let (k, l_w, l) = blob_instance(3, 2, 3, 200);
        let out = fit(&k, &l_w, &l, 1.0, 1, 1e-10).unwrap();
        let eigen = eigendecompose_kernel(&k, 1e-10).unwrap();
        let truncated = eigen.reconstruct();
        let rho = eigen.rank();
        let mut rng = ChaCha8Rng::seed_from_u64(201);
        for trial in 0..100 {
            // Random K-orthonormal direction: a = V Lambda^{-1/2} q, unit q.
            let mut q = DVector::from_fn(rho, |_, _| rng.random_range(-1.0..1.0));
            q /= q.norm();
            let beta = DVector::from_fn(rho, |i, _| q[i] / eigen.values()[i].sqrt());
            let candidate = eigen.vectors() * beta;
            let a = DMatrix::from_column_slice(candidate.len(), 1, candidate.as_slice());
            let (objective, residual) =
                objective_value(&a, &truncated, l_w.matrix(), l.matrix(), 1.0).unwrap();
            assert!(residual <= 1e-8, "competitor {trial} infeasible: {residual}");
            assert!(
                objective >= out.objective - 1e-9,
                "competitor {trial} beat the solver: {objective} < {}",
                out.objective
            );
        }
    }

    #[test]
    fn fit_monotone_nesting() {
        let (k, l_w, l) = blob_instance(6, 2, 2, 300);
        let small = fit(&k, &l_w, &l, 0.8, 2, 1e-10).unwrap();
        let large = fit(&k, &l_w, &l, 0.8, 3, 1e-10).unwrap();
        for j in 0..2 {
            for i in 0..small.model.n() {
                assert!(
                    small.model.a()[(i, j)] == large.model.a()[(i, j)],
                    "column {j} differs at row {i}"
                );
            }
        }
    }

    #[test]
    fn fit_scale_coupling_preserves_span() {
        // Doubling the regularized graph scales the objective by two and
        // leaves the argmin subspace unchanged.
        let ds = make_gaussian_blobs(4, 1, 2, 1.0, 400).unwrap();
        let k = gram_matrix(ds.samples(), &KernelSpec::rbf(0.7).unwrap()).unwrap();
        let l_w = build_supervised_laplacian(ds.labels()).unwrap();
        let cliques = knn_cliques(ds.samples(), 2).unwrap();
        let l = assemble_clique_laplacian(&cliques, ds.samples(), 1.0).unwrap();
        let base = fit(&k, &l_w, &l, 0.7, 2, 1e-10).unwrap();
        let doubled = fit(&k, &l_w, &l, 1.4, 2, 1e-10).unwrap();
        assert!(
            (doubled.objective - 2.0 * base.objective).abs()
                <= 1e-8 * base.objective.abs().max(1.0)
        );
        let q1 = base.model.a().clone().qr().q();
        let q2 = doubled.model.a().clone().qr().q();
        let overlap = q1.transpose() * q2;
        let sigma_min = overlap
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let angle = sigma_min.clamp(-1.0, 1.0).acos();
        assert!(angle <= 1e-6, "principal angle {angle}");
    }

    #[test]
    fn fit_rejects_oversized_r() {
        let (k, l_w, l) = blob_instance(3, 2, 2, 500);
        let err = fit(&k, &l_w, &l, 1.0, 100, 1e-10).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("at most"), "message: {message}");
    }

    #[test]
    fn objective_zero_transform() {
        let n = 4;
        let a = DMatrix::zeros(n, 2);
        let k = DMatrix::identity(n, n);
        let zero = DMatrix::zeros(n, n);
        let (objective, residual) = objective_value(&a, &k, &zero, &zero, 1.0).unwrap();
        assert_eq!(objective, 0.0);
        assert_eq!(residual, 1.0);
    }

    #[test]
    fn objective_lambda_zero_matches_dense_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let n = 6;
        let a = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
        let k_raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let k = symmetrize(&k_raw);
        let lw_raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let l_w = symmetrize(&lw_raw);
        let zero = DMatrix::zeros(n, n);
        let (objective, _) = objective_value(&a, &k, &l_w, &zero, 0.0).unwrap();
        let direct = (a.transpose() * &k * &l_w * &k * &a).trace();
        assert!((objective - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn objective_invariant_under_orthogonal_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let (k, l_w, l) = blob_instance(5, 2, 2, 600);
        let out = fit(&k, &l_w, &l, 1.0, 2, 1e-10).unwrap();
        let raw = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
        let q = raw.qr().q();
        let rotated = out.model.a() * &q;
        let (base_obj, _) =
            objective_value(out.model.a(), k.values(), l_w.matrix(), l.matrix(), 1.0).unwrap();
        let (rot_obj, _) =
            objective_value(&rotated, k.values(), l_w.matrix(), l.matrix(), 1.0).unwrap();
        assert!((base_obj - rot_obj).abs() <= 1e-9 * base_obj.abs().max(1.0));
    }

    #[test]
    fn transform_train_identity_kernel() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let model =
            TransformModel::learned(a, KernelSpec::Linear, 1.0, 1.0, 2, Vec::new()).unwrap();
        let features = transform_train(&identity_gram(3), &model).unwrap();
        assert_eq!(features.nrows(), 1);
        assert_eq!(features[(0, 0)], 1.0);
        assert_eq!(features[(0, 1)], 0.0);
        assert_eq!(features[(0, 2)], 0.0);
    }

    #[test]
    fn transform_train_feature_gram_is_psd() {
        let (k, l_w, l) = blob_instance(5, 2, 2, 700);
        let out = fit(&k, &l_w, &l, 1.0, 2, 1e-10).unwrap();
        let features = transform_train(&k, &out.model).unwrap();
        let feature_gram = &features * features.transpose();
        assert!((&feature_gram - symmetrize(&feature_gram)).amax() <= 1e-12);
        let min_eig = feature_gram
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(min_eig >= -1e-10);
    }

    #[test]
    fn transform_matches_per_sample_loop() {
        let (k, l_w, l) = blob_instance(4, 2, 2, 800);
        let out = fit(&k, &l_w, &l, 1.0, 2, 1e-10).unwrap();
        let features = transform_train(&k, &out.model).unwrap();
        let a = out.model.a();
        for j in 0..k.len() {
            for row in 0..out.model.r() {
                let mut expected = 0.0;
                for i in 0..k.len() {
                    expected += a[(i, row)] * k.values()[(i, j)];
                }
                assert!((features[(row, j)] - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn transform_test_consistency_with_train() {
        let ds = make_gaussian_blobs(2, 4, 2, 1.0, 900).unwrap();
        let spec = KernelSpec::rbf(0.6).unwrap();
        let k = gram_matrix(ds.samples(), &spec).unwrap();
        let l_w = build_supervised_laplacian(ds.labels()).unwrap();
        let cliques = knn_cliques(ds.samples(), 3).unwrap();
        let l = assemble_clique_laplacian(&cliques, ds.samples(), 1.0).unwrap();
        let out = fit(&k, &l_w, &l, 1.0, 2, 1e-10).unwrap();
        let train_features = transform_train(&k, &out.model).unwrap();
        let cross = crate::kernel::cross_gram(ds.samples(), ds.samples(), &spec).unwrap();
        let test_features = transform_test(&cross, &out.model).unwrap();
        assert!((&train_features - &test_features).amax() == 0.0);

        // A single test point duplicating training sample 3.
        let point = ds.samples().column(3).clone_owned();
        let single = DMatrix::from_column_slice(2, 1, point.as_slice());
        let cross_one = crate::kernel::cross_gram(&single, ds.samples(), &spec).unwrap();
        let feature_one = transform_test(&cross_one, &out.model).unwrap();
        for row in 0..out.model.r() {
            assert!((feature_one[(row, 0)] - train_features[(row, 3)]).abs() <= 1e-12);
        }
    }

    #[test]
    fn model_round_trip_is_exact() {
        let (k, l_w, l) = blob_instance(4, 2, 2, 1000);
        let out = fit(&k, &l_w, &l, 0.3, 2, 1e-10).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        save_model(&out.model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded.a(), out.model.a(), "coefficients must round-trip bitwise");
        assert_eq!(loaded.kernel(), out.model.kernel());
        let ModelKind::Learned {
            lambda_reg, theta, k: clique_k, ..
        } = loaded.kind()
        else {
            panic!("loaded model must be learned");
        };
        assert_eq!(*lambda_reg, 0.3);
        assert_eq!(*theta, 1.0);
        assert_eq!(*clique_k, 3);
    }

    #[test]
    fn save_rejects_baseline_models() {
        let a = DMatrix::from_element(3, 1, 0.5);
        let centering = KpcaCentering {
            col_means: vec![0.0; 3],
            total_mean: 0.0,
        };
        let model = TransformModel::kpca(a, KernelSpec::Linear, centering, vec![1.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = save_model(&model, &dir.path().join("model.txt")).unwrap_err();
        assert!(matches!(err, Error::InvalidParam(_)));
    }

    #[test]
    fn load_rejects_malformed_model() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        std::fs::write(&path, "locdisc-model v2\n").unwrap();
        assert!(load_model(&path).is_err());
        std::fs::write(&path, "locdisc-model v1\nn 2\nr 1\nlambda 0\ntheta 1\nk 1\nkernel linear\na\n1.0\n")
            .unwrap();
        // Second matrix row missing.
        assert!(load_model(&path).is_err());
    }

    #[test]
    fn constraint_holds_against_truncated_gram() {
        let (k, l_w, l) = blob_instance(10, 2, 4, 1100);
        let out = fit(&k, &l_w, &l, 1.0, 3, 1e-10).unwrap();
        let eigen = eigendecompose_kernel(&k, 1e-10).unwrap();
        let truncated = eigen.reconstruct();
        let gram_constraint = out.model.a().transpose() * truncated * out.model.a();
        assert!((gram_constraint - DMatrix::identity(3, 3)).amax() <= 1e-8);
        assert!(out.constraint_residual <= 1e-8);
    }
}
