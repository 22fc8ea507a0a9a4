//! Kernel functions and Gram-matrix assembly, including the rectangular
//! cross-Gram used to project held-out points.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::data::read_csv_matrix;
use crate::error::{Error, Result};

/// Default denominator guard for the chi-squared kernel.
pub const CHI_SQUARED_EPSILON: f64 = 1e-10;

/// Tolerance for the symmetry check applied to precomputed kernel files.
pub const PRECOMPUTED_SYMMETRY_TOL: f64 = 1e-9;

/// Kernel choice. `Precomputed` reads a square CSV in training order and
/// supports no out-of-sample evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Rbf { gamma: f64 },
    ChiSquared { gamma: f64, epsilon: f64 },
    Linear,
    Precomputed { path: PathBuf },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParam(format!(
                "rbf gamma must be finite and > 0, got {gamma}"
            )));
        }
        Ok(KernelSpec::Rbf { gamma })
    }

    pub fn chi_squared(gamma: f64, epsilon: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParam(format!(
                "chi-squared gamma must be finite and > 0, got {gamma}"
            )));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParam(format!(
                "chi-squared epsilon must be finite and > 0, got {epsilon}"
            )));
        }
        Ok(KernelSpec::ChiSquared { gamma, epsilon })
    }

    /// True for kernels that can score previously unseen samples.
    pub fn supports_out_of_sample(&self) -> bool {
        !matches!(self, KernelSpec::Precomputed { .. })
    }
}

/// Kernel choice with the bandwidth possibly left open; a missing gamma is
/// resolved against the training data via [`median_heuristic_gamma`].
#[derive(Debug, Clone, PartialEq)]
pub enum KernelConfig {
    Rbf { gamma: Option<f64> },
    ChiSquared { gamma: Option<f64>, epsilon: f64 },
    Linear,
    Precomputed { path: PathBuf },
}

impl KernelConfig {
    /// Finalize the spec for a concrete training matrix.
    pub fn resolve(&self, x_train: &DMatrix<f64>) -> Result<KernelSpec> {
        match self {
            KernelConfig::Rbf { gamma } => {
                let gamma = match gamma {
                    Some(g) => *g,
                    None => median_heuristic_gamma(x_train)?,
                };
                KernelSpec::rbf(gamma)
            }
            KernelConfig::ChiSquared { gamma, epsilon } => {
                let gamma = match gamma {
                    Some(g) => *g,
                    None => median_heuristic_gamma(x_train)?,
                };
                KernelSpec::chi_squared(gamma, *epsilon)
            }
            KernelConfig::Linear => Ok(KernelSpec::Linear),
            KernelConfig::Precomputed { path } => Ok(KernelSpec::Precomputed { path: path.clone() }),
        }
    }

    /// True for kernels that can score previously unseen samples.
    pub fn supports_out_of_sample(&self) -> bool {
        !matches!(self, KernelConfig::Precomputed { .. })
    }
}

/// Symmetric kernel matrix over the training samples.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: DMatrix<f64>,
    spec: KernelSpec,
}

impl GramMatrix {
    /// Wrap an externally assembled kernel matrix. The input must be square
    /// and symmetric to within [`PRECOMPUTED_SYMMETRY_TOL`]; it is then
    /// symmetrized exactly.
    pub fn from_values(values: DMatrix<f64>, spec: KernelSpec) -> Result<Self> {
        if values.nrows() != values.ncols() || values.nrows() == 0 {
            return Err(Error::Shape(format!(
                "gram matrix must be square and non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("gram matrix contains non-finite values".into()));
        }
        let asym = (&values - values.transpose()).amax();
        if asym > PRECOMPUTED_SYMMETRY_TOL {
            return Err(Error::Numeric(format!(
                "gram matrix is asymmetric: max |K - K^T| = {asym:.3e}"
            )));
        }
        Ok(GramMatrix {
            values: symmetrize(&values),
            spec,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Sub-Gram over `indices`, preserving their order. Used to carry a
    /// precomputed kernel through a column permutation of the dataset.
    pub fn select(&self, indices: &[usize]) -> Result<GramMatrix> {
        let n = self.len();
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidParam(format!(
                    "gram index {i} out of range for size {n}"
                )));
            }
        }
        let values = DMatrix::from_fn(indices.len(), indices.len(), |i, j| {
            self.values[(indices[i], indices[j])]
        });
        Ok(GramMatrix {
            values,
            spec: self.spec.clone(),
        })
    }
}

/// Evaluate the kernel on a pair of columns.
pub fn kernel_eval(
    x: nalgebra::DVectorView<f64>,
    y: nalgebra::DVectorView<f64>,
    spec: &KernelSpec,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "kernel arguments must share a dimension, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    match spec {
        KernelSpec::Rbf { gamma } => {
            let mut dist2 = 0.0;
            for j in 0..x.len() {
                let diff = x[j] - y[j];
                dist2 += diff * diff;
            }
            Ok((-gamma * dist2).exp())
        }
        KernelSpec::ChiSquared { gamma, epsilon } => {
            let mut chi2 = 0.0;
            for j in 0..x.len() {
                if x[j] < 0.0 || y[j] < 0.0 {
                    return Err(Error::InvalidParam(format!(
                        "chi-squared kernel requires nonnegative features, got {} at row {j}",
                        x[j].min(y[j])
                    )));
                }
                let diff = x[j] - y[j];
                chi2 += diff * diff / (x[j] + y[j] + epsilon);
            }
            Ok((-gamma * chi2).exp())
        }
        KernelSpec::Linear => Ok(x.dot(&y)),
        KernelSpec::Precomputed { .. } => Err(Error::InvalidParam(
            "precomputed kernels cannot evaluate individual pairs".into(),
        )),
    }
}

/// Assemble the training Gram matrix; output is explicitly symmetrized as
/// `(A + A^T) / 2` so downstream eigensolves see an exactly symmetric input.
pub fn gram_matrix(x: &DMatrix<f64>, spec: &KernelSpec) -> Result<GramMatrix> {
    let n = x.ncols();
    if n == 0 {
        return Err(Error::Shape("gram matrix needs at least one sample".into()));
    }
    let values = match spec {
        KernelSpec::Precomputed { path } => load_precomputed(path, n)?,
        _ => {
            let mut raw = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    raw[(i, j)] = kernel_eval(x.column(i), x.column(j), spec)?;
                }
            }
            symmetrize(&raw)
        }
    };
    Ok(GramMatrix {
        values,
        spec: spec.clone(),
    })
}

/// Kernel evaluations of test columns against training columns: the output
/// is `t x n` with entry `(j, i) = k(test_j, train_i)`.
pub fn cross_gram(
    x_test: &DMatrix<f64>,
    x_train: &DMatrix<f64>,
    spec: &KernelSpec,
) -> Result<DMatrix<f64>> {
    if x_test.nrows() != x_train.nrows() {
        return Err(Error::Shape(format!(
            "test dimension {} does not match training dimension {}",
            x_test.nrows(),
            x_train.nrows()
        )));
    }
    if !spec.supports_out_of_sample() {
        return Err(Error::InvalidParam(
            "precomputed kernels cannot be evaluated on new samples".into(),
        ));
    }
    let t = x_test.ncols();
    let n = x_train.ncols();
    let mut out = DMatrix::zeros(t, n);
    for j in 0..t {
        for i in 0..n {
            out[(j, i)] = kernel_eval(x_test.column(j), x_train.column(i), spec)?;
        }
    }
    Ok(out)
}

/// Data-driven default bandwidth: `1 / median(pairwise squared distances)`
/// over all unordered pairs. The median of an even count is the mean of the
/// two middle values.
pub fn median_heuristic_gamma(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.ncols();
    if n < 2 {
        return Err(Error::InvalidParam(
            "median heuristic needs at least two samples".into(),
        ));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = x.column(i) - x.column(j);
            dists.push(diff.norm_squared());
        }
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if median <= 0.0 {
        return Err(Error::Numeric(
            "median pairwise distance is zero; samples are not distinct enough for the heuristic"
                .into(),
        ));
    }
    Ok(1.0 / median)
}

fn load_precomputed(path: &Path, n: usize) -> Result<DMatrix<f64>> {
    let rows = read_csv_matrix(path)?;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        let got_cols = rows.first().map_or(0, |r| r.len());
        return Err(Error::Shape(format!(
            "precomputed kernel must be {n}x{n}, got {}x{}",
            rows.len(),
            got_cols
        )));
    }
    let raw = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let asym = (&raw - raw.transpose()).amax();
    if asym > PRECOMPUTED_SYMMETRY_TOL {
        return Err(Error::Numeric(format!(
            "precomputed kernel is asymmetric: max |K - K^T| = {asym:.3e}"
        )));
    }
    Ok(symmetrize(&raw))
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, d: usize, n: usize, nonneg: bool) -> DMatrix<f64> {
        DMatrix::from_fn(d, n, |_, _| {
            let v: f64 = rng.random_range(-1.0..1.0);
            if nonneg { v.abs() } else { v }
        })
    }

    #[test]
    fn rbf_same_point_is_one() {
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let spec = KernelSpec::rbf(0.7).unwrap();
        assert_eq!(kernel_eval(x.as_view(), x.as_view(), &spec).unwrap(), 1.0);
    }

    #[test]
    fn rbf_unit_distance() {
        let x = DVector::from_vec(vec![0.0]);
        let y = DVector::from_vec(vec![1.0]);
        let spec = KernelSpec::rbf(1.0).unwrap();
        let v = kernel_eval(x.as_view(), y.as_view(), &spec).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(v, 0.3678794, max_relative = 1e-6);
    }

    #[test]
    fn chi_squared_same_point_is_one() {
        let x = DVector::from_vec(vec![0.5, 0.0, 2.0]);
        let spec = KernelSpec::chi_squared(1.0, CHI_SQUARED_EPSILON).unwrap();
        assert_eq!(kernel_eval(x.as_view(), x.as_view(), &spec).unwrap(), 1.0);
    }

    #[test]
    fn chi_squared_rejects_negative_features() {
        let x = DVector::from_vec(vec![-0.1]);
        let y = DVector::from_vec(vec![0.2]);
        let spec = KernelSpec::chi_squared(1.0, CHI_SQUARED_EPSILON).unwrap();
        assert!(kernel_eval(x.as_view(), y.as_view(), &spec).is_err());
    }

    #[test]
    fn kernel_eval_dimension_mismatch() {
        let x = DVector::from_vec(vec![1.0]);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let spec = KernelSpec::Linear;
        assert!(kernel_eval(x.as_view(), y.as_view(), &spec).is_err());
    }

    #[test]
    fn gram_single_sample_rbf() {
        let x = DMatrix::from_column_slice(2, 1, &[3.0, 4.0]);
        let gram = gram_matrix(&x, &KernelSpec::rbf(1.0).unwrap()).unwrap();
        assert_eq!(gram.values()[(0, 0)], 1.0);
    }

    #[test]
    fn gram_duplicate_samples_rbf() {
        let x = DMatrix::from_column_slice(2, 2, &[1.0, 2.0, 1.0, 2.0]);
        let gram = gram_matrix(&x, &KernelSpec::rbf(0.5).unwrap()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(gram.values()[(i, j)], 1.0);
            }
        }
    }

    #[test]
    fn gram_matches_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for spec in [
            KernelSpec::rbf(0.8).unwrap(),
            KernelSpec::chi_squared(0.8, CHI_SQUARED_EPSILON).unwrap(),
            KernelSpec::Linear,
        ] {
            let x = random_matrix(&mut rng, 4, 3, true);
            let gram = gram_matrix(&x, &spec).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let expected = kernel_eval(x.column(i), x.column(j), &spec).unwrap();
                    // Symmetrization averages bitwise-equal values, so exact.
                    assert_eq!(gram.values()[(i, j)], expected, "spec {spec:?} at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn gram_is_bitwise_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(2..30);
            let x = random_matrix(&mut rng, 5, n, false);
            let gram = gram_matrix(&x, &KernelSpec::rbf(1.3).unwrap()).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert!(gram.values()[(i, j)] == gram.values()[(j, i)]);
                }
            }
        }
    }

    #[test]
    fn gram_diagonal_exactly_one_for_rbf_and_chi2() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_matrix(&mut rng, 3, 12, true);
        for spec in [
            KernelSpec::rbf(2.0).unwrap(),
            KernelSpec::chi_squared(0.3, CHI_SQUARED_EPSILON).unwrap(),
        ] {
            let gram = gram_matrix(&x, &spec).unwrap();
            for i in 0..12 {
                assert_eq!(gram.values()[(i, i)], 1.0);
            }
        }
    }

    #[test]
    fn rbf_gram_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let n = rng.random_range(2..=100);
            let x = random_matrix(&mut rng, 6, n, false);
            let gram = gram_matrix(&x, &KernelSpec::rbf(0.9).unwrap()).unwrap();
            let eigs = gram.values().clone().symmetric_eigenvalues();
            let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-8 * n as f64, "min eigenvalue {min} for n={n}");
        }
    }

    #[test]
    fn cross_gram_of_training_set_equals_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = random_matrix(&mut rng, 4, 9, true);
        for spec in [
            KernelSpec::rbf(1.1).unwrap(),
            KernelSpec::chi_squared(1.1, CHI_SQUARED_EPSILON).unwrap(),
            KernelSpec::Linear,
        ] {
            let gram = gram_matrix(&x, &spec).unwrap();
            let cross = cross_gram(&x, &x, &spec).unwrap();
            assert_eq!(gram.values(), &cross, "spec {spec:?}");
        }
    }

    #[test]
    fn cross_gram_single_identical_point() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let cross = cross_gram(&x, &x, &KernelSpec::rbf(1.0).unwrap()).unwrap();
        assert_eq!(cross[(0, 0)], 1.0);
    }

    #[test]
    fn cross_gram_matches_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let train = random_matrix(&mut rng, 5, 3, false);
        let test = random_matrix(&mut rng, 5, 2, false);
        let spec = KernelSpec::rbf(0.4).unwrap();
        let cross = cross_gram(&test, &train, &spec).unwrap();
        for j in 0..2 {
            for i in 0..3 {
                let expected = kernel_eval(test.column(j), train.column(i), &spec).unwrap();
                assert_eq!(cross[(j, i)], expected);
            }
        }
    }

    #[test]
    fn cross_gram_rejects_precomputed() {
        let x = DMatrix::from_column_slice(1, 2, &[0.0, 1.0]);
        let spec = KernelSpec::Precomputed {
            path: PathBuf::from("unused.csv"),
        };
        assert!(cross_gram(&x, &x, &spec).is_err());
    }

    #[test]
    fn median_gamma_single_pair() {
        let x = DMatrix::from_column_slice(1, 2, &[0.0, 1.0]);
        assert_eq!(median_heuristic_gamma(&x).unwrap(), 1.0);
    }

    #[test]
    fn median_gamma_three_points() {
        // Squared distances {1, 1, 4}: median 1.
        let x = DMatrix::from_column_slice(1, 3, &[0.0, 1.0, 2.0]);
        assert_eq!(median_heuristic_gamma(&x).unwrap(), 1.0);
    }

    #[test]
    fn median_gamma_identical_points_errors() {
        let x = DMatrix::from_column_slice(1, 3, &[2.0, 2.0, 2.0]);
        assert!(median_heuristic_gamma(&x).is_err());
    }

    #[test]
    fn precomputed_round_trip_and_select() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kernel.csv");
        std::fs::write(&path, "1,0.5,0.2\n0.5,1,0.1\n0.2,0.1,1\n").unwrap();
        let spec = KernelSpec::Precomputed { path };
        let x = DMatrix::zeros(1, 3);
        let gram = gram_matrix(&x, &spec).unwrap();
        assert_eq!(gram.values()[(0, 1)], 0.5);
        let sub = gram.select(&[2, 0]).unwrap();
        assert_eq!(sub.values()[(0, 1)], 0.2);
        assert_eq!(sub.values()[(0, 0)], 1.0);
    }

    #[test]
    fn precomputed_wrong_shape_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kernel.csv");
        std::fs::write(&path, "1,0\n0,1\n").unwrap();
        let spec = KernelSpec::Precomputed { path };
        let x = DMatrix::zeros(1, 3);
        assert!(gram_matrix(&x, &spec).is_err());
    }

    #[test]
    fn precomputed_asymmetry_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kernel.csv");
        std::fs::write(&path, "1,0.5\n0.4,1\n").unwrap();
        let spec = KernelSpec::Precomputed { path };
        let x = DMatrix::zeros(1, 2);
        let err = gram_matrix(&x, &spec).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn invalid_gamma_rejected() {
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::rbf(-1.0).is_err());
        assert!(KernelSpec::rbf(f64::NAN).is_err());
        assert!(KernelSpec::chi_squared(1.0, 0.0).is_err());
    }
}
