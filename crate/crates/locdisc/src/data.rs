//! Data containers, CSV ingestion, label-split protocol, and synthetic
//! dataset generators.
//!
//! Samples are stored column-wise (`d x n`, one sample per column) while the
//! CSV interchange format is row-per-sample; the loader transposes. Unlabeled
//! samples carry the sentinel `-1` in label files and are represented as
//! `None` internally.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Label sentinel used in label files for unlabeled samples.
pub const UNLABELED_SENTINEL: i64 = -1;

/// A column-oriented sample matrix with a partial label assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: DMatrix<f64>,
    labels: Vec<Option<usize>>,
    class_count: usize,
}

impl Dataset {
    /// Build a dataset, validating that every label lies in `[0, class_count)`.
    ///
    /// `class_count == 0` is only accepted when every sample is unlabeled.
    pub fn new(
        samples: DMatrix<f64>,
        labels: Vec<Option<usize>>,
        class_count: usize,
    ) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::Shape(format!(
                "dataset must be non-empty, got {}x{}",
                samples.nrows(),
                samples.ncols()
            )));
        }
        if labels.len() != samples.ncols() {
            return Err(Error::Shape(format!(
                "label count {} does not match sample count {}",
                labels.len(),
                samples.ncols()
            )));
        }
        for (i, label) in labels.iter().enumerate() {
            if let Some(t) = label {
                if *t >= class_count {
                    return Err(Error::InvalidParam(format!(
                        "label {t} of sample {i} is outside [0, {class_count})"
                    )));
                }
            }
        }
        Ok(Self {
            samples,
            labels,
            class_count,
        })
    }

    /// Feature dimensionality `d`.
    pub fn dim(&self) -> usize {
        self.samples.nrows()
    }

    /// Number of samples `n`.
    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }

    /// Number of labeled samples `m`.
    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    /// Number of classes `c`.
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn fully_labeled(&self) -> bool {
        self.labels.iter().all(|l| l.is_some())
    }

    /// True when all labeled samples precede all unlabeled ones.
    pub fn is_labeled_first(&self) -> bool {
        let m = self.labeled_count();
        self.labels[..m].iter().all(|l| l.is_some())
    }

    /// New dataset holding the selected columns in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidParam(format!(
                    "column index {i} out of range for {} samples",
                    self.len()
                )));
            }
        }
        let samples = self.samples.select_columns(indices.iter());
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(samples, labels, self.class_count)
    }

    /// Hide labels of every sample not chosen by the split, keeping columns
    /// in place.
    pub fn mask_labels(&self, split: &SplitSpec) -> Result<Self> {
        let mut labels = vec![None; self.len()];
        for class_indices in &split.labeled_indices {
            for &i in class_indices {
                if i >= self.len() {
                    return Err(Error::InvalidParam(format!(
                        "split index {i} out of range for {} samples",
                        self.len()
                    )));
                }
                labels[i] = self.labels[i];
            }
        }
        Dataset::new(self.samples.clone(), labels, self.class_count)
    }
}

/// A reproducible labeled/unlabeled partition of a fully labeled dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    /// Chosen labeled indices per class, ascending within each class.
    pub labeled_indices: Vec<Vec<usize>>,
    /// Remaining indices, ascending.
    pub unlabeled_indices: Vec<usize>,
    /// Seed the split was drawn with.
    pub seed: u64,
    /// Requested labels per class `p`.
    pub labels_per_class: usize,
}

/// Scaled class assignment matrix `G` (`n x c`).
///
/// Row `i` is `1/sqrt(n_t)` in column `t` when sample `i` is labeled with
/// class `t` (`n_t` = labeled count of that class) and zero otherwise, so
/// `G^T G` is the identity restricted to nonempty classes. Empty classes get
/// an all-zero column.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledAssignment {
    matrix: DMatrix<f64>,
}

impl ScaledAssignment {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Load a dataset from a row-per-sample data CSV and a one-label-per-line
/// labels file (`-1` = unlabeled). The class count is `1 + max label`.
pub fn load_csv_dataset(data_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let rows = read_csv_matrix(data_path)?;
    let n = rows.len();
    if n == 0 {
        return Err(Error::parse(data_path, 1, "data file is empty"));
    }
    let d = rows[0].len();

    let labels_text = fs::read_to_string(labels_path).map_err(|e| Error::io(labels_path, e))?;
    let mut labels = Vec::new();
    for (lineno, line) in labels_text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: i64 = trimmed.parse().map_err(|_| {
            Error::parse(labels_path, lineno + 1, format!("non-integer label {trimmed:?}"))
        })?;
        if value < UNLABELED_SENTINEL {
            return Err(Error::parse(
                labels_path,
                lineno + 1,
                format!("label {value} is neither a class index nor the unlabeled sentinel -1"),
            ));
        }
        labels.push(if value == UNLABELED_SENTINEL {
            None
        } else {
            Some(value as usize)
        });
    }
    if labels.len() != n {
        return Err(Error::parse(
            labels_path,
            labels.len() + 1,
            format!("{} labels for {} data rows", labels.len(), n),
        ));
    }

    let class_count = labels
        .iter()
        .flatten()
        .map(|&t| t + 1)
        .max()
        .unwrap_or(0);

    // Transpose: file rows are samples, internal storage is one sample per column.
    let samples = DMatrix::from_fn(d, n, |i, j| rows[j][i]);
    Dataset::new(samples, labels, class_count)
}

/// Read a rectangular CSV of finite reals; errors name the offending line.
pub fn read_csv_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            let value: f64 = cell.trim().parse().map_err(|_| {
                Error::parse(path, lineno + 1, format!("non-numeric cell {:?}", cell.trim()))
            })?;
            if !value.is_finite() {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("non-finite value {value}"),
                ));
            }
            row.push(value);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("ragged row: expected {w} cells, got {}", row.len()),
                ));
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Write the CSV pair consumed by [`load_csv_dataset`].
pub fn write_csv_dataset(ds: &Dataset, data_path: &Path, labels_path: &Path) -> Result<()> {
    let mut data = String::new();
    for j in 0..ds.len() {
        let row: Vec<String> = (0..ds.dim())
            .map(|i| format!("{}", ds.samples()[(i, j)]))
            .collect();
        data.push_str(&row.join(","));
        data.push('\n');
    }
    fs::write(data_path, data).map_err(|e| Error::io(data_path, e))?;

    let mut labels = String::new();
    for label in ds.labels() {
        match label {
            Some(t) => labels.push_str(&format!("{t}\n")),
            None => labels.push_str(&format!("{UNLABELED_SENTINEL}\n")),
        }
    }
    fs::write(labels_path, labels).map_err(|e| Error::io(labels_path, e))?;
    Ok(())
}

/// Write any matrix as CSV (row per matrix row), using the shortest exact
/// decimal rendering of each value.
pub fn write_csv_matrix(matrix: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|j| format!("{}", matrix[(i, j)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Stable partition putting labeled columns first.
///
/// Returns the reordered dataset and the permutation mapping new column
/// index to original column index. Applying it twice is a no-op.
pub fn reorder_labeled_first(ds: &Dataset) -> (Dataset, Vec<usize>) {
    let labeled: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels()[i].is_some()).collect();
    let unlabeled: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels()[i].is_none()).collect();
    let permutation: Vec<usize> = labeled.into_iter().chain(unlabeled).collect();
    let reordered = ds
        .select_columns(&permutation)
        .expect("permutation indices are in range");
    (reordered, permutation)
}

/// Draw `min(p, class size)` labeled indices per class without replacement.
///
/// Randomness comes from a ChaCha8 stream seeded with `seed`; classes are
/// processed in ascending order and chosen indices are reported ascending, so
/// identical inputs always give identical splits.
pub fn sample_labels_per_class(ds: &Dataset, p: usize, seed: u64) -> Result<SplitSpec> {
    if p == 0 {
        return Err(Error::InvalidParam("labels_per_class must be >= 1".into()));
    }
    if !ds.fully_labeled() {
        return Err(Error::InvalidParam(
            "label sampling requires a fully labeled dataset".into(),
        ));
    }
    let c = ds.class_count();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, label) in ds.labels().iter().enumerate() {
        members[label.expect("fully labeled")].push(i);
    }
    if let Some(t) = members.iter().position(|m| m.is_empty()) {
        return Err(Error::InvalidParam(format!("class {t} has no members")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labeled_indices = Vec::with_capacity(c);
    let mut chosen = vec![false; ds.len()];
    for class_members in &members {
        let take = p.min(class_members.len());
        let picks = rand::seq::index::sample(&mut rng, class_members.len(), take);
        let mut class_chosen: Vec<usize> = picks.iter().map(|j| class_members[j]).collect();
        class_chosen.sort_unstable();
        for &i in &class_chosen {
            chosen[i] = true;
        }
        labeled_indices.push(class_chosen);
    }
    let unlabeled_indices = (0..ds.len()).filter(|&i| !chosen[i]).collect();

    Ok(SplitSpec {
        labeled_indices,
        unlabeled_indices,
        seed,
        labels_per_class: p,
    })
}

/// Scaled class assignment `G` for the given label vector.
pub fn scaled_assignment(labels: &[Option<usize>], class_count: usize) -> ScaledAssignment {
    let n = labels.len();
    let mut counts = vec![0usize; class_count];
    for label in labels.iter().flatten() {
        counts[*label] += 1;
    }
    let mut matrix = DMatrix::zeros(n, class_count);
    for (i, label) in labels.iter().enumerate() {
        if let Some(t) = label {
            matrix[(i, *t)] = 1.0 / (counts[*t] as f64).sqrt();
        }
    }
    ScaledAssignment { matrix }
}

/// Gaussian clusters with class centers placed on coordinate axes.
///
/// The center of class `t` sits at `10 * spread * (1 + t/dim)` along axis
/// `t mod dim`, so the closest pair of centers is `10 * spread` apart while
/// points scatter around their center with standard deviation `spread`.
pub fn make_gaussian_blobs(
    classes: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if classes == 0 || per_class == 0 || dim == 0 {
        return Err(Error::InvalidParam(
            "classes, per_class, and dim must be >= 1".into(),
        ));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "spread must be finite and >= 0, got {spread}"
        )));
    }
    let n = classes * per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut samples = DMatrix::zeros(dim, n);
    let mut labels = Vec::with_capacity(n);
    for t in 0..classes {
        let axis = t % dim;
        let center = 10.0 * spread * (1 + t / dim) as f64;
        for j in 0..per_class {
            let col = t * per_class + j;
            for i in 0..dim {
                let base = if i == axis { center } else { 0.0 };
                samples[(i, col)] = base + spread * normal.sample(&mut rng);
            }
            labels.push(Some(t));
        }
    }
    Dataset::new(samples, labels, classes)
}

/// Two classes on concentric circles of radius 1 and 3 in the plane.
///
/// Angles are drawn uniformly at random; only the radius is perturbed, with
/// Gaussian noise of standard deviation `noise`.
pub fn make_concentric_rings(per_class: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if per_class < 3 {
        return Err(Error::InvalidParam(format!(
            "per_class must be >= 3, got {per_class}"
        )));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "noise must be finite and >= 0, got {noise}"
        )));
    }
    let n = 2 * per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut samples = DMatrix::zeros(2, n);
    let mut labels = Vec::with_capacity(n);
    for (class, radius) in [(0usize, 1.0f64), (1, 3.0)] {
        for j in 0..per_class {
            use rand::Rng;
            let col = class * per_class + j;
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let r = radius + noise * normal.sample(&mut rng);
            samples[(0, col)] = r * angle.cos();
            samples[(1, col)] = r * angle.sin();
            labels.push(Some(class));
        }
    }
    Dataset::new(samples, labels, 2)
}

/// Stratified half split of a fully labeled dataset.
///
/// Per class, members are shuffled with a ChaCha8 stream seeded by `seed`
/// and the first `ceil(size/2)` go to the training side. Both index lists
/// are returned ascending.
pub fn stratified_half_split(ds: &Dataset, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !ds.fully_labeled() {
        return Err(Error::InvalidParam(
            "stratified split requires a fully labeled dataset".into(),
        ));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ds.class_count()];
    for (i, label) in ds.labels().iter().enumerate() {
        members[label.expect("fully labeled")].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class_members in &mut members {
        class_members.shuffle(&mut rng);
        let take = class_members.len().div_ceil(2);
        train.extend_from_slice(&class_members[..take]);
        test.extend_from_slice(&class_members[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
