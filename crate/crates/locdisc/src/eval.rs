//! Downstream evaluation: a deterministic one-vs-rest ridge classifier on
//! the learned features, Mean Average Precision over ranked test scores,
//! the repeated-split experiment runner, and the kernel PCA baseline.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{
    reorder_labeled_first, sample_labels_per_class, stratified_half_split, Dataset,
};
use crate::error::{Error, Result};
use crate::graph::{assemble_clique_laplacian, build_supervised_laplacian, knn_cliques};
use crate::kernel::{cross_gram, gram_matrix, GramMatrix, KernelConfig};
use crate::solver::{
    fit, transform_test, transform_train, KpcaCentering, TransformModel, DEFAULT_DROP_TOLERANCE,
};

/// Which transform feeds the classifier in an experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Full objective: supervised plus clique Laplacian.
    Ours,
    /// Ablation with the clique term switched off.
    OursLambda0,
    /// Unsupervised kernel PCA.
    Kpca,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::OursLambda0 => "ours_lambda0",
            Method::Kpca => "kpca",
        }
    }
}

/// One-vs-rest regularized least squares on +-1 targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    weights: DMatrix<f64>,
    bias: DVector<f64>,
    ridge: f64,
}

impl LinearClassifier {
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.bias
    }
}

/// Everything the experiment runner needs per repeat, with the kernel
/// bandwidth possibly resolved from the training half.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    pub kernel: KernelConfig,
    pub theta: f64,
    pub clique_k: usize,
    pub lambda: f64,
    /// Output dimensionality; defaults to the class count.
    pub r: Option<usize>,
    pub drop_tolerance: f64,
    pub ridge: f64,
    pub labels_per_class: usize,
}

impl ExperimentParams {
    pub fn defaults(kernel: KernelConfig, labels_per_class: usize) -> Self {
        Self {
            kernel,
            theta: 1.0,
            clique_k: 3,
            lambda: 1.0,
            r: None,
            drop_tolerance: DEFAULT_DROP_TOLERANCE,
            ridge: 1.0,
            labels_per_class,
        }
    }
}

/// MAP scores across repeated splits of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub seeds: Vec<u64>,
    pub per_repeat_map: Vec<f64>,
    pub mean_map: f64,
    pub std_map: f64,
}

/// Fit the one-vs-rest ridge classifier. Features are augmented with a
/// constant row so the bias is learned jointly (and shares the ridge).
pub fn fit_linear_classifier(
    features: &DMatrix<f64>,
    labels: &[usize],
    class_count: usize,
    ridge: f64,
) -> Result<LinearClassifier> {
    let m = features.ncols();
    if m == 0 {
        return Err(Error::Shape("classifier needs at least one sample".into()));
    }
    if labels.len() != m {
        return Err(Error::Shape(format!(
            "{} labels for {m} feature columns",
            labels.len()
        )));
    }
    if !(ridge.is_finite() && ridge > 0.0) {
        return Err(Error::InvalidParam(format!(
            "ridge must be finite and > 0, got {ridge}"
        )));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("classifier features are non-finite".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&t| t >= class_count) {
        return Err(Error::InvalidParam(format!(
            "label {bad} outside [0, {class_count})"
        )));
    }

    let r = features.nrows();
    let mut augmented = DMatrix::zeros(r + 1, m);
    augmented.rows_mut(0, r).copy_from(features);
    augmented.row_mut(r).fill(1.0);

    let mut normal = &augmented * augmented.transpose();
    for i in 0..=r {
        normal[(i, i)] += ridge;
    }
    let chol = Cholesky::new(normal)
        .ok_or_else(|| Error::Numeric("classifier normal equations not SPD".into()))?;

    let mut weights = DMatrix::zeros(r, class_count);
    let mut bias = DVector::zeros(class_count);
    for t in 0..class_count {
        let targets =
            DVector::from_fn(m, |j, _| if labels[j] == t { 1.0 } else { -1.0 });
        let rhs = &augmented * targets;
        let solution = chol.solve(&rhs);
        for i in 0..r {
            weights[(i, t)] = solution[i];
        }
        bias[t] = solution[r];
    }
    Ok(LinearClassifier {
        weights,
        bias,
        ridge,
    })
}

/// Per-class affine scores; row `j` holds sample `j`'s score for each class.
pub fn decision_scores(clf: &LinearClassifier, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if features.nrows() != clf.weights.nrows() {
        return Err(Error::Shape(format!(
            "features have {} rows, classifier expects {}",
            features.nrows(),
            clf.weights.nrows()
        )));
    }
    let t = features.ncols();
    let c = clf.weights.ncols();
    let product = features.transpose() * &clf.weights;
    Ok(DMatrix::from_fn(t, c, |j, class| product[(j, class)] + clf.bias[class]))
}

/// Macro-averaged Mean Average Precision over per-class rankings.
///
/// For each class the samples are ranked by that class's score, descending,
/// ties broken by lower sample index; classes with no relevant sample are
/// skipped with a warning and excluded from the mean.
pub fn mean_average_precision(scores: &DMatrix<f64>, truth: &[usize]) -> Result<f64> {
    let t = scores.nrows();
    let c = scores.ncols();
    if t == 0 {
        return Err(Error::Shape("cannot rank an empty test set".into()));
    }
    if truth.len() != t {
        return Err(Error::Shape(format!(
            "{} truth labels for {t} score rows",
            truth.len()
        )));
    }
    if let Some(&bad) = truth.iter().find(|&&label| label >= c) {
        return Err(Error::InvalidParam(format!(
            "truth label {bad} outside [0, {c})"
        )));
    }

    let mut total = 0.0;
    let mut included = 0usize;
    for class in 0..c {
        let relevant = truth.iter().filter(|&&label| label == class).count();
        if relevant == 0 {
            log::warn!("class {class} has no relevant test samples; excluded from MAP");
            continue;
        }
        let mut order: Vec<usize> = (0..t).collect();
        // Adding 0.0 folds -0.0 onto +0.0 so numerically equal scores fall
        // through to the index tie-break instead of total_cmp's sign order.
        order.sort_by(|&a, &b| {
            (scores[(b, class)] + 0.0)
                .total_cmp(&(scores[(a, class)] + 0.0))
                .then(a.cmp(&b))
        });
        let mut hits = 0usize;
        let mut ap = 0.0;
        for (rank0, &j) in order.iter().enumerate() {
            if truth[j] == class {
                hits += 1;
                ap += hits as f64 / (rank0 + 1) as f64;
            }
        }
        total += ap / relevant as f64;
        included += 1;
    }
    if included == 0 {
        return Err(Error::InvalidParam(
            "no class has relevant test samples".into(),
        ));
    }
    Ok(total / included as f64)
}

/// Unsupervised baseline: top principal directions of the double-centered
/// Gram, scaled so each projected component has unit eigenvalue scale.
pub fn kpca_baseline(k: &GramMatrix, r: usize) -> Result<TransformModel> {
    if r == 0 {
        return Err(Error::InvalidParam("r must be >= 1".into()));
    }
    let n = k.len();
    let centered = crate::solver::double_center(k.values());
    let eigen = centered.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eigen.eigenvalues[j]
            .total_cmp(&eigen.eigenvalues[i])
            .then(i.cmp(&j))
    });
    let max = eigen.eigenvalues[order[0]];
    if !(max > 0.0) {
        return Err(Error::Numeric(
            "centered kernel has no positive eigenvalue; all samples may be identical".into(),
        ));
    }
    let rank = order
        .iter()
        .take_while(|&&i| eigen.eigenvalues[i] > DEFAULT_DROP_TOLERANCE * max)
        .count();
    if r > rank {
        return Err(Error::InvalidParam(format!(
            "r={r} exceeds the centered kernel's numerical rank; at most r={rank} is feasible"
        )));
    }

    let mut a = DMatrix::zeros(n, r);
    let mut values = Vec::with_capacity(r);
    for (col, &idx) in order.iter().take(r).enumerate() {
        let lambda = eigen.eigenvalues[idx];
        let mut v = eigen.eigenvectors.column(idx).clone_owned();
        let mut best = 0;
        let mut best_abs = v[0].abs();
        for i in 1..n {
            if v[i].abs() > best_abs {
                best = i;
                best_abs = v[i].abs();
            }
        }
        if v[best] < 0.0 {
            v.neg_mut();
        }
        v /= lambda.sqrt();
        a.set_column(col, &v);
        values.push(lambda);
    }

    let col_means: Vec<f64> = (0..n)
        .map(|j| k.values().column(j).sum() / n as f64)
        .collect();
    let total_mean = col_means.iter().sum::<f64>() / n as f64;
    TransformModel::kpca(
        a,
        k.spec().clone(),
        KpcaCentering {
            col_means,
            total_mean,
        },
        values,
    )
}

/// Repeated-split protocol: per repeat, split the fully labeled dataset
/// 50/50 stratified, reveal `labels_per_class` labels inside the training
/// half, fit the requested method on the training half only, then score the
/// held-out half with MAP. Deterministic given `(ds, params, base_seed)`.
pub fn run_experiment(
    ds: &Dataset,
    params: &ExperimentParams,
    method: Method,
    repeats: usize,
    base_seed: u64,
) -> Result<ExperimentReport> {
    if repeats == 0 {
        return Err(Error::InvalidParam("repeats must be >= 1".into()));
    }
    if !ds.fully_labeled() {
        return Err(Error::InvalidParam(
            "experiments need fully labeled ground truth".into(),
        ));
    }
    if !params.kernel.supports_out_of_sample() {
        return Err(Error::InvalidParam(
            "precomputed kernels cannot score held-out samples; use fit/transform directly".into(),
        ));
    }
    let c = ds.class_count();
    let r = params.r.unwrap_or(c);

    let mut seeds = Vec::with_capacity(repeats);
    let mut per_repeat_map = Vec::with_capacity(repeats);
    for repeat in 0..repeats {
        let seed = base_seed + repeat as u64;
        let map = run_single_repeat(ds, params, method, r, seed)
            .map_err(|e| e.with_context(&format!("repeat {repeat} (seed {seed})")))?;
        seeds.push(seed);
        per_repeat_map.push(map);
    }

    let mean_map = per_repeat_map.iter().sum::<f64>() / repeats as f64;
    let variance = per_repeat_map
        .iter()
        .map(|m| (m - mean_map).powi(2))
        .sum::<f64>()
        / repeats as f64;
    Ok(ExperimentReport {
        method,
        seeds,
        per_repeat_map,
        mean_map,
        std_map: variance.sqrt(),
    })
}

fn run_single_repeat(
    ds: &Dataset,
    params: &ExperimentParams,
    method: Method,
    r: usize,
    seed: u64,
) -> Result<f64> {
    let (train_idx, test_idx) = stratified_half_split(ds, seed)?;
    let train_full = ds.select_columns(&train_idx)?;
    let test = ds.select_columns(&test_idx)?;

    let split = sample_labels_per_class(&train_full, params.labels_per_class, seed)?;
    let masked = train_full.mask_labels(&split)?;
    let (train, _) = reorder_labeled_first(&masked);

    let spec = params.kernel.resolve(train.samples())?;
    let gram = gram_matrix(train.samples(), &spec)?;

    let model = match method {
        Method::Kpca => kpca_baseline(&gram, r)?,
        Method::Ours | Method::OursLambda0 => {
            let l_w = build_supervised_laplacian(train.labels())?;
            let cliques = knn_cliques(train.samples(), params.clique_k)?;
            let laplacian = assemble_clique_laplacian(&cliques, train.samples(), params.theta)?;
            let lambda = match method {
                Method::Ours => params.lambda,
                _ => 0.0,
            };
            fit(
                &gram,
                &l_w,
                &laplacian,
                lambda,
                r,
                params.drop_tolerance,
            )?
            .model
        }
    };
    debug_assert_eq!(model.n(), train.len());

    let features = transform_train(&gram, &model)?;
    let m = train.labeled_count();
    let labeled_features = features.columns(0, m).clone_owned();
    let labeled_truth: Vec<usize> = train.labels()[..m]
        .iter()
        .map(|l| l.expect("labeled block"))
        .collect();
    let clf = fit_linear_classifier(&labeled_features, &labeled_truth, ds.class_count(), params.ridge)?;

    let k_cross = cross_gram(test.samples(), train.samples(), &spec)?;
    let test_features = transform_test(&k_cross, &model)?;
    let scores = decision_scores(&clf, &test_features)?;
    let truth: Vec<usize> = test
        .labels()
        .iter()
        .map(|l| l.expect("fully labeled ground truth"))
        .collect();
    mean_average_precision(&scores, &truth)
}
