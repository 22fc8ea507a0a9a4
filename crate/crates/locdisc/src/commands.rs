//! Pipeline commands behind the CLI subcommands. Each command is a pure
//! function of its config file: all randomness flows from `base_seed`, logs
//! go to stderr, and machine-readable artifacts go to files under the
//! output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{DataConfig, RunConfig, SweepAxis};
use crate::data::{
    reorder_labeled_first, sample_labels_per_class, write_csv_dataset, write_csv_matrix, Dataset,
};
use crate::error::{Error, Result};
use crate::eval::{run_experiment, ExperimentReport, Method};
use crate::graph::{assemble_clique_laplacian, build_supervised_laplacian, knn_cliques};
use crate::kernel::{cross_gram, gram_matrix, GramMatrix, KernelConfig, KernelSpec};
use crate::solver::{fit, load_model, save_model, transform_test, transform_train, ModelKind};

/// File name of the model artifact inside the output directory.
pub const MODEL_FILE: &str = "model.txt";

/// On-disk report schema: the experiment result plus the exact config it
/// came from. `wall_time_seconds` is the only field allowed to differ
/// between identical runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub method: Method,
    pub params: RunConfig,
    pub seeds: Vec<u64>,
    pub per_repeat_map: Vec<f64>,
    pub mean_map: f64,
    pub std_map: f64,
    pub wall_time_seconds: f64,
}

/// Generate the configured synthetic dataset and write the CSV pair.
pub fn cmd_gen(config: &RunConfig, out_dir: &Path) -> Result<()> {
    if matches!(config.data, DataConfig::Csv { .. }) {
        return Err(Error::Config(
            "gen requires a synthetic data section (blobs or rings)".into(),
        ));
    }
    let ds = config.data.materialize()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let data_path = out_dir.join("data.csv");
    let labels_path = out_dir.join("labels.csv");
    write_csv_dataset(&ds, &data_path, &labels_path)?;
    println!("n={} d={} c={}", ds.len(), ds.dim(), ds.class_count());
    log::info!(
        "wrote {} and {}",
        data_path.display(),
        labels_path.display()
    );
    Ok(())
}

/// The training arrangement every fitting command works on: labels hidden
/// down to `labels_per_class` when the input is fully labeled, then the
/// labeled block moved to the front.
///
/// Returns the arranged dataset and the permutation (new index -> original
/// index), which precomputed kernels need to stay aligned.
pub fn prepare_training(config: &RunConfig) -> Result<(Dataset, Vec<usize>)> {
    let ds = config.data.materialize()?;
    if ds.fully_labeled() {
        let split = sample_labels_per_class(&ds, config.labels_per_class, config.base_seed)?;
        let masked = ds.mask_labels(&split)?;
        Ok(reorder_labeled_first(&masked))
    } else {
        log::info!(
            "dataset is partially labeled ({} of {}); labels_per_class not applied",
            ds.labeled_count(),
            ds.len()
        );
        Ok(reorder_labeled_first(&ds))
    }
}

/// Resolve the kernel and assemble the training Gram in arranged order.
fn training_gram(
    config: &RunConfig,
    train: &Dataset,
    permutation: &[usize],
) -> Result<(GramMatrix, KernelSpec)> {
    let kernel_config = config.kernel_config();
    let spec = kernel_config.resolve(train.samples())?;
    let gram = match &kernel_config {
        // The file is in original sample order; realign it.
        KernelConfig::Precomputed { .. } => {
            gram_matrix(train.samples(), &spec)?.select(permutation)?
        }
        _ => gram_matrix(train.samples(), &spec)?,
    };
    Ok((gram, spec))
}

/// Fit the transform on the configured data and write the model file.
pub fn cmd_fit(config: &RunConfig, out_dir: &Path, dump_laplacians: bool) -> Result<()> {
    let (train, permutation) = prepare_training(config)?;
    let (gram, spec) = training_gram(config, &train, &permutation)?;
    log::info!(
        "training on {} samples ({} labeled), kernel {spec:?}",
        train.len(),
        train.labeled_count()
    );

    let l_w = build_supervised_laplacian(train.labels())?;
    if config.lambda == 0.0 && l_w.matrix().amax() == 0.0 {
        log::warn!(
            "supervised laplacian is identically zero (singleton or missing classes) and lambda = 0: the objective is degenerate and the learned basis is arbitrary"
        );
    }
    let cliques = knn_cliques(train.samples(), config.k)?;
    let laplacian = assemble_clique_laplacian(&cliques, train.samples(), config.theta)?;

    let r = config.r.unwrap_or_else(|| train.class_count().max(1));
    let output = fit(
        &gram,
        &l_w,
        &laplacian,
        config.lambda,
        r,
        config.drop_tolerance,
    )?;
    log::info!("kernel rank {} of {}", output.rank, train.len());
    if let ModelKind::Learned {
        eigenvalues_of_m, ..
    } = output.model.kind()
    {
        log::info!("reduced-problem eigenvalues (ascending): {eigenvalues_of_m:?}");
    }
    log::info!(
        "objective {:.6e}, constraint residual {:.3e}",
        output.objective,
        output.constraint_residual
    );

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let model_path = out_dir.join(MODEL_FILE);
    save_model(&output.model, &model_path)?;
    if dump_laplacians {
        write_csv_matrix(l_w.matrix(), &out_dir.join("l_w.csv"))?;
        write_csv_matrix(laplacian.matrix(), &out_dir.join("l.csv"))?;
    }
    println!("model written to {}", model_path.display());
    Ok(())
}

/// Project samples through a previously fitted model and write one feature
/// row per sample to `features.csv`.
///
/// With a `transform_data` section the named dataset is projected through
/// the training expansion; otherwise the training samples themselves are.
pub fn cmd_transform(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let (train, permutation) = prepare_training(config)?;
    let model_path = out_dir.join(MODEL_FILE);
    let model = load_model(&model_path)?;
    if model.n() != train.len() {
        return Err(Error::Shape(format!(
            "model at {} expands over {} samples but the config reconstructs {}; \
             fit and transform must share data, labels_per_class, and base_seed",
            model_path.display(),
            model.n(),
            train.len()
        )));
    }
    let spec = model.kernel().clone();

    let features = match &config.transform_data {
        Some(extra) => {
            if !spec.supports_out_of_sample() {
                return Err(Error::InvalidParam(
                    "precomputed kernels cannot project new samples".into(),
                ));
            }
            let project = extra.materialize()?;
            let cross = cross_gram(project.samples(), train.samples(), &spec)?;
            transform_test(&cross, &model)?
        }
        None => {
            let gram = match &spec {
                KernelSpec::Precomputed { .. } => {
                    gram_matrix(train.samples(), &spec)?.select(&permutation)?
                }
                _ => gram_matrix(train.samples(), &spec)?,
            };
            transform_train(&gram, &model)?
        }
    };

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let features_path = out_dir.join("features.csv");
    // Features are r x t in memory; emit sample-per-row like the data CSV.
    write_csv_matrix(&features.transpose(), &features_path)?;
    println!("features written to {}", features_path.display());
    Ok(())
}

/// Run the repeated-split protocol for every configured method; write one
/// JSON report per method and a combined CSV table.
pub fn cmd_eval(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let ds = config.data.materialize()?;
    let params = config.experiment_params();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut combined = String::from("method,p,mean_map,std_map\n");
    for &method in &config.methods {
        let start = Instant::now();
        let report = run_experiment(&ds, &params, method, config.repeats, config.base_seed)?;
        let wall_time_seconds = start.elapsed().as_secs_f64();
        log::info!(
            "{}: mean MAP {:.4} +- {:.4} over {} repeats ({wall_time_seconds:.2}s)",
            method.as_str(),
            report.mean_map,
            report.std_map,
            config.repeats
        );
        let file = ReportFile {
            method,
            params: config.clone(),
            seeds: report.seeds.clone(),
            per_repeat_map: report.per_repeat_map.clone(),
            mean_map: report.mean_map,
            std_map: report.std_map,
            wall_time_seconds,
        };
        let path = out_dir.join(format!("report_{}.json", method.as_str()));
        write_json(&file, &path)?;
        combined.push_str(&format!(
            "{},{},{},{}\n",
            method.as_str(),
            config.labels_per_class,
            report.mean_map,
            report.std_map
        ));
    }
    let summary_path = out_dir.join("summary.csv");
    fs::write(&summary_path, combined).map_err(|e| Error::io(&summary_path, e))?;
    println!("reports written to {}", out_dir.display());
    Ok(())
}

/// Evaluate the first configured method once per sweep value and emit the
/// plot-ready curve.
pub fn cmd_sweep(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep command needs a sweep section".into()))?;
    let method = config.methods[0];
    if config.methods.len() > 1 {
        log::info!(
            "sweep uses the first configured method ({}); others ignored",
            method.as_str()
        );
    }
    let ds = config.data.materialize()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut curve = String::from("axis_value,mean_map,std_map\n");
    for &value in &sweep.values {
        let mut params = config.experiment_params();
        match sweep.axis {
            SweepAxis::Lambda => params.lambda = value,
            SweepAxis::Theta => params.theta = value,
            SweepAxis::K => params.clique_k = value as usize,
            SweepAxis::R => params.r = Some(value as usize),
        }
        let report: ExperimentReport =
            run_experiment(&ds, &params, method, config.repeats, config.base_seed).map_err(
                |e| e.with_context(&format!("sweep {}={value}", sweep.axis.as_str())),
            )?;
        log::info!(
            "{}={value}: mean MAP {:.4} +- {:.4}",
            sweep.axis.as_str(),
            report.mean_map,
            report.std_map
        );
        curve.push_str(&format!("{value},{},{}\n", report.mean_map, report.std_map));
    }
    let curve_path = out_dir.join(format!("sweep_{}.csv", sweep.axis.as_str()));
    fs::write(&curve_path, curve).map_err(|e| Error::io(&curve_path, e))?;
    println!("curve written to {}", curve_path.display());
    Ok(())
}

/// Resolve the effective output directory from the flag and config.
pub fn resolve_out_dir(flag: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numeric(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
