use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::info;
use ndarray::Array2;
use qsgcnn::alignment::{read_prototypes, write_prototypes, AlignmentConfig};
use qsgcnn::depth::db_representation;
use qsgcnn::graph::{load_tu_dataset, validate_graph, Dataset};
use qsgcnn::neural::checkpoint::{load_checkpoint, save_checkpoint};
use qsgcnn::pipeline::{apply_alignment, preprocess as run_preprocess, DatasetInputs, Sample};
use qsgcnn::quantum_walk::{average_mixing_matrix, MixingMatrix, DEFAULT_GROUP_TOL};
use qsgcnn::store::{
    read_grid, read_labels, read_matrix, write_grid, write_labels, write_matrix, ArtifactLayout, PreprocessRecord,
    RunManifest, TrainRecord,
};
use qsgcnn::trainer::{
    evaluate as evaluate_model, format_metrics, kfold_split, read_metrics, summarize_runs, train_inductive,
    train_prepared, write_metrics, TrainConfig,
};
use qsgcnn::{Error, Result};

use crate::{Location, TrainArgs};

const CHECK_TOL: f64 = 1e-9;

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn run_name(loc: &Location) -> Result<String> {
    if let Some(n) = &loc.name {
        return Ok(n.clone());
    }
    loc.dataset
        .as_ref()
        .and_then(|d| d.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Error::Config("either --name or --dataset is required".into()))
}

fn load_dataset(dir: &Path) -> Result<Dataset> {
    let dir_name = dir
        .canonicalize()
        .ok()
        .and_then(|d| d.file_name().map(|s| s.to_string_lossy().into_owned()))
        .ok_or_else(|| Error::MissingFile(dir.to_path_buf()))?;
    load_tu_dataset(dir, &dir_name)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) => fs::create_dir_all(p).map_err(|e| io_err(p, e)),
        None => Ok(()),
    }
}

fn load_manifest(layout: &ArtifactLayout) -> Result<RunManifest> {
    let path = layout.manifest();
    if !path.exists() {
        return Err(Error::MissingFile(path));
    }
    RunManifest::load(path)
}

pub fn preprocess(loc: &Location, prototypes: usize, depth: usize, seed: u64) -> Result<()> {
    let dir = loc
        .dataset
        .clone()
        .ok_or_else(|| Error::Config("--dataset is required".into()))?;
    let name = run_name(loc)?;
    let layout = ArtifactLayout::new(&loc.out, &name);
    if prototypes == 0 || depth == 0 {
        return Err(Error::Config("--prototypes and --depth must be positive".into()));
    }
    let dataset = load_dataset(&dir)?;
    info!(
        "loaded {}: {} graphs, {} vertices, {} classes",
        dataset.name,
        dataset.len(),
        dataset.total_vertices(),
        dataset.num_classes()
    );
    let cfg = AlignmentConfig {
        prototypes,
        depth,
        seed,
        ..AlignmentConfig::default()
    };
    let prep = run_preprocess(&dataset, &cfg)?;

    fs::create_dir_all(&layout.root).map_err(|e| io_err(&layout.root, e))?;
    write_prototypes(&prep.alignment, layout.prototypes())?;
    for (p, (grid, q)) in prep.grids.iter().zip(&prep.mixing).enumerate() {
        write_grid(layout.grid(p), grid)?;
        write_matrix(layout.mixing(p), q)?;
    }
    write_labels(layout.labels(), &dataset.class_labels)?;

    let created = RunManifest::load(layout.manifest()).map_or(now_unix(), |m| m.created_unix);
    let manifest = RunManifest {
        dataset_name: dataset.name.clone(),
        dataset_path: dir.canonicalize().unwrap_or(dir),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix: created,
        updated_unix: now_unix(),
        preprocess: PreprocessRecord {
            prototypes,
            depth,
            seed,
            graphs: dataset.len(),
            feature_dim: dataset.feature_dim(),
            classes: dataset.num_classes(),
            class_values: dataset.class_values.clone(),
            prototypes_file: layout.prototypes(),
            grid_dir: layout.root.join("grids"),
            mixing_dir: layout.root.join("q"),
            labels_file: layout.labels(),
        },
        train: None,
    };
    manifest.save(layout.manifest())?;
    println!(
        "preprocessed {} graphs: grids {}x{}, Q {}x{} -> {}",
        dataset.len(),
        prototypes,
        dataset.feature_dim(),
        prototypes,
        prototypes,
        layout.root.display()
    );
    Ok(())
}

/// Reads every cached grid and Q, refusing caches that disagree with the
/// manifest.
fn load_samples(layout: &ArtifactLayout, manifest: &RunManifest, labels: &[usize]) -> Result<Vec<Sample>> {
    let pre = &manifest.preprocess;
    let m = pre.prototypes;
    (0..pre.graphs)
        .map(|p| {
            let grid = read_grid(layout.grid(p), p)?;
            let q = read_matrix(layout.mixing(p))?;
            if grid.features.dim() != (m, pre.feature_dim) || q.dim() != (m, m) {
                return Err(Error::Mismatch(format!(
                    "stale cache for graph {p}: grid {:?} and Q {:?}, manifest says M={m}, c={}; rerun preprocess",
                    grid.features.shape(),
                    q.shape(),
                    pre.feature_dim
                )));
            }
            Ok(Sample {
                features: grid.features,
                mixing: q,
                label: labels[p],
            })
        })
        .collect()
}

fn read_run_labels(layout: &ArtifactLayout, manifest: &RunManifest) -> Result<Vec<usize>> {
    let labels = read_labels(layout.labels())?;
    if labels.len() != manifest.preprocess.graphs {
        return Err(Error::Mismatch(format!(
            "{} labels for {} graphs",
            labels.len(),
            manifest.preprocess.graphs
        )));
    }
    Ok(labels)
}

fn dataset_for(loc: &Location, manifest: &RunManifest) -> Result<Dataset> {
    let dir = loc.dataset.clone().unwrap_or_else(|| manifest.dataset_path.clone());
    let ds = load_dataset(&dir)?;
    if ds.len() != manifest.preprocess.graphs {
        return Err(Error::Mismatch(format!(
            "dataset has {} graphs, artifacts were built from {}",
            ds.len(),
            manifest.preprocess.graphs
        )));
    }
    Ok(ds)
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let name = run_name(&args.loc)?;
    let layout = ArtifactLayout::new(&args.loc.out, &name);
    let mut manifest = load_manifest(&layout)?;
    let pre = manifest.preprocess.clone();
    if let Some(m) = args.prototypes.filter(|&m| m != pre.prototypes) {
        return Err(Error::Mismatch(format!(
            "grid cache was built with M={}, but --prototypes {m} was requested; rerun preprocess",
            pre.prototypes
        )));
    }
    if let Some(l) = args.depth.filter(|&l| l != pre.depth) {
        return Err(Error::Mismatch(format!(
            "grid cache was built with L={}, but --depth {l} was requested; rerun preprocess",
            pre.depth
        )));
    }
    let cfg = TrainConfig {
        prototypes: pre.prototypes,
        layers: args.layers,
        channels: args.channels,
        depth: pre.depth,
        learning_rate: args.lr,
        dropout: args.dropout,
        epochs: args.epochs,
        batch_size: args.batch,
        folds: args.folds,
        seed: args.seed,
        transductive: !args.inductive,
    };
    cfg.validate()?;
    cfg.model_config(pre.feature_dim, pre.classes).validate()?;
    let labels = read_run_labels(&layout, &manifest)?;

    let outcome = if cfg.transductive {
        let samples = load_samples(&layout, &manifest, &labels)?;
        train_prepared(&samples, pre.classes, &cfg)?
    } else {
        let dataset = dataset_for(&args.loc, &manifest)?;
        let inputs = DatasetInputs::compute(&dataset, cfg.depth)?;
        let outcome = train_inductive(&dataset, &inputs, &cfg)?;
        for (k, prep) in outcome.fold_alignments.iter().enumerate() {
            let path = layout.fold_prototypes(k);
            create_parent(&path)?;
            write_prototypes(&prep.alignment, path)?;
        }
        outcome
    };

    let mut checkpoints = Vec::new();
    for (k, model) in outcome.models.iter().enumerate() {
        let path = layout.checkpoint(k);
        create_parent(&path)?;
        save_checkpoint(model, cfg.epochs, Some(k), &path)?;
        checkpoints.push(path);
    }
    write_metrics(layout.metrics(), &outcome.folds)?;
    manifest.train = Some(TrainRecord {
        config: cfg,
        metrics_file: layout.metrics(),
        checkpoints,
        mean_accuracy: outcome.mean(),
        stderr: outcome.stderr(),
    });
    manifest.updated_unix = now_unix();
    manifest.save(layout.manifest())?;
    print!("{}", format_metrics(&outcome.folds));
    Ok(())
}

pub fn evaluate(loc: &Location, only: Option<usize>) -> Result<()> {
    let name = run_name(loc)?;
    let layout = ArtifactLayout::new(&loc.out, &name);
    let manifest = load_manifest(&layout)?;
    let record = manifest
        .train
        .clone()
        .ok_or_else(|| Error::MissingFile(layout.metrics()))?;
    let cfg = &record.config;
    let labels = read_run_labels(&layout, &manifest)?;
    let folds = kfold_split(&labels, cfg.folds, cfg.seed)?;
    if let Some(k) = only.filter(|&k| k >= folds.len()) {
        return Err(Error::Config(format!("fold {k} out of range (run has {} folds)", folds.len())));
    }
    let cached = if cfg.transductive {
        Some(load_samples(&layout, &manifest, &labels)?)
    } else {
        None
    };
    let inductive_inputs = if cfg.transductive {
        None
    } else {
        let ds = dataset_for(loc, &manifest)?;
        let inputs = DatasetInputs::compute(&ds, cfg.depth)?;
        Some((ds, inputs))
    };
    let mut accuracies = Vec::new();
    for (k, fold) in folds.iter().enumerate() {
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let (model, _) = load_checkpoint(layout.checkpoint(k))?;
        let samples = match (&cached, &inductive_inputs) {
            (Some(s), _) => s.clone(),
            (None, Some((ds, inputs))) => {
                let alignment = read_prototypes(layout.fold_prototypes(k))?;
                apply_alignment(ds, inputs, alignment)?.samples(&labels)
            }
            (None, None) => unreachable!(),
        };
        let test: Vec<&Sample> = fold.test.iter().map(|&i| &samples[i]).collect();
        let eval = evaluate_model(&model, &test)?;
        println!("fold {k}: accuracy {:.4} ({} graphs)", eval.accuracy, test.len());
        for (c, row) in eval.confusion.outer_iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            println!("  true {c}: {}", cells.join(" "));
        }
        accuracies.push(eval.accuracy);
    }
    let (mean, se) = qsgcnn::trainer::mean_stderr(&accuracies);
    println!("mean accuracy {mean:.4} +- {se:.4}");
    Ok(())
}

fn row_sum_range(q: &Array2<f64>) -> (f64, f64) {
    q.rows()
        .into_iter()
        .map(|r| r.sum())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)))
}

fn fmt_values(values: impl Iterator<Item = f64>, limit: usize) -> String {
    let all: Vec<f64> = values.collect();
    let mut parts: Vec<String> = all.iter().take(limit).map(|v| format!("{v:.6}")).collect();
    if all.len() > limit {
        parts.push(format!("... ({} more)", all.len() - limit));
    }
    parts.join(" ")
}

pub fn inspect(loc: &Location, graph: usize, check: bool) -> Result<()> {
    let name = run_name(loc)?;
    let layout = ArtifactLayout::new(&loc.out, &name);
    let manifest = load_manifest(&layout)?;
    let dataset = dataset_for(loc, &manifest)?;
    let g = dataset.graphs.get(graph).ok_or_else(|| {
        Error::InvalidData(format!(
            "graph index {graph} out of range (dataset has {} graphs)",
            dataset.len()
        ))
    })?;
    let depth = manifest.preprocess.depth;

    println!("graph {graph} of {} ({})", dataset.len(), dataset.name);
    println!(
        "  vertices {}, edges {}, class {}",
        g.n(),
        g.edge_count(),
        dataset.class_values[dataset.class_labels[graph]]
    );
    let diagnostics = validate_graph(g);
    for d in &diagnostics {
        println!("  problem: {d}");
    }

    let q_graph = average_mixing_matrix(&g.adjacency(), DEFAULT_GROUP_TOL)?;
    let (lo, hi) = row_sum_range(&q_graph.0);
    println!("graph Q diagonal: {}", fmt_values(q_graph.0.diag().iter().copied(), 16));
    println!("graph Q row sums in [{lo:.12}, {hi:.12}]");

    let mut reps = Array2::zeros((g.n(), depth));
    for v in 0..g.n() {
        let r = db_representation(g, v, depth);
        reps.row_mut(v).assign(&ndarray::Array1::from(r.values));
    }
    let mean = reps.mean_axis(ndarray::Axis(0)).unwrap_or_default();
    println!("DB representation mean per level: {}", fmt_values(mean.iter().copied(), depth));

    let alignment = read_prototypes(layout.prototypes())?;
    let cs = alignment.correspondences(reps.view())?;
    if let Some(last) = cs.last() {
        let a: Vec<String> = last.assignment.iter().map(|p| p.to_string()).collect();
        println!("prototype assignment (level {}): {}", cs.len(), a.join(" "));
    }

    let grid = read_grid(layout.grid(graph), graph)?;
    let q_grid = MixingMatrix(read_matrix(layout.mixing(graph))?);
    let norm = |a: &Array2<f64>| a.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!(
        "grid {}x{}: feature norm {:.6}, adjacency norm {:.6}",
        grid.features.nrows(),
        grid.features.ncols(),
        norm(&grid.features),
        norm(&grid.adjacency)
    );
    let (lo, hi) = row_sum_range(&q_grid.0);
    println!("grid Q row sums in [{lo:.12}, {hi:.12}]");

    if check {
        if !diagnostics.is_empty() {
            return Err(Error::InvalidData(format!(
                "graph {graph} failed validation: {}",
                diagnostics[0]
            )));
        }
        q_graph.check(CHECK_TOL)?;
        q_grid.check(CHECK_TOL)?;
        println!("check: ok");
    }
    Ok(())
}

pub fn summarize(paths: &[PathBuf]) -> Result<()> {
    let runs = paths.iter().map(read_metrics).collect::<Result<Vec<_>>>()?;
    let s = summarize_runs(&runs);
    println!("runs,mean,stderr_runs,stderr_folds");
    println!("{},{},{},{}", s.runs, s.mean, s.stderr_runs, s.stderr_folds);
    Ok(())
}
