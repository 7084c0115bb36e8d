use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use xembod::analysis::{conflict_stats, save_cosine_series, save_negative_fraction};
use xembod::datasets::{load_dataset, RobotShard};
use xembod::envs::SuiteManifest;
use xembod::nets::LatentConfig;
use xembod::rl::{
    run_training, save_eval_table, save_update_log, TrainConfig, TrainOutcome,
};
use xembod::{Error, Result};

use crate::config::{Method, RunConfig};

pub const VERSION: &str = concat!("xembod-", env!("CARGO_PKG_VERSION"));

/// One row of the experiment-level results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub mean_return: f64,
}

pub fn dataset_stem(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn method_dir(label: &str) -> String {
    label.replace('+', "-")
}

/// Final suite-mean return of a finished run (mean over robots at the last
/// evaluation step).
pub fn final_return(outcome: &TrainOutcome) -> f64 {
    let last = outcome.evals.iter().map(|e| e.step).max().unwrap_or(0);
    let finals: Vec<f64> = outcome
        .evals
        .iter()
        .filter(|e| e.step == last)
        .map(|e| e.mean_return)
        .collect();
    finals.iter().sum::<f64>() / finals.len() as f64
}

/// Writes the per-run artifacts (resolved config, logs, conflict CSVs).
pub fn write_run_outputs(
    dir: &Path,
    per_run_cfg: &RunConfig,
    outcome: &TrainOutcome,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    per_run_cfg.save(&dir.join("resolved.toml"))?;
    save_eval_table(&dir.join("evals.csv"), &outcome.evals)?;
    save_update_log(&dir.join("updates.csv"), &outcome.log)?;
    fs::write(dir.join("groups.json"), serde_json::to_vec_pretty(&outcome.groups)?)?;
    if !outcome.conflicts.is_empty() {
        save_cosine_series(&dir.join("cosine_series.csv"), &outcome.conflicts)?;
        let stats = conflict_stats(&outcome.conflicts)?;
        save_negative_fraction(&dir.join("negative_fraction.csv"), &stats)?;
    }
    Ok(())
}

pub fn save_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut out = String::from("dataset,method,seed,mean_return\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.dataset, r.method, r.seed, r.mean_return));
    }
    fs::write(path, out)?;
    Ok(())
}

struct Job {
    dataset: PathBuf,
    method: Method,
    seed: u64,
}

/// Runs the full (dataset, method, seed) matrix and writes the results table.
/// Jobs fan out over `workers` threads; each run writes only its own files.
pub fn run_experiment(cfg: &RunConfig, workers: usize) -> Result<Vec<ResultRow>> {
    let suite = SuiteManifest::generate(cfg.suite_seed)?;
    let net = cfg.net.resolve()?;
    let base = cfg.train.apply(&TrainConfig::default());

    let exp_dir = cfg.out.join(&cfg.name);
    fs::create_dir_all(&exp_dir)?;
    cfg.save(&exp_dir.join("resolved.toml"))?;
    fs::write(exp_dir.join("VERSION"), format!("{VERSION}\n"))?;

    let mut datasets = Vec::new();
    for path in &cfg.datasets {
        let (shards, _) = load_dataset(path)?;
        datasets.push((path.clone(), shards));
    }

    let mut queue = VecDeque::new();
    for (path, _) in &datasets {
        for label in &cfg.methods {
            for &seed in &cfg.seeds {
                queue.push_back(Job {
                    dataset: path.clone(),
                    method: Method::parse(label)?,
                    seed,
                });
            }
        }
    }

    let queue = Mutex::new(queue);
    let rows: Mutex<Vec<ResultRow>> = Mutex::new(Vec::new());
    let failure: Mutex<Option<Error>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            scope.spawn(|| loop {
                let job = match queue.lock().unwrap().pop_front() {
                    Some(j) => j,
                    None => break,
                };
                if failure.lock().unwrap().is_some() {
                    break;
                }
                let shards = &datasets.iter().find(|(p, _)| *p == job.dataset).unwrap().1;
                match run_one(cfg, &suite, &net, &base, &exp_dir, &job, shards) {
                    Ok(row) => rows.lock().unwrap().push(row),
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        break;
                    }
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mut rows = rows.into_inner().unwrap();
    rows.sort_by(|a, b| {
        (&a.dataset, &a.method, a.seed).cmp(&(&b.dataset, &b.method, b.seed))
    });
    save_results(&exp_dir.join("results.csv"), &rows)?;
    Ok(rows)
}

fn run_one(
    cfg: &RunConfig,
    suite: &SuiteManifest,
    net: &LatentConfig,
    base: &TrainConfig,
    exp_dir: &Path,
    job: &Job,
    shards: &[RobotShard],
) -> Result<ResultRow> {
    let train_cfg = job.method.train_config(base, job.seed);
    let outcome = run_training(&train_cfg, net, &suite.specs, shards, cfg.command)?;

    let stem = dataset_stem(&job.dataset);
    let dir = exp_dir
        .join(&stem)
        .join(method_dir(&job.method.label))
        .join(format!("seed{}", job.seed));
    let per_run = RunConfig {
        datasets: vec![job.dataset.clone()],
        methods: vec![job.method.label.clone()],
        seeds: vec![job.seed],
        ..cfg.clone()
    };
    write_run_outputs(&dir, &per_run, &outcome)?;

    Ok(ResultRow {
        dataset: stem,
        method: job.method.label.clone(),
        seed: job.seed,
        mean_return: final_return(&outcome),
    })
}
