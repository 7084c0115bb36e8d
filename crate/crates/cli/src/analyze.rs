use std::fs;
use std::path::{Path, PathBuf};

use xembod::analysis::{
    conflict_stats, diversity_sweep, save_histogram, save_matrix, save_scatter,
    similarity_alignment_correlation, transfer_correlation, ConflictStats, TransferReport,
};
use xembod::datasets::load_dataset;
use xembod::envs::SuiteManifest;
use xembod::morphology::{build_graph, distance_matrix, similarity_from_distance};
use xembod::rl::{run_training, Grouping, TrainConfig, TrainOutcome};
use xembod::{Error, Result};

use crate::config::{Method, RunConfig};
use crate::run::{dataset_stem, final_return};
use crate::svg;

const FGW_ALPHA: f64 = 0.5;
const FGW_EPS: f64 = 1e-3;
const M_SWEEP: [usize; 6] = [1, 2, 4, 7, 10, 13];

pub struct AnalysisContext {
    pub cfg: RunConfig,
    pub suite: SuiteManifest,
    pub method: Method,
    pub base: TrainConfig,
    pub out: PathBuf,
}

impl AnalysisContext {
    pub fn new(cfg: RunConfig, kind: &str) -> Result<AnalysisContext> {
        let suite = SuiteManifest::generate(cfg.suite_seed)?;
        let method = Method::parse(&cfg.methods[0])?;
        let base = cfg.train.apply(&TrainConfig::default());
        if base.conflict_every == 0 {
            return Err(Error::Config(
                "analysis needs conflict_every > 0 in the [train] section".into(),
            ));
        }
        let out = cfg.out.join(&cfg.name).join("analysis").join(kind);
        fs::create_dir_all(&out)?;
        cfg.save(&out.join("resolved.toml"))?;
        Ok(AnalysisContext { cfg, suite, method, base, out })
    }

    fn train_on(&self, dataset: &Path, seed: u64) -> Result<TrainOutcome> {
        let (shards, _) = load_dataset(dataset).map_err(|e| match e {
            Error::Io(io) => Error::CorruptDataset(format!(
                "{}: {io}; generate it first with `xembod gen-data`",
                dataset.display()
            )),
            other => other,
        })?;
        let net = self.cfg.net.resolve()?;
        let cfg = self.method.train_config(&self.base, seed);
        run_training(&cfg, &net, &self.suite.specs, &shards, self.cfg.command)
    }
}

fn mean_over_seeds(curves: &[ConflictStats]) -> (Vec<usize>, Vec<f64>) {
    let steps = curves[0].steps.clone();
    let mut mean = vec![0.0; steps.len()];
    for c in curves {
        for (m, f) in mean.iter_mut().zip(&c.negative_fraction) {
            *m += f / curves.len() as f64;
        }
    }
    (steps, mean)
}

/// Negative-fraction curves per dataset variant, averaged over seeds.
pub fn conflicts(ctx: &AnalysisContext) -> Result<()> {
    let mut series = Vec::new();
    for dataset in &ctx.cfg.datasets {
        let stem = dataset_stem(dataset);
        let mut stats = Vec::new();
        for &seed in &ctx.cfg.seeds {
            let outcome = ctx.train_on(dataset, seed)?;
            stats.push(conflict_stats(&outcome.conflicts)?);
        }
        let (steps, mean) = mean_over_seeds(&stats);
        let mut csv = String::from("step,negative_fraction\n");
        for (s, f) in steps.iter().zip(&mean) {
            csv.push_str(&format!("{s},{f}\n"));
        }
        fs::write(ctx.out.join(format!("negative_fraction_{stem}.csv")), csv)?;
        save_histogram(&ctx.out.join(format!("histogram_{stem}.csv")), &stats[0])?;
        series.push((
            stem,
            steps.iter().zip(&mean).map(|(&s, &f)| (s as f64, f)).collect(),
        ));
    }
    fs::write(
        ctx.out.join("negative_fraction.svg"),
        svg::line_chart("negative cosine fraction", "update", "fraction", &series),
    )?;
    Ok(())
}

/// Mean negative fraction over nested robot subsets of growing diversity.
pub fn diversity(ctx: &AnalysisContext) -> Result<()> {
    let quads: Vec<String> = ctx
        .suite
        .specs
        .iter()
        .filter(|s| s.id.starts_with("quad"))
        .map(|s| s.id.clone())
        .collect();
    let all: Vec<String> = ctx.suite.specs.iter().map(|s| s.id.clone()).collect();
    let subsets = vec![quads[..3].to_vec(), quads.clone(), all];

    let dataset = &ctx.cfg.datasets[0];
    let (shards, _) = load_dataset(dataset)?;
    let net = ctx.cfg.net.resolve()?;
    let mut rows = Vec::new();
    for &seed in &ctx.cfg.seeds {
        let cfg = ctx.method.train_config(&ctx.base, seed);
        let fractions =
            diversity_sweep(&cfg, &net, &ctx.suite.specs, &shards, &subsets, ctx.cfg.command)?;
        rows.push(fractions);
    }

    let mut csv = String::from("subset_size,seed,mean_negative_fraction\n");
    let mut points = Vec::new();
    for (k, subset) in subsets.iter().enumerate() {
        let mut mean = 0.0;
        for (row, &seed) in rows.iter().zip(&ctx.cfg.seeds) {
            let f = row[k].unwrap_or(f64::NAN);
            csv.push_str(&format!("{},{seed},{f}\n", subset.len()));
            mean += f / rows.len() as f64;
        }
        points.push((subset.len() as f64, mean));
    }
    fs::write(ctx.out.join("diversity.csv"), csv)?;
    fs::write(
        ctx.out.join("diversity.svg"),
        svg::line_chart(
            "conflict vs diversity",
            "robots",
            "mean negative fraction",
            &[("mean over seeds".to_string(), points)],
        ),
    )?;
    Ok(())
}

fn suite_similarity(ctx: &AnalysisContext) -> Result<(Vec<String>, ndarray::Array2<f64>)> {
    let labels: Vec<String> = ctx.suite.specs.iter().map(|s| s.id.clone()).collect();
    let graphs: Vec<_> = ctx.suite.specs.iter().map(build_graph).collect();
    let dm = distance_matrix(&labels, &graphs, FGW_ALPHA, FGW_EPS)?;
    let sim = similarity_from_distance(&dm)?;
    Ok((labels, sim))
}

/// Embodiment similarity vs gradient alignment: matrices, scatter, Pearson.
pub fn embodiment(ctx: &AnalysisContext) -> Result<()> {
    let (labels, sim) = suite_similarity(ctx)?;
    save_matrix(&ctx.out.join("similarity.csv"), &labels, &sim)?;

    let dataset = &ctx.cfg.datasets[0];
    let mut pooled: Option<ndarray::Array2<f64>> = None;
    for &seed in &ctx.cfg.seeds {
        let outcome = ctx.train_on(dataset, seed)?;
        let stats = conflict_stats(&outcome.conflicts)?;
        if stats.labels != labels {
            return Err(Error::Config(
                "embodiment analysis needs the full-suite dataset".into(),
            ));
        }
        pooled = Some(match pooled {
            Some(acc) => acc + &stats.mean_matrix,
            None => stats.mean_matrix,
        });
    }
    let mean_matrix = pooled.expect("at least one seed") / ctx.cfg.seeds.len() as f64;
    save_matrix(&ctx.out.join("mean_cosine.csv"), &labels, &mean_matrix)?;
    save_scatter(&ctx.out.join("scatter.csv"), &labels, &sim, &mean_matrix)?;

    let (r, p) = similarity_alignment_correlation(&sim, &mean_matrix)?;
    fs::write(ctx.out.join("pearson.csv"), format!("r,p\n{r},{p}\n"))?;

    let to_rows = |m: &ndarray::Array2<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| m.row(i).to_vec()).collect()
    };
    fs::write(
        ctx.out.join("similarity.svg"),
        svg::heatmap("embodiment similarity", &labels, &to_rows(&sim)),
    )?;
    fs::write(
        ctx.out.join("mean_cosine.svg"),
        svg::heatmap("mean gradient cosine", &labels, &to_rows(&mean_matrix)),
    )?;
    let mut points = Vec::new();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            if mean_matrix[(i, j)].is_finite() {
                points.push((sim[(i, j)], mean_matrix[(i, j)]));
            }
        }
    }
    fs::write(
        ctx.out.join("scatter.svg"),
        svg::scatter_chart(
            &format!("similarity vs alignment (r = {r:.3})"),
            "similarity",
            "mean cosine",
            &points,
        ),
    )?;
    Ok(())
}

/// Transfer gains (cross-embodiment vs single-robot training) and their
/// correlation with gradient alignment.
pub fn transfer(ctx: &AnalysisContext) -> Result<()> {
    let dataset = &ctx.cfg.datasets[0];
    let (shards, _) = load_dataset(dataset)?;
    let net = ctx.cfg.net.resolve()?;
    let seed = ctx.cfg.seeds[0];
    let cfg = ctx.method.train_config(&ctx.base, seed);

    let cross = run_training(&cfg, &net, &ctx.suite.specs, &shards, ctx.cfg.command)?;
    let stats = conflict_stats(&cross.conflicts)?;
    let mean_rows = stats.mean_cosine_rows();
    let last = cross.evals.iter().map(|e| e.step).max().unwrap_or(0);

    let mut reports = Vec::new();
    for shard in &shards {
        let single_cfg = TrainConfig { grouping: Grouping::None, ..cfg.clone() };
        let single = run_training(
            &single_cfg,
            &net,
            &ctx.suite.specs,
            std::slice::from_ref(shard),
            ctx.cfg.command,
        )?;
        let single_final = final_return(&single);
        let cross_final = cross
            .evals
            .iter()
            .find(|e| e.step == last && e.robot_id == shard.robot_id)
            .map(|e| e.mean_return)
            .ok_or_else(|| Error::Config(format!("no eval for `{}`", shard.robot_id)))?;
        let expert_ref = ctx
            .suite
            .expert_ref(&shard.robot_id, ctx.cfg.command)
            .ok_or_else(|| Error::Config(format!("no expert ref for `{}`", shard.robot_id)))?;
        reports.push(TransferReport::new(&shard.robot_id, single_final, cross_final, expert_ref));
    }
    xembod::analysis::save_transfer_reports(&ctx.out.join("transfer.csv"), &reports)?;

    match transfer_correlation(&reports, &mean_rows) {
        Ok((r, p)) => {
            fs::write(ctx.out.join("pearson.csv"), format!("r,p\n{r},{p}\n"))?;
        }
        Err(Error::InsufficientData(msg)) => {
            fs::write(ctx.out.join("pearson.csv"), format!("r,p\ninsufficient: {msg}\n"))?;
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

/// Final return as a function of the group count.
pub fn m_sweep(ctx: &AnalysisContext) -> Result<()> {
    let dataset = &ctx.cfg.datasets[0];
    let (shards, _) = load_dataset(dataset)?;
    let net = ctx.cfg.net.resolve()?;

    let mut csv = String::from("m,seed,mean_return\n");
    let mut points = Vec::new();
    for m in M_SWEEP {
        if m > shards.len() {
            continue;
        }
        let mut mean = 0.0;
        for &seed in &ctx.cfg.seeds {
            let mut cfg = ctx.method.train_config(&ctx.base, seed);
            cfg.grouping = Grouping::Eg;
            cfg.m = m;
            let outcome = run_training(&cfg, &net, &ctx.suite.specs, &shards, ctx.cfg.command)?;
            let ret = final_return(&outcome);
            csv.push_str(&format!("{m},{seed},{ret}\n"));
            mean += ret / ctx.cfg.seeds.len() as f64;
        }
        points.push((m as f64, mean));
    }
    fs::write(ctx.out.join("msweep.csv"), csv)?;
    fs::write(
        ctx.out.join("msweep.svg"),
        svg::line_chart(
            "group count sweep",
            "m",
            "mean return",
            &[("mean over seeds".to_string(), points)],
        ),
    )?;
    Ok(())
}

/// Grouped trainer vs the compute-normalized ungrouped control.
pub fn budget(ctx: &AnalysisContext) -> Result<()> {
    let dataset = &ctx.cfg.datasets[0];
    let (shards, _) = load_dataset(dataset)?;
    let net = ctx.cfg.net.resolve()?;

    let mut csv = String::from("seed,eg_return,normalized_return,eg_samples,normalized_samples\n");
    for &seed in &ctx.cfg.seeds {
        let mut eg_cfg = ctx.method.train_config(&ctx.base, seed);
        eg_cfg.grouping = Grouping::Eg;
        eg_cfg.normalized_mode = false;
        let eg = run_training(&eg_cfg, &net, &ctx.suite.specs, &shards, ctx.cfg.command)?;

        let mut norm_cfg = ctx.method.train_config(&ctx.base, seed);
        norm_cfg.grouping = Grouping::None;
        norm_cfg.normalized_mode = true;
        let norm = run_training(&norm_cfg, &net, &ctx.suite.specs, &shards, ctx.cfg.command)?;

        csv.push_str(&format!(
            "{seed},{},{},{},{}\n",
            final_return(&eg),
            final_return(&norm),
            eg.state.actor_samples,
            norm.state.actor_samples,
        ));
    }
    fs::write(ctx.out.join("budget.csv"), csv)?;
    Ok(())
}
