use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use xembod::{Error, Result};

use crate::config::RunConfig;
use crate::run::ResultRow;

pub fn load_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Config(format!(
                "{}:{}: expected 4 fields, got {}",
                path.display(),
                k + 1,
                fields.len()
            )));
        }
        rows.push(ResultRow {
            dataset: fields[0].to_string(),
            method: fields[1].to_string(),
            seed: fields[2]
                .parse()
                .map_err(|e| Error::Config(format!("{}:{}: bad seed: {e}", path.display(), k + 1)))?,
            mean_return: fields[3].parse().map_err(|e| {
                Error::Config(format!("{}:{}: bad return: {e}", path.display(), k + 1))
            })?,
        });
    }
    Ok(rows)
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Collates the experiment results table into a markdown summary with one
/// mean ± standard-error cell per (dataset, method); missing seeds are
/// listed, never silently averaged over.
pub fn render_report(cfg: &RunConfig, rows: &[ResultRow]) -> String {
    let mut by_cell: BTreeMap<(String, String), Vec<(u64, f64)>> = BTreeMap::new();
    for r in rows {
        by_cell
            .entry((r.dataset.clone(), r.method.clone()))
            .or_default()
            .push((r.seed, r.mean_return));
    }
    let mut datasets: Vec<String> = by_cell.keys().map(|(d, _)| d.clone()).collect();
    datasets.dedup();
    let mut methods: Vec<String> = by_cell.keys().map(|(_, m)| m.clone()).collect();
    methods.sort();
    methods.dedup();

    let mut out = String::new();
    out.push_str(&format!("# Experiment `{}`\n\n", cfg.name));
    out.push_str(&format!(
        "Seeds: {:?}. Cells are mean return ± standard error (SD/sqrt(seeds)).\n\n",
        cfg.seeds
    ));
    out.push_str(&format!("| dataset | {} |\n", methods.join(" | ")));
    out.push_str(&format!("|---|{}\n", "---|".repeat(methods.len())));
    let mut warnings = Vec::new();
    for d in &datasets {
        out.push_str(&format!("| {d} |"));
        for m in &methods {
            match by_cell.get(&(d.clone(), m.clone())) {
                Some(cell) => {
                    let missing: Vec<u64> = cfg
                        .seeds
                        .iter()
                        .copied()
                        .filter(|s| !cell.iter().any(|(cs, _)| cs == s))
                        .collect();
                    if !missing.is_empty() {
                        warnings.push(format!(
                            "`{d}` / `{m}`: missing seeds {missing:?} (averaged over {} present)",
                            cell.len()
                        ));
                    }
                    let values: Vec<f64> = cell.iter().map(|(_, v)| *v).collect();
                    let (mean, se) = mean_and_se(&values);
                    out.push_str(&format!(" {mean:.2} ± {se:.2} |"));
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    if !warnings.is_empty() {
        out.push_str("\n## Warnings\n\n");
        for w in warnings {
            out.push_str(&format!("- {w}\n"));
        }
    }
    out
}

/// Appends any analysis artifacts found under the experiment directory.
pub fn append_analysis_links(out: &mut String, exp_dir: &Path) {
    let analysis = exp_dir.join("analysis");
    let Ok(entries) = fs::read_dir(&analysis) else {
        return;
    };
    let mut kinds: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    kinds.sort();
    if kinds.is_empty() {
        return;
    }
    out.push_str("\n## Analyses\n\n");
    for kind in kinds {
        out.push_str(&format!("- `analysis/{kind}/`"));
        let pearson = analysis.join(&kind).join("pearson.csv");
        if let Ok(text) = fs::read_to_string(&pearson) {
            if let Some(line) = text.lines().nth(1) {
                out.push_str(&format!(" (Pearson r,p = {line})"));
            }
        }
        out.push('\n');
    }
}

pub fn report(exp_dir: &Path) -> Result<String> {
    let cfg = RunConfig::load(&exp_dir.join("resolved.toml"))?;
    let rows = load_results(&exp_dir.join("results.csv"))?;
    let mut out = render_report(&cfg, &rows);
    append_analysis_links(&mut out, exp_dir);
    fs::write(exp_dir.join("report.md"), &out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_cfg() -> RunConfig {
        toml::from_str(
            r#"
            name = "demo"
            datasets = ["data/mix70"]
            methods = ["bc", "iql"]
            seeds = [0, 1]
        "#,
        )
        .unwrap()
    }

    #[test]
    fn report_has_mean_and_standard_error() {
        let rows = vec![
            ResultRow { dataset: "mix70".into(), method: "bc".into(), seed: 0, mean_return: 10.0 },
            ResultRow { dataset: "mix70".into(), method: "bc".into(), seed: 1, mean_return: 14.0 },
            ResultRow { dataset: "mix70".into(), method: "iql".into(), seed: 0, mean_return: 20.0 },
        ];
        let text = render_report(&demo_cfg(), &rows);
        // SD of {10, 14} is sqrt(8); SE = sqrt(8/2) = 2
        assert!(text.contains("12.00 ± 2.00"), "{text}");
        // iql ran one of two seeds: flagged, not silently averaged
        assert!(text.contains("missing seeds [1]"), "{text}");
    }

    #[test]
    fn results_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![ResultRow {
            dataset: "d".into(),
            method: "iql+eg".into(),
            seed: 3,
            mean_return: 1.5,
        }];
        let path = dir.path().join("results.csv");
        crate::run::save_results(&path, &rows).unwrap();
        assert_eq!(load_results(&path).unwrap(), rows);
    }
}
