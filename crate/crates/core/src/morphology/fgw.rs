use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2};

use super::graph::{shortest_paths, MorphGraph, NodeKind, D_FEAT};
use crate::{Error, Result};

/// Symmetric pairwise distance matrix over a labeled set of embodiments.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub entries: Array2<f64>,
    pub labels: Vec<String>,
}

static FGW_CALLS: AtomicU64 = AtomicU64::new(0);

/// Number of `fgw_distance` invocations so far (diagnostic).
pub fn fgw_call_count() -> u64 {
    FGW_CALLS.load(Ordering::Relaxed)
}

fn logsumexp(row: &[f64]) -> f64 {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log-domain Sinkhorn with epsilon scaling: anneals the regularizer down to
/// `eps`, warm-starting the potentials, within a shared iteration budget.
fn sinkhorn_plan(
    cost: &Array2<f64>,
    mu: &Array1<f64>,
    nu: &Array1<f64>,
    eps: f64,
    max_iter: usize,
) -> Result<Array2<f64>> {
    let (n, m) = cost.dim();
    let log_mu: Vec<f64> = mu.iter().map(|x| x.ln()).collect();
    let log_nu: Vec<f64> = nu.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let max_cost = cost.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut schedule = Vec::new();
    let mut e = (max_cost / 10.0).max(eps);
    while e > eps {
        schedule.push(e);
        e /= 10.0;
    }
    schedule.push(eps);
    let mut used = 0usize;
    let mut err = f64::INFINITY;
    for (si, &e) in schedule.iter().enumerate() {
        let last = si + 1 == schedule.len();
        loop {
            if used >= max_iter {
                break;
            }
            used += 1;
            for i in 0..n {
                let row: Vec<f64> = (0..m).map(|j| (g[j] - cost[(i, j)]) / e).collect();
                f[i] = e * (log_mu[i] - logsumexp(&row));
            }
            for j in 0..m {
                let col: Vec<f64> = (0..n).map(|i| (f[i] - cost[(i, j)]) / e).collect();
                g[j] = e * (log_nu[j] - logsumexp(&col));
            }
            // column marginal violation (rows are exact after the f update)
            err = 0.0;
            for j in 0..m {
                let mass: f64 =
                    (0..n).map(|i| ((f[i] + g[j] - cost[(i, j)]) / e).exp()).sum();
                err = err.max((mass - nu[j]).abs());
            }
            if err < 1e-9 || (!last && err < 1e-6) {
                break;
            }
        }
    }
    if err > 1e-6 {
        return Err(Error::Solver { pair: String::new(), objective: err });
    }
    let mut plan = Array2::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            plan[(i, j)] = ((f[i] + g[j] - cost[(i, j)]) / eps).exp();
        }
    }
    Ok(plan)
}

fn feature_cost(g1: &MorphGraph, g2: &MorphGraph) -> Array2<f64> {
    let (n, m) = (g1.n(), g2.n());
    Array2::from_shape_fn((n, m), |(i, j)| {
        let a = &g1.nodes[i].features;
        let b = &g2.nodes[j].features;
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    })
}

/// `L(T)_ij = sum_kl (D1_ik - D2_jl)^2 T_kl`, via the standard three-term
/// decomposition with the marginals of `t`.
fn structure_term(d1: &Array2<f64>, d2: &Array2<f64>, t: &Array2<f64>) -> Array2<f64> {
    let row_mass: Array1<f64> = t.sum_axis(ndarray::Axis(1));
    let col_mass: Array1<f64> = t.sum_axis(ndarray::Axis(0));
    let c1: Array1<f64> = d1.mapv(|x| x * x).dot(&row_mass);
    let c2: Array1<f64> = d2.mapv(|x| x * x).dot(&col_mass);
    let cross = d1.dot(t).dot(&d2.t());
    let (n, m) = t.dim();
    Array2::from_shape_fn((n, m), |(i, j)| c1[i] + c2[j] - 2.0 * cross[(i, j)])
}

fn inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[derive(Clone)]
struct FgwProblem {
    c_feat: Array2<f64>,
    d1: Array2<f64>,
    d2: Array2<f64>,
    mu: Array1<f64>,
    nu: Array1<f64>,
    alpha: f64,
    eps: f64,
}

impl FgwProblem {
    fn objective(&self, t: &Array2<f64>) -> f64 {
        (1.0 - self.alpha) * inner(&self.c_feat, t) + self.alpha * inner(&structure_term(&self.d1, &self.d2, t), t)
    }

    fn gradient(&self, t: &Array2<f64>) -> Array2<f64> {
        let l = structure_term(&self.d1, &self.d2, t);
        Array2::from_shape_fn(t.dim(), |(i, j)| {
            (1.0 - self.alpha) * self.c_feat[(i, j)] + 2.0 * self.alpha * l[(i, j)]
        })
    }

    /// Conditional gradient from one initial coupling.
    fn solve_from(&self, mut t: Array2<f64>) -> Result<(Array2<f64>, f64)> {
        let mut obj = self.objective(&t);
        for _ in 0..200 {
            let grad = self.gradient(&t);
            let target = sinkhorn_plan(&grad, &self.mu, &self.nu, self.eps, 1000)?;
            let delta = &target - &t;
            let b = inner(&grad, &delta);
            let a = self.alpha * inner(&structure_term(&self.d1, &self.d2, &delta), &delta);
            let theta = if a > 1e-18 {
                (-b / (2.0 * a)).clamp(0.0, 1.0)
            } else if b < 0.0 {
                1.0
            } else {
                0.0
            };
            if theta == 0.0 {
                break;
            }
            t = &t + &delta.mapv(|x| x * theta);
            let new_obj = self.objective(&t);
            if obj - new_obj <= 1e-9 * obj.abs().max(1.0) {
                obj = new_obj;
                break;
            }
            obj = new_obj;
        }
        Ok((t, obj))
    }
}

/// Greedy rounding of a coupling to the nearest permutation coupling
/// (largest entry first). Only meaningful for equal-size uniform problems.
fn round_to_permutation(t: &Array2<f64>) -> Array2<f64> {
    let n = t.nrows();
    let mut out = Array2::zeros((n, n));
    let mut row_used = vec![false; n];
    let mut col_used = vec![false; n];
    for _ in 0..n {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for i in 0..n {
            if row_used[i] {
                continue;
            }
            for j in 0..n {
                if !col_used[j] && t[(i, j)] > best.0 {
                    best = (t[(i, j)], i, j);
                }
            }
        }
        let (_, i, j) = best;
        row_used[i] = true;
        col_used[j] = true;
        out[(i, j)] = 1.0 / n as f64;
    }
    out
}

/// Total order on graphs so distance computation always runs in a canonical
/// argument order; the objective is symmetric, so this forces exact symmetry.
fn canonical_key(g: &MorphGraph) -> Vec<u64> {
    let mut key = vec![g.n() as u64];
    for node in &g.nodes {
        for f in &node.features {
            key.push(f.to_bits());
        }
    }
    for &(a, b) in &g.edges {
        key.push((a.min(b) as u64) << 32 | b.max(a) as u64);
    }
    key
}

/// Fused Gromov-Wasserstein distance between two morphology graphs: the
/// fused objective at the best coupling found by conditional gradient with
/// entropically regularized inner transport solves, over deterministic
/// restarts (product coupling, feature-only and structure-only warm starts,
/// seeded random couplings, and permutation-rounded refinements).
pub fn fgw_distance(g1: &MorphGraph, g2: &MorphGraph, alpha: f64, eps: f64) -> Result<f64> {
    assert!((0.0..=1.0).contains(&alpha));
    assert!(eps > 0.0);
    FGW_CALLS.fetch_add(1, Ordering::Relaxed);
    let (g1, g2) = if canonical_key(g1) <= canonical_key(g2) { (g1, g2) } else { (g2, g1) };
    let problem = FgwProblem {
        c_feat: feature_cost(g1, g2),
        d1: shortest_paths(g1)?,
        d2: shortest_paths(g2)?,
        mu: Array1::from_vec(g1.node_weights.clone()),
        nu: Array1::from_vec(g2.node_weights.clone()),
        alpha,
        eps,
    };
    let (n, m) = problem.c_feat.dim();
    let product = Array2::from_shape_fn((n, m), |(i, j)| problem.mu[i] * problem.nu[j]);
    let mut inits = vec![product.clone()];
    if alpha < 1.0 {
        inits.push(sinkhorn_plan(&problem.c_feat, &problem.mu, &problem.nu, eps, 1000)?);
    }
    if alpha > 0.0 {
        // structure-only warm start: solve the pure quadratic problem first
        let pure = FgwProblem { alpha: 1.0, ..problem.clone() };
        let (plan, _) = pure.solve_from(product.clone())?;
        inits.push(plan);
    }
    for k in 0..3u64 {
        // seeded random cost, pushed through Sinkhorn to get a valid coupling
        let mut rng = crate::rng::substream(k, "fgw-restart", n as u64, m as u64);
        let rand_cost = Array2::from_shape_fn((n, m), |_| rand::Rng::gen_range(&mut rng, 0.0..1.0));
        inits.push(sinkhorn_plan(&rand_cost, &problem.mu, &problem.nu, 0.05, 1000)?);
    }
    let uniform_square = n == m
        && problem.mu.iter().chain(problem.nu.iter()).all(|w| (w - 1.0 / n as f64).abs() < 1e-12);
    let mut best = f64::INFINITY;
    for init in inits {
        let (plan, obj) = problem.solve_from(init)?;
        best = best.min(obj);
        if uniform_square {
            // snap to the nearest permutation and polish from there
            let perm = round_to_permutation(&plan);
            best = best.min(problem.objective(&perm));
            let (_, obj) = problem.solve_from(perm)?;
            best = best.min(obj);
        }
    }
    Ok(best.max(0.0))
}

/// Standardizes descriptors across the whole collection (z-score per
/// dimension, joints and feet separately; torso stays zero) and fills the
/// symmetric pairwise FGW distance matrix.
pub fn distance_matrix(
    labels: &[String],
    graphs: &[MorphGraph],
    alpha: f64,
    eps: f64,
) -> Result<DistanceMatrix> {
    assert_eq!(labels.len(), graphs.len());
    assert!(graphs.len() >= 2);
    let standardized = standardize(graphs);
    let n = graphs.len();
    let mut entries = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let d = fgw_distance(&standardized[i], &standardized[j], alpha, eps).map_err(|e| {
                match e {
                    Error::Solver { objective, .. } => Error::Solver {
                        pair: format!("{}:{}", labels[i], labels[j]),
                        objective,
                    },
                    other => other,
                }
            })?;
            entries[(i, j)] = d;
            entries[(j, i)] = d;
        }
    }
    Ok(DistanceMatrix { entries, labels: labels.to_vec() })
}

fn standardize(graphs: &[MorphGraph]) -> Vec<MorphGraph> {
    let mut out = graphs.to_vec();
    for (kind, dims) in [(NodeKind::Joint, D_FEAT), (NodeKind::Foot, 2)] {
        for d in 0..dims {
            let values: Vec<f64> = graphs
                .iter()
                .flat_map(|g| g.nodes.iter())
                .filter(|node| node.kind == kind)
                .map(|node| node.features[d])
                .collect();
            if values.is_empty() {
                continue;
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / values.len() as f64;
            let std = var.sqrt();
            for g in &mut out {
                for node in &mut g.nodes {
                    if node.kind == kind {
                        node.features[d] = if std > 1e-12 {
                            (node.features[d] - mean) / std
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
    }
    out
}

/// Min-max normalizes off-diagonal distances to [0,1] and returns
/// `1 - normalized`; the diagonal is set to 1.
pub fn similarity_from_distance(d: &DistanceMatrix) -> Result<Array2<f64>> {
    let n = d.labels.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                lo = lo.min(d.entries[(i, j)]);
                hi = hi.max(d.entries[(i, j)]);
            }
        }
    }
    if !(hi - lo > 1e-12) {
        return Err(Error::Normalization(
            "similarity_from_distance: off-diagonal distances are constant".into(),
        ));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            1.0
        } else {
            1.0 - (d.entries[(i, j)] - lo) / (hi - lo)
        }
    }))
}

/// Writes a labeled square matrix as CSV with a header row of labels.
pub fn save_matrix_csv(entries: &Array2<f64>, labels: &[String], path: &Path) -> Result<()> {
    let n = labels.len();
    assert_eq!(entries.dim(), (n, n));
    let mut out = String::new();
    out.push_str("id,");
    out.push_str(&labels.join(","));
    out.push('\n');
    for i in 0..n {
        out.push_str(&labels[i]);
        for j in 0..n {
            out.push_str(&format!(",{}", entries[(i, j)]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_distance_csv(path: &Path) -> Result<DistanceMatrix> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::CorruptDataset(format!("{}: empty csv", path.display())))?;
    let labels: Vec<String> = header.split(',').skip(1).map(|s| s.to_string()).collect();
    let n = labels.len();
    let mut entries = Array2::zeros((n, n));
    for (i, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let row_label = fields.next().unwrap_or_default();
        if i >= n || row_label != labels[i] {
            return Err(Error::CorruptDataset(format!(
                "{}: row {i} labeled `{row_label}`",
                path.display()
            )));
        }
        for (j, field) in fields.enumerate() {
            entries[(i, j)] = field
                .parse()
                .map_err(|_| Error::CorruptDataset(format!("{}: bad float", path.display())))?;
        }
    }
    Ok(DistanceMatrix { entries, labels })
}
