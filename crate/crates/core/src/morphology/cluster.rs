use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fgw::DistanceMatrix;
use crate::{Error, Result};

/// A fixed partition of the embodiments into `m` groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub m: usize,
    pub mapping: BTreeMap<String, usize>,
}

impl GroupAssignment {
    /// Members of each group, ordered by group index.
    pub fn groups(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.m];
        for (id, &g) in &self.mapping {
            out[g].push(id.clone());
        }
        out
    }
}

/// Average-linkage agglomerative clustering of the distance matrix, cut to
/// exactly `m` groups. Merge ties break toward the pair with the lowest
/// original label indices; group indices are ordered by each group's lowest
/// member index. Fully deterministic.
pub fn cluster(d: &DistanceMatrix, m: usize) -> Result<GroupAssignment> {
    let n = d.labels.len();
    if m < 1 || m > n {
        return Err(Error::Config(format!("cluster: m = {m} outside [1, {n}]")));
    }
    // members[c] = original indices in cluster c (clusters keyed by their
    // smallest member, kept sorted); dist = average linkage between clusters
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut active: Vec<bool> = vec![true; n];
    // sum of pairwise original distances between clusters a and b
    let mut sums: Vec<Vec<f64>> = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            sums[a][b] = d.entries[(a, b)];
        }
    }
    let mut n_active = n;
    while n_active > m {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..n {
            if !active[a] {
                continue;
            }
            for b in a + 1..n {
                if !active[b] {
                    continue;
                }
                let link = sums[a][b] / (members[a].len() * members[b].len()) as f64;
                let better = match best {
                    None => true,
                    Some((bl, _, _)) => link < bl - 1e-15,
                };
                if better {
                    best = Some((link, a, b));
                }
            }
        }
        let (_, a, b) = best.expect("at least two active clusters");
        // merge b into a (a < b, so the representative stays the lower index)
        for c in 0..n {
            if active[c] && c != a && c != b {
                let s = sums[c][a] + sums[c][b];
                sums[c][a] = s;
                sums[a][c] = s;
            }
        }
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        members[a].sort_unstable();
        active[b] = false;
        n_active -= 1;
    }
    // group indices ordered by lowest member index; representative == that
    // index because merges always keep the lower representative
    let mut reps: Vec<usize> = (0..n).filter(|&c| active[c]).collect();
    reps.sort_unstable();
    let mut mapping = BTreeMap::new();
    for (gi, &rep) in reps.iter().enumerate() {
        for &i in &members[rep] {
            mapping.insert(d.labels[i].clone(), gi);
        }
    }
    Ok(GroupAssignment { m, mapping })
}

pub fn save_group_assignment(g: &GroupAssignment, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_vec_pretty(g)?)?;
    Ok(())
}

pub fn load_group_assignment(path: &Path) -> Result<GroupAssignment> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn dm(labels: &[&str], entries: Array2<f64>) -> DistanceMatrix {
        DistanceMatrix { entries, labels: labels.iter().map(|s| s.to_string()).collect() }
    }

    fn two_family_matrix() -> DistanceMatrix {
        // two well-separated families: {a, b, c} and {d, e}
        let labels = ["a", "b", "c", "d", "e"];
        let n = labels.len();
        let fam = [0, 0, 0, 1, 1];
        let entries = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                0.0
            } else if fam[i] == fam[j] {
                0.1
            } else {
                1.0
            }
        });
        dm(&labels, entries)
    }

    #[test]
    fn trivial_cuts() {
        let d = two_family_matrix();
        let all = cluster(&d, 1).unwrap();
        assert!(all.mapping.values().all(|g| *g == 0));
        let singletons = cluster(&d, 5).unwrap();
        let mut seen: Vec<usize> = singletons.mapping.values().cloned().collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn m_out_of_range_rejected() {
        let d = two_family_matrix();
        assert!(matches!(cluster(&d, 0), Err(Error::Config(_))));
        assert!(matches!(cluster(&d, 6), Err(Error::Config(_))));
    }

    #[test]
    fn two_families_recovered() {
        let d = two_family_matrix();
        let g = cluster(&d, 2).unwrap();
        assert_eq!(g.mapping["a"], g.mapping["b"]);
        assert_eq!(g.mapping["a"], g.mapping["c"]);
        assert_eq!(g.mapping["d"], g.mapping["e"]);
        assert_ne!(g.mapping["a"], g.mapping["d"]);
        // groups indexed by lowest member: the family holding "a" is group 0
        assert_eq!(g.mapping["a"], 0);
    }

    #[test]
    fn nested_cuts() {
        let d = two_family_matrix();
        let coarse = cluster(&d, 2).unwrap();
        for m in 3..=5 {
            let fine = cluster(&d, m).unwrap();
            // every fine group sits inside one coarse group
            for fine_group in fine.groups() {
                let coarse_of: Vec<usize> =
                    fine_group.iter().map(|id| coarse.mapping[id]).collect();
                assert!(coarse_of.windows(2).all(|w| w[0] == w[1]));
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        let d = two_family_matrix();
        let g = cluster(&d, 2).unwrap();
        // relabel by reversing the order of embodiments
        let n = d.labels.len();
        let rev_labels: Vec<String> = d.labels.iter().rev().cloned().collect();
        let rev_entries =
            Array2::from_shape_fn((n, n), |(i, j)| d.entries[(n - 1 - i, n - 1 - j)]);
        let g_rev = cluster(&DistanceMatrix { entries: rev_entries, labels: rev_labels }, 2)
            .unwrap();
        // same partition modulo group numbering
        for a in d.labels.iter() {
            for b in d.labels.iter() {
                assert_eq!(
                    g.mapping[a] == g.mapping[b],
                    g_rev.mapping[a] == g_rev.mapping[b],
                    "{a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn assignment_json_round_trip() {
        let d = two_family_matrix();
        let g = cluster(&d, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("groups.json");
        save_group_assignment(&g, &path).unwrap();
        assert_eq!(load_group_assignment(&path).unwrap(), g);
    }

    #[test]
    fn ties_break_toward_lower_labels() {
        // four points, all pairwise distances equal: first merge must be (0,1)
        let labels = ["p", "q", "r", "s"];
        let entries = Array2::from_shape_fn((4, 4), |(i, j)| if i == j { 0.0 } else { 1.0 });
        let g = cluster(&dm(&labels, entries), 3).unwrap();
        assert_eq!(g.mapping["p"], g.mapping["q"]);
        assert_eq!(g.mapping["p"], 0);
        assert_eq!(g.mapping["r"], 1);
        assert_eq!(g.mapping["s"], 2);
    }
}
