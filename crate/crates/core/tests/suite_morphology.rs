//! Suite-level morphology checks: family structure must be visible in the
//! FGW distance matrix, and the full 16x16 computation must stay fast.

use std::time::Instant;

use xembod::envs::{make_suite, Family};
use xembod::morphology::{
    build_graph, cluster, distance_matrix, similarity_from_distance, MorphGraph,
};

#[test]
fn suite_distance_matrix_reflects_families() {
    let suite = make_suite(0);
    let labels: Vec<String> = suite.iter().map(|s| s.id.clone()).collect();
    let graphs: Vec<MorphGraph> = suite.iter().map(build_graph).collect();

    let start = Instant::now();
    let dm = distance_matrix(&labels, &graphs, 0.5, 1e-3).unwrap();
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "distance matrix took {elapsed:?}");

    // symmetric, zero diagonal, non-negative
    let n = labels.len();
    for i in 0..n {
        assert_eq!(dm.entries[(i, i)], 0.0);
        for j in 0..n {
            assert!(dm.entries[(i, j)] >= 0.0);
            assert!((dm.entries[(i, j)] - dm.entries[(j, i)]).abs() < 1e-12);
        }
    }

    let family = |i: usize| suite[i].family;
    let mut within_quad = Vec::new();
    let mut quad_vs_biped = Vec::new();
    let mut cross_family = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = dm.entries[(i, j)];
            match (family(i), family(j)) {
                (Family::QuadrupedLike, Family::QuadrupedLike) => within_quad.push(d),
                (Family::QuadrupedLike, Family::BipedLike)
                | (Family::BipedLike, Family::QuadrupedLike) => {
                    quad_vs_biped.push(d);
                    cross_family.push(d);
                }
                (a, b) if a != b => cross_family.push(d),
                _ => {}
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(
        mean(&within_quad) < mean(&cross_family),
        "within-quad mean {} vs cross-family mean {}",
        mean(&within_quad),
        mean(&cross_family)
    );

    // similarity view of the same statement
    let sim = similarity_from_distance(&dm).unwrap();
    let mut sim_within = Vec::new();
    let mut sim_cross = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            match (family(i), family(j)) {
                (Family::QuadrupedLike, Family::QuadrupedLike) => sim_within.push(sim[(i, j)]),
                (Family::QuadrupedLike, Family::BipedLike)
                | (Family::BipedLike, Family::QuadrupedLike) => sim_cross.push(sim[(i, j)]),
                _ => {}
            }
        }
    }
    assert!(mean(&sim_within) > mean(&sim_cross));

    // clustering at the family count should separate quads from bipeds
    let groups = cluster(&dm, 2).unwrap();
    let quad_group = groups.mapping["quad00"];
    for spec in &suite {
        if spec.family == Family::QuadrupedLike {
            assert_eq!(groups.mapping[&spec.id], quad_group, "{} left quad group", spec.id);
        }
        if spec.family == Family::BipedLike {
            assert_ne!(groups.mapping[&spec.id], quad_group, "{} joined quad group", spec.id);
        }
    }
}
