use serde::{Deserialize, Serialize};

use crate::rng::stream;
use rand::Rng;

/// Structural family of an embodiment. Families share joint/foot count
/// conventions and baseline dynamics parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    QuadrupedLike,
    BipedLike,
    HexapodLike,
}

/// Full description of one LinkChain embodiment: kinematic structure,
/// per-joint dynamics parameters, and reward weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbodimentSpec {
    pub id: String,
    pub family: Family,
    pub n_joints: usize,
    pub n_feet: usize,
    /// Contribution weight of each joint's velocity to the base velocity.
    pub coupling: Vec<f64>,
    pub gear: Vec<f64>,
    pub damping: Vec<f64>,
    pub stiffness: Vec<f64>,
    pub q_limit: Vec<f64>,
    /// Joint indices of each limb chain, ordered root to terminal.
    pub limbs: Vec<Vec<usize>>,
    /// Terminal joint index each foot attaches to (one foot per limb).
    pub foot_joint: Vec<usize>,
    pub k_track: f64,
    pub k_torque: f64,
    pub k_rate: f64,
}

impl EmbodimentSpec {
    /// Per-joint descriptor `[w_j, j/J, gear_j, q_limit_j]` (1-based index).
    pub fn descriptor_joint(&self, j: usize) -> [f64; 4] {
        [
            self.coupling[j],
            (j + 1) as f64 / self.n_joints as f64,
            self.gear[j],
            self.q_limit[j],
        ]
    }

    /// Per-foot descriptor `[w_{j(f)}, f/F]` (1-based index).
    pub fn descriptor_foot(&self, f: usize) -> [f64; 2] {
        [
            self.coupling[self.foot_joint[f]],
            (f + 1) as f64 / self.n_feet as f64,
        ]
    }

    /// `sum_j w_j^2`, the normalizer of the scripted controller's velocity
    /// targets. Positive by construction.
    pub fn coupling_norm_sq(&self) -> f64 {
        self.coupling.iter().map(|w| w * w).sum()
    }

    fn validate(&self) {
        assert_eq!(self.coupling.len(), self.n_joints);
        assert_eq!(self.gear.len(), self.n_joints);
        assert_eq!(self.damping.len(), self.n_joints);
        assert_eq!(self.stiffness.len(), self.n_joints);
        assert_eq!(self.q_limit.len(), self.n_joints);
        assert_eq!(self.limbs.len(), self.n_feet);
        assert_eq!(self.foot_joint.len(), self.n_feet);
        assert!(self.coupling_norm_sq() > 0.0);
        let mut seen = vec![false; self.n_joints];
        for (limb, &foot) in self.limbs.iter().zip(&self.foot_joint) {
            assert!(!limb.is_empty());
            assert_eq!(*limb.last().unwrap(), foot, "foot must sit on a terminal joint");
            for &j in limb {
                assert!(!seen[j], "joint {j} appears in two limbs");
                seen[j] = true;
            }
        }
        assert!(seen.iter().all(|s| *s), "every joint must belong to a limb");
    }
}

struct FamilyBase {
    gear: f64,
    damping: f64,
    stiffness: f64,
    q_limit: f64,
    k_track: f64,
}

const QUAD_BASE: FamilyBase =
    FamilyBase { gear: 1.0, damping: 3.6, stiffness: 0.5, q_limit: 6.5, k_track: 0.5 };
const BIPED_BASE: FamilyBase =
    FamilyBase { gear: 2.2, damping: 5.5, stiffness: 0.3, q_limit: 10.0, k_track: 0.45 };
const HEX_BASE: FamilyBase =
    FamilyBase { gear: 0.45, damping: 1.4, stiffness: 0.2, q_limit: 13.0, k_track: 0.55 };

const K_TORQUE: f64 = 2e-3;
const K_RATE: f64 = 1e-3;

fn jitter(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

fn build_spec(
    id: &str,
    family: Family,
    base: &FamilyBase,
    limb_couplings: &[Vec<f64>],
    rng: &mut impl Rng,
) -> EmbodimentSpec {
    let mut coupling = Vec::new();
    let mut limbs = Vec::new();
    let mut foot_joint = Vec::new();
    let mut j = 0;
    for limb_w in limb_couplings {
        let mut limb = Vec::new();
        for &w in limb_w {
            coupling.push(w * jitter(rng, 0.95, 1.05));
            limb.push(j);
            j += 1;
        }
        foot_joint.push(*limb.last().unwrap());
        limbs.push(limb);
    }
    let n_joints = j;
    let n_feet = limbs.len();
    let mut gear = Vec::new();
    let mut damping = Vec::new();
    let mut stiffness = Vec::new();
    let mut q_limit = Vec::new();
    for _ in 0..n_joints {
        gear.push(base.gear * jitter(rng, 0.9, 1.1));
        damping.push(base.damping * jitter(rng, 0.9, 1.1));
        stiffness.push(base.stiffness * jitter(rng, 0.9, 1.1));
        // jittered upward only so scripted experts never drift past the limit
        q_limit.push(base.q_limit * jitter(rng, 1.0, 1.1));
    }
    let k_track = base.k_track * jitter(rng, 0.9, 1.1);
    let spec = EmbodimentSpec {
        id: id.to_string(),
        family,
        n_joints,
        n_feet,
        coupling,
        gear,
        damping,
        stiffness,
        q_limit,
        limbs,
        foot_joint,
        k_track,
        k_torque: K_TORQUE,
        k_rate: K_RATE,
    };
    spec.validate();
    spec
}

/// Builds the default 16-embodiment suite: nine quadruped-like (six with 4
/// joints, three with 8), six biped-like (three with 4 joints, three with
/// 6), and one hexapod-like. Deterministic per seed; returned sorted by id.
pub fn make_suite(seed: u64) -> Vec<EmbodimentSpec> {
    let mut rng = stream(seed, "suite");
    let mut specs = Vec::with_capacity(16);

    let quad_short: Vec<Vec<f64>> = vec![vec![0.5]; 4];
    let quad_long: Vec<Vec<f64>> = vec![vec![0.5, 0.25]; 4];
    for i in 0..9 {
        let limbs = if i < 6 { &quad_short } else { &quad_long };
        specs.push(build_spec(
            &format!("quad{i:02}"),
            Family::QuadrupedLike,
            &QUAD_BASE,
            limbs,
            &mut rng,
        ));
    }

    for i in 0..6 {
        let per_limb = i / 3 + 2; // joints per leg: 2, 2, 2, 3, 3, 3
        let left: Vec<f64> = (0..per_limb).map(|k| 0.8 / (1 << k) as f64).collect();
        let right: Vec<f64> = left.iter().map(|w| -w).collect();
        specs.push(build_spec(
            &format!("biped{i:02}"),
            Family::BipedLike,
            &BIPED_BASE,
            &[left, right],
            &mut rng,
        ));
    }

    let hex_limbs: Vec<Vec<f64>> = vec![vec![1.0 / 3.0]; 6];
    specs.push(build_spec("hex00", Family::HexapodLike, &HEX_BASE, &hex_limbs, &mut rng));

    specs.sort_by(|a, b| a.id.cmp(&b.id));
    specs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_deterministic() {
        assert_eq!(make_suite(7), make_suite(7));
        assert_ne!(make_suite(7), make_suite(8));
    }

    #[test]
    fn suite_composition_counts() {
        let suite = make_suite(0);
        assert_eq!(suite.len(), 16);
        let count = |f: Family| suite.iter().filter(|s| s.family == f).count();
        assert_eq!(count(Family::QuadrupedLike), 9);
        assert_eq!(count(Family::BipedLike), 6);
        assert_eq!(count(Family::HexapodLike), 1);
    }

    #[test]
    fn ids_sorted_and_stable() {
        let suite = make_suite(3);
        let ids: Vec<&str> = suite.iter().map(|s| s.id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn family_conventions_hold() {
        for spec in make_suite(11) {
            match spec.family {
                Family::QuadrupedLike => {
                    assert!(spec.n_joints == 4 || spec.n_joints == 8);
                    assert_eq!(spec.n_feet, 4);
                }
                Family::BipedLike => {
                    assert!([2, 4, 6].contains(&spec.n_joints));
                    assert_eq!(spec.n_feet, 2);
                }
                Family::HexapodLike => {
                    assert_eq!(spec.n_joints, 6);
                    assert_eq!(spec.n_feet, 6);
                }
            }
            assert!(spec.coupling_norm_sq() > 0.0);
        }
    }

    #[test]
    fn descriptors_have_expected_entries() {
        let suite = make_suite(5);
        let spec = &suite[0];
        let d = spec.descriptor_joint(0);
        assert_eq!(d[0], spec.coupling[0]);
        assert!((d[1] - 1.0 / spec.n_joints as f64).abs() < 1e-15);
        let df = spec.descriptor_foot(spec.n_feet - 1);
        assert_eq!(df[1], 1.0);
    }
}
