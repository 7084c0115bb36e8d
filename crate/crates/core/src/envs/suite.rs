use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::rollout::rollout_scripted;
use super::spec::{make_suite, EmbodimentSpec};
use crate::rng::substream;
use crate::Result;

/// Serialized suite description: the generating seed, every spec, and the
/// expert reference return per embodiment and command direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub seed: u64,
    pub specs: Vec<EmbodimentSpec>,
    /// id -> (forward, backward) mean expert return over randomized starts
    pub expert_refs: BTreeMap<String, (f64, f64)>,
}

const EXPERT_EPISODES: usize = 5;

impl SuiteManifest {
    /// Generates the suite and measures noiseless expert references.
    pub fn generate(seed: u64) -> Result<Self> {
        let specs = make_suite(seed);
        let mut expert_refs = BTreeMap::new();
        for spec in &specs {
            let mut scores = [0.0f64; 2];
            for (k, c) in [1.0f64, -1.0].into_iter().enumerate() {
                let mut total = 0.0;
                for ep in 0..EXPERT_EPISODES {
                    let mut rng = substream(seed, &format!("expert-ref:{}:{k}", spec.id), ep as u64, 0);
                    total += rollout_scripted(spec, c, 1.0, 0.0, &mut rng)?.ret();
                }
                scores[k] = total / EXPERT_EPISODES as f64;
            }
            expert_refs.insert(spec.id.clone(), (scores[0], scores[1]));
        }
        Ok(SuiteManifest { seed, specs, expert_refs })
    }

    pub fn spec(&self, id: &str) -> Option<&EmbodimentSpec> {
        self.specs.iter().find(|s| s.id == id)
    }

    pub fn expert_ref(&self, id: &str, command: f64) -> Option<f64> {
        self.expert_refs.get(id).map(|(f, b)| if command >= 0.0 { *f } else { *b })
    }
}

pub fn save_suite_manifest(manifest: &SuiteManifest, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_vec_pretty(manifest)?)?;
    Ok(())
}

pub fn load_suite_manifest(path: &Path) -> Result<SuiteManifest> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_and_refs_positive() {
        let manifest = SuiteManifest::generate(0).unwrap();
        assert_eq!(manifest.specs.len(), 16);
        for (id, (fwd, bwd)) in &manifest.expert_refs {
            assert!(*fwd > 0.0, "{id} forward ref not positive");
            assert!(*bwd > 0.0, "{id} backward ref not positive");
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("suite.json");
        save_suite_manifest(&manifest, &path).unwrap();
        let loaded = load_suite_manifest(&path).unwrap();
        assert_eq!(loaded.seed, manifest.seed);
        assert_eq!(loaded.specs, manifest.specs);
        assert_eq!(loaded.expert_refs, manifest.expert_refs);
    }
}
