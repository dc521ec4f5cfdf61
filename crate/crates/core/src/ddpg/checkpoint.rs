use std::fmt::Write as _;
use std::path::Path;

use super::{DdpgError, Policy, TrainerConfig};
use crate::neural::Mlp;

pub const ACTOR_FILE: &str = "actor.mlpv1";
pub const CRITIC_FILE: &str = "critic.mlpv1";
pub const META_FILE: &str = "checkpoint.meta";

/// Sidecar metadata stored next to the weight files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub steps: usize,
    pub seed: u64,
    pub config_hash: String,
    pub profile: String,
}

impl CheckpointMeta {
    pub fn for_config(cfg: &TrainerConfig, steps: usize) -> Self {
        Self { steps, seed: cfg.seed, config_hash: cfg.hash(), profile: cfg.profile.name().to_string() }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "steps={}", self.steps);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "config_hash={}", self.config_hash);
        let _ = writeln!(s, "profile={}", self.profile);
        s
    }

    pub fn from_text(text: &str) -> Result<Self, DdpgError> {
        let mut steps = None;
        let mut seed = None;
        let mut config_hash = None;
        let mut profile = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) =
                line.split_once('=').ok_or_else(|| DdpgError::Checkpoint(format!("malformed line `{line}`")))?;
            let bad = || DdpgError::Checkpoint(format!("bad value for `{key}`"));
            match key.trim() {
                "steps" => steps = Some(value.trim().parse().map_err(|_| bad())?),
                "seed" => seed = Some(value.trim().parse().map_err(|_| bad())?),
                "config_hash" => config_hash = Some(value.trim().to_string()),
                "profile" => profile = Some(value.trim().to_string()),
                // Unknown keys are tolerated for forward compatibility.
                _ => {}
            }
        }
        let missing = |k: &str| DdpgError::Checkpoint(format!("missing `{k}`"));
        Ok(Self {
            steps: steps.ok_or_else(|| missing("steps"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            config_hash: config_hash.ok_or_else(|| missing("config_hash"))?,
            profile: profile.ok_or_else(|| missing("profile"))?,
        })
    }
}

/// Actor and critic weights plus metadata, stored as a directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub policy: Policy,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), DdpgError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(ACTOR_FILE), self.policy.actor.to_text())?;
        std::fs::write(dir.join(CRITIC_FILE), self.policy.critic.to_text())?;
        std::fs::write(dir.join(META_FILE), self.meta.to_text())?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, DdpgError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name))
                .map_err(|e| DdpgError::Checkpoint(format!("cannot read {}: {e}", dir.join(name).display())))
        };
        Self::from_texts(&read(ACTOR_FILE)?, &read(CRITIC_FILE)?, &read(META_FILE)?)
    }

    pub fn from_texts(actor: &str, critic: &str, meta: &str) -> Result<Self, DdpgError> {
        let policy = Policy::new(Mlp::from_text(actor)?, Mlp::from_text(critic)?);
        policy.check_dims()?;
        Ok(Self { policy, meta: CheckpointMeta::from_text(meta)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddpg::NetworkProfile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = TrainerConfig::tiny();
        let ckpt = Checkpoint {
            policy: Policy::init(NetworkProfile::Tiny, &mut ChaCha8Rng::seed_from_u64(3)),
            meta: CheckpointMeta::for_config(&cfg, 123),
        };
        ckpt.save(dir.path()).unwrap();
        assert_eq!(Checkpoint::load(dir.path()).unwrap(), ckpt);
        let meta = std::fs::read_to_string(dir.path().join(META_FILE)).unwrap();
        assert!(meta.contains("steps=123\n"));
        assert!(meta.contains(&format!("config_hash={}\n", cfg.hash())));
    }

    #[test]
    fn missing_directory_is_an_error() {
        assert!(matches!(Checkpoint::load("/nonexistent/checkpoint"), Err(DdpgError::Checkpoint(_))));
    }

    #[test]
    fn wrong_width_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let small = Mlp::init(&[3, 2], crate::neural::Activation::Relu, crate::neural::Activation::Tanh, 0.1, &mut rng);
        let meta = CheckpointMeta::for_config(&TrainerConfig::tiny(), 0).to_text();
        assert!(Checkpoint::from_texts(&small.to_text(), &small.to_text(), &meta).is_err());
    }
}
