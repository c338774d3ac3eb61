//! The experiments behind each subcommand.

pub mod asymptotics;
pub mod estimate;
pub mod simulate;
pub mod train;

use std::path::{Path, PathBuf};

use impatience_core::actor_critic::ActorCritic;
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::error::{AppError, AppResult};
use crate::spec::ExperimentSpec;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "IMPATIENCE_OUT_DIR";

/// Output directory: the flag, then the config file, then
/// `IMPATIENCE_OUT_DIR`, then `out`.
pub fn resolve_out_dir(flag: Option<&Path>, spec: &ExperimentSpec) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| spec.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

pub fn load_model(spec: &ExperimentSpec) -> AppResult<ActorCritic> {
    let path = spec
        .checkpoint
        .as_deref()
        .ok_or_else(|| AppError::Usage("the learned feed needs a trained checkpoint (--checkpoint)".into()))?;
    Ok(Checkpoint::load(path)?.model)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> AppResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    std::fs::write(path, text + "\n").map_err(|e| AppError::io(path, e))
}

/// Writes the resolved spec next to the outputs it produced.
pub fn write_spec(dir: &Path, spec: &ExperimentSpec) -> AppResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let path = dir.join("spec.toml");
    std::fs::write(&path, spec.to_toml()?).map_err(|e| AppError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_config() {
        let spec = ExperimentSpec {
            out_dir: Some("cfg".into()),
            ..ExperimentSpec::default()
        };
        assert_eq!(resolve_out_dir(Some(Path::new("flag")), &spec), PathBuf::from("flag"));
        assert_eq!(resolve_out_dir(None, &spec), PathBuf::from("cfg"));
    }
}
