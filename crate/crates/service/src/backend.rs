//! Backend selection strings (`oracle:p=0.1,seed=3`, `http`) and inference
//! over a bare scene history.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vpi_core::baselines::{infer_preference_mdpe, MdpeConfig};
use vpi_core::covr::{
    BackendError, CachingBackend, GroundTruthOracle, HttpBackend, HttpConfig, InferenceResult, MllmBackend,
};
use vpi_core::episode::{EpisodeError, EpisodeRecord};
use vpi_core::method::{run_method, Method, MethodConfig, MethodError};
use vpi_core::scene::{PreferenceLabel, Scene, Task};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum BackendChoice {
    /// Ground-truth oracle. Without `label`, a session oracle answers for the
    /// MDPE argmax of the head scene.
    Oracle {
        noise: f64,
        seed: u64,
        label: Option<PreferenceLabel>,
    },
    /// Chat-completions endpoint configured through the environment.
    Http {
        model: Option<String>,
        cache_dir: Option<PathBuf>,
    },
}

impl Default for BackendChoice {
    fn default() -> Self {
        BackendChoice::Oracle {
            noise: 0.0,
            seed: 0,
            label: None,
        }
    }
}

impl fmt::Display for BackendChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendChoice::Oracle { noise, seed, label } => {
                write!(f, "oracle:p={noise},seed={seed}")?;
                if let Some(l) = label {
                    write!(f, ",label={}", l.as_str())?;
                }
                Ok(())
            }
            BackendChoice::Http { model, cache_dir } => {
                let mut opts = Vec::new();
                if let Some(m) = model {
                    opts.push(format!("model={m}"));
                }
                if let Some(d) = cache_dir {
                    opts.push(format!("cache={}", d.display()));
                }
                if opts.is_empty() {
                    f.write_str("http")
                } else {
                    write!(f, "http:{}", opts.join(","))
                }
            }
        }
    }
}

impl FromStr for BackendChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let options = rest
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                p.split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| format!("expected key=value, got {p:?}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        match kind {
            "oracle" => {
                let mut out = BackendChoice::default();
                let BackendChoice::Oracle { noise, seed, label } = &mut out else {
                    unreachable!()
                };
                for (k, v) in options {
                    match k {
                        "p" | "noise" => {
                            *noise = v.parse().map_err(|_| format!("bad noise {v:?}"))?;
                            if !(0.0..=1.0).contains(noise) {
                                return Err(format!("noise {v} outside [0, 1]"));
                            }
                        }
                        "seed" => *seed = v.parse().map_err(|_| format!("bad seed {v:?}"))?,
                        "label" => *label = Some(v.parse().map_err(|e| format!("{e}"))?),
                        _ => return Err(format!("unknown oracle option {k:?}")),
                    }
                }
                Ok(out)
            }
            "http" => {
                let (mut model, mut cache_dir) = (None, None);
                for (k, v) in options {
                    match k {
                        "model" => model = Some(v.to_string()),
                        "cache" => cache_dir = Some(PathBuf::from(v)),
                        _ => return Err(format!("unknown http option {k:?}")),
                    }
                }
                Ok(BackendChoice::Http { model, cache_dir })
            }
            _ => Err(format!("unknown backend {kind:?} (expected oracle[:p=..,seed=..] or http)")),
        }
    }
}

impl From<BackendChoice> for String {
    fn from(b: BackendChoice) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for BackendChoice {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Error)]
pub enum InferError {
    #[error(transparent)]
    Method(#[from] MethodError),
    #[error("backend setup: {0}")]
    Setup(#[from] BackendError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
}

impl BackendChoice {
    pub fn build_http(&self) -> Result<Option<Box<dyn MllmBackend>>, InferError> {
        let BackendChoice::Http { model, cache_dir } = self else {
            return Ok(None);
        };
        let mut config = HttpConfig::from_env()?;
        if let Some(m) = model {
            config.model = m.clone();
        }
        let http = HttpBackend::new(config)?;
        Ok(Some(match cache_dir {
            Some(dir) => Box::new(CachingBackend::persistent(http, dir)?),
            None => Box::new(http),
        }))
    }
}

/// Runs `method` over an existing labeled episode. An oracle backend answers
/// from the episode's own ground truth (a `label` option overrides it).
pub fn infer_episode(
    episode: &EpisodeRecord,
    method: Method,
    backend: &BackendChoice,
    config: &MethodConfig,
) -> Result<InferenceResult, InferError> {
    let oracle;
    let http = backend.build_http()?;
    let backend_ref: &dyn MllmBackend = match (backend, &http) {
        (BackendChoice::Oracle { noise, seed, label }, _) => {
            let mut ep = episode.clone();
            if let Some(l) = label {
                ep.label = *l;
            }
            oracle = GroundTruthOracle::new(ep, *noise, *seed);
            &oracle
        }
        (_, Some(b)) => b.as_ref(),
        (BackendChoice::Http { .. }, None) => unreachable!("build_http returns a backend for http"),
    };
    Ok(run_method(method, episode.task, &episode.scenes, Some(backend_ref), config)?)
}

/// Runs `method` over an unlabeled scene history, as a live session does.
pub fn infer_scenes(
    task: Task,
    scenes: &[Scene],
    method: Method,
    backend: &BackendChoice,
    config: &MethodConfig,
) -> Result<InferenceResult, InferError> {
    if method == Method::Mdpe {
        return Ok(run_method(method, task, scenes, None, config)?);
    }
    let label = match backend {
        BackendChoice::Oracle { label: Some(l), .. } => *l,
        _ => session_label(scenes, &config.mdpe),
    };
    let episode = EpisodeRecord::from_scenes(scenes.to_vec(), label, 0)?;
    infer_episode(&episode, method, backend, config)
}

/// Label a label-free oracle answers with: the top MDPE score on the head scene.
pub fn session_label(scenes: &[Scene], config: &MdpeConfig) -> PreferenceLabel {
    let head = scenes.last().expect("sessions hold a scene");
    let result = infer_preference_mdpe(head, config);
    result
        .preference
        .or_else(|| result.ranked.first().map(|(l, _)| *l))
        .unwrap_or(PreferenceLabel::GroupByColor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_strings_round_trip() {
        for s in ["oracle:p=0.3,seed=7", "oracle:p=0,seed=0,label=group_by_shape", "http", "http:model=m,cache=/tmp/c"] {
            let b: BackendChoice = s.parse().unwrap();
            assert_eq!(b.to_string(), s);
        }
        assert_eq!("oracle".parse::<BackendChoice>().unwrap(), BackendChoice::default());
        for bad in ["oracle:p=2", "oracle:q=1", "oracle:p", "grpc", "oracle:label=tidy"] {
            assert!(bad.parse::<BackendChoice>().is_err(), "{bad}");
        }
    }
}
