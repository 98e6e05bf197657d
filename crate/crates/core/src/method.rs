//! The four inference methods behind one entry point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{infer_preference_l2r, infer_preference_mdpe, infer_preference_naive, BaselineError, MdpeConfig};
use crate::covr::{infer_preference_covr, CovrError, ImageBytes, InferenceResult, MllmBackend, RetryPolicy};
use crate::render::{render_png, RenderError, RenderOptions};
use crate::scene::{Scene, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Covr,
    Naive,
    L2r,
    Mdpe,
}

impl Method {
    /// Report order.
    pub const ALL: [Method; 4] = [Method::Covr, Method::Naive, Method::L2r, Method::Mdpe];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Covr => "covr",
            Method::Naive => "naive",
            Method::L2r => "l2r",
            Method::Mdpe => "mdpe",
        }
    }

    /// Row name in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Method::Covr => "MLLM-CoVR",
            Method::Naive => "MLLM-Naive",
            Method::L2r => "MLLM-L2R",
            Method::Mdpe => "MDPE",
        }
    }

    pub fn uses_backend(self) -> bool {
        self != Method::Mdpe
    }

    /// Whether the method predicts residuals (and so has an SR_VRD).
    pub fn predicts_residuals(self) -> bool {
        self == Method::Covr
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown method {s:?} (expected covr, naive, l2r or mdpe)"))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MethodConfig {
    pub mdpe: MdpeConfig,
    pub retry: RetryPolicy,
    pub render: RenderOptions,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MethodError {
    #[error(transparent)]
    Covr(#[from] CovrError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("method {0} needs a backend")]
    NoBackend(Method),
    #[error("no scenes to infer from")]
    NoScenes,
}

fn render_all(scenes: &[Scene], options: &RenderOptions) -> Result<Vec<ImageBytes>, RenderError> {
    scenes.iter().map(|s| render_png(s, options).map(ImageBytes::from)).collect()
}

/// Runs `method` over a scene history. Images are rendered only for methods
/// that send them to the backend; MDPE reads the final scene directly.
pub fn run_method(
    method: Method,
    task: Task,
    scenes: &[Scene],
    backend: Option<&dyn MllmBackend>,
    config: &MethodConfig,
) -> Result<InferenceResult, MethodError> {
    let last = scenes.last().ok_or(MethodError::NoScenes)?;
    let needs = |m| backend.ok_or(MethodError::NoBackend(m));
    let result = match method {
        Method::Mdpe => {
            config.mdpe.check()?;
            infer_preference_mdpe(last, &config.mdpe)
        }
        Method::Covr => {
            let backend = needs(method)?;
            infer_preference_covr(&render_all(scenes, &config.render)?, task, backend, config.retry)?
        }
        Method::Naive => {
            let backend = needs(method)?;
            infer_preference_naive(&render_all(scenes, &config.render)?, backend, config.retry)?
        }
        Method::L2r => {
            let backend = needs(method)?;
            config.mdpe.check()?;
            let images = render_all(std::slice::from_ref(last), &config.render)?;
            infer_preference_l2r(&images, task, backend, &config.mdpe, config.retry)?
        }
    };
    Ok(result)
}
