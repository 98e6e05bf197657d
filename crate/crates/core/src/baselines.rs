//! Comparison methods: a single-prompt backend query, position extraction
//! followed by a fixed scoring snippet, and the mutual-distance extractor.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Catalog;
use crate::covr::{
    build_l2r_prompt, build_naive_prompt, call_with_retries, parse_prd_response, BackendRequest,
    CovrError, ImageBytes, InferenceResult, MllmBackend, RetryPolicy, TranscriptEntry,
};
use crate::scene::{normalize_words, PreferenceFamily, PreferenceLabel, Point, Scene, Task};
use crate::scenegen::{group_ids, in_quadrant, population_std};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpeConfig {
    pub weights: BTreeMap<PreferenceLabel, f64>,
    pub tau_align: f64,
    pub delta: f64,
}

impl Default for MdpeConfig {
    fn default() -> Self {
        Self {
            weights: PreferenceLabel::ALL.into_iter().map(|l| (l, 1.0)).collect(),
            tau_align: 0.08,
            delta: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("invalid MDPE configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed position response: {0}")]
    MalformedResponse(String),
    #[error("no listed object matches the catalog")]
    EmptyScene,
    #[error(transparent)]
    Backend(#[from] CovrError),
}

impl MdpeConfig {
    pub fn with_tau_align(mut self, tau: f64) -> Self {
        self.tau_align = tau;
        self
    }

    pub fn weight(&self, label: PreferenceLabel) -> f64 {
        self.weights.get(&label).copied().unwrap_or(1.0)
    }

    pub fn check(&self) -> Result<(), BaselineError> {
        if !(self.tau_align > 0.0) {
            return Err(BaselineError::InvalidConfig("tau_align must be positive".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(BaselineError::InvalidConfig("delta must be nonnegative".into()));
        }
        if self.weights.values().any(|w| !(*w >= 0.0)) {
            return Err(BaselineError::InvalidConfig("weights must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Score in [0, 1] for each of the nine preferences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub BTreeMap<PreferenceLabel, f64>);

impl FeatureVector {
    pub fn get(&self, label: PreferenceLabel) -> f64 {
        self.0.get(&label).copied().unwrap_or(0.0)
    }
}

fn grouping_feature(scene: &Scene, label: PreferenceLabel) -> f64 {
    let groups = group_ids(scene, label);
    if groups.iter().all(|g| g.len() < 2) {
        return 0.0;
    }
    let group_of = |id| groups.iter().position(|g| g.contains(&id));
    let (mut intra, mut n_intra, mut all, mut n_all) = (0.0, 0usize, 0.0, 0usize);
    for (i, a) in scene.objects.iter().enumerate() {
        for b in &scene.objects[i + 1..] {
            let d = a.position.distance(b.position);
            all += d;
            n_all += 1;
            if group_of(a.id) == group_of(b.id) {
                intra += d;
                n_intra += 1;
            }
        }
    }
    let mean_all = all / n_all as f64;
    if mean_all == 0.0 {
        return 0.0;
    }
    (1.0 - (intra / n_intra as f64) / mean_all).clamp(0.0, 1.0)
}

/// Mutual-distance features of a final scene. Scenes with fewer than two
/// objects score zero everywhere.
pub fn mdpe_features(scene: &Scene, config: &MdpeConfig) -> FeatureVector {
    let mut out = BTreeMap::new();
    if scene.objects.len() < 2 {
        return FeatureVector(PreferenceLabel::ALL.into_iter().map(|l| (l, 0.0)).collect());
    }
    let n = scene.objects.len() as f64;
    let xs = scene.objects.iter().map(|o| o.position.x);
    let ys = scene.objects.iter().map(|o| o.position.y);
    for label in PreferenceLabel::ALL {
        let f = match label.family() {
            PreferenceFamily::Color | PreferenceFamily::Shape | PreferenceFamily::Category => {
                grouping_feature(scene, label)
            }
            PreferenceFamily::Horizontal => (1.0 - population_std(ys.clone()) / config.tau_align).max(0.0),
            PreferenceFamily::Vertical => (1.0 - population_std(xs.clone()) / config.tau_align).max(0.0),
            PreferenceFamily::Quadrant => {
                let q = label.quadrant().expect("quadrant family");
                let inside = scene.objects.iter().filter(|o| in_quadrant(o.position, q)).count();
                (2.0 * inside as f64 / n - 1.0).clamp(0.0, 1.0)
            }
        };
        out.insert(label, f);
    }
    FeatureVector(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "labels", rename_all = "snake_case")]
pub enum MdpeOutcome {
    Unique(PreferenceLabel),
    Ambiguous(Vec<PreferenceLabel>),
}

impl MdpeOutcome {
    pub fn unique(&self) -> Option<PreferenceLabel> {
        match self {
            MdpeOutcome::Unique(l) => Some(*l),
            MdpeOutcome::Ambiguous(_) => None,
        }
    }
}

/// Weighted, max-normalized scores, best first; ties keep label order.
pub fn mdpe_scores(features: &FeatureVector, config: &MdpeConfig) -> Vec<(PreferenceLabel, f64)> {
    let raw: Vec<(PreferenceLabel, f64)> = PreferenceLabel::ALL
        .into_iter()
        .map(|l| (l, config.weight(l) * features.get(l)))
        .collect();
    let max = raw.iter().map(|(_, s)| *s).fold(0.0, f64::max);
    let mut scores: Vec<(PreferenceLabel, f64)> = raw
        .into_iter()
        .map(|(l, s)| (l, if max > 0.0 { s / max } else { s }))
        .collect();
    scores.sort_by(|a, b| b.1.total_cmp(&a.1));
    scores
}

/// Unique argmax when it leads the runner-up by more than `delta` after
/// normalization, else every label within `delta` of the top.
pub fn mdpe_infer(features: &FeatureVector, config: &MdpeConfig) -> MdpeOutcome {
    let scores = mdpe_scores(features, config);
    let top = scores[0].1;
    if top - scores[1].1 > config.delta {
        return MdpeOutcome::Unique(scores[0].0);
    }
    let mut near: Vec<PreferenceLabel> = scores
        .iter()
        .filter(|(_, s)| top - s <= config.delta)
        .map(|(l, _)| *l)
        .collect();
    near.sort();
    MdpeOutcome::Ambiguous(near)
}

/// MDPE on a final scene, packaged like the backend-driven methods.
pub fn infer_preference_mdpe(scene: &Scene, config: &MdpeConfig) -> InferenceResult {
    let features = mdpe_features(scene, config);
    InferenceResult {
        residuals: Vec::new(),
        preference: mdpe_infer(&features, config).unique(),
        ranked: mdpe_scores(&features, config),
        transcript: Vec::new(),
    }
}

/// One request over the whole sequence with the preference set.
pub fn infer_preference_naive(
    images: &[ImageBytes],
    backend: &dyn MllmBackend,
    policy: RetryPolicy,
) -> Result<InferenceResult, CovrError> {
    if images.len() < 2 {
        return Err(CovrError::TooFewImages {
            needed: 2,
            got: images.len(),
        });
    }
    let mut transcript = Vec::new();
    let request = BackendRequest::new(build_naive_prompt(images));
    let resp = call_with_retries(backend, &request, policy, &mut transcript)?;
    let preference = parse_prd_response(&resp.text).ok();
    Ok(InferenceResult {
        residuals: Vec::new(),
        preference,
        ranked: preference.map(|p| (p, 1.0)).into_iter().collect(),
        transcript,
    })
}

/// Pulls two numbers out of text like "(0.25, 0.7)".
fn coordinate_pair(text: &str) -> Option<(f64, f64)> {
    let nums: Vec<f64> = text
        .split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E'))
        .filter(|t| t.chars().any(|c| c.is_ascii_digit()))
        .filter_map(|t| t.parse().ok())
        .collect();
    match nums.as_slice() {
        [x, y, ..] => Some((*x, *y)),
        _ => None,
    }
}

/// Parses "name: (x, y)" lines, clamping coordinates into the unit square.
/// Names are lowercased with punctuation collapsed.
pub fn parse_positions(text: &str) -> Result<BTreeMap<String, Point>, BaselineError> {
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let Some((name, rest)) = line.split_once(':') else { continue };
        let name = normalize_words(name);
        if name.is_empty() {
            continue;
        }
        if let Some((x, y)) = coordinate_pair(rest) {
            out.entry(name).or_insert(Point::new(x, y).clamped());
        }
    }
    if out.is_empty() {
        return Err(BaselineError::MalformedResponse(text.chars().take(200).collect()));
    }
    Ok(out)
}

/// Object positions read off the final image by the backend.
pub fn l2r_extract_positions(
    images: &[ImageBytes],
    task: Task,
    backend: &dyn MllmBackend,
    policy: RetryPolicy,
    transcript: &mut Vec<TranscriptEntry>,
) -> Result<BTreeMap<String, Point>, BaselineError> {
    let last = images.last().ok_or(CovrError::TooFewImages { needed: 1, got: 0 })?;
    let request = BackendRequest::new(build_l2r_prompt(last, task));
    let resp = call_with_retries(backend, &request, policy, transcript)?;
    parse_positions(&resp.text)
}

/// Scene rebuilt from extracted positions; names outside the catalog are
/// dropped.
pub fn scene_from_positions(
    task: Task,
    positions: &BTreeMap<String, Point>,
) -> Result<Scene, BaselineError> {
    let catalog = Catalog::for_task(task);
    let mut objects: Vec<_> = positions
        .iter()
        .filter_map(|(name, p)| {
            let entry = catalog.entry(name)?;
            let id = catalog.id_of(name)?;
            Some(entry.instantiate(id, *p))
        })
        .collect();
    if objects.is_empty() {
        return Err(BaselineError::EmptyScene);
    }
    objects.sort_by_key(|o| o.id);
    Ok(Scene { task, objects })
}

/// Position extraction followed by the MDPE scoring snippet.
pub fn infer_preference_l2r(
    images: &[ImageBytes],
    task: Task,
    backend: &dyn MllmBackend,
    config: &MdpeConfig,
    policy: RetryPolicy,
) -> Result<InferenceResult, BaselineError> {
    let mut transcript = Vec::new();
    let positions = l2r_extract_positions(images, task, backend, policy, &mut transcript)?;
    let scene = scene_from_positions(task, &positions)?;
    let mut result = infer_preference_mdpe(&scene, config);
    result.transcript = transcript;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;
    use crate::covr::{episode_images, GroundTruthOracle};
    use crate::render::RenderOptions;
    use crate::scenegen::{generate_episode, GenerationConfig};

    fn scene_at(task: Task, pts: &[(f64, f64)]) -> Scene {
        let cat = Catalog::for_task(task);
        let objects = cat
            .entries
            .iter()
            .zip(pts)
            .enumerate()
            .map(|(i, (e, &(x, y)))| e.instantiate(i as u32, Point::new(x, y)))
            .collect();
        Scene { task, objects }
    }

    fn features(pairs: &[(PreferenceLabel, f64)]) -> FeatureVector {
        let mut m: BTreeMap<_, _> = PreferenceLabel::ALL.into_iter().map(|l| (l, 0.0)).collect();
        m.extend(pairs.iter().copied());
        FeatureVector(m)
    }

    #[test]
    fn horizontal_line_scores_one() {
        let s = scene_at(Task::Block, &[(0.1, 0.5), (0.3, 0.5), (0.5, 0.5), (0.6, 0.5), (0.7, 0.5), (0.9, 0.5)]);
        let f = mdpe_features(&s, &MdpeConfig::default());
        assert_eq!(f.get(PreferenceLabel::AlignHorizontal), 1.0);
        assert_eq!(f.get(PreferenceLabel::AlignVertical), 0.0);
    }

    #[test]
    fn grouping_example_matches_pairwise_script() {
        // polygon ids 0..2 are red/green/blue triangles, 3..5 the stars
        let cat = Catalog::for_task(Task::Polygon);
        let pick = |name: &str, x, y| {
            let id = cat.id_of(name).unwrap();
            cat.entry(name).unwrap().instantiate(id, Point::new(x, y))
        };
        let s = Scene {
            task: Task::Polygon,
            objects: vec![
                pick("red triangle", 0.2, 0.2),
                pick("red star", 0.25, 0.2),
                pick("blue triangle", 0.8, 0.8),
                pick("blue star", 0.85, 0.8),
            ],
        };
        let pts = [(0.2, 0.2), (0.25, 0.2), (0.8, 0.8), (0.85, 0.8)];
        let mut all = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                let (a, b): ((f64, f64), (f64, f64)) = (pts[i], pts[j]);
                all.push(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt());
            }
        }
        let mean_all = all.iter().sum::<f64>() / 6.0;
        assert!((mean_all - 0.5826).abs() < 1e-4);
        let f = mdpe_features(&s, &MdpeConfig::default()).get(PreferenceLabel::GroupByColor);
        assert!((f - (1.0 - 0.05 / mean_all)).abs() < 1e-12);
        assert!((f - 0.914).abs() < 1e-3);
    }

    #[test]
    fn all_in_first_quadrant() {
        let s = scene_at(Task::Block, &[(0.6, 0.6), (0.7, 0.6), (0.8, 0.6), (0.6, 0.8), (0.7, 0.8), (0.8, 0.8)]);
        let f = mdpe_features(&s, &MdpeConfig::default());
        assert_eq!(f.get(PreferenceLabel::ClusterQuadrant1), 1.0);
        for l in [PreferenceLabel::ClusterQuadrant2, PreferenceLabel::ClusterQuadrant3, PreferenceLabel::ClusterQuadrant4] {
            assert_eq!(f.get(l), 0.0);
        }
    }

    #[test]
    fn margin_rule() {
        let cfg = MdpeConfig::default();
        let clear = features(&[(PreferenceLabel::GroupByColor, 0.9), (PreferenceLabel::AlignVertical, 0.3)]);
        assert_eq!(mdpe_infer(&clear, &cfg), MdpeOutcome::Unique(PreferenceLabel::GroupByColor));
        let close = features(&[(PreferenceLabel::GroupByColor, 0.80), (PreferenceLabel::GroupByShape, 0.78)]);
        assert_eq!(
            mdpe_infer(&close, &cfg),
            MdpeOutcome::Ambiguous(vec![PreferenceLabel::GroupByColor, PreferenceLabel::GroupByShape])
        );
        assert_eq!(
            mdpe_infer(&features(&[]), &cfg),
            MdpeOutcome::Ambiguous(PreferenceLabel::ALL.to_vec())
        );
    }

    #[test]
    fn config_validation() {
        assert!(MdpeConfig::default().check().is_ok());
        assert!(MdpeConfig::default().with_tau_align(0.0).check().is_err());
        let mut c = MdpeConfig::default();
        c.delta = -0.1;
        assert!(c.check().is_err());
    }

    #[test]
    fn position_parsing() {
        let p = parse_positions("- Apple: (1.4, 0.5)\nnoise line\norange drink: (0.2,-3)").unwrap();
        assert_eq!(p["apple"], Point::new(1.0, 0.5));
        assert_eq!(p["orange drink"], Point::new(0.2, 0.0));
        assert!(matches!(parse_positions("nothing here"), Err(BaselineError::MalformedResponse(_))));
    }

    #[test]
    fn unresolvable_names_give_empty_scene() {
        let mut m = BTreeMap::new();
        m.insert("teapot".to_string(), Point::new(0.5, 0.5));
        assert_eq!(scene_from_positions(Task::Household, &m), Err(BaselineError::EmptyScene));
    }

    #[test]
    fn l2r_oracle_positions() {
        let ep = generate_episode(&GenerationConfig::new(Task::Polygon, PreferenceLabel::GroupByShape, 6)).unwrap();
        let images = episode_images(&ep, &RenderOptions::default()).unwrap();
        let exact = GroundTruthOracle::new(ep.clone(), 0.0, 1);
        let mut t = Vec::new();
        let pos = l2r_extract_positions(&images, Task::Polygon, &exact, RetryPolicy::default(), &mut t).unwrap();
        for o in &ep.final_scene().objects {
            assert_eq!(pos[&o.name], o.position);
        }
        let res = infer_preference_l2r(&images, Task::Polygon, &exact, &MdpeConfig::default(), RetryPolicy::default()).unwrap();
        assert_eq!(res.preference, Some(PreferenceLabel::GroupByShape));
        assert_eq!(res.transcript.len(), 1);

        let noisy = GroundTruthOracle::new(ep.clone(), 0.4, 1);
        let pos = l2r_extract_positions(&images, Task::Polygon, &noisy, RetryPolicy::default(), &mut t).unwrap();
        for o in &ep.final_scene().objects {
            let p = pos[&o.name];
            assert!((p.x - o.position.x).abs() <= 0.1 + 1e-12);
            assert!((p.y - o.position.y).abs() <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn naive_single_call() {
        let ep = generate_episode(&GenerationConfig::new(Task::Block, PreferenceLabel::AlignVertical, 3)).unwrap();
        let images = episode_images(&ep, &RenderOptions::default()).unwrap();
        let oracle = GroundTruthOracle::new(ep.clone(), 0.0, 1);
        let res = infer_preference_naive(&images, &oracle, RetryPolicy::default()).unwrap();
        assert_eq!(res.transcript.len(), 1);
        assert!(res.residuals.is_empty());
        assert_eq!(res.preference, Some(ep.label));
    }
}
