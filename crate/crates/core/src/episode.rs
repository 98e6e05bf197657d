//! Labeled demonstration episodes and their `episode/v1` JSON form.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::residual::{detect_moved_object, ground_truth_residual, residual_chain, VisualResidual};
use crate::scene::{apply_move, validate_scene, Move, PreferenceLabel, Scene, Task};
use crate::scenegen::{satisfies_preference, GOAL_TOLERANCE};

pub const EPISODE_SCHEMA: &str = "episode/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub schema: String,
    pub task: Task,
    pub label: PreferenceLabel,
    pub seed: u64,
    pub scenes: Vec<Scene>,
    pub moves: Vec<Move>,
    pub ground_truth_residuals: Vec<VisualResidual>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_paths: Option<Vec<PathBuf>>,
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("unsupported episode schema {0:?} (expected {EPISODE_SCHEMA})")]
    Schema(String),
    #[error("malformed episode JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("episode integrity: {0}")]
    Integrity(String),
}

impl EpisodeRecord {
    pub fn new(
        task: Task,
        label: PreferenceLabel,
        seed: u64,
        scenes: Vec<Scene>,
        moves: Vec<Move>,
        ground_truth_residuals: Vec<VisualResidual>,
    ) -> Self {
        Self {
            schema: EPISODE_SCHEMA.to_string(),
            task,
            label,
            seed,
            scenes,
            moves,
            ground_truth_residuals,
            image_paths: None,
        }
    }

    /// Builds a record from a scene history, deriving moves and residuals.
    pub fn from_scenes(
        scenes: Vec<Scene>,
        label: PreferenceLabel,
        seed: u64,
    ) -> Result<Self, EpisodeError> {
        let task = scenes
            .first()
            .map(|s| s.task)
            .ok_or_else(|| EpisodeError::Integrity("no scenes".into()))?;
        let residuals =
            residual_chain(&scenes).map_err(|e| EpisodeError::Integrity(e.to_string()))?;
        let moves = scenes
            .windows(2)
            .map(|w| {
                let id = detect_moved_object(&w[0], &w[1])
                    .map_err(|e| EpisodeError::Integrity(e.to_string()))?;
                let to = w[1].position(id).expect("detected id exists");
                Ok(Move::new(id, to))
            })
            .collect::<Result<Vec<_>, EpisodeError>>()?;
        Ok(Self::new(task, label, seed, scenes, moves, residuals))
    }

    pub fn image_count(&self) -> usize {
        self.scenes.len()
    }

    pub fn final_scene(&self) -> &Scene {
        self.scenes.last().expect("episodes hold at least one scene")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("episode serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EpisodeError> {
        let record: EpisodeRecord = serde_json::from_str(text)?;
        if record.schema != EPISODE_SCHEMA {
            return Err(EpisodeError::Schema(record.schema));
        }
        Ok(record)
    }

    /// Every broken invariant: lengths, replay, per-scene validity, residual
    /// agreement and the label predicate on the final scene.
    pub fn integrity_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.scenes.len() < 2 {
            out.push(format!("expected at least 2 scenes, found {}", self.scenes.len()));
            return out;
        }
        if self.moves.len() != self.scenes.len() - 1 {
            out.push(format!(
                "{} scenes but {} moves",
                self.scenes.len(),
                self.moves.len()
            ));
        }
        if self.ground_truth_residuals.len() != self.scenes.len() - 1 {
            out.push(format!(
                "{} scenes but {} residuals",
                self.scenes.len(),
                self.ground_truth_residuals.len()
            ));
        }
        for (k, scene) in self.scenes.iter().enumerate() {
            let report = validate_scene(scene);
            if !report.is_ok() {
                out.push(format!("scene {k}: {report}"));
            }
            if scene.task != self.task {
                out.push(format!("scene {k}: task {} differs from {}", scene.task, self.task));
            }
        }
        for (k, mv) in self.moves.iter().enumerate() {
            let Some(next) = self.scenes.get(k + 1) else { break };
            match apply_move(&self.scenes[k], mv) {
                Ok(replayed) if &replayed == next => {}
                Ok(_) => out.push(format!("move {k} does not reproduce scene {}", k + 1)),
                Err(e) => out.push(format!("move {k}: {e}")),
            }
            if let Some(truth) = self.ground_truth_residuals.get(k) {
                match ground_truth_residual(&self.scenes[k], next) {
                    Ok(r) if &r == truth => {}
                    Ok(_) => out.push(format!("residual {k} disagrees with the scene pair")),
                    Err(e) => out.push(format!("residual {k}: {e}")),
                }
            }
        }
        if !satisfies_preference(self.final_scene(), self.label, GOAL_TOLERANCE) {
            out.push(format!("final scene does not satisfy {}", self.label));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenegen::{generate_episode, GenerationConfig};

    #[test]
    fn json_round_trip_keeps_schema() {
        let ep = generate_episode(&GenerationConfig::new(
            Task::Polygon,
            PreferenceLabel::GroupByShape,
            4,
        ))
        .unwrap();
        let text = ep.to_json();
        assert!(text.contains("\"schema\": \"episode/v1\""));
        assert_eq!(EpisodeRecord::from_json(&text).unwrap(), ep);
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let ep = generate_episode(&GenerationConfig::new(Task::Block, PreferenceLabel::AlignVertical, 4))
            .unwrap();
        let text = ep.to_json().replace("episode/v1", "episode/v0");
        assert!(matches!(EpisodeRecord::from_json(&text), Err(EpisodeError::Schema(_))));
    }

    #[test]
    fn tampered_episode_reports_violations() {
        let mut ep = generate_episode(&GenerationConfig::new(
            Task::Block,
            PreferenceLabel::ClusterQuadrant2,
            4,
        ))
        .unwrap();
        assert!(ep.integrity_violations().is_empty());
        ep.moves[0].target_position.x += 0.001;
        ep.ground_truth_residuals.pop();
        let v = ep.integrity_violations();
        assert!(v.iter().any(|m| m.contains("does not reproduce")));
        assert!(v.iter().any(|m| m.contains("residuals")));
    }

    #[test]
    fn from_scenes_recovers_moves() {
        let ep = generate_episode(&GenerationConfig::new(
            Task::Household,
            PreferenceLabel::AlignHorizontal,
            8,
        ))
        .unwrap();
        let rebuilt = EpisodeRecord::from_scenes(ep.scenes.clone(), ep.label, ep.seed).unwrap();
        assert_eq!(rebuilt, ep);
    }
}
