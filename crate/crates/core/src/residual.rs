//! Ground-truth visual residuals computed from symbolic scene pairs.
//!
//! A residual answers three questions about one demonstration step: which
//! object moved (the source), which object it was placed relative to (the
//! target, the nearest neighbour at its final position), and in what
//! relation it now stands to that target.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{GeometricRelation, ObjectId, ObjectInstance, Point, Scene};

/// Displacement above which an object counts as moved.
pub const MOVE_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectAttributes {
    pub name: String,
    pub color: String,
    pub shape: String,
}

impl ObjectAttributes {
    pub fn new(name: impl Into<String>, color: impl Into<String>, shape: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            color: color.into(),
            shape: shape.into(),
        }
    }
}

impl From<&ObjectInstance> for ObjectAttributes {
    fn from(obj: &ObjectInstance) -> Self {
        ObjectAttributes::new(obj.name.clone(), obj.color.as_str(), obj.shape.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SemanticPair {
    pub source: ObjectAttributes,
    pub target: ObjectAttributes,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VisualResidual {
    pub semantic: SemanticPair,
    pub geometric: GeometricRelation,
    pub description: String,
}

impl VisualResidual {
    /// Builds a residual whose description is the canonical sentence.
    pub fn canonical(semantic: SemanticPair, geometric: GeometricRelation) -> Self {
        let description = canonical_description(&semantic, geometric);
        Self {
            semantic,
            geometric,
            description,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidualError {
    #[error("scenes do not share the same task and object ids")]
    MismatchedScenes,
    #[error("no object moved more than {MOVE_THRESHOLD}")]
    NoMove,
    #[error("more than one object moved: {0:?}")]
    MultipleMoves(Vec<ObjectId>),
    #[error("object {0} is not in the scene")]
    UnknownObject(ObjectId),
    #[error("scene needs at least two objects")]
    TooFewObjects,
    #[error("source and target positions coincide")]
    CoincidentPositions,
}

pub fn detect_moved_object(before: &Scene, after: &Scene) -> Result<ObjectId, ResidualError> {
    if before.task != after.task || before.objects.len() != after.objects.len() {
        return Err(ResidualError::MismatchedScenes);
    }
    let mut moved = Vec::new();
    for obj in &before.objects {
        let now = after
            .position(obj.id)
            .ok_or(ResidualError::MismatchedScenes)?;
        if obj.position.distance(now) > MOVE_THRESHOLD {
            moved.push(obj.id);
        }
    }
    match moved.as_slice() {
        [] => Err(ResidualError::NoMove),
        [id] => Ok(*id),
        _ => Err(ResidualError::MultipleMoves(moved)),
    }
}

/// Nearest other object to `source_id` in `after`; ties go to the smaller id.
pub fn select_target_object(after: &Scene, source_id: ObjectId) -> Result<ObjectId, ResidualError> {
    let source = after
        .position(source_id)
        .ok_or(ResidualError::UnknownObject(source_id))?;
    after
        .objects
        .iter()
        .filter(|o| o.id != source_id)
        .map(|o| (source.distance(o.position), o.id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
        .ok_or(ResidualError::TooFewObjects)
}

/// Axis magnitudes closer than this count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Dominant-axis classification of where `source` stands relative to
/// `target`. Equal axis magnitudes (within [`TIE_TOLERANCE`]) resolve to the
/// horizontal relation.
pub fn classify_relation(source: Point, target: Point) -> Result<GeometricRelation, ResidualError> {
    let dx = source.x - target.x;
    let dy = source.y - target.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(ResidualError::CoincidentPositions);
    }
    let rel = if dx.abs() >= dy.abs() - TIE_TOLERANCE {
        if dx > 0.0 {
            GeometricRelation::RightOf
        } else {
            GeometricRelation::LeftOf
        }
    } else if dy > 0.0 {
        GeometricRelation::BehindOf
    } else {
        GeometricRelation::InFrontOf
    };
    Ok(rel)
}

pub fn canonical_description(semantic: &SemanticPair, geometric: GeometricRelation) -> String {
    format!(
        "Move the {} {} the {}.",
        semantic.source.name,
        geometric.sentence_phrase(),
        semantic.target.name
    )
}

pub fn ground_truth_residual(before: &Scene, after: &Scene) -> Result<VisualResidual, ResidualError> {
    let source_id = detect_moved_object(before, after)?;
    let target_id = select_target_object(after, source_id)?;
    // both ids were just looked up in `after`
    let source = after.object(source_id).ok_or(ResidualError::UnknownObject(source_id))?;
    let target = after.object(target_id).ok_or(ResidualError::UnknownObject(target_id))?;
    let geometric = classify_relation(source.position, target.position)?;
    let semantic = SemanticPair {
        source: source.into(),
        target: target.into(),
    };
    Ok(VisualResidual::canonical(semantic, geometric))
}

/// Ground-truth residual for every consecutive pair of `scenes`.
pub fn residual_chain(scenes: &[Scene]) -> Result<Vec<VisualResidual>, ResidualError> {
    scenes
        .windows(2)
        .map(|w| ground_truth_residual(&w[0], &w[1]))
        .collect()
}
