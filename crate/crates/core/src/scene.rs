//! Domain vocabulary shared by every other module: positions, objects,
//! scenes, moves, geometric relations and the closed preference set.
//!
//! Coordinates live in the unit square of the table frame: `x` grows to the
//! right, `y` grows away from the viewer. All values here are plain data and
//! cheap to clone.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, Category, Color, Shape};

/// Minimum Euclidean distance between any two objects of a valid scene.
pub const MIN_SEPARATION: f64 = 0.02;

pub type ObjectId = u32;

/// A point on the table, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn in_unit_square(self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }

    pub fn clamped(self) -> Point {
        Point::new(self.x.clamp(0.0, 1.0), self.y.clamp(0.0, 1.0))
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point::new(x, y)
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Block,
    Polygon,
    Household,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Block, Task::Polygon, Task::Household];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Block => "block",
            Task::Polygon => "polygon",
            Task::Household => "household",
        }
    }

    pub fn catalog(self) -> Catalog {
        Catalog::for_task(self)
    }

    pub fn object_count(self) -> usize {
        self.catalog().entries.len()
    }

    /// Preferences a scene generator can realize for this task. Block scenes
    /// carry no repeated attribute, so only spatial patterns apply; in the
    /// household catalog shape and category coincide, so shape grouping is
    /// left out there.
    pub fn preferences(self) -> &'static [PreferenceLabel] {
        use PreferenceLabel::*;
        match self {
            Task::Block => &[
                ClusterQuadrant1,
                ClusterQuadrant2,
                ClusterQuadrant3,
                ClusterQuadrant4,
                AlignVertical,
                AlignHorizontal,
            ],
            Task::Polygon => &[GroupByColor, GroupByShape],
            Task::Household => &[
                ClusterQuadrant1,
                ClusterQuadrant2,
                ClusterQuadrant3,
                ClusterQuadrant4,
                AlignVertical,
                AlignHorizontal,
                GroupByColor,
                GroupByCategory,
            ],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "block" | "blocks" => Ok(Task::Block),
            "polygon" | "polygons" => Ok(Task::Polygon),
            "household" => Ok(Task::Household),
            _ => Err(SceneError::UnknownTask(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: ObjectId,
    pub name: String,
    pub color: Color,
    pub shape: Shape,
    pub category: Category,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub task: Task,
    pub objects: Vec<ObjectInstance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub object_id: ObjectId,
    pub target_position: Point,
}

impl Move {
    pub fn new(object_id: ObjectId, target_position: Point) -> Self {
        Self {
            object_id,
            target_position,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    OutOfBounds { id: ObjectId, position: Point },
    TooClose { a: ObjectId, b: ObjectId, distance: f64 },
    DuplicateId(ObjectId),
    NotInCatalog { id: ObjectId, name: String },
    DuplicateName(String),
    WrongObjectCount { expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfBounds { id, position } => {
                write!(f, "object {id}: position out of bounds {position}")
            }
            Violation::TooClose { a, b, distance } => write!(
                f,
                "objects {a} and {b}: separation < {MIN_SEPARATION} ({distance:.4})"
            ),
            Violation::DuplicateId(id) => write!(f, "duplicate object id {id}"),
            Violation::NotInCatalog { id, name } => {
                write!(f, "object {id} ({name}) is not in the task catalog")
            }
            Violation::DuplicateName(name) => write!(f, "catalog object {name} appears twice"),
            Violation::WrongObjectCount { expected, found } => {
                write!(f, "expected {expected} objects, found {found}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("unknown object id {0}")]
    UnknownObject(ObjectId),
    #[error("move leaves an invalid scene: {0}")]
    InvalidResult(ValidationReport),
    #[error("unknown preference: {0:?}")]
    UnknownPreference(String),
    #[error("unknown geometric relation: {0:?}")]
    UnknownRelation(String),
    #[error("unknown task: {0:?}")]
    UnknownTask(String),
}

/// Every violated invariant of `scene`; an empty report means the scene is valid.
pub fn validate_scene(scene: &Scene) -> ValidationReport {
    let mut violations = Vec::new();
    let catalog = scene.task.catalog();

    if scene.objects.len() != catalog.entries.len() {
        violations.push(Violation::WrongObjectCount {
            expected: catalog.entries.len(),
            found: scene.objects.len(),
        });
    }

    let mut seen_ids = Vec::with_capacity(scene.objects.len());
    let mut seen_names: Vec<&str> = Vec::with_capacity(scene.objects.len());
    for obj in &scene.objects {
        if seen_ids.contains(&obj.id) {
            violations.push(Violation::DuplicateId(obj.id));
        }
        seen_ids.push(obj.id);

        if !obj.position.in_unit_square() || !obj.position.x.is_finite() || !obj.position.y.is_finite() {
            violations.push(Violation::OutOfBounds {
                id: obj.id,
                position: obj.position,
            });
        }

        if !catalog.contains(obj) {
            violations.push(Violation::NotInCatalog {
                id: obj.id,
                name: obj.name.clone(),
            });
        } else if seen_names.contains(&obj.name.as_str()) {
            violations.push(Violation::DuplicateName(obj.name.clone()));
        }
        seen_names.push(&obj.name);
    }

    for (i, a) in scene.objects.iter().enumerate() {
        for b in &scene.objects[i + 1..] {
            let distance = a.position.distance(b.position);
            if distance < MIN_SEPARATION {
                violations.push(Violation::TooClose {
                    a: a.id,
                    b: b.id,
                    distance,
                });
            }
        }
    }

    ValidationReport { violations }
}

/// Returns a copy of `scene` with one object relocated. The input is untouched.
pub fn apply_move(scene: &Scene, mv: &Move) -> Result<Scene, SceneError> {
    let mut next = scene.clone();
    let obj = next
        .objects
        .iter_mut()
        .find(|o| o.id == mv.object_id)
        .ok_or(SceneError::UnknownObject(mv.object_id))?;
    obj.position = mv.target_position;

    let report = validate_scene(&next);
    if report.is_ok() {
        Ok(next)
    } else {
        Err(SceneError::InvalidResult(report))
    }
}

impl Scene {
    pub fn object(&self, id: ObjectId) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn position(&self, id: ObjectId) -> Option<Point> {
        self.object(id).map(|o| o.position)
    }

    pub fn object_by_name(&self, name: &str) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_scene(self)
    }

    pub fn apply(&self, mv: &Move) -> Result<Scene, SceneError> {
        apply_move(self, mv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometricRelation {
    LeftOf,
    RightOf,
    InFrontOf,
    BehindOf,
}

impl GeometricRelation {
    pub const ALL: [GeometricRelation; 4] = [
        GeometricRelation::LeftOf,
        GeometricRelation::RightOf,
        GeometricRelation::InFrontOf,
        GeometricRelation::BehindOf,
    ];

    pub fn as_snake(self) -> &'static str {
        match self {
            GeometricRelation::LeftOf => "left_of",
            GeometricRelation::RightOf => "right_of",
            GeometricRelation::InFrontOf => "in_front_of",
            GeometricRelation::BehindOf => "behind_of",
        }
    }

    /// Vocabulary form used in prompts.
    pub fn phrase(self) -> &'static str {
        match self {
            GeometricRelation::LeftOf => "to the left of",
            GeometricRelation::RightOf => "to the right of",
            GeometricRelation::InFrontOf => "in front of",
            GeometricRelation::BehindOf => "behind of",
        }
    }

    /// Form used inside a description sentence ("behind" drops the "of").
    pub fn sentence_phrase(self) -> &'static str {
        match self {
            GeometricRelation::BehindOf => "behind",
            other => other.phrase(),
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            GeometricRelation::LeftOf => GeometricRelation::RightOf,
            GeometricRelation::RightOf => GeometricRelation::LeftOf,
            GeometricRelation::InFrontOf => GeometricRelation::BehindOf,
            GeometricRelation::BehindOf => GeometricRelation::InFrontOf,
        }
    }
}

impl fmt::Display for GeometricRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.phrase())
    }
}

impl FromStr for GeometricRelation {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = normalize_words(s);
        let rel = match norm.as_str() {
            "to the left of" | "left of" | "left" => GeometricRelation::LeftOf,
            "to the right of" | "right of" | "right" => GeometricRelation::RightOf,
            "in front of" | "front of" | "in front" => GeometricRelation::InFrontOf,
            "behind of" | "behind" => GeometricRelation::BehindOf,
            _ => return Err(SceneError::UnknownRelation(s.to_string())),
        };
        Ok(rel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceLabel {
    GroupByColor,
    GroupByShape,
    GroupByCategory,
    AlignHorizontal,
    AlignVertical,
    ClusterQuadrant1,
    ClusterQuadrant2,
    ClusterQuadrant3,
    ClusterQuadrant4,
}

/// Column family used when tabulating results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceFamily {
    Quadrant,
    Vertical,
    Horizontal,
    Color,
    Shape,
    Category,
}

impl PreferenceFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            PreferenceFamily::Quadrant => "quadrant",
            PreferenceFamily::Vertical => "vertical",
            PreferenceFamily::Horizontal => "horizontal",
            PreferenceFamily::Color => "color",
            PreferenceFamily::Shape => "shape",
            PreferenceFamily::Category => "category",
        }
    }

    pub fn is_spatial(self) -> bool {
        matches!(
            self,
            PreferenceFamily::Quadrant | PreferenceFamily::Vertical | PreferenceFamily::Horizontal
        )
    }
}

impl PreferenceLabel {
    pub const ALL: [PreferenceLabel; 9] = [
        PreferenceLabel::GroupByColor,
        PreferenceLabel::GroupByShape,
        PreferenceLabel::GroupByCategory,
        PreferenceLabel::AlignHorizontal,
        PreferenceLabel::AlignVertical,
        PreferenceLabel::ClusterQuadrant1,
        PreferenceLabel::ClusterQuadrant2,
        PreferenceLabel::ClusterQuadrant3,
        PreferenceLabel::ClusterQuadrant4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PreferenceLabel::GroupByColor => "group_by_color",
            PreferenceLabel::GroupByShape => "group_by_shape",
            PreferenceLabel::GroupByCategory => "group_by_category",
            PreferenceLabel::AlignHorizontal => "align_horizontal",
            PreferenceLabel::AlignVertical => "align_vertical",
            PreferenceLabel::ClusterQuadrant1 => "cluster_quadrant_1",
            PreferenceLabel::ClusterQuadrant2 => "cluster_quadrant_2",
            PreferenceLabel::ClusterQuadrant3 => "cluster_quadrant_3",
            PreferenceLabel::ClusterQuadrant4 => "cluster_quadrant_4",
        }
    }

    pub fn sentence(self) -> &'static str {
        match self {
            PreferenceLabel::GroupByColor => "Rearrange objects with the same color.",
            PreferenceLabel::GroupByShape => "Group objects by the same shape.",
            PreferenceLabel::GroupByCategory => "Group objects by the same category.",
            PreferenceLabel::AlignHorizontal => "Make objects into a horizontal line.",
            PreferenceLabel::AlignVertical => "Sort objects vertically.",
            PreferenceLabel::ClusterQuadrant1 => "Gather objects in the top-right quadrant.",
            PreferenceLabel::ClusterQuadrant2 => "Gather objects in the top-left quadrant.",
            PreferenceLabel::ClusterQuadrant3 => "Gather objects in the bottom-left quadrant.",
            PreferenceLabel::ClusterQuadrant4 => "Gather objects in the bottom-right quadrant.",
        }
    }

    pub fn family(self) -> PreferenceFamily {
        match self {
            PreferenceLabel::GroupByColor => PreferenceFamily::Color,
            PreferenceLabel::GroupByShape => PreferenceFamily::Shape,
            PreferenceLabel::GroupByCategory => PreferenceFamily::Category,
            PreferenceLabel::AlignHorizontal => PreferenceFamily::Horizontal,
            PreferenceLabel::AlignVertical => PreferenceFamily::Vertical,
            _ => PreferenceFamily::Quadrant,
        }
    }

    /// Quadrant number 1..=4 for the clustering preferences.
    pub fn quadrant(self) -> Option<u8> {
        match self {
            PreferenceLabel::ClusterQuadrant1 => Some(1),
            PreferenceLabel::ClusterQuadrant2 => Some(2),
            PreferenceLabel::ClusterQuadrant3 => Some(3),
            PreferenceLabel::ClusterQuadrant4 => Some(4),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&l| l == self).unwrap_or(0)
    }
}

impl fmt::Display for PreferenceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Canonical sentence for a preference.
pub fn preference_sentence(label: PreferenceLabel) -> &'static str {
    label.sentence()
}

/// Parses a canonical sentence (case and punctuation insensitive) or a
/// snake_case label name.
pub fn parse_preference(text: &str) -> Result<PreferenceLabel, SceneError> {
    let norm = normalize_words(text);
    if norm.is_empty() {
        return Err(SceneError::UnknownPreference(text.to_string()));
    }
    PreferenceLabel::ALL
        .into_iter()
        .find(|l| normalize_words(l.sentence()) == norm || normalize_words(l.as_str()) == norm)
        .ok_or_else(|| SceneError::UnknownPreference(text.to_string()))
}

impl FromStr for PreferenceLabel {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_preference(s)
    }
}

/// Lowercases, turns every non-alphanumeric run into one space and trims.
pub(crate) fn normalize_words(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(ch.to_lowercase());
        } else {
            pending_space = true;
        }
    }
    out
}
