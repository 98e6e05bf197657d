//! Session state: a scene history grown one validated move at a time.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vpi_core::covr::InferenceResult;
use vpi_core::method::Method;
use vpi_core::residual::MOVE_THRESHOLD;
use vpi_core::scene::{apply_move, Move, Scene, SceneError, Task};
use vpi_core::scenegen::{sample_scene, GenerationError};

use crate::backend::BackendChoice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredInference {
    /// Scene count the inference saw.
    pub steps: usize,
    pub result: InferenceResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub task: Task,
    pub method: Method,
    pub backend: BackendChoice,
    pub seed: u64,
    pub scenes: Vec<Scene>,
    pub moves: Vec<Move>,
    pub last_inference: Option<StoredInference>,
    pub revision: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MoveError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("object {object_id} moved only {distance:.4}; a move must exceed {MOVE_THRESHOLD}")]
    NoDisplacement { object_id: u32, distance: f64 },
}

impl MoveError {
    /// Short error tag for API payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            MoveError::Scene(SceneError::UnknownObject(_)) => "UnknownObject",
            MoveError::Scene(SceneError::InvalidResult(_)) => "InvalidMove",
            MoveError::Scene(_) => "InvalidMove",
            MoveError::NoDisplacement { .. } => "NoDisplacement",
        }
    }
}

impl Session {
    pub fn new(id: String, task: Task, method: Method, backend: BackendChoice, seed: u64) -> Result<Self, GenerationError> {
        Ok(Self {
            id,
            task,
            method,
            backend,
            seed,
            scenes: vec![sample_scene(task, seed)?],
            moves: Vec::new(),
            last_inference: None,
            revision: 0,
        })
    }

    pub fn head(&self) -> &Scene {
        self.scenes.last().expect("a session always holds its start scene")
    }

    /// Validates and appends one move. A rejected move leaves the session
    /// untouched.
    pub fn apply(&mut self, mv: Move) -> Result<&Scene, MoveError> {
        let head = self.head();
        let from = head.position(mv.object_id).ok_or(SceneError::UnknownObject(mv.object_id))?;
        let distance = from.distance(mv.target_position);
        if !(distance > MOVE_THRESHOLD) {
            return Err(MoveError::NoDisplacement {
                object_id: mv.object_id,
                distance,
            });
        }
        let next = apply_move(head, &mv)?;
        self.scenes.push(next);
        self.moves.push(mv);
        self.revision += 1;
        Ok(self.head())
    }

    pub fn store_inference(&mut self, steps: usize, result: InferenceResult) {
        self.last_inference = Some(StoredInference { steps, result });
        self.revision += 1;
    }

    /// Replays the move history from the start scene.
    pub fn replay(&self) -> Result<Scene, SceneError> {
        self.moves.iter().try_fold(self.scenes[0].clone(), |s, mv| apply_move(&s, mv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use vpi_core::scene::Point;

    fn session() -> Session {
        Session::new("s".into(), Task::Block, Method::Mdpe, BackendChoice::default(), 4).unwrap()
    }

    #[test]
    fn rejected_moves_change_nothing() {
        let mut s = session();
        let before = s.clone();
        assert_eq!(s.apply(Move::new(99, Point::new(0.5, 0.5))).unwrap_err().kind(), "UnknownObject");
        let other = s.head().objects[1].position;
        assert_eq!(s.apply(Move::new(0, other)).unwrap_err().kind(), "InvalidMove");
        let here = s.head().objects[0].position;
        assert_eq!(s.apply(Move::new(0, here)).unwrap_err().kind(), "NoDisplacement");
        assert_eq!(s.apply(Move::new(0, Point::new(1.5, 0.5))).unwrap_err().kind(), "InvalidMove");
        assert_eq!(s, before);
    }

    proptest! {
        #[test]
        fn accepted_moves_keep_history_consistent(targets in prop::collection::vec((0usize..6, 0.0f64..1.0, 0.0f64..1.0), 1..12)) {
            let mut s = session();
            let mut accepted = 0;
            for (i, x, y) in targets {
                let id = s.head().objects[i].id;
                let rev = s.revision;
                if s.apply(Move::new(id, Point::new(x, y))).is_ok() {
                    accepted += 1;
                    prop_assert_eq!(s.revision, rev + 1);
                } else {
                    prop_assert_eq!(s.revision, rev);
                }
            }
            prop_assert_eq!(s.moves.len(), accepted);
            prop_assert_eq!(s.scenes.len(), accepted + 1);
            prop_assert_eq!(&s.replay().unwrap(), s.head());
        }
    }
}
