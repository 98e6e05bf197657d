//! Seeded generation of scenes, goal layouts and move plans.
//!
//! Every function here is a pure function of its inputs and seed. Randomness
//! comes from ChaCha8 streams so that episodes are reproducible across
//! platforms and releases of this crate.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::EpisodeRecord;
use crate::residual::{residual_chain, ResidualError, MOVE_THRESHOLD};
use crate::scene::{
    apply_move, validate_scene, Move, ObjectId, Point, PreferenceLabel, Scene, SceneError, Task,
    MIN_SEPARATION,
};

/// Default goal tolerance for the alignment predicates.
pub const GOAL_TOLERANCE: f64 = 0.05;

const MAX_REJECTIONS: usize = 10_000;
const MAX_PLAN_ATTEMPTS: u64 = 10;
/// Sampled positions stay this far from the table edge so glyphs stay visible.
const EDGE_MARGIN: f64 = 0.06;
/// A demonstrated object starts at least this far from its goal.
const MIN_DEMO_DISPLACEMENT: f64 = 0.05;
const CLUSTER_RADIUS: f64 = 0.07;
const ANCHORS: [Point; 5] = [
    Point::new(0.2, 0.2),
    Point::new(0.8, 0.2),
    Point::new(0.2, 0.8),
    Point::new(0.8, 0.8),
    Point::new(0.5, 0.5),
];

pub type GoalConfiguration = BTreeMap<ObjectId, Point>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerationError {
    #[error("could not place objects after {MAX_REJECTIONS} rejections")]
    GenerationFailure,
    #[error("no collision-free move order (object {object_id} blocked)")]
    PlanningFailure { object_id: ObjectId },
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("goal references unknown object {0}")]
    UnknownObject(ObjectId),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Residual(#[from] ResidualError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub task: Task,
    pub preference: PreferenceLabel,
    pub seed: u64,
    /// Number of images in the episode; `None` demonstrates every object.
    pub n_images: Option<usize>,
    pub goal_tolerance: f64,
}

impl GenerationConfig {
    pub fn new(task: Task, preference: PreferenceLabel, seed: u64) -> Self {
        Self {
            task,
            preference,
            seed,
            n_images: None,
            goal_tolerance: GOAL_TOLERANCE,
        }
    }

    pub fn with_images(mut self, n: usize) -> Self {
        self.n_images = Some(n);
        self
    }

    fn check(&self) -> Result<(), GenerationError> {
        if !self.task.preferences().contains(&self.preference) {
            return Err(GenerationError::InvalidConfig(format!(
                "preference {} is not realizable in the {} task",
                self.preference, self.task
            )));
        }
        if let Some(n) = self.n_images {
            if n < 2 || n - 1 > self.task.object_count() {
                return Err(GenerationError::InvalidConfig(format!(
                    "n_images must be in 2..={} for the {} task, got {n}",
                    self.task.object_count() + 1,
                    self.task
                )));
            }
        }
        if !(self.goal_tolerance > 0.0) {
            return Err(GenerationError::InvalidConfig("goal tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Independent, reproducible random stream for `(seed, stream)`.
pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// stream ids
const STREAM_SCENE: u64 = 1;
const STREAM_GOAL: u64 = 2;
const STREAM_START: u64 = 3;

fn sample_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(
        rng.random_range(EDGE_MARGIN..=1.0 - EDGE_MARGIN),
        rng.random_range(EDGE_MARGIN..=1.0 - EDGE_MARGIN),
    )
}

fn is_clear(p: Point, placed: &[Point]) -> bool {
    placed.iter().all(|q| p.distance(*q) >= MIN_SEPARATION)
}

pub fn sample_scene(task: Task, seed: u64) -> Result<Scene, GenerationError> {
    let mut rng = rng_for(seed, STREAM_SCENE);
    let catalog = task.catalog();
    let mut placed: Vec<Point> = Vec::with_capacity(catalog.entries.len());
    let mut rejections = 0;
    while placed.len() < catalog.entries.len() {
        let p = sample_point(&mut rng);
        if is_clear(p, &placed) {
            placed.push(p);
        } else {
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(GenerationError::GenerationFailure);
            }
        }
    }
    let objects = catalog
        .entries
        .iter()
        .zip(placed)
        .enumerate()
        .map(|(i, (e, p))| e.instantiate(i as ObjectId, p))
        .collect();
    Ok(Scene { task, objects })
}

/// Target positions realizing `preference` for every object in `scene`.
pub fn goal_configuration(
    scene: &Scene,
    preference: PreferenceLabel,
    seed: u64,
) -> Result<GoalConfiguration, GenerationError> {
    let report = validate_scene(scene);
    if !report.is_ok() {
        return Err(SceneError::InvalidResult(report).into());
    }
    let mut rng = rng_for(seed, STREAM_GOAL);
    let mut ids: Vec<ObjectId> = scene.objects.iter().map(|o| o.id).collect();
    ids.shuffle(&mut rng);

    let goal = match preference {
        PreferenceLabel::AlignHorizontal | PreferenceLabel::AlignVertical => {
            line_layout(&ids, preference == PreferenceLabel::AlignHorizontal, &mut rng)
        }
        PreferenceLabel::GroupByColor
        | PreferenceLabel::GroupByShape
        | PreferenceLabel::GroupByCategory => {
            let groups = group_ids(scene, preference);
            if groups.len() < 2 || groups.len() > ANCHORS.len() {
                return Err(GenerationError::InvalidConfig(format!(
                    "{preference} needs 2..=5 attribute groups, scene has {}",
                    groups.len()
                )));
            }
            cluster_layout(&groups, &mut rng)
        }
        q => quadrant_layout(&ids, q.quadrant().unwrap_or(1)),
    };
    Ok(goal)
}

/// Evenly spaced along the centre line; the perpendicular offset models an
/// imprecise hand and stays inside the goal tolerance.
fn line_layout(ids: &[ObjectId], horizontal: bool, rng: &mut ChaCha8Rng) -> GoalConfiguration {
    let n = ids.len();
    let amplitude = rng.random_range(0.015..0.045);
    let mut signs: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    signs.shuffle(rng);
    ids.iter()
        .enumerate()
        .map(|(slot, &id)| {
            let along = 0.1 + 0.8 * slot as f64 / (n.max(2) - 1) as f64;
            let across = 0.5 + signs[slot] * amplitude;
            let p = if horizontal {
                Point::new(along, across)
            } else {
                Point::new(across, along)
            };
            (id, p)
        })
        .collect()
}

fn quadrant_layout(ids: &[ObjectId], quadrant: u8) -> GoalConfiguration {
    let n = ids.len();
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let (x_lo, y_lo) = match quadrant {
        1 => (0.55, 0.55),
        2 => (0.05, 0.55),
        3 => (0.05, 0.05),
        _ => (0.55, 0.05),
    };
    let span = 0.4;
    ids.iter()
        .enumerate()
        .map(|(slot, &id)| {
            let (c, r) = (slot % cols, slot / cols);
            let x = x_lo + span * (c as f64 + 0.5) / cols as f64;
            let y = y_lo + span * (r as f64 + 0.5) / rows as f64;
            (id, Point::new(x, y))
        })
        .collect()
}

fn cluster_layout(groups: &[Vec<ObjectId>], rng: &mut ChaCha8Rng) -> GoalConfiguration {
    let mut anchors: Vec<Point> = match groups.len() {
        // diagonal pairs only, so two clusters never share a row or column
        2 => {
            if rng.random_bool(0.5) {
                vec![ANCHORS[0], ANCHORS[3]]
            } else {
                vec![ANCHORS[1], ANCHORS[2]]
            }
        }
        5 => ANCHORS.to_vec(),
        k => {
            let mut corners = ANCHORS[..4].to_vec();
            corners.shuffle(rng);
            corners.truncate(k);
            corners
        }
    };
    anchors.shuffle(rng);

    let mut goal = GoalConfiguration::new();
    for (members, anchor) in groups.iter().zip(anchors) {
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let m = members.len();
        for (k, &id) in members.iter().enumerate() {
            let p = if m == 1 {
                anchor
            } else {
                let a = phase + std::f64::consts::TAU * k as f64 / m as f64;
                Point::new(
                    anchor.x + CLUSTER_RADIUS * a.cos(),
                    anchor.y + CLUSTER_RADIUS * a.sin(),
                )
            };
            goal.insert(id, p);
        }
    }
    goal
}

/// Object ids grouped by the attribute a grouping preference refers to,
/// groups in order of first appearance.
pub(crate) fn group_ids(scene: &Scene, preference: PreferenceLabel) -> Vec<Vec<ObjectId>> {
    let key = |o: &crate::scene::ObjectInstance| -> &'static str {
        match preference {
            PreferenceLabel::GroupByColor => o.color.as_str(),
            PreferenceLabel::GroupByShape => o.shape.as_str(),
            _ => o.category.as_str(),
        }
    };
    let mut keys: Vec<&'static str> = Vec::new();
    let mut groups: Vec<Vec<ObjectId>> = Vec::new();
    for o in &scene.objects {
        let k = key(o);
        match keys.iter().position(|&x| x == k) {
            Some(i) => groups[i].push(o.id),
            None => {
                keys.push(k);
                groups.push(vec![o.id]);
            }
        }
    }
    groups
}

/// One move per displaced object, in ascending id order. Objects within the
/// movement threshold of their goal are left in place.
pub fn plan_moves(scene: &Scene, goal: &GoalConfiguration) -> Result<Vec<Move>, GenerationError> {
    for id in goal.keys() {
        if scene.object(*id).is_none() {
            return Err(GenerationError::UnknownObject(*id));
        }
    }
    let mut current = scene.clone();
    let mut moves = Vec::new();
    for (&id, &target) in goal {
        let from = current.position(id).ok_or(GenerationError::UnknownObject(id))?;
        if from.distance(target) <= MOVE_THRESHOLD {
            continue;
        }
        let mv = Move::new(id, target);
        current = match apply_move(&current, &mv) {
            Ok(next) => next,
            Err(SceneError::InvalidResult(_)) => {
                return Err(GenerationError::PlanningFailure { object_id: id })
            }
            Err(e) => return Err(e.into()),
        };
        moves.push(mv);
    }
    Ok(moves)
}

/// Start scene for a demonstration: objects outside `demonstrated` already
/// sit at their goal, demonstrated ones start well away from it and clear of
/// every goal slot, so any move order stays collision free.
fn start_scene(
    initial: &Scene,
    goal: &GoalConfiguration,
    demonstrated: &[ObjectId],
    rng: &mut ChaCha8Rng,
) -> Result<Scene, GenerationError> {
    let mut scene = initial.clone();
    let mut placed: Vec<Point> = Vec::new();
    let slots: Vec<Point> = goal.values().copied().collect();
    for obj in scene.objects.iter_mut() {
        if !demonstrated.contains(&obj.id) {
            obj.position = goal[&obj.id];
            placed.push(obj.position);
        }
    }
    for obj in scene.objects.iter_mut() {
        if !demonstrated.contains(&obj.id) {
            continue;
        }
        let target = goal[&obj.id];
        let ok = |p: Point, placed: &[Point]| {
            is_clear(p, placed) && is_clear(p, &slots) && p.distance(target) >= MIN_DEMO_DISPLACEMENT
        };
        let mut p = obj.position;
        let mut rejections = 0;
        while !ok(p, &placed) {
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(GenerationError::GenerationFailure);
            }
            p = sample_point(rng);
        }
        obj.position = p;
        placed.push(p);
    }
    Ok(scene)
}

pub fn generate_episode(config: &GenerationConfig) -> Result<EpisodeRecord, GenerationError> {
    config.check()?;
    let initial = sample_scene(config.task, config.seed)?;
    let mut start_rng = rng_for(config.seed, STREAM_START);

    let all_ids: Vec<ObjectId> = initial.objects.iter().map(|o| o.id).collect();
    let demonstrated: Vec<ObjectId> = match config.n_images {
        Some(n) => {
            let mut picked: Vec<ObjectId> =
                all_ids.choose_multiple(&mut start_rng, n - 1).copied().collect();
            picked.sort_unstable();
            picked
        }
        None => all_ids,
    };

    let mut last_err = GenerationError::GenerationFailure;
    for attempt in 0..MAX_PLAN_ATTEMPTS {
        let goal_seed = config.seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let goal = goal_configuration(&initial, config.preference, goal_seed)?;
        let start = start_scene(&initial, &goal, &demonstrated, &mut start_rng)?;
        let moves = match plan_moves(&start, &goal) {
            Ok(m) => m,
            Err(e @ GenerationError::PlanningFailure { .. }) => {
                last_err = e;
                continue;
            }
            Err(e) => return Err(e),
        };

        let mut scenes = vec![start];
        for mv in &moves {
            let next = apply_move(scenes.last().expect("nonempty"), mv)?;
            scenes.push(next);
        }
        let final_scene = scenes.last().expect("nonempty");
        if !satisfies_preference(final_scene, config.preference, config.goal_tolerance) {
            last_err = GenerationError::InvalidConfig(format!(
                "goal layout does not satisfy {}",
                config.preference
            ));
            continue;
        }
        let ground_truth_residuals = residual_chain(&scenes)?;
        return Ok(EpisodeRecord::new(
            config.task,
            config.preference,
            config.seed,
            scenes,
            moves,
            ground_truth_residuals,
        ));
    }
    Err(last_err)
}

pub(crate) fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
}

pub(crate) fn in_quadrant(p: Point, quadrant: u8) -> bool {
    match quadrant {
        1 => p.x > 0.5 && p.y > 0.5,
        2 => p.x < 0.5 && p.y > 0.5,
        3 => p.x < 0.5 && p.y < 0.5,
        _ => p.x > 0.5 && p.y < 0.5,
    }
}

/// Whether `scene` realizes `preference`; `tolerance` bounds the spread of
/// the alignment predicates.
pub fn satisfies_preference(scene: &Scene, preference: PreferenceLabel, tolerance: f64) -> bool {
    let positions = || scene.objects.iter().map(|o| o.position);
    match preference {
        PreferenceLabel::AlignHorizontal => population_std(positions().map(|p| p.y)) < tolerance,
        PreferenceLabel::AlignVertical => population_std(positions().map(|p| p.x)) < tolerance,
        PreferenceLabel::GroupByColor
        | PreferenceLabel::GroupByShape
        | PreferenceLabel::GroupByCategory => {
            let groups = group_ids(scene, preference);
            if groups.len() < 2 || groups.iter().all(|g| g.len() < 2) {
                return false;
            }
            let group_of = |id: ObjectId| groups.iter().position(|g| g.contains(&id));
            let mut max_intra = 0.0f64;
            let mut min_inter = f64::INFINITY;
            for (i, a) in scene.objects.iter().enumerate() {
                for b in &scene.objects[i + 1..] {
                    let d = a.position.distance(b.position);
                    if group_of(a.id) == group_of(b.id) {
                        max_intra = max_intra.max(d);
                    } else {
                        min_inter = min_inter.min(d);
                    }
                }
            }
            max_intra < min_inter
        }
        q => {
            let quadrant = q.quadrant().unwrap_or(1);
            positions().all(|p| in_quadrant(p, quadrant))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_scene_is_deterministic_and_valid() {
        for task in Task::ALL {
            let a = sample_scene(task, 7).unwrap();
            let b = sample_scene(task, 7).unwrap();
            assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
            assert!(validate_scene(&a).is_ok());
            assert_eq!(a.objects.len(), task.object_count());
        }
        assert_ne!(sample_scene(Task::Block, 7), sample_scene(Task::Block, 8));
    }

    #[test]
    fn polygon_scene_has_three_triangles_and_three_stars() {
        use crate::catalog::Shape;
        for seed in 0..10 {
            let s = sample_scene(Task::Polygon, seed).unwrap();
            let count = |shape| s.objects.iter().filter(|o| o.shape == shape).count();
            assert_eq!((count(Shape::Triangle), count(Shape::Star)), (3, 3));
        }
    }

    #[test]
    fn household_scene_has_twelve_objects() {
        assert_eq!(sample_scene(Task::Household, 123).unwrap().objects.len(), 12);
    }

    fn realized(task: Task, pref: PreferenceLabel, seed: u64) -> Scene {
        let scene = sample_scene(task, seed).unwrap();
        let goal = goal_configuration(&scene, pref, seed).unwrap();
        let mut out = scene.clone();
        for o in out.objects.iter_mut() {
            o.position = goal[&o.id];
        }
        assert!(validate_scene(&out).is_ok(), "{pref} goal invalid: {}", validate_scene(&out));
        out
    }

    #[test]
    fn horizontal_goal_stays_near_a_line() {
        for seed in 0..20 {
            let s = realized(Task::Block, PreferenceLabel::AlignHorizontal, seed);
            let mean = s.objects.iter().map(|o| o.position.y).sum::<f64>() / 6.0;
            assert!(s.objects.iter().all(|o| (o.position.y - mean).abs() < GOAL_TOLERANCE));
        }
    }

    #[test]
    fn color_groups_on_polygons_are_separated() {
        // brute force: every same-color pair closer than every cross-color pair
        for seed in 0..20 {
            let s = realized(Task::Polygon, PreferenceLabel::GroupByColor, seed);
            let mut same = Vec::new();
            let mut cross = Vec::new();
            for a in &s.objects {
                for b in &s.objects {
                    if a.id >= b.id {
                        continue;
                    }
                    let d = ((a.position.x - b.position.x).powi(2)
                        + (a.position.y - b.position.y).powi(2))
                    .sqrt();
                    if a.color == b.color {
                        same.push(d);
                    } else {
                        cross.push(d);
                    }
                }
            }
            let max_same = same.iter().cloned().fold(0.0, f64::max);
            let min_cross = cross.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(max_same < min_cross, "seed {seed}: {max_same} vs {min_cross}");
        }
    }

    #[test]
    fn quadrant_goals_fall_inside_quadrant() {
        for (pref, q) in [
            (PreferenceLabel::ClusterQuadrant1, (true, true)),
            (PreferenceLabel::ClusterQuadrant2, (false, true)),
            (PreferenceLabel::ClusterQuadrant3, (false, false)),
            (PreferenceLabel::ClusterQuadrant4, (true, false)),
        ] {
            for task in [Task::Block, Task::Household] {
                let s = realized(task, pref, 3);
                for o in &s.objects {
                    assert_eq!((o.position.x > 0.5, o.position.y > 0.5), q);
                    assert!(o.position.x != 0.5 && o.position.y != 0.5);
                }
            }
        }
    }

    #[test]
    fn grouping_needs_repeated_attributes() {
        let s = sample_scene(Task::Block, 1).unwrap();
        assert!(matches!(
            goal_configuration(&s, PreferenceLabel::GroupByColor, 1),
            Err(GenerationError::InvalidConfig(_))
        ));
    }

    #[test]
    fn plan_identity_is_empty() {
        let s = sample_scene(Task::Block, 2).unwrap();
        let goal: GoalConfiguration = s.objects.iter().map(|o| (o.id, o.position)).collect();
        assert!(plan_moves(&s, &goal).unwrap().is_empty());
    }

    #[test]
    fn plan_single_displacement() {
        let s = sample_scene(Task::Block, 2).unwrap();
        let mut goal: GoalConfiguration = s.objects.iter().map(|o| (o.id, o.position)).collect();
        let free = Point::new(0.013, 0.987);
        goal.insert(4, free);
        assert_eq!(plan_moves(&s, &goal).unwrap(), vec![Move::new(4, free)]);
    }

    #[test]
    fn plan_rejects_unknown_ids_and_blocked_orders() {
        let s = sample_scene(Task::Block, 2).unwrap();
        let mut goal = GoalConfiguration::new();
        goal.insert(42, Point::new(0.5, 0.5));
        assert_eq!(plan_moves(&s, &goal), Err(GenerationError::UnknownObject(42)));

        // object 0 wants object 1's spot before 1 has left it
        let mut goal = GoalConfiguration::new();
        goal.insert(0, s.position(1).unwrap());
        goal.insert(1, Point::new(0.013, 0.987));
        assert_eq!(plan_moves(&s, &goal), Err(GenerationError::PlanningFailure { object_id: 0 }));
    }

    #[test]
    fn block_horizontal_plan_replays_to_goal() {
        for seed in 0..10 {
            let s = sample_scene(Task::Block, seed).unwrap();
            let goal = goal_configuration(&s, PreferenceLabel::AlignHorizontal, seed).unwrap();
            let Ok(moves) = plan_moves(&s, &goal) else { continue };
            assert!(moves.len() <= 6);
            let mut cur = s.clone();
            for mv in &moves {
                cur = apply_move(&cur, mv).unwrap();
            }
            assert!(satisfies_preference(&cur, PreferenceLabel::AlignHorizontal, GOAL_TOLERANCE));
            assert!(moves.windows(2).all(|w| w[0].object_id < w[1].object_id));
        }
    }

    #[test]
    fn vertical_block_episode_satisfies_predicate() {
        let ep = generate_episode(&GenerationConfig::new(Task::Block, PreferenceLabel::AlignVertical, 1))
            .unwrap();
        let last = ep.scenes.last().unwrap();
        assert!(satisfies_preference(last, PreferenceLabel::AlignVertical, GOAL_TOLERANCE));
        let xs: Vec<f64> = last.objects.iter().map(|o| o.position.x).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
        assert!(std < GOAL_TOLERANCE);
    }

    #[test]
    fn episodes_are_deterministic() {
        let cfg = GenerationConfig::new(Task::Household, PreferenceLabel::GroupByCategory, 99);
        assert_eq!(generate_episode(&cfg).unwrap(), generate_episode(&cfg).unwrap());
    }

    #[test]
    fn two_image_episode_has_one_move() {
        for task in Task::ALL {
            let pref = task.preferences()[0];
            let ep = generate_episode(&GenerationConfig::new(task, pref, 5).with_images(2)).unwrap();
            assert_eq!(ep.scenes.len(), 2);
            assert_eq!(ep.moves.len(), 1);
            assert_eq!(ep.ground_truth_residuals.len(), 1);
            assert!(satisfies_preference(&ep.scenes[1], pref, GOAL_TOLERANCE));
        }
    }

    #[test]
    fn config_validation() {
        let bad = GenerationConfig::new(Task::Block, PreferenceLabel::GroupByShape, 0);
        assert!(matches!(generate_episode(&bad), Err(GenerationError::InvalidConfig(_))));
        let too_many = GenerationConfig::new(Task::Block, PreferenceLabel::AlignVertical, 0).with_images(8);
        assert!(matches!(generate_episode(&too_many), Err(GenerationError::InvalidConfig(_))));
        let too_few = GenerationConfig::new(Task::Block, PreferenceLabel::AlignVertical, 0).with_images(1);
        assert!(generate_episode(&too_few).is_err());
    }
}
