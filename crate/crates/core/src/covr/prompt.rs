//! Prompt construction. All builders are pure: identical inputs give
//! byte-identical bundles, which the transcript cache relies on.

use std::fmt::Write as _;
use std::sync::OnceLock;

use super::{format_vrd_response, ImageBytes, PredictedResidual, PromptBundle, PromptKind};
use crate::catalog::Catalog;
use crate::residual::VisualResidual;
use crate::scene::{GeometricRelation, PreferenceLabel, Task};
use crate::scenegen::{generate_episode, GenerationConfig};

/// A worked example: question text and the expected answer.
pub type FewShot = (String, String);

const SYSTEM: &str = "You are a visual reasoning assistant observing a tabletop seen from above. \
Objects farther from the viewer appear higher in the image.";

// Seeds reserved for few-shot examples; benchmark seeds are hashed from a
// master seed and never chosen by hand.
const FEW_SHOT_SEEDS: [u64; 2] = [0x5EED_F00D_0000_0001, 0x5EED_F00D_0000_0002];

fn image_list(n: usize) -> String {
    match n {
        0 => "[]".to_string(),
        1 => "[image1]".to_string(),
        2 => "[image1, image2]".to_string(),
        n => format!("[image1, image2, ..., image{n}]"),
    }
}

fn relation_vocabulary() -> String {
    let phrases: Vec<&str> = GeometricRelation::ALL.iter().map(|r| r.phrase()).collect();
    format!("{{{}}}", phrases.join(", "))
}

fn semantic_vocabulary(task: Task) -> String {
    let cat = Catalog::for_task(task);
    let join = |v: Vec<&str>| v.join(", ");
    format!(
        "{{color: {}; shape: {}; category: {}}}",
        join(cat.colors().iter().map(|c| c.as_str()).collect()),
        join(cat.shapes().iter().map(|s| s.as_str()).collect()),
        join(cat.categories().iter().map(|c| c.as_str()).collect()),
    )
}

fn object_list(task: Task) -> String {
    Catalog::for_task(task).names().join(", ")
}

/// Two examples per task, drawn from reserved seeds and written by the
/// canonical formatter.
pub fn default_few_shot(task: Task) -> Vec<FewShot> {
    static CACHE: OnceLock<[Vec<FewShot>; 3]> = OnceLock::new();
    let all = CACHE.get_or_init(|| Task::ALL.map(build_few_shot));
    let idx = Task::ALL.iter().position(|t| *t == task).expect("task listed");
    all[idx].clone()
}

fn build_few_shot(task: Task) -> Vec<FewShot> {
    let prefs = task.preferences();
    let picks = [prefs[0], prefs[prefs.len() - 1]];
    FEW_SHOT_SEEDS
        .iter()
        .zip(picks)
        .map(|(&seed, pref)| {
            let ep = generate_episode(&GenerationConfig::new(task, pref, seed))
                .expect("reserved few-shot seeds generate");
            let question = "How did the objects move between the [image1] and [image2]?".to_string();
            (question, format_vrd_response(&ep.ground_truth_residuals[0]))
        })
        .collect()
}

/// Residual prompt for the pair (`before`, `after`) at `pair_index`.
pub fn build_vrd_prompt(
    before: &ImageBytes,
    after: &ImageBytes,
    pair_index: usize,
    task: Task,
    few_shot: &[FewShot],
) -> PromptBundle {
    let mut user = String::new();
    let _ = writeln!(user, "I will give you a set of images {}.", image_list(2));
    user.push_str(
        "The goal is to reason about the geometric and semantic properties of objects in an image sequence.\n",
    );
    user.push_str("Format:\n- geometric property\n- semantic property\n- description\n");
    if !few_shot.is_empty() {
        user.push_str("Examples:\n");
        for (question, answer) in few_shot {
            let _ = writeln!(user, "{question}\n{answer}\n");
        }
    }
    user.push_str("How did the objects move between the [image1] and [image2]?\n");
    let _ = writeln!(
        user,
        "The geometric relationship between objects contains {}, while their semantic properties include {}.",
        relation_vocabulary(),
        semantic_vocabulary(task)
    );
    let _ = writeln!(user, "The objects on the table are: {}.", object_list(task));
    user.push_str(
        "Answer with the three labeled lines \"geometric property:\", \"semantic property:\" \
(source object: name, color, shape, target object: name, color, shape) and \"description:\".",
    );

    PromptBundle {
        kind: PromptKind::Vrd { pair_index },
        system: SYSTEM.to_string(),
        user,
        images: vec![before.clone(), after.clone()],
        few_shot: few_shot.to_vec(),
    }
}

/// One residual as a single prompt line.
pub fn serialize_residual(r: &PredictedResidual) -> String {
    match r {
        PredictedResidual::Parsed(VisualResidual {
            semantic,
            geometric,
            description,
        }) => format!(
            "geometric property: {}; semantic property: source object: {}, {}, {}, target object: {}, {}, {}; description: {}",
            geometric.as_snake(),
            semantic.source.name,
            semantic.source.color,
            semantic.source.shape,
            semantic.target.name,
            semantic.target.color,
            semantic.target.shape,
            description
        ),
        PredictedResidual::Unparsed { .. } => "unparsed".to_string(),
    }
}

fn preference_set() -> String {
    let mut s = String::new();
    for label in PreferenceLabel::ALL {
        let _ = writeln!(s, "{}", label.sentence());
    }
    s
}

/// Preference prompt over the whole sequence and its residual chain.
pub fn build_prd_prompt(images: &[ImageBytes], residuals: &[PredictedResidual]) -> PromptBundle {
    let mut user = String::new();
    let _ = writeln!(user, "I will give you a set of images {}.", image_list(images.len()));
    user.push_str("Choose the user's preference from the following preference set:\n");
    user.push_str(&preference_set());
    user.push_str("Let's try to analyze images and infer the user's preference.\n");
    user.push_str("Based on previous visual residuals:\n");
    for (k, r) in residuals.iter().enumerate() {
        let _ = writeln!(user, "{}. [image{} -> image{}] {}", k + 1, k + 1, k + 2, serialize_residual(r));
    }
    user.push_str("Answer with one line of the form \"Preference: <sentence from the preference set>\".");
    PromptBundle {
        kind: PromptKind::Prd,
        system: SYSTEM.to_string(),
        user,
        images: images.to_vec(),
        few_shot: Vec::new(),
    }
}

/// Single-call prompt: the whole sequence and the preference set, no
/// residual structure.
pub fn build_naive_prompt(images: &[ImageBytes]) -> PromptBundle {
    let mut user = String::new();
    let _ = writeln!(user, "I will give you a set of images {}.", image_list(images.len()));
    user.push_str(
        "A user rearranged the objects on the table one at a time. Describe what changed across the images, then choose the user's preference from the following preference set:\n",
    );
    user.push_str(&preference_set());
    user.push_str("Finish with one line of the form \"Preference: <sentence from the preference set>\".");
    PromptBundle {
        kind: PromptKind::Naive,
        system: SYSTEM.to_string(),
        user,
        images: images.to_vec(),
        few_shot: Vec::new(),
    }
}

/// Position-listing prompt over the final image.
pub fn build_l2r_prompt(final_image: &ImageBytes, task: Task) -> PromptBundle {
    let mut user = String::new();
    user.push_str("I will give you an image of a tabletop.\n");
    let _ = writeln!(user, "The objects on the table are: {}.", object_list(task));
    user.push_str(
        "List every object with its normalized 2D position, x from 0.0 (left edge) to 1.0 (right edge) \
and y from 0.0 (edge nearest the viewer, bottom of the image) to 1.0 (far edge, top of the image).\n",
    );
    user.push_str("Write one line per object in the form \"name: (x, y)\" and nothing else.");
    PromptBundle {
        kind: PromptKind::L2rPositions,
        system: SYSTEM.to_string(),
        user,
        images: vec![final_image.clone()],
        few_shot: Vec::new(),
    }
}
