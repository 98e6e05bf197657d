//! Success rates for residual prediction and preference prediction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covr::PredictedResidual;
use crate::residual::{ObjectAttributes, VisualResidual};
use crate::scene::{normalize_words, PreferenceLabel};

/// Per-element match of one predicted residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualScore {
    pub semantic: bool,
    pub geometric: bool,
    pub description: bool,
}

impl ResidualScore {
    pub const ZERO: ResidualScore = ResidualScore {
        semantic: false,
        geometric: false,
        description: false,
    };

    pub fn matches(&self) -> u32 {
        u32::from(self.semantic) + u32::from(self.geometric) + u32::from(self.description)
    }

    pub fn fraction(&self) -> f64 {
        f64::from(self.matches()) / 3.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("prediction and truth lengths differ ({pred} vs {truth})")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("nothing to score")]
    EmptyInput,
}

fn attribute_token(s: &str) -> String {
    let norm = normalize_words(s);
    norm.strip_suffix(" shaped")
        .or_else(|| norm.strip_suffix("shaped"))
        .map(|t| t.trim().to_string())
        .unwrap_or(norm)
}

fn same_object(a: &ObjectAttributes, b: &ObjectAttributes) -> bool {
    normalize_words(&a.name) == normalize_words(&b.name)
        && attribute_token(&a.color) == attribute_token(&b.color)
        && attribute_token(&a.shape) == attribute_token(&b.shape)
}

/// Description text reduced for comparison: lowercase, no punctuation, no
/// articles, "behind of" read as "behind".
pub fn canonical_description_key(text: &str) -> String {
    normalize_words(text)
        .split(' ')
        .filter(|w| !matches!(*w, "the" | "a" | "an"))
        .collect::<Vec<_>>()
        .join(" ")
        .replace("behind of", "behind")
}

pub fn score_residual(pred: &VisualResidual, truth: &VisualResidual) -> ResidualScore {
    ResidualScore {
        semantic: same_object(&pred.semantic.source, &truth.semantic.source)
            && same_object(&pred.semantic.target, &truth.semantic.target),
        geometric: pred.geometric == truth.geometric,
        description: canonical_description_key(&pred.description)
            == canonical_description_key(&truth.description),
    }
}

/// Like [`score_residual`], with the unparsed sentinel scoring zero.
pub fn score_prediction(pred: &PredictedResidual, truth: &VisualResidual) -> ResidualScore {
    match pred {
        PredictedResidual::Parsed(r) => score_residual(r, truth),
        PredictedResidual::Unparsed { .. } => ResidualScore::ZERO,
    }
}

/// Mean per-pair element-match fraction.
pub fn sr_vrd(pred: &[PredictedResidual], truth: &[VisualResidual]) -> Result<f64, MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let total: u32 = pred.iter().zip(truth).map(|(p, t)| score_prediction(p, t).matches()).sum();
    Ok(f64::from(total) / (3.0 * pred.len() as f64))
}

/// Fraction of exact label matches; `None` (ambiguous or unparsed) never
/// matches.
pub fn sr_prd(pred: &[Option<PreferenceLabel>], truth: &[PreferenceLabel]) -> Result<f64, MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| **p == Some(**t)).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residual::SemanticPair;
    use crate::scene::GeometricRelation;

    fn residual(shape: &str, rel: GeometricRelation, desc: &str) -> VisualResidual {
        VisualResidual {
            semantic: SemanticPair {
                source: ObjectAttributes::new("apple", "red", shape),
                target: ObjectAttributes::new("orange drink", "orange", "cylinder"),
            },
            geometric: rel,
            description: desc.into(),
        }
    }

    #[test]
    fn scoring_rules() {
        let truth = residual("sphere", GeometricRelation::InFrontOf, "Move the apple in front of the orange drink.");
        assert_eq!(score_residual(&truth, &truth).fraction(), 1.0);
        let shaped = residual("Sphere_Shaped", GeometricRelation::InFrontOf, "move apple in front of orange drink");
        assert_eq!(score_residual(&shaped, &truth).fraction(), 1.0);
        let wrong_desc = residual("sphere", GeometricRelation::InFrontOf, "Move the apple behind the orange drink.");
        assert_eq!(score_residual(&wrong_desc, &truth).matches(), 2);
        let behind = residual("sphere", GeometricRelation::BehindOf, "Move the apple behind the orange drink.");
        let behind_of = residual("sphere", GeometricRelation::BehindOf, "Move the apple behind of the orange drink.");
        assert!(score_residual(&behind_of, &behind).description);
        let unparsed = PredictedResidual::Unparsed { raw: String::new() };
        assert_eq!(score_prediction(&unparsed, &truth), ResidualScore::ZERO);
    }

    #[test]
    fn rates() {
        let truth = residual("sphere", GeometricRelation::LeftOf, "Move the apple to the left of the orange drink.");
        let one_third = residual("cube", GeometricRelation::LeftOf, "x");
        let preds = vec![PredictedResidual::Parsed(truth.clone()), PredictedResidual::Parsed(one_third)];
        let sr = sr_vrd(&preds, &[truth.clone(), truth.clone()]).unwrap();
        assert!((sr - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(sr_vrd(&preds, &[truth]), Err(MetricError::LengthMismatch { pred: 2, truth: 1 }));
        assert_eq!(sr_vrd(&[], &[]), Err(MetricError::EmptyInput));

        use PreferenceLabel::*;
        let t = [GroupByColor, GroupByShape, AlignVertical, AlignHorizontal];
        let p = [Some(GroupByColor), Some(GroupByShape), None, Some(AlignHorizontal)];
        assert_eq!(sr_prd(&p, &t).unwrap(), 0.75);
        assert_eq!(sr_prd(&[None, None], &t[..2]).unwrap(), 0.0);
        assert_eq!(sr_prd(&[Some(GroupByColor)], &[GroupByColor]).unwrap(), 1.0);
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[1.0, 0.0]);
        assert_eq!((m, s), (0.5, 0.5));
    }
}
