//! Deterministic backend that answers from an episode's ground truth, with
//! optional per-element noise.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{format_vrd_response, BackendError, BackendRequest, BackendResponse, MllmBackend, PromptKind};
use crate::catalog::Catalog;
use crate::episode::EpisodeRecord;
use crate::residual::{canonical_description, ObjectAttributes, VisualResidual};
use crate::scene::{GeometricRelation, PreferenceLabel};
use crate::scenegen::rng_for;

#[derive(Debug, Clone)]
pub struct GroundTruthOracle {
    episode: EpisodeRecord,
    noise: f64,
    seed: u64,
}

const STREAM_PRD: u64 = 1;
const STREAM_NAIVE: u64 = 2;
const STREAM_L2R: u64 = 3;
const STREAM_VRD_BASE: u64 = 1 << 32;

/// Per-axis position noise amplitude per unit of noise rate.
pub const L2R_NOISE_SCALE: f64 = 0.25;

impl GroundTruthOracle {
    /// `noise` is clamped to [0, 1].
    pub fn new(episode: EpisodeRecord, noise: f64, seed: u64) -> Self {
        Self {
            episode,
            noise: noise.clamp(0.0, 1.0),
            seed,
        }
    }

    pub fn episode(&self) -> &EpisodeRecord {
        &self.episode
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mixed = self.seed ^ self.episode.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(29);
        rng_for(mixed, stream)
    }

    fn hit(&self, rng: &mut ChaCha8Rng) -> bool {
        // always draw so streams stay aligned across noise levels
        let u: f64 = rng.random();
        u < self.noise
    }

    /// Ground-truth residual of pair `k` with independent corruption of
    /// each of its three elements.
    pub fn noisy_residual(&self, k: usize) -> Option<VisualResidual> {
        let truth = self.episode.ground_truth_residuals.get(k)?;
        let mut rng = self.rng(STREAM_VRD_BASE + k as u64);
        let (hit_sem, hit_geo, hit_desc) = (self.hit(&mut rng), self.hit(&mut rng), self.hit(&mut rng));

        let mut out = truth.clone();
        if hit_sem {
            let catalog = Catalog::for_task(self.episode.task);
            let swap_source = rng.random_bool(0.5);
            let side = if swap_source {
                &mut out.semantic.source
            } else {
                &mut out.semantic.target
            };
            let others: Vec<_> = catalog.entries.iter().filter(|e| e.name != side.name).collect();
            let pick = others.choose(&mut rng).expect("catalogs hold several objects");
            *side = ObjectAttributes::new(pick.name, pick.color.as_str(), pick.shape.as_str());
        }
        if hit_geo {
            out.geometric = other_relation(truth.geometric, &mut rng);
        }
        if hit_desc {
            // the regenerated sentence always names a wrong relation, so it
            // never coincides with the truthful description
            let relation = if hit_geo {
                out.geometric
            } else {
                other_relation(truth.geometric, &mut rng)
            };
            out.description = canonical_description(&out.semantic, relation);
        }
        Some(out)
    }

    fn noisy_label(&self, stream: u64) -> PreferenceLabel {
        let mut rng = self.rng(stream);
        let truth = self.episode.label;
        if self.hit(&mut rng) {
            let others: Vec<PreferenceLabel> =
                PreferenceLabel::ALL.into_iter().filter(|l| *l != truth).collect();
            *others.choose(&mut rng).expect("eight alternatives")
        } else {
            truth
        }
    }

    fn positions_text(&self) -> String {
        let mut rng = self.rng(STREAM_L2R);
        let amp = self.noise * L2R_NOISE_SCALE;
        let mut lines = Vec::new();
        for obj in &self.episode.final_scene().objects {
            let (mut x, mut y) = (obj.position.x, obj.position.y);
            let dx: f64 = rng.random_range(-1.0..=1.0);
            let dy: f64 = rng.random_range(-1.0..=1.0);
            if amp > 0.0 {
                x = (x + dx * amp).clamp(0.0, 1.0);
                y = (y + dy * amp).clamp(0.0, 1.0);
            }
            lines.push(format!("{}: ({x}, {y})", obj.name));
        }
        lines.join("\n")
    }
}

fn other_relation(truth: GeometricRelation, rng: &mut ChaCha8Rng) -> GeometricRelation {
    let others: Vec<GeometricRelation> =
        GeometricRelation::ALL.into_iter().filter(|r| *r != truth).collect();
    *others.choose(rng).expect("three alternatives")
}

impl MllmBackend for GroundTruthOracle {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let kind = request.bundle.kind;
        let text = match kind {
            PromptKind::Vrd { pair_index } => self
                .noisy_residual(pair_index)
                .map(|r| format_vrd_response(&r))
                .ok_or_else(|| BackendError::UnrecognizedRequest(kind.label()))?,
            PromptKind::Prd => format!("Preference: {}", self.noisy_label(STREAM_PRD).sentence()),
            PromptKind::Naive => format!("Preference: {}", self.noisy_label(STREAM_NAIVE).sentence()),
            PromptKind::L2rPositions => self.positions_text(),
        };
        Ok(BackendResponse::text(text))
    }

    fn id(&self) -> String {
        format!("oracle(p={},seed={})", self.noise, self.seed)
    }

    fn max_concurrency(&self) -> usize {
        4
    }
}
