//! Stub encoders and a fixed readout so that refine, attend, score, select
//! and evaluate run end to end without a trained network.

use super::attention::{attention_forward, AttentionBlockSpec, D_MODEL};
use super::{ScoreVector, TargetDistribution};
use crate::geometry::Vec2;
use crate::trajset::Trajectory;
use crate::Result;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Coordinates are divided by this (m) before embedding.
pub const EMBED_SCALE: f64 = 50.0;

/// Polyline embedding: scaled coordinates of up to 63 points, then the
/// point count and a constant 1.
fn embed(points: &[Vec2]) -> [f64; D_MODEL] {
    let mut e = [0.0; D_MODEL];
    let cap = (D_MODEL - 2) / 2;
    for (i, p) in points.iter().take(cap).enumerate() {
        e[2 * i] = p.x / EMBED_SCALE;
        e[2 * i + 1] = p.y / EMBED_SCALE;
    }
    e[D_MODEL - 2] = points.len() as f64 / 100.0;
    e[D_MODEL - 1] = 1.0;
    e
}

fn stack(rows: &[[f64; D_MODEL]]) -> Array2<f64> {
    Array2::from_shape_fn((rows.len(), D_MODEL), |(i, j)| rows[i][j])
}

/// Trajectory queries attend over context polylines (goal lanes, actor
/// pasts); a fixed linear readout of the attended features plus the query
/// embedding yields one logit per trajectory.
#[derive(Debug, Clone)]
pub struct StubScorer {
    pub attention: AttentionBlockSpec,
    pub readout: Array1<f64>,
}

impl StubScorer {
    pub fn seeded(seed: u64) -> StubScorer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let bound = 1.0 / (D_MODEL as f64).sqrt();
        StubScorer {
            attention: AttentionBlockSpec::seeded(seed),
            readout: Array1::from_shape_fn(D_MODEL, |_| rng.gen_range(-bound..bound)),
        }
    }

    pub fn score(&self, trajectories: &[Trajectory], context: &[Vec<Vec2>]) -> Result<ScoreVector> {
        let queries = stack(&trajectories.iter().map(|t| embed(t.waypoints())).collect::<Vec<_>>());
        let mut ctx: Vec<[f64; D_MODEL]> = context.iter().map(|c| embed(c)).collect();
        if ctx.is_empty() {
            ctx.push(embed(&[]));
        }
        let kv = stack(&ctx);
        let attended = attention_forward(queries.view(), kv.view(), kv.view(), &self.attention)?;
        let logits = (&attended.output + &queries).dot(&self.readout);
        ScoreVector::logits(logits.to_vec())
    }
}

/// Scores equal to the soft targets themselves: the best any scorer can do.
pub fn oracle_scores(targets: &TargetDistribution) -> ScoreVector {
    ScoreVector {
        values: targets.psi.clone(),
        kind: super::ScoreKind::Probabilities,
    }
}
