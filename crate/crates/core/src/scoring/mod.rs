//! Soft targets, classification loss, top-k selection, a reference attention
//! block and the evaluation metrics.
//!
//! Two distance notions coexist here and are never mixed: soft targets use
//! `Dist` (max squared waypoint error, m²); metrics use plain Euclidean
//! error (m).

mod attention;
mod metrics;
mod pipeline;

pub use attention::{attention_forward, AttentionBlockSpec, AttentionOutput, AttentionWeights};
pub use metrics::{ade, aggregate, fde, metrics, BatchMetrics, SceneMetrics, MISS_THRESHOLD};
pub use pipeline::{oracle_scores, StubScorer, EMBED_SCALE};

use crate::trajset::{dist, Trajectory};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Logits,
    Probabilities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub values: Vec<f64>,
    pub kind: ScoreKind,
}

impl ScoreVector {
    pub fn logits(values: Vec<f64>) -> Result<ScoreVector> {
        if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Precondition("logits must not be NaN or +inf".into()));
        }
        Ok(ScoreVector {
            values,
            kind: ScoreKind::Logits,
        })
    }

    pub fn probabilities(values: Vec<f64>) -> Result<ScoreVector> {
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Precondition("probabilities must be finite and non-negative".into()));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(ScoreVector {
            values,
            kind: ScoreKind::Probabilities,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Probabilities over all entries (softmax for logits).
    pub fn to_probabilities(&self) -> Vec<f64> {
        match self.kind {
            ScoreKind::Probabilities => self.values.clone(),
            ScoreKind::Logits => softmax(&self.values),
        }
    }
}

/// Numerically stable softmax. `-inf` entries get zero mass.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return vec![1.0 / x.len() as f64; x.len()];
    }
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Soft targets over a feasible set. `psi[i]` is zero outside `support`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDistribution {
    pub psi: Vec<f64>,
    pub tau: f64,
    pub k_top: usize,
    /// Indices carrying mass, ascending.
    pub support: Vec<usize>,
}

impl TargetDistribution {
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.psi.iter().enumerate() {
            if p > self.psi[best] {
                best = i;
            }
        }
        best
    }
}

/// Indices of the `k` smallest values, ties to the lower index, returned ascending.
fn k_smallest(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Soft targets from precomputed `Dist` values (m²).
///
/// The `k_top` smallest distances form the support; within it
/// `psi = softmax(-Dist / tau)`. `k_top` larger than the set uses the whole set.
pub fn soft_targets_from_dist(dists: &[f64], tau: f64, k_top: usize) -> Result<TargetDistribution> {
    if !(tau > 0.0) {
        return Err(Error::Precondition(format!("temperature must be positive, got {tau}")));
    }
    if dists.is_empty() {
        return Err(Error::Precondition("feasible set is empty".into()));
    }
    if k_top == 0 {
        return Err(Error::Precondition("k_top must be positive".into()));
    }
    let support = k_smallest(dists, k_top);
    let logits: Vec<f64> = support.iter().map(|&i| -dists[i] / tau).collect();
    let mut psi = vec![0.0; dists.len()];
    for (&i, p) in support.iter().zip(softmax(&logits)) {
        psi[i] = p;
    }
    Ok(TargetDistribution { psi, tau, k_top, support })
}

pub fn soft_targets(feasible: &[Trajectory], gt: &Trajectory, tau: f64, k_top: usize) -> Result<TargetDistribution> {
    if feasible.is_empty() {
        return Err(Error::Precondition("feasible set is empty".into()));
    }
    let dists = feasible.iter().map(|t| dist(t, gt)).collect::<Result<Vec<_>>>()?;
    soft_targets_from_dist(&dists, tau, k_top)
}

/// Shannon entropy in nats; zero entries contribute nothing.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// Cross-entropy `H(psi, gamma)` in nats, with `gamma` the predicted
/// distribution renormalized over the target support.
pub fn classification_loss(predicted: &ScoreVector, targets: &TargetDistribution) -> Result<f64> {
    if predicted.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: targets.len(),
        });
    }
    let gamma: Vec<f64> = match predicted.kind {
        ScoreKind::Logits => softmax(&targets.support.iter().map(|&i| predicted.values[i]).collect::<Vec<_>>()),
        ScoreKind::Probabilities => {
            let p: Vec<f64> = targets.support.iter().map(|&i| predicted.values[i]).collect();
            let s: f64 = p.iter().sum();
            if s > 0.0 {
                p.into_iter().map(|v| v / s).collect()
            } else {
                vec![0.0; targets.support.len()]
            }
        }
    };
    Ok(-targets
        .support
        .iter()
        .zip(&gamma)
        .map(|(&i, &g)| targets.psi[i] * g.max(PROB_FLOOR).ln())
        .sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selected {
    pub index: usize,
    pub trajectory: Trajectory,
    pub probability: f64,
}

/// The `k` most probable trajectories, descending, ties to the lower index.
pub fn select_topk(scores: &ScoreVector, feasible: &[Trajectory], k: usize) -> Result<Vec<Selected>> {
    if scores.len() != feasible.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: feasible.len(),
        });
    }
    if k > feasible.len() {
        return Err(Error::Precondition(format!(
            "cannot select {k} of {} trajectories",
            feasible.len()
        )));
    }
    let probs = scores.to_probabilities();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| Selected {
            index: i,
            trajectory: feasible[i].clone(),
            probability: probs[i],
        })
        .collect())
}
