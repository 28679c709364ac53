//! Multi-head scaled dot-product attention with fixed (untrained) weights.

use crate::{Error, Result};
use ndarray::{s, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const D_MODEL: usize = 128;
pub const N_HEADS: usize = 8;

const MATRIX_NAMES: [&str; 4] = ["w_q", "w_k", "w_v", "w_o"];

/// Projection matrices, each `d_model × d_model`, applied as `x · W`.
/// Head `h` uses columns `h·d_k .. (h+1)·d_k` of `w_q`, `w_k` and `w_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub w_q: Array2<f64>,
    pub w_k: Array2<f64>,
    pub w_v: Array2<f64>,
    pub w_o: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRecord {
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    matrices: BTreeMap<String, MatrixRecord>,
}

impl AttentionWeights {
    /// Uniform in ±1/√d_model from a ChaCha8 stream, filled q, k, v, o in row-major order.
    pub fn seeded(seed: u64, d_model: usize) -> AttentionWeights {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (d_model as f64).sqrt();
        let mut draw = || Array2::from_shape_fn((d_model, d_model), |_| rng.gen_range(-bound..bound));
        let w_q = draw();
        let w_k = draw();
        let w_v = draw();
        let w_o = draw();
        AttentionWeights { w_q, w_k, w_v, w_o }
    }

    pub fn identity(d_model: usize) -> AttentionWeights {
        let eye = Array2::eye(d_model);
        AttentionWeights {
            w_q: eye.clone(),
            w_k: eye.clone(),
            w_v: eye.clone(),
            w_o: eye,
        }
    }

    pub fn d_model(&self) -> usize {
        self.w_q.nrows()
    }

    fn matrices(&self) -> [&Array2<f64>; 4] {
        [&self.w_q, &self.w_k, &self.w_v, &self.w_o]
    }

    /// JSON file of named row-major matrices with shape headers:
    /// `{"matrices": {"w_q": {"shape": [128, 128], "data": [...]}, ...}}`.
    pub fn load(path: impl AsRef<Path>) -> Result<AttentionWeights> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ctx = path.display().to_string();
        let file: WeightsFile = serde_json::from_str(&text).map_err(|e| Error::parse(&ctx, e))?;
        let take = |name: &str| -> Result<Array2<f64>> {
            let rec = file
                .matrices
                .get(name)
                .ok_or_else(|| Error::parse(&ctx, format!("missing matrix {name}")))?;
            Array2::from_shape_vec((rec.shape[0], rec.shape[1]), rec.data.clone())
                .map_err(|e| Error::parse(&ctx, format!("matrix {name}: {e}")))
        };
        let w = AttentionWeights {
            w_q: take("w_q")?,
            w_k: take("w_k")?,
            w_v: take("w_v")?,
            w_o: take("w_o")?,
        };
        let d = w.d_model();
        if w.matrices().iter().any(|m| m.dim() != (d, d)) {
            return Err(Error::parse(ctx, "all matrices must be square and of equal size"));
        }
        Ok(w)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let matrices = MATRIX_NAMES
            .iter()
            .zip(self.matrices())
            .map(|(name, m)| {
                let (r, c) = m.dim();
                (
                    name.to_string(),
                    MatrixRecord {
                        shape: [r, c],
                        data: m.iter().copied().collect(),
                    },
                )
            })
            .collect();
        let text = serde_json::to_string(&WeightsFile { matrices }).expect("weights serialize");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionBlockSpec {
    pub d_model: usize,
    pub n_heads: usize,
    pub weights: Option<AttentionWeights>,
}

impl Default for AttentionBlockSpec {
    fn default() -> Self {
        AttentionBlockSpec {
            d_model: D_MODEL,
            n_heads: N_HEADS,
            weights: None,
        }
    }
}

impl AttentionBlockSpec {
    pub fn new(d_model: usize, n_heads: usize, weights: Option<AttentionWeights>) -> Result<AttentionBlockSpec> {
        if n_heads == 0 || d_model % n_heads != 0 {
            return Err(Error::Precondition(format!(
                "d_model {d_model} is not divisible by {n_heads} heads"
            )));
        }
        if let Some(w) = &weights {
            if w.d_model() != d_model {
                return Err(Error::LengthMismatch {
                    left: w.d_model(),
                    right: d_model,
                });
            }
        }
        Ok(AttentionBlockSpec {
            d_model,
            n_heads,
            weights,
        })
    }

    pub fn seeded(seed: u64) -> AttentionBlockSpec {
        AttentionBlockSpec {
            weights: Some(AttentionWeights::seeded(seed, D_MODEL)),
            ..Default::default()
        }
    }

    pub fn d_k(&self) -> usize {
        self.d_model / self.n_heads
    }
}

#[derive(Debug, Clone)]
pub struct AttentionOutput {
    /// `S_q × d_model`.
    pub output: Array2<f64>,
    /// One `S_q × S_k` row-stochastic matrix per head.
    pub weights: Vec<Array2<f64>>,
}

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// `concat_h softmax(Q_h K_hᵀ / √d_k) V_h · W_o`.
pub fn attention_forward(
    queries: ArrayView2<f64>,
    keys: ArrayView2<f64>,
    values: ArrayView2<f64>,
    spec: &AttentionBlockSpec,
) -> Result<AttentionOutput> {
    let w = spec
        .weights
        .as_ref()
        .ok_or_else(|| Error::Precondition("attention weights are not loaded".into()))?;
    let d = spec.d_model;
    for cols in [queries.ncols(), keys.ncols(), values.ncols()] {
        if cols != d {
            return Err(Error::LengthMismatch { left: cols, right: d });
        }
    }
    if keys.nrows() != values.nrows() {
        return Err(Error::LengthMismatch {
            left: keys.nrows(),
            right: values.nrows(),
        });
    }
    if keys.nrows() == 0 {
        return Err(Error::Precondition("attention needs at least one key".into()));
    }
    let d_k = spec.d_k();
    let scale = 1.0 / (d_k as f64).sqrt();
    let q = queries.dot(&w.w_q);
    let k = keys.dot(&w.w_k);
    let v = values.dot(&w.w_v);

    let mut concat = Array2::zeros((queries.nrows(), d));
    let mut head_weights = Vec::with_capacity(spec.n_heads);
    for h in 0..spec.n_heads {
        let cols = s![.., h * d_k..(h + 1) * d_k];
        let mut a = q.slice(cols).dot(&k.slice(cols).t()) * scale;
        softmax_rows(&mut a);
        concat.slice_mut(cols).assign(&a.dot(&v.slice(cols)));
        head_weights.push(a);
    }
    Ok(AttentionOutput {
        output: concat.dot(&w.w_o),
        weights: head_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn random(rows: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, D_MODEL), |_| rng.gen_range(-1.0..1.0))
    }

    /// Direct loops over heads, rows and columns.
    fn naive(q_in: &Array2<f64>, kv_in: &Array2<f64>, w: &AttentionWeights) -> Array2<f64> {
        let d = D_MODEL;
        let d_k = d / N_HEADS;
        let project = |x: &Array2<f64>, m: &Array2<f64>| {
            let mut out = Array2::zeros((x.nrows(), d));
            for i in 0..x.nrows() {
                for j in 0..d {
                    let mut acc = 0.0;
                    for t in 0..d {
                        acc += x[[i, t]] * m[[t, j]];
                    }
                    out[[i, j]] = acc;
                }
            }
            out
        };
        let q = project(q_in, &w.w_q);
        let k = project(kv_in, &w.w_k);
        let v = project(kv_in, &w.w_v);
        let mut concat = Array2::zeros((q.nrows(), d));
        for h in 0..N_HEADS {
            for i in 0..q.nrows() {
                let mut logits = vec![0.0; k.nrows()];
                for j in 0..k.nrows() {
                    for t in h * d_k..(h + 1) * d_k {
                        logits[j] += q[[i, t]] * k[[j, t]];
                    }
                    logits[j] /= (d_k as f64).sqrt();
                }
                let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
                let z: f64 = e.iter().sum();
                for t in h * d_k..(h + 1) * d_k {
                    concat[[i, t]] = (0..k.nrows()).map(|j| e[j] / z * v[[j, t]]).sum();
                }
            }
        }
        project(&concat, &w.w_o)
    }

    #[test]
    fn matches_naive_loops() {
        for seed in 0..5 {
            let spec = AttentionBlockSpec::seeded(seed);
            let q = random(4, 100 + seed);
            let kv = random(6, 200 + seed);
            let got = attention_forward(q.view(), kv.view(), kv.view(), &spec).unwrap();
            let want = naive(&q, &kv, spec.weights.as_ref().unwrap());
            for (a, b) in got.output.iter().zip(want.iter()) {
                assert!((a - b).abs() < 1e-6);
            }
            for w in &got.weights {
                for row in w.rows() {
                    assert!((row.sum() - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn single_key_returns_value() {
        let spec = AttentionBlockSpec::new(D_MODEL, N_HEADS, Some(AttentionWeights::identity(D_MODEL))).unwrap();
        let q = random(3, 1);
        let kv = random(1, 2);
        let out = attention_forward(q.view(), kv.view(), kv.view(), &spec).unwrap();
        for row in out.output.rows() {
            assert_eq!(row, kv.row(0));
        }
    }

    #[test]
    fn identical_keys_average_values() {
        let spec = AttentionBlockSpec::new(D_MODEL, N_HEADS, Some(AttentionWeights::identity(D_MODEL))).unwrap();
        let q = random(2, 3);
        let k = {
            let r = random(1, 4);
            ndarray::concatenate(Axis(0), &[r.view(), r.view()]).unwrap()
        };
        let v = random(2, 5);
        let out = attention_forward(q.view(), k.view(), v.view(), &spec).unwrap();
        let mean = (&v.row(0) + &v.row(1)) / 2.0;
        for row in out.output.rows() {
            for (a, b) in row.iter().zip(mean.iter()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn head_output_is_convex_combination_of_values() {
        let spec = AttentionBlockSpec::new(16, 2, Some(AttentionWeights::seeded(9, 16))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = Array2::from_shape_fn((3, 16), |_| rng.gen_range(-1.0..1.0));
        let kv = Array2::from_shape_fn((5, 16), |_| rng.gen_range(-1.0..1.0));
        let out = attention_forward(q.view(), kv.view(), kv.view(), &spec).unwrap();
        let w = spec.weights.as_ref().unwrap();
        let v = kv.dot(&w.w_v);
        // Undo the output projection and rebuild each head from its weights.
        let concat = out.output.dot(&inverse(&w.w_o));
        for (h, a) in out.weights.iter().enumerate() {
            assert!(a.iter().all(|&x| x >= 0.0));
            let rebuilt = a.dot(&v.slice(s![.., h * 8..(h + 1) * 8]));
            for (x, y) in rebuilt.iter().zip(concat.slice(s![.., h * 8..(h + 1) * 8]).iter()) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    fn inverse(m: &Array2<f64>) -> Array2<f64> {
        let n = m.nrows();
        let mut a = m.clone();
        let mut inv = Array2::eye(n);
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[[i, c]].abs().total_cmp(&a[[j, c]].abs())).unwrap();
            for j in 0..n {
                a.swap([c, j], [p, j]);
                inv.swap([c, j], [p, j]);
            }
            let d = a[[c, c]];
            for j in 0..n {
                a[[c, j]] /= d;
                inv[[c, j]] /= d;
            }
            for i in 0..n {
                if i != c {
                    let f = a[[i, c]];
                    for j in 0..n {
                        a[[i, j]] -= f * a[[c, j]];
                        inv[[i, j]] -= f * inv[[c, j]];
                    }
                }
            }
        }
        inv
    }

    #[test]
    fn errors() {
        let q = random(2, 1);
        assert!(attention_forward(q.view(), q.view(), q.view(), &AttentionBlockSpec::default()).is_err());
        let spec = AttentionBlockSpec::seeded(0);
        let narrow = Array2::<f64>::zeros((2, 64));
        assert!(attention_forward(narrow.view(), q.view(), q.view(), &spec).is_err());
        assert!(AttentionBlockSpec::new(100, 8, None).is_err());
    }

    #[test]
    fn weights_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.json");
        let w = AttentionWeights::seeded(4, D_MODEL);
        w.save(&path).unwrap();
        assert_eq!(AttentionWeights::load(&path).unwrap(), w);
    }
}
