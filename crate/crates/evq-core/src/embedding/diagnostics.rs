//! Representation-quality diagnostics: alignment/uniformity of the
//! embedding space and a deterministic 2-d PCA projection for plots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::textcore::TokenSeq;
use crate::{Error, Result};

use super::{dot, EncoderModel};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Alignment and uniformity of the representation space.
///
/// - alignment: mean over pairs of ‖e − e⁺‖² (lower is better);
/// - uniformity: `ln` mean over distinct sample pairs of `exp(−2‖a − b‖²)`
///   (more negative is better; 0 means total collapse).
pub fn alignment_and_uniformity(
    model: &EncoderModel,
    eval_pairs: &[(TokenSeq, TokenSeq)],
    sample: &[TokenSeq],
) -> Result<(f64, f64)> {
    if eval_pairs.is_empty() {
        return Err(Error::invalid("alignment needs at least one pair"));
    }
    if sample.len() < 2 {
        return Err(Error::invalid("uniformity needs at least two sample texts"));
    }
    let alignment = eval_pairs
        .iter()
        .map(|(a, b)| sq_dist(&model.encode(a), &model.encode(b)))
        .sum::<f64>()
        / eval_pairs.len() as f64;

    let encoded: Vec<Vec<f64>> = sample.iter().map(|s| model.encode(s)).collect();
    let mut sum = 0.0;
    let mut count = 0u64;
    for i in 0..encoded.len() {
        for j in (i + 1)..encoded.len() {
            sum += (-2.0 * sq_dist(&encoded[i], &encoded[j])).exp();
            count += 1;
        }
    }
    Ok((alignment, (sum / count as f64).ln()))
}

/// Projects vectors onto their top-2 principal components via power
/// iteration with deflation. Deterministic for a fixed seed; components
/// with (near-)zero variance project to 0.
pub fn pca_project_2d(vectors: &[Vec<f64>], seed: u64) -> Result<Vec<(f64, f64)>> {
    if vectors.len() < 2 {
        return Err(Error::invalid("pca needs at least two vectors"));
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::invalid("pca input vectors must share one dimension"));
    }
    let n = vectors.len() as f64;
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x / n;
        }
    }
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let total_var: f64 = centered.iter().map(|v| dot(v, v)).sum();
    if total_var <= 1e-18 {
        return Ok(vec![(0.0, 0.0); vectors.len()]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut eigenvalues: Vec<f64> = Vec::new();
    for _ in 0..2usize.min(dim) {
        let (v, lambda) = power_iterate(&centered, &components, &eigenvalues, dim, &mut rng);
        components.push(v);
        eigenvalues.push(lambda);
    }

    let project = |x: &[f64], c: usize| -> f64 {
        if c >= components.len() || eigenvalues[c] <= 1e-12 * total_var.max(1.0) {
            0.0
        } else {
            dot(x, &components[c])
        }
    };
    Ok(centered.iter().map(|x| (project(x, 0), project(x, 1))).collect())
}

/// One deflated power iteration on the scatter matrix `Σ x xᵀ`, applied
/// implicitly through the data. Returns (unit eigenvector, eigenvalue).
fn power_iterate(
    centered: &[Vec<f64>],
    prev: &[Vec<f64>],
    prev_values: &[f64],
    dim: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64) {
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for x in centered {
            let c = dot(x, v);
            for (o, xv) in out.iter_mut().zip(x) {
                *o += c * xv;
            }
        }
        // Deflate previously found components.
        for (p, lambda) in prev.iter().zip(prev_values) {
            let c = lambda * dot(p, v);
            for (o, pv) in out.iter_mut().zip(p) {
                *o -= c * pv;
            }
        }
        out
    };

    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize_or_e1(&mut v);
    // Keep the start vector out of the span of previous components.
    orthogonalize(&mut v, prev);
    let mut lambda = 0.0;
    for _ in 0..300 {
        let mut next = apply(&v);
        orthogonalize(&mut next, prev);
        let norm = dot(&next, &next).sqrt();
        if norm <= 1e-18 {
            return (vec![0.0; dim], 0.0);
        }
        for x in next.iter_mut() {
            *x /= norm;
        }
        let delta = sq_dist(&next, &v);
        v = next;
        lambda = norm;
        if delta < 1e-26 {
            break;
        }
    }
    // Deterministic sign: make the largest-magnitude loading positive.
    if let Some(max) = v
        .iter()
        .cloned()
        .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
    {
        if max < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
    (v, lambda)
}

fn normalize_or_e1(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    if norm <= 1e-18 {
        v[0] = 1.0;
        return;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        for (x, bv) in v.iter_mut().zip(b) {
            *x -= c * bv;
        }
    }
}
