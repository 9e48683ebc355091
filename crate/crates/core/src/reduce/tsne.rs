//! Exact (all-pairs) t-SNE into two dimensions.
//!
//! Memory is O(n²): one dense n × n probability matrix. Point counts above
//! [`MAX_TSNE_POINTS`] are rejected.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{sq_dist, ReduceError};

pub const MAX_TSNE_POINTS: usize = 10_000;

const ENTROPY_TOLERANCE: f64 = 1e-7;
const MAX_SEARCH_STEPS: usize = 200;
// Weights below e^-650 (about 1e-282) are stored as zero so that no later
// product of probabilities and kernel values lands in the subnormal range,
// where arithmetic is orders of magnitude slower.
const WEIGHT_CUTOFF: f64 = 650.0;
const INIT_SD: f64 = 1e-4;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    /// Iterations run with exaggerated attraction and low momentum.
    pub exaggeration_iterations: usize,
    /// Seed for the initial layout; `None` inherits the caller's seed.
    pub seed: Option<u64>,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            seed: None,
        }
    }
}

impl TsneConfig {
    pub fn validate(&self) -> Result<(), ReduceError> {
        let bad = |field, reason: &str| {
            Err(ReduceError::InvalidTsneConfig {
                field,
                reason: reason.to_string(),
            })
        };
        if !(self.perplexity > 0.0 && self.perplexity.is_finite()) {
            return bad("perplexity", "must be a positive number");
        }
        if self.iterations == 0 {
            return bad("iterations", "must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be a positive number");
        }
        if !(self.early_exaggeration > 0.0 && self.early_exaggeration.is_finite()) {
            return bad("early_exaggeration", "must be a positive number");
        }
        Ok(())
    }

    fn check_points(&self, n: usize) -> Result<(), ReduceError> {
        if n < 4 {
            return Err(ReduceError::TooFewPoints(n));
        }
        if n > MAX_TSNE_POINTS {
            return Err(ReduceError::TooManyPoints(n));
        }
        if self.perplexity >= n as f64 {
            return Err(ReduceError::PerplexityTooLarge {
                perplexity: self.perplexity,
                points: n,
            });
        }
        Ok(())
    }
}

/// Neighbor probabilities and the per-point bandwidth search results.
#[derive(Debug, Clone)]
pub struct Affinities {
    /// Conditional (row-stochastic) or joint (symmetric) probabilities,
    /// depending on the constructor. The diagonal is zero.
    pub p: Array2<f64>,
    /// Gaussian precision 1 / (2σ²) found for each point.
    pub betas: Vec<f64>,
    /// Shannon entropy (bits) of each conditional distribution.
    pub entropies: Vec<f64>,
}

struct RowSearch {
    beta: f64,
    entropy_bits: f64,
}

/// Bisect the precision so the row's entropy matches `target_bits`.
/// `shifted` holds d_j − min d (self excluded); `weights` receives the
/// normalized probabilities.
fn search_row(shifted: &[f64], target_bits: f64, weights: &mut [f64]) -> RowSearch {
    let ln2 = std::f64::consts::LN_2;
    let mean_shift = shifted.iter().sum::<f64>() / shifted.len() as f64;
    let mut beta = if mean_shift > 0.0 { 1.0 / mean_shift } else { 1.0 };
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);

    // returns the entropy in bits and its derivative with respect to beta
    let evaluate = |beta: f64, weights: &mut [f64]| -> (f64, f64) {
        let (mut sum, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (w, &s) in weights.iter_mut().zip(shifted) {
            let x = beta * s;
            *w = if x > WEIGHT_CUTOFF { 0.0 } else { (-x).exp() };
            sum += *w;
            m1 += *w * s;
            m2 += *w * s * s;
        }
        let (m1, m2) = (m1 / sum, m2 / sum);
        // H = ln S + β E[shift], in nats; the minimum shift is 0 so S ≥ 1
        ((sum.ln() + beta * m1) / ln2, -beta * (m2 - m1 * m1) / ln2)
    };

    // Newton steps, falling back to bisection when a step leaves the bracket
    let (mut entropy, mut slope) = evaluate(beta, weights);
    for _ in 0..MAX_SEARCH_STEPS {
        let diff = entropy - target_bits;
        if diff.abs() < ENTROPY_TOLERANCE {
            break;
        }
        if diff > 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
        let newton = beta - diff / slope;
        beta = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            beta * 2.0
        };
        (entropy, slope) = evaluate(beta, weights);
    }
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    RowSearch {
        beta,
        entropy_bits: entropy,
    }
}

/// Conditional probabilities p(j | i) with per-point bandwidths chosen so
/// each row's entropy equals log2(perplexity).
pub fn conditional_affinities(m: &Array2<f64>, perplexity: f64) -> Result<Affinities, ReduceError> {
    let n = m.nrows();
    TsneConfig {
        perplexity,
        ..Default::default()
    }
    .check_points(n)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ReduceError::NonFinite);
    }
    let target = perplexity.log2();
    let mut p = Array2::zeros((n, n));
    let mut betas = Vec::with_capacity(n);
    let mut entropies = Vec::with_capacity(n);
    let mut shifted = vec![0.0; n - 1];
    let mut weights = vec![0.0; n - 1];
    for i in 0..n {
        for (k, j) in (0..n).filter(|&j| j != i).enumerate() {
            shifted[k] = sq_dist(m, i, j);
        }
        let min = shifted.iter().cloned().fold(f64::INFINITY, f64::min);
        shifted.iter_mut().for_each(|s| *s -= min);
        let found = search_row(&shifted, target, &mut weights);
        let mut row = p.row_mut(i);
        for (k, j) in (0..n).filter(|&j| j != i).enumerate() {
            row[j] = weights[k];
        }
        betas.push(found.beta);
        entropies.push(found.entropy_bits);
    }
    Ok(Affinities { p, betas, entropies })
}

/// Symmetrized joint probabilities p_ij = (p(j|i) + p(i|j)) / 2n.
pub fn joint_probabilities(m: &Array2<f64>, perplexity: f64) -> Result<Affinities, ReduceError> {
    let mut aff = conditional_affinities(m, perplexity)?;
    let n = m.nrows();
    let scale = 1.0 / (2.0 * n as f64);
    for i in 0..n {
        for j in i + 1..n {
            let v = (aff.p[[i, j]] + aff.p[[j, i]]) * scale;
            aff.p[[i, j]] = v;
            aff.p[[j, i]] = v;
        }
    }
    Ok(aff)
}

/// KL(P || Q) for a 2-D layout given in coordinate columns.
fn kl_from_layout(p: &[f64], n: usize, xs: &[f64], ys: &[f64]) -> f64 {
    let mut z = 0.0;
    let mut cross = 0.0;
    for i in 0..n {
        let row = &p[i * n..(i + 1) * n];
        for j in i + 1..n {
            let dx = xs[i] - xs[j];
            let dy = ys[i] - ys[j];
            let num = 1.0 / (1.0 + dx * dx + dy * dy);
            z += num;
            let pij = row[j];
            if pij > 0.0 {
                cross += pij * (pij.ln() - num.ln());
            }
        }
    }
    // both triangles count; sum of p is 1
    2.0 * cross + (2.0 * z).ln()
}

/// KL divergence between joint probabilities and the Student-t similarities
/// of an n × 2 embedding.
pub fn kl_divergence(p: &Array2<f64>, embedding: &Array2<f64>) -> f64 {
    let n = p.nrows();
    let xs: Vec<f64> = embedding.column(0).to_vec();
    let ys: Vec<f64> = embedding.column(1).to_vec();
    let flat = p.as_standard_layout();
    kl_from_layout(flat.as_slice().expect("standard layout"), n, &xs, &ys)
}

/// Embedding plus the KL divergence recorded after selected iterations.
#[derive(Debug, Clone)]
pub struct TsneTrace {
    pub embedding: Array2<f64>,
    /// (iteration index, KL divergence after that update).
    pub kl: Vec<(usize, f64)>,
}

pub fn tsne_embed(m: &Array2<f64>, cfg: &TsneConfig) -> Result<Array2<f64>, ReduceError> {
    Ok(run(m, cfg, None)?.embedding)
}

/// Like [`tsne_embed`], also recording the KL divergence after every
/// iteration from `trace_from` on.
pub fn tsne_embed_traced(m: &Array2<f64>, cfg: &TsneConfig, trace_from: usize) -> Result<TsneTrace, ReduceError> {
    run(m, cfg, Some(trace_from))
}

fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

const LANES: usize = 4;

/// Per-point attraction Σ p·q·(yᵢ − yⱼ) and unnormalized repulsion
/// Σ q²·(yᵢ − yⱼ), with q = 1 / (1 + ‖yᵢ − yⱼ‖²).
struct Forces {
    attract_x: Vec<f64>,
    attract_y: Vec<f64>,
    repel_x: Vec<f64>,
    repel_y: Vec<f64>,
}

impl Forces {
    fn new(n: usize) -> Forces {
        Forces {
            attract_x: vec![0.0; n],
            attract_y: vec![0.0; n],
            repel_x: vec![0.0; n],
            repel_y: vec![0.0; n],
        }
    }
}

/// One pass over the upper triangle filling `f`; returns Σ_{i<j} q.
/// Sums run in fixed lanes so the result does not depend on how the
/// compiler vectorizes the loop.
fn sweep_generic(p: &[f64], n: usize, xs: &[f64], ys: &[f64], f: &mut Forces) -> f64 {
    f.attract_x.fill(0.0);
    f.attract_y.fill(0.0);
    f.repel_x.fill(0.0);
    f.repel_y.fill(0.0);
    let mut z = 0.0;
    for i in 0..n {
        let (xi, yi) = (xs[i], ys[i]);
        let start = i + 1;
        let len = n - start;
        let row = &p[i * n + start..(i + 1) * n];
        let xj = &xs[start..];
        let yj = &ys[start..];
        let axj = &mut f.attract_x[start..];
        let ayj = &mut f.attract_y[start..];
        let rxj = &mut f.repel_x[start..];
        let ryj = &mut f.repel_y[start..];
        let mut ax = [0.0; LANES];
        let mut ay = [0.0; LANES];
        let mut rx = [0.0; LANES];
        let mut ry = [0.0; LANES];
        let mut zl = [0.0; LANES];
        let full = len - len % LANES;
        let chunks = row[..full]
            .chunks_exact(LANES)
            .zip(xj[..full].chunks_exact(LANES))
            .zip(yj[..full].chunks_exact(LANES))
            .zip(axj[..full].chunks_exact_mut(LANES))
            .zip(ayj[..full].chunks_exact_mut(LANES))
            .zip(rxj[..full].chunks_exact_mut(LANES))
            .zip(ryj[..full].chunks_exact_mut(LANES));
        for ((((((pc, xc), yc), axc), ayc), rxc), ryc) in chunks {
            for l in 0..LANES {
                let dx = xi - xc[l];
                let dy = yi - yc[l];
                let q = 1.0 / (1.0 + dx * dx + dy * dy);
                let a = pc[l] * q;
                let r = q * q;
                ax[l] += a * dx;
                ay[l] += a * dy;
                rx[l] += r * dx;
                ry[l] += r * dy;
                zl[l] += q;
                axc[l] -= a * dx;
                ayc[l] -= a * dy;
                rxc[l] -= r * dx;
                ryc[l] -= r * dy;
            }
        }
        for j in full..len {
            let l = j - full;
            let dx = xi - xj[j];
            let dy = yi - yj[j];
            let q = 1.0 / (1.0 + dx * dx + dy * dy);
            let a = row[j] * q;
            let r = q * q;
            ax[l] += a * dx;
            ay[l] += a * dy;
            rx[l] += r * dx;
            ry[l] += r * dy;
            zl[l] += q;
            axj[j] -= a * dx;
            ayj[j] -= a * dy;
            rxj[j] -= r * dx;
            ryj[j] -= r * dy;
        }
        let fold = |v: [f64; LANES]| (v[0] + v[1]) + (v[2] + v[3]);
        f.attract_x[i] += fold(ax);
        f.attract_y[i] += fold(ay);
        f.repel_x[i] += fold(rx);
        f.repel_y[i] += fold(ry);
        z += fold(zl);
    }
    z
}

/// AVX version of [`sweep_generic`]. Every lane performs the same IEEE
/// operations in the same order, so the two agree bit for bit.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx")]
fn sweep_avx(p: &[f64], n: usize, xs: &[f64], ys: &[f64], f: &mut Forces) -> f64 {
    use std::arch::x86_64::*;

    f.attract_x.fill(0.0);
    f.attract_y.fill(0.0);
    f.repel_x.fill(0.0);
    f.repel_y.fill(0.0);
    let mut z = 0.0;
    let one = _mm256_set1_pd(1.0);
    for i in 0..n {
        let start = i + 1;
        let len = n - start;
        let full = len - len % LANES;
        let row = &p[i * n + start..(i + 1) * n];
        let (xiv, yiv) = (_mm256_set1_pd(xs[i]), _mm256_set1_pd(ys[i]));
        let mut ax = _mm256_setzero_pd();
        let mut ay = _mm256_setzero_pd();
        let mut rx = _mm256_setzero_pd();
        let mut ry = _mm256_setzero_pd();
        let mut zl = _mm256_setzero_pd();
        for b in (0..full).step_by(LANES) {
            let j = start + b;
            // SAFETY (all loads and stores): each slice is bounds-checked to
            // exactly LANES elements before its pointer is taken.
            unsafe {
                let dx = _mm256_sub_pd(xiv, _mm256_loadu_pd(xs[j..j + LANES].as_ptr()));
                let dy = _mm256_sub_pd(yiv, _mm256_loadu_pd(ys[j..j + LANES].as_ptr()));
                let d2 = _mm256_add_pd(_mm256_add_pd(one, _mm256_mul_pd(dx, dx)), _mm256_mul_pd(dy, dy));
                let q = _mm256_div_pd(one, d2);
                let a = _mm256_mul_pd(_mm256_loadu_pd(row[b..b + LANES].as_ptr()), q);
                let r = _mm256_mul_pd(q, q);
                let (adx, ady) = (_mm256_mul_pd(a, dx), _mm256_mul_pd(a, dy));
                let (rdx, rdy) = (_mm256_mul_pd(r, dx), _mm256_mul_pd(r, dy));
                ax = _mm256_add_pd(ax, adx);
                ay = _mm256_add_pd(ay, ady);
                rx = _mm256_add_pd(rx, rdx);
                ry = _mm256_add_pd(ry, rdy);
                zl = _mm256_add_pd(zl, q);
                for (acc, v) in [
                    (&mut f.attract_x, adx),
                    (&mut f.attract_y, ady),
                    (&mut f.repel_x, rdx),
                    (&mut f.repel_y, rdy),
                ] {
                    let dst = acc[j..j + LANES].as_mut_ptr();
                    _mm256_storeu_pd(dst, _mm256_sub_pd(_mm256_loadu_pd(dst), v));
                }
            }
        }
        let lanes = |v: __m256d| {
            let mut out = [0.0; LANES];
            // SAFETY: `out` holds exactly four f64.
            unsafe { _mm256_storeu_pd(out.as_mut_ptr(), v) };
            out
        };
        let (mut ax, mut ay, mut rx, mut ry, mut zl) = (lanes(ax), lanes(ay), lanes(rx), lanes(ry), lanes(zl));
        let (xi, yi) = (xs[i], ys[i]);
        for (b, &p_ij) in row.iter().enumerate().take(len).skip(full) {
            let (l, j) = (b - full, start + b);
            let dx = xi - xs[j];
            let dy = yi - ys[j];
            let q = 1.0 / (1.0 + dx * dx + dy * dy);
            let a = p_ij * q;
            let r = q * q;
            ax[l] += a * dx;
            ay[l] += a * dy;
            rx[l] += r * dx;
            ry[l] += r * dy;
            zl[l] += q;
            f.attract_x[j] -= a * dx;
            f.attract_y[j] -= a * dy;
            f.repel_x[j] -= r * dx;
            f.repel_y[j] -= r * dy;
        }
        let fold = |v: [f64; LANES]| (v[0] + v[1]) + (v[2] + v[3]);
        f.attract_x[i] += fold(ax);
        f.attract_y[i] += fold(ay);
        f.repel_x[i] += fold(rx);
        f.repel_y[i] += fold(ry);
        z += fold(zl);
    }
    z
}

fn sweep(p: &[f64], n: usize, xs: &[f64], ys: &[f64], f: &mut Forces) -> f64 {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx") {
        // SAFETY: the CPU supports AVX, checked just above.
        return unsafe { sweep_avx(p, n, xs, ys, f) };
    }
    sweep_generic(p, n, xs, ys, f)
}

fn run(m: &Array2<f64>, cfg: &TsneConfig, trace_from: Option<usize>) -> Result<TsneTrace, ReduceError> {
    cfg.validate()?;
    let n = m.nrows();
    cfg.check_points(n)?;
    let aff = joint_probabilities(m, cfg.perplexity)?;
    let p = aff.p.into_raw_vec_and_offset().0;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    let normal = Normal::new(0.0, INIT_SD).expect("valid normal");
    let mut xs: Vec<f64> = Vec::with_capacity(n);
    let mut ys: Vec<f64> = Vec::with_capacity(n);
    for _ in 0..n {
        xs.push(normal.sample(&mut rng));
        ys.push(normal.sample(&mut rng));
    }

    let mut gains = vec![[1.0f64; 2]; n];
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut forces = Forces::new(n);
    let mut kl = Vec::new();

    for iter in 0..cfg.iterations {
        let exaggerating = iter < cfg.exaggeration_iterations;
        let exaggeration = if exaggerating { cfg.early_exaggeration } else { 1.0 };
        let momentum = if exaggerating { 0.5 } else { 0.8 };

        // Z sums q over ordered pairs, i.e. twice the upper triangle
        let z = 2.0 * sweep(&p, n, &xs, &ys, &mut forces);
        let Forces {
            attract_x,
            attract_y,
            repel_x,
            repel_y,
        } = &forces;

        for i in 0..n {
            let grad = [
                4.0 * (exaggeration * attract_x[i] - repel_x[i] / z),
                4.0 * (exaggeration * attract_y[i] - repel_y[i] / z),
            ];
            for (d, g) in grad.into_iter().enumerate() {
                let gain = &mut gains[i][d];
                *gain = if (g > 0.0) != (velocity[i][d] > 0.0) {
                    *gain + 0.2
                } else {
                    (*gain * 0.8).max(MIN_GAIN)
                };
                velocity[i][d] = momentum * velocity[i][d] - cfg.learning_rate * *gain * g;
            }
            xs[i] += velocity[i][0];
            ys[i] += velocity[i][1];
        }
        center(&mut xs);
        center(&mut ys);

        if trace_from.is_some_and(|from| iter >= from) {
            kl.push((iter, kl_from_layout(&p, n, &xs, &ys)));
        }
    }

    let embedding = Array2::from_shape_fn((n, 2), |(i, d)| if d == 0 { xs[i] } else { ys[i] });
    Ok(TsneTrace { embedding, kl })
}
