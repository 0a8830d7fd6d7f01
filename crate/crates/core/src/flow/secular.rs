//! Zeros of `w(x) = Σ s_i / (x − μ_i)` between consecutive poles.
//!
//! `w` decreases strictly from +∞ to −∞ on every gap `(μ_i, μ_{i+1})`, so each
//! gap holds exactly one zero. Each zero is located in coordinates relative
//! to the nearer pole, which keeps `x − μ_i` exact when the zero hugs that
//! pole. Iterates come from a two-pole rational model of `w` (the near and
//! far poles of the gap kept exact, the remaining poles folded into a
//! constant) and are safeguarded by a sign bracket with bisection fallback.

use crate::error::{Error, Result};

/// Stopping tolerance, relative to the gap width.
pub const SECULAR_REL_TOL: f64 = 1e-13;

/// Iteration cap per gap. Reaching it means something is broken.
pub const SECULAR_MAX_ITER: usize = 200;

/// One zero of `w` per gap of the strictly increasing `poles`.
///
/// `weights` must be positive and sum to one.
pub fn solve_secular(poles: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if poles.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "secular equation needs at least two poles, got {}",
            poles.len()
        )));
    }
    if poles.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} poles but {} weights",
            poles.len(),
            weights.len()
        )));
    }
    if poles.iter().any(|p| !p.is_finite()) || poles.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "poles must be finite and strictly increasing".into(),
        ));
    }
    if weights.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidArgument("secular weights must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("secular weights sum to {total}, not 1")));
    }
    solve_gaps(poles, weights)
}

/// Same as [`solve_secular`] without argument validation.
pub(crate) fn solve_gaps(poles: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    let gaps = poles.len() - 1;
    let mut out = Vec::with_capacity(gaps);
    let mut block = Block::direct(poles.len());
    for i in 0..gaps {
        if i % BLOCK_GAPS == 0 {
            block = Block::build(poles, weights, i, (i + BLOCK_GAPS).min(gaps));
        }
        out.push(root_in_gap(poles, weights, &block, i)?);
    }
    Ok(out)
}

/// Gaps handled per block.
const BLOCK_GAPS: usize = 24;
/// Poles beyond each end of a block that are always summed exactly.
const BLOCK_MARGIN: usize = 24;
/// Below this many poles every sum is done directly.
const DIRECT_BELOW: usize = BLOCK_GAPS + 4 * BLOCK_MARGIN;
/// Cap on the far-field expansion order.
const MAX_TERMS: usize = 48;
/// Largest admissible ratio of block radius to nearest far-pole distance.
const MAX_RATIO: f64 = 0.6;

/// Taylor coefficients, in the scaled variable `u = (x − center) / radius`,
/// of `Σ s/(x − μ)` over the poles left of and right of the exact window.
struct FarField {
    center: f64,
    radius: f64,
    left: Vec<f64>,
    right: Vec<f64>,
}

/// Exact window `[near_lo, near_hi)` of pole indices for a run of gaps plus
/// the far-field expansion of everything outside it.
struct Block {
    near_lo: usize,
    near_hi: usize,
    far: Option<FarField>,
}

impl Block {
    fn direct(p: usize) -> Block {
        Block {
            near_lo: 0,
            near_hi: p,
            far: None,
        }
    }

    /// Block for gaps `first..last`. Falls back to direct sums when the
    /// expansion would not reach rounding level within `MAX_TERMS` terms.
    fn build(poles: &[f64], weights: &[f64], first: usize, last: usize) -> Block {
        let p = poles.len();
        if p < DIRECT_BELOW {
            return Block::direct(p);
        }
        let near_lo = first.saturating_sub(BLOCK_MARGIN);
        let near_hi = (last + 1 + BLOCK_MARGIN).min(p);
        let center = 0.5 * (poles[first] + poles[last]);
        let radius = 0.5 * (poles[last] - poles[first]);
        let mut nearest = f64::INFINITY;
        if near_lo > 0 {
            nearest = nearest.min(center - poles[near_lo - 1]);
        }
        if near_hi < p {
            nearest = nearest.min(poles[near_hi] - center);
        }
        let ratio = radius / nearest;
        if !(ratio < MAX_RATIO) {
            return Block::direct(p);
        }
        // r^(P+1) / (1 − r) below half an ulp of the summed magnitudes.
        let terms = if ratio > 0.0 {
            let need = ((0.5 * f64::EPSILON * (1.0 - ratio)).ln() / ratio.ln()).ceil() as usize;
            need.max(1)
        } else {
            1
        };
        if terms > MAX_TERMS {
            return Block::direct(p);
        }
        let left = expansion(&poles[..near_lo], &weights[..near_lo], center, radius, terms);
        let right = expansion(&poles[near_hi..], &weights[near_hi..], center, radius, terms);
        Block {
            near_lo,
            near_hi,
            far: Some(FarField {
                center,
                radius,
                left,
                right,
            }),
        }
    }
}

/// `a_k = Σ_j s_j / D_j · (−R / D_j)^k` with `D_j = center − μ_j`, so that
/// `Σ_j s_j / (x − μ_j) = Σ_k a_k u^k` for `x = center + R u`, `|u| ≤ 1`.
fn expansion(poles: &[f64], weights: &[f64], center: f64, radius: f64, terms: usize) -> Vec<f64> {
    const LANES: usize = 16;
    let mut acc = vec![[0.0f64; LANES]; terms];
    let pc = poles.chunks_exact(LANES);
    let wc = weights.chunks_exact(LANES);
    let (pr, wr) = (pc.remainder(), wc.remainder());
    for (p, w) in pc.zip(wc) {
        let mut t = [0.0f64; LANES];
        let mut ratio = [0.0f64; LANES];
        for l in 0..LANES {
            let inv = 1.0 / (center - p[l]);
            t[l] = w[l] * inv;
            ratio[l] = -radius * inv;
        }
        for a in acc.iter_mut() {
            for l in 0..LANES {
                a[l] += t[l];
                t[l] *= ratio[l];
            }
        }
    }
    let mut coef: Vec<f64> = acc.iter().map(|a| a.iter().sum()).collect();
    for (p, w) in pr.iter().zip(wr) {
        let inv = 1.0 / (center - p);
        let mut t = w * inv;
        let ratio = -radius * inv;
        for c in coef.iter_mut() {
            *c += t;
            t *= ratio;
        }
    }
    coef
}

/// Value and `d/du` of `Σ_k a_k u^k`.
#[inline]
fn horner(coef: &[f64], u: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for &a in coef.iter().rev() {
        d = d * u + v;
        v = v * u + a;
    }
    (v, d)
}

/// `(Σ s/(x−μ), Σ s/(x−μ)²)` over a slice of poles, with `x − μ` formed as
/// `(origin − μ) + delta`.
#[inline]
fn partial_sums(poles: &[f64], weights: &[f64], origin: f64, delta: f64) -> (f64, f64) {
    let mut val = [0.0f64; 4];
    let mut der = [0.0f64; 4];
    let pc = poles.chunks_exact(4);
    let wc = weights.chunks_exact(4);
    let (pr, wr) = (pc.remainder(), wc.remainder());
    for (p, w) in pc.zip(wc) {
        for l in 0..4 {
            let inv = 1.0 / ((origin - p[l]) + delta);
            let t = w[l] * inv;
            val[l] += t;
            der[l] += t * inv;
        }
    }
    let mut v = (val[0] + val[1]) + (val[2] + val[3]);
    let mut d = (der[0] + der[1]) + (der[2] + der[3]);
    for (p, w) in pr.iter().zip(wr) {
        let inv = 1.0 / ((origin - p) + delta);
        let t = w * inv;
        v += t;
        d += t * inv;
    }
    (v, d)
}

/// Left-part and right-part sums at `origin + delta` for gap `i`.
struct Sample {
    left: f64,
    left_der: f64,
    right: f64,
    right_der: f64,
}

impl Sample {
    fn at(poles: &[f64], weights: &[f64], block: &Block, i: usize, origin: f64, delta: f64) -> Sample {
        let (lo, hi) = (block.near_lo, block.near_hi);
        let (mut left, mut left_der) = partial_sums(&poles[lo..=i], &weights[lo..=i], origin, delta);
        let (mut right, mut right_der) = partial_sums(&poles[i + 1..hi], &weights[i + 1..hi], origin, delta);
        if let Some(far) = &block.far {
            let u = ((origin - far.center) + delta) / far.radius;
            let (v, d) = horner(&far.left, u);
            left += v;
            left_der -= d / far.radius;
            let (v, d) = horner(&far.right, u);
            right += v;
            right_der -= d / far.radius;
        }
        Sample {
            left,
            left_der,
            right,
            right_der,
        }
    }

    fn value(&self) -> f64 {
        self.left + self.right
    }

    /// Rounding-error scale of `value`.
    fn magnitude(&self) -> f64 {
        self.left - self.right
    }
}

/// Root in `(0, g)` of `c u² + (q + t − c g) u − q g`, which is negative at 0
/// and positive at `g`.
#[inline]
fn near_pole_offset(c: f64, q: f64, t: f64, g: f64) -> f64 {
    let b = q + t - c * g;
    let disc = (b * b + 4.0 * c * q * g).max(0.0).sqrt();
    if b >= 0.0 {
        2.0 * q * g / (b + disc)
    } else {
        (disc - b) / (2.0 * c)
    }
}

fn root_in_gap(poles: &[f64], weights: &[f64], block: &Block, i: usize) -> Result<f64> {
    let lo = poles[i];
    let hi = poles[i + 1];
    let gap = hi - lo;
    let tol = SECULAR_REL_TOL * gap;
    let half = 0.5 * gap;

    let mid = Sample::at(poles, weights, block, i, lo, half);
    let w_mid = mid.value();
    if w_mid == 0.0 {
        return Ok(lo + half);
    }
    // w > 0 at the midpoint puts the zero in the upper half, nearer to `hi`.
    let from_left = w_mid < 0.0;
    let (origin, mut blo, mut bhi, mut delta) = if from_left {
        (lo, 0.0, half, half)
    } else {
        (hi, -half, 0.0, -half)
    };
    let mut sample = mid;

    for _ in 0..SECULAR_MAX_ITER {
        // Pole positions of the gap in shifted coordinates.
        let (a, b) = if from_left { (0.0, gap) } else { (-gap, 0.0) };
        let q = sample.left_der * (delta - a) * (delta - a);
        let t = sample.right_der * (delta - b) * (delta - b);
        let c = (sample.left - q / (delta - a)) + (sample.right - t / (delta - b));
        let mut next = if from_left {
            near_pole_offset(c, q, t, gap)
        } else {
            -near_pole_offset(-c, t, q, gap)
        };
        if !(next > blo && next < bhi) {
            next = 0.5 * (blo + bhi);
        }
        if (next - delta).abs() <= tol {
            return Ok(origin + next);
        }
        delta = next;
        sample = Sample::at(poles, weights, block, i, origin, delta);
        let w = sample.value();
        if w == 0.0 || w.abs() <= 8.0 * f64::EPSILON * sample.magnitude() {
            return Ok(origin + delta);
        }
        if w > 0.0 {
            blo = delta;
        } else {
            bhi = delta;
        }
        if bhi - blo <= tol {
            return Ok(origin + 0.5 * (blo + bhi));
        }
    }
    Err(Error::NonConvergence {
        lo,
        hi,
        iterations: SECULAR_MAX_ITER,
    })
}
