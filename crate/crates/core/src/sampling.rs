//! Seeded random streams and the samplers built on them: Gamma, Dirichlet,
//! and Haar-distributed orthogonal / unitary matrices.
//!
//! Every sampler takes an explicit `&mut R: Rng`, so the caller decides which
//! stream feeds it. [`SeedSpec::stream`] is the only place streams are made.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use rand::distr::OpenClosed01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Smallest finite inverse temperature accepted.
pub const BETA_FLOOR: f64 = 1e-3;

/// Smallest Gamma shape accepted (half of [`BETA_FLOOR`]).
pub const GAMMA_SHAPE_FLOOR: f64 = 0.5 * BETA_FLOOR;

/// Largest matrix order the Haar samplers will build.
pub const MAX_HAAR_ORDER: usize = 512;

const DIRICHLET_RETRIES: usize = 8;

/// Identifies one reproducible random stream.
///
/// The stream is a ChaCha8 generator whose 256-bit key is expanded from
/// `master_seed` (via `SeedableRng::seed_from_u64`, a PCG32 expansion) and
/// whose 64-bit ChaCha stream id is `stream_index`. Distinct stream ids under
/// one key are independent keystreams, so trial `i` sees the same numbers no
/// matter which thread runs it or in which order trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_index,
        }
    }

    pub fn stream(&self) -> Stream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Same master seed, different stream.
    pub fn with_stream(&self, stream_index: u64) -> Self {
        SeedSpec::new(self.master_seed, stream_index)
    }
}

/// Inverse temperature β of the Dirichlet weights, `Infinite` selecting the
/// deterministic derivative flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InverseTemperature {
    Finite(f64),
    Infinite,
}

impl InverseTemperature {
    pub fn finite(beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            if beta == f64::INFINITY {
                return Ok(InverseTemperature::Infinite);
            }
            return Err(Error::InvalidParameter(format!("beta must be a number, got {beta}")));
        }
        if beta < BETA_FLOOR {
            return Err(Error::InvalidParameter(format!(
                "beta = {beta} is below the supported floor {BETA_FLOOR}"
            )));
        }
        Ok(InverseTemperature::Finite(beta))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, InverseTemperature::Infinite)
    }

    /// Numeric value, `f64::INFINITY` for the deterministic flow.
    pub fn value(&self) -> f64 {
        match *self {
            InverseTemperature::Finite(b) => b,
            InverseTemperature::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for InverseTemperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InverseTemperature::Finite(b) => write!(f, "{b}"),
            InverseTemperature::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for InverseTemperature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(InverseTemperature::Infinite);
        }
        let b: f64 = t
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse beta from {s:?}")))?;
        InverseTemperature::finite(b)
    }
}

impl Serialize for InverseTemperature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            InverseTemperature::Finite(b) => s.serialize_f64(*b),
            InverseTemperature::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for InverseTemperature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(b) => InverseTemperature::finite(b).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletWeights(Vec<f64>);

impl DirichletWeights {
    /// Validates positivity and unit sum (to 1e-12).
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!("weight {w} is not positive")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights sum to {sum}, not 1")));
        }
        Ok(DirichletWeights(weights))
    }

    pub fn uniform(k: usize) -> Self {
        DirichletWeights(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Natural log of a Gamma(shape, 1) draw.
///
/// Marsaglia–Tsang squeeze/rejection for shape >= 1; for shape < 1 the draw
/// is boosted from shape + 1 and multiplied by `U^(1/shape)`, which is done
/// in log space so tiny shapes do not underflow.
pub fn ln_gamma_sample<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    if !(shape >= GAMMA_SHAPE_FLOOR) || !shape.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma shape {shape} outside [{GAMMA_SHAPE_FLOOR}, inf)"
        )));
    }
    if shape < 1.0 {
        let boosted = marsaglia_tsang(shape + 1.0, rng);
        let u: f64 = rng.sample(OpenClosed01);
        return Ok(boosted.ln() + u.ln() / shape);
    }
    Ok(marsaglia_tsang(shape, rng).ln())
}

/// A Gamma(shape, 1) draw. Values below the smallest normal double are
/// returned as `f64::MIN_POSITIVE`.
pub fn gamma_sample<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    Ok(ln_gamma_sample(shape, rng)?.exp().max(f64::MIN_POSITIVE))
}

fn marsaglia_tsang<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape >= 1.0);
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u: f64 = rng.sample(OpenClosed01);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Dirichlet(β/2, …, β/2) weights of length `k`, or the uniform vector for
/// β = ∞ (which draws nothing from `rng`).
///
/// Finite β goes through normalized Gamma draws. Normalization happens in log
/// space relative to the largest draw; entries that still underflow are
/// lifted to the smallest positive double, a perturbation far below the
/// 1e-12 unit-sum tolerance.
pub fn dirichlet_weights<R: Rng + ?Sized>(k: usize, beta: InverseTemperature, rng: &mut R) -> Result<DirichletWeights> {
    if k == 0 {
        return Err(Error::InvalidArgument("dirichlet length must be >= 1".into()));
    }
    let beta = match beta {
        InverseTemperature::Infinite => return Ok(DirichletWeights::uniform(k)),
        InverseTemperature::Finite(b) => b,
    };
    let shape = 0.5 * beta;
    let mut logs = vec![0.0; k];
    for _ in 0..DIRICHLET_RETRIES {
        for l in logs.iter_mut() {
            *l = ln_gamma_sample(shape, rng)?;
        }
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            continue;
        }
        let mut w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let sum: f64 = w.iter().sum();
        if !(sum >= 1.0 && sum.is_finite()) {
            continue;
        }
        for x in w.iter_mut() {
            *x = (*x / sum).max(f64::MIN_POSITIVE);
        }
        return Ok(DirichletWeights(w));
    }
    Err(Error::NumericDegeneracy(format!(
        "dirichlet normalization degenerate after {DIRICHLET_RETRIES} attempts (k = {k}, beta = {beta})"
    )))
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 || n > MAX_HAAR_ORDER {
        return Err(Error::InvalidParameter(format!(
            "matrix order {n} outside 1..={MAX_HAAR_ORDER}"
        )));
    }
    Ok(())
}

/// Haar-distributed element of O(n): QR of a Ginibre matrix with the columns
/// of Q rescaled so that R has a positive diagonal.
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    check_order(n)?;
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// Haar-distributed element of U(n): complex Ginibre QR with unit-modulus
/// diagonal correction.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DMatrix<Complex<f64>>> {
    check_order(n)?;
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = DMatrix::<Complex<f64>>::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re * scale, im * scale)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let modulus = d.norm();
        if modulus > 0.0 {
            let phase = d / modulus;
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    Ok(q)
}
