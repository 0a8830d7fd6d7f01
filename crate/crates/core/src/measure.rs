//! Empirical measures on root sets and the functionals used to compare them.

use crate::error::{Error, Result};
use crate::flow::RootVector;

/// Largest moment order accepted by [`EmpiricalMeasure::moment`].
pub const MAX_MOMENT_ORDER: u32 = 16;

/// Relative tie tolerance for non-strict interlacing.
pub const INTERLACING_REL_TOL: f64 = 1e-12;

/// Uniform probability measure on a sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    samples: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn from_roots(state: &RootVector) -> Result<Self> {
        if state.is_empty() {
            return Err(Error::InvalidArgument(
                "empirical measure of an empty root vector".into(),
            ));
        }
        Ok(EmpiricalMeasure {
            samples: state.as_slice().to_vec(),
        })
    }

    /// Sorts the samples; rejects empty or non-finite input.
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument(
                "empirical measure needs at least one sample".into(),
            ));
        }
        if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sample {x}")));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalMeasure { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.count() as f64
    }

    pub fn moment(&self, p: u32) -> Result<f64> {
        if p > MAX_MOMENT_ORDER {
            return Err(Error::InvalidArgument(format!(
                "moment order {p} exceeds {MAX_MOMENT_ORDER}"
            )));
        }
        Ok(self.samples.iter().map(|x| x.powi(p as i32)).sum::<f64>() / self.count() as f64)
    }

    /// `∫ log(z − x) dμ(x)`.
    pub fn log_potential(&self, z: f64) -> Result<f64> {
        self.check_above(z)?;
        Ok(self.samples.iter().map(|x| (z - x).ln()).sum::<f64>() / self.count() as f64)
    }

    /// `∫ (z − x)⁻¹ dμ(x)` at a real point beyond the support.
    pub fn stieltjes(&self, z: f64) -> Result<f64> {
        self.check_above(z)?;
        Ok(self.samples.iter().map(|x| 1.0 / (z - x)).sum::<f64>() / self.count() as f64)
    }

    fn check_above(&self, z: f64) -> Result<()> {
        let top = self.samples[self.count() - 1];
        if z > top {
            Ok(())
        } else {
            Err(Error::Domain(format!("z = {z} is not above the largest sample {top}")))
        }
    }
}

/// Sup-distance between the two CDFs, evaluated on the merged jump set.
pub fn ks_distance(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    let (xs, ys) = (a.samples(), b.samples());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < xs.len() || j < ys.len() {
        let t = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// `∫ |F_a − F_b|`, integrated exactly between consecutive jumps.
pub fn wasserstein1(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    let (xs, ys) = (a.samples(), b.samples());
    if xs.len() == ys.len() {
        return xs.iter().zip(ys).map(|(x, y)| (x - y).abs()).sum::<f64>() / xs.len() as f64;
    }
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut prev = f64::NAN;
    let mut total = 0.0;
    while i < xs.len() || j < ys.len() {
        let t = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        if prev.is_finite() {
            total += (t - prev) * (i as f64 / na - j as f64 / nb).abs();
        }
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        prev = t;
    }
    total
}

/// One-sample KS statistic of `samples` against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic; empty inputs give 0.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    match (
        EmpiricalMeasure::from_samples(a.to_vec()),
        EmpiricalMeasure::from_samples(b.to_vec()),
    ) {
        (Ok(a), Ok(b)) => ks_distance(&a, &b),
        _ => 0.0,
    }
}

/// Asymptotic α = 0.01 two-sample critical value for equal sizes `m`.
pub fn ks_critical_value(m: usize) -> f64 {
    1.628 * (2.0 / m as f64).sqrt()
}

/// `outer₁ ≤ inner₁ ≤ outer₂ ≤ … ≤ inner_{d−1} ≤ outer_d`; `strict` uses `<`
/// everywhere, otherwise ties within `10⁻¹²·span` pass.
pub fn check_interlacing(outer: &RootVector, inner: &RootVector, strict: bool) -> Result<bool> {
    if outer.degree() != inner.degree() + 1 {
        return Err(Error::InvalidArgument(format!(
            "interlacing needs degrees d and d-1, got {} and {}",
            outer.degree(),
            inner.degree()
        )));
    }
    let (o, r) = (outer.as_slice(), inner.as_slice());
    let tol = if strict {
        0.0
    } else {
        INTERLACING_REL_TOL * outer.span().max(inner.span()).max(1.0)
    };
    let ok = r.iter().enumerate().all(|(j, &x)| {
        if strict {
            o[j] < x && x < o[j + 1]
        } else {
            o[j] - tol <= x && x <= o[j + 1] + tol
        }
    });
    Ok(ok)
}
