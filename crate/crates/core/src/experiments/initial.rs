use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::RootVector;

/// Bisection tolerance when inverting continuous CDFs.
const QUANTILE_TOL: f64 = 1e-10;

/// Law of the initial roots. Roots are generated deterministically as the
/// midpoint quantiles `F⁻¹((2j − 1)/(2n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialMeasureSpec {
    UniformInterval {
        a: f64,
        b: f64,
    },
    /// Centered semicircle law with the given variance (support radius `2σ`).
    Semicircle {
        variance: f64,
    },
    /// Finitely many atoms `(position, weight)`; weights sum to one.
    #[serde(alias = "two_atoms")]
    Atoms {
        atoms: Vec<(f64, f64)>,
    },
    /// Fixed roots; the degree is the list length.
    ExplicitList {
        roots: Vec<f64>,
    },
}

impl InitialMeasureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            InitialMeasureSpec::UniformInterval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return bad(format!("uniform interval needs finite a < b, got [{a}, {b}]"));
                }
            }
            InitialMeasureSpec::Semicircle { variance } => {
                if !(variance.is_finite() && *variance > 0.0) {
                    return bad(format!("semicircle variance must be positive, got {variance}"));
                }
            }
            InitialMeasureSpec::Atoms { atoms } => {
                if atoms.is_empty() {
                    return bad("atom list is empty".into());
                }
                if atoms
                    .iter()
                    .any(|&(x, w)| !x.is_finite() || !(w > 0.0) || !w.is_finite())
                {
                    return bad("atoms need finite positions and positive weights".into());
                }
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("atom weights sum to {total}, expected 1"));
                }
            }
            InitialMeasureSpec::ExplicitList { roots } => {
                if roots.is_empty() || roots.iter().any(|x| !x.is_finite()) {
                    return bad("explicit root list must be nonempty and finite".into());
                }
            }
        }
        Ok(())
    }

    /// Radius `A` of a centered interval `[−A, A]` holding every generated root.
    pub fn support_bound(&self) -> f64 {
        let bound = match self {
            InitialMeasureSpec::UniformInterval { a, b } => a.abs().max(b.abs()),
            InitialMeasureSpec::Semicircle { variance } => 2.0 * variance.sqrt(),
            InitialMeasureSpec::Atoms { atoms } => atoms.iter().fold(0.0, |m, a| f64::max(m, a.0.abs())),
            InitialMeasureSpec::ExplicitList { roots } => roots.iter().fold(0.0, |m, x| f64::max(m, x.abs())),
        };
        // a degenerate measure at 0 still needs a positive bound
        if bound > 0.0 {
            bound
        } else {
            1.0
        }
    }

    /// Mean and variance of the law (of the list itself for explicit roots).
    pub fn mean_and_variance(&self) -> (f64, f64) {
        let weighted = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
            let pts: Vec<(f64, f64)> = pts.collect();
            let total: f64 = pts.iter().map(|p| p.1).sum();
            let mean = pts.iter().map(|p| p.0 * p.1).sum::<f64>() / total;
            let var = pts.iter().map(|p| (p.0 - mean).powi(2) * p.1).sum::<f64>() / total;
            (mean, var)
        };
        match self {
            InitialMeasureSpec::UniformInterval { a, b } => (0.5 * (a + b), (b - a).powi(2) / 12.0),
            InitialMeasureSpec::Semicircle { variance } => (0.0, *variance),
            InitialMeasureSpec::Atoms { atoms } => weighted(&mut atoms.iter().copied()),
            InitialMeasureSpec::ExplicitList { roots } => weighted(&mut roots.iter().map(|&x| (x, 1.0))),
        }
    }

    /// Degree fixed by the spec itself, if any.
    pub fn fixed_degree(&self) -> Option<usize> {
        match self {
            InitialMeasureSpec::ExplicitList { roots } => Some(roots.len()),
            _ => None,
        }
    }
}

/// Compact form used on the command line: `uniform:a,b`, `semicircle:var`,
/// `atoms:x1:w1,x2:w2,...`. File references are resolved by the caller.
impl FromStr for InitialMeasureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse initial measure '{s}'"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let spec = match kind.trim() {
            "uniform" | "uniform_interval" => {
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                InitialMeasureSpec::UniformInterval { a: num(a)?, b: num(b)? }
            }
            "semicircle" => InitialMeasureSpec::Semicircle { variance: num(rest)? },
            "atoms" | "two_atoms" => {
                let atoms = rest
                    .split(',')
                    .map(|item| {
                        let (x, w) = item.split_once(':').ok_or_else(bad)?;
                        Ok((num(x)?, num(w)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                InitialMeasureSpec::Atoms { atoms }
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for InitialMeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialMeasureSpec::UniformInterval { a, b } => write!(f, "uniform:{a},{b}"),
            InitialMeasureSpec::Semicircle { variance } => write!(f, "semicircle:{variance}"),
            InitialMeasureSpec::Atoms { atoms } => {
                let parts: Vec<String> = atoms.iter().map(|(x, w)| format!("{x}:{w}")).collect();
                write!(f, "atoms:{}", parts.join(","))
            }
            InitialMeasureSpec::ExplicitList { roots } => write!(f, "explicit:{} roots", roots.len()),
        }
    }
}

/// Midpoint-quantile roots of degree `n` (for an explicit list, the list itself
/// when `n` matches its length).
pub fn make_initial(spec: &InitialMeasureSpec, n: usize) -> Result<RootVector> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "initial degree must be at least 2, got {n}"
        )));
    }
    let u = |j: usize| (2 * j + 1) as f64 / (2 * n) as f64;
    let roots: Vec<f64> = match spec {
        InitialMeasureSpec::UniformInterval { a, b } => (0..n).map(|j| a + (b - a) * u(j)).collect(),
        InitialMeasureSpec::Semicircle { variance } => {
            let r = 2.0 * variance.sqrt();
            (0..n).map(|j| r * semicircle_quantile(u(j))).collect()
        }
        InitialMeasureSpec::Atoms { atoms } => {
            let mut sorted = atoms.clone();
            sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
            (0..n)
                .map(|j| {
                    let target = u(j);
                    let mut acc = 0.0;
                    for &(x, w) in &sorted {
                        acc += w;
                        if acc >= target {
                            return x;
                        }
                    }
                    sorted[sorted.len() - 1].0
                })
                .collect()
        }
        InitialMeasureSpec::ExplicitList { roots } => {
            if roots.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "explicit list has {} roots but degree {n} was requested",
                    roots.len()
                )));
            }
            roots.clone()
        }
    };
    RootVector::new(roots)
}

/// CDF of the semicircle law on `[−1, 1]`.
pub fn semicircle_cdf(x: f64) -> f64 {
    let x = x.clamp(-1.0, 1.0);
    0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / PI
}

/// Inverse of [`semicircle_cdf`] by bisection.
fn semicircle_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while hi - lo > QUANTILE_TOL {
        let mid = 0.5 * (lo + hi);
        if semicircle_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
