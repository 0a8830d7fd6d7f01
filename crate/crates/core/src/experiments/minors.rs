use serde::{Deserialize, Serialize};

use super::{
    checked_chain, ensure_interlacing, make_initial, par_map, stream_index, validate_common, Check, ExperimentReport,
    InitialMeasureSpec, Table,
};
use crate::error::{Error, Result};
use crate::flow::RootVector;
use crate::measure::{ks_critical_value, ks_two_sample};
use crate::minors::{minor_spectrum_chain, Ensemble};
use crate::sampling::{InverseTemperature, SeedSpec};

type Observable = Box<dyn Fn(&RootVector) -> f64>;

/// Largest degree for the matrix-side comparison.
pub const MAX_MINORS_DEGREE: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorsConfig {
    pub initial: InitialMeasureSpec,
    pub n: usize,
    pub betas: Vec<InverseTemperature>,
    /// Depths `m` at which states are compared; defaults to `{1, ⌊n/2⌋}`.
    pub depths: Option<Vec<usize>>,
    pub trials: usize,
    pub seed: u64,
}

impl MinorsConfig {
    pub fn validate(&self) -> Result<()> {
        validate_common(&self.betas, self.trials)?;
        if self.n == 0 || self.n > MAX_MINORS_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "minors comparison needs 1 <= n <= {MAX_MINORS_DEGREE}, got {}",
                self.n
            )));
        }
        if let Some(d) = &self.depths {
            if d.is_empty() || d.iter().any(|&m| m >= self.n) {
                return Err(Error::InvalidParameter(format!(
                    "depths must be nonempty and below n = {}",
                    self.n
                )));
            }
        }
        for &beta in &self.betas {
            Ensemble::from_beta(beta)?;
        }
        self.initial.validate()
    }
}

fn default_depths(n: usize) -> Vec<usize> {
    let mut d: Vec<usize> = [1, n / 2].into_iter().filter(|&m| m >= 1 && m < n).collect();
    d.dedup();
    if d.is_empty() {
        d.push(0);
    }
    d
}

/// Builds `λ⁰` from the config (an explicit list may have any degree) and runs
/// [`minors_equivalence_from`].
pub fn minors_equivalence(cfg: &MinorsConfig) -> Result<ExperimentReport> {
    let lambda0 = match &cfg.initial {
        InitialMeasureSpec::ExplicitList { roots } if roots.len() == cfg.n => RootVector::new(roots.clone())?,
        spec => make_initial(spec, cfg.n)?,
    };
    minors_equivalence_from(&lambda0, cfg)
}

/// Draws `trials` chains from the Dirichlet flow and from the minor process of
/// `U* Diag(λ⁰) U`, and compares every order statistic and the mean of the
/// states at each depth with a two-sample KS test at α = 0.01.
pub fn minors_equivalence_from(lambda0: &RootVector, cfg: &MinorsConfig) -> Result<ExperimentReport> {
    let started = std::time::Instant::now();
    validate_common(&cfg.betas, cfg.trials)?;
    let n = lambda0.degree();
    if n == 0 || n > MAX_MINORS_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "minors comparison needs 1 <= n <= {MAX_MINORS_DEGREE}, got {n}"
        )));
    }
    let depths = cfg.depths.clone().unwrap_or_else(|| default_depths(n));
    if depths.is_empty() || depths.iter().any(|&m| m >= n) {
        return Err(Error::InvalidParameter(format!(
            "depths must be nonempty and below n = {n}"
        )));
    }
    for &beta in &cfg.betas {
        Ensemble::from_beta(beta)?;
    }
    let max_depth = *depths.iter().max().unwrap();

    // cell 2b: flow chains, cell 2b + 1: matrix chains
    let units: Vec<(usize, usize, usize)> = (0..cfg.betas.len())
        .flat_map(|b| (0..2).flat_map(move |side| (0..cfg.trials).map(move |t| (b, side, t))))
        .collect();
    let runs = par_map(units.clone(), |(b, side, t)| {
        let seed = SeedSpec::new(cfg.seed, stream_index(2 * b + side, t));
        let mut at = vec![RootVector::empty(); depths.len()];
        if side == 0 {
            checked_chain(lambda0, max_depth, cfg.betas[b], seed, |m, s| {
                for (slot, &want) in at.iter_mut().zip(&depths) {
                    if m == want {
                        *slot = s.clone();
                    }
                }
            })?;
        } else {
            let chain = minor_spectrum_chain(lambda0, cfg.betas[b], seed)?;
            for (m, w) in chain.windows(2).enumerate() {
                ensure_interlacing(&w[0], &w[1], m + 1)?;
            }
            for (slot, &want) in at.iter_mut().zip(&depths) {
                *slot = chain[want].clone();
            }
        }
        Ok(at)
    })?;

    let critical = ks_critical_value(cfg.trials);
    let mut report = ExperimentReport::new(
        "minors_equivalence",
        cfg,
        lambda0.as_slice().iter().fold(0.0, |m, x| f64::max(m, x.abs())),
    );
    let mut table = Table::new(
        "observables",
        &[
            "beta",
            "observable",
            "depth_m",
            "ks_two_sample",
            "critical_value",
            "pass",
        ],
    );
    for (b, beta) in cfg.betas.iter().enumerate() {
        let label = beta.to_string();
        let collect = |side: usize, di: usize| -> Vec<&RootVector> {
            units
                .iter()
                .zip(&runs)
                .filter(|(u, _)| u.0 == b && u.1 == side)
                .map(|(_, states)| &states[di])
                .collect()
        };
        let mut worst: f64 = 0.0;
        for (di, &m) in depths.iter().enumerate() {
            let (flow, mat) = (collect(0, di), collect(1, di));
            let degree = n - m;
            let mut observables: Vec<(String, Observable)> = (0..degree)
                .map(|j| {
                    (
                        format!("order_stat_{}", j + 1),
                        Box::new(move |s: &RootVector| s.as_slice()[j]) as Observable,
                    )
                })
                .collect();
            observables.push(("mean".into(), Box::new(|s: &RootVector| s.sum() / s.degree() as f64)));
            for (name, f) in &observables {
                let xs: Vec<f64> = flow.iter().map(|s| f(s)).collect();
                let ys: Vec<f64> = mat.iter().map(|s| f(s)).collect();
                let ks = ks_two_sample(&xs, &ys);
                worst = worst.max(ks);
                table.push(vec![
                    label.as_str().into(),
                    name.as_str().into(),
                    m.into(),
                    ks.into(),
                    critical.into(),
                    (ks < critical).into(),
                ]);
            }
        }
        report.add_check(Check::new(
            format!("max_ks beta={label}"),
            worst,
            critical,
            worst < critical,
        ));
    }

    report.tables.push(table);
    report.wall_time = started.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_defaults() {
        assert_eq!(default_depths(1), vec![0]);
        assert_eq!(default_depths(2), vec![1]);
        assert_eq!(default_depths(16), vec![1, 8]);
    }

    #[test]
    fn degree_one_is_exact() {
        let cfg = MinorsConfig {
            initial: InitialMeasureSpec::ExplicitList { roots: vec![0.4] },
            n: 1,
            betas: vec![InverseTemperature::Finite(2.0)],
            depths: None,
            trials: 50,
            seed: 4,
        };
        let r = minors_equivalence(&cfg).unwrap();
        let t = r.table("observables").unwrap();
        assert!(t.rows.iter().all(|row| row[3].as_f64() == Some(0.0)));
        assert!(r.pass);
    }

    #[test]
    fn rejects_other_betas_and_large_n() {
        let mut cfg = MinorsConfig {
            initial: InitialMeasureSpec::UniformInterval { a: -1.0, b: 1.0 },
            n: 4,
            betas: vec![InverseTemperature::Finite(4.0)],
            depths: None,
            trials: 10,
            seed: 4,
        };
        assert!(minors_equivalence(&cfg).is_err());
        cfg.betas = vec![InverseTemperature::Finite(1.0)];
        cfg.n = 65;
        assert!(minors_equivalence(&cfg).is_err());
    }
}
