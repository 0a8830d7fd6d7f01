use serde::{Deserialize, Serialize};

use super::{
    checked_chain, decreasing_with_inversions, make_initial, mean, par_map, stream_index, threshold_point,
    validate_common, validate_n_grid, validate_tau, validate_threshold_n, Check, ExperimentReport, InitialMeasureSpec,
    RootSample, Table, INVERSION_BAND,
};
use crate::error::Result;
use crate::flow::{steps_for_tau, RootVector};
use crate::measure::{ks_distance, wasserstein1, EmpiricalMeasure};
use crate::sampling::{InverseTemperature, SeedSpec};

/// Distance between the β chain and the β = ∞ chain at the same `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaIndependenceConfig {
    pub initial: InitialMeasureSpec,
    pub n_grid: Vec<usize>,
    pub taus: Vec<f64>,
    pub betas: Vec<InverseTemperature>,
    pub trials: usize,
    pub seed: u64,
    /// Optional bound on the mean W1 at `threshold_n`.
    pub w1_threshold: Option<f64>,
    /// Grid point where `w1_threshold` applies; defaults to the largest `n`.
    pub threshold_n: Option<usize>,
}

impl BetaIndependenceConfig {
    pub fn validate(&self) -> Result<()> {
        validate_common(&self.betas, self.trials)?;
        validate_n_grid(&self.initial, &self.n_grid)?;
        if self.taus.is_empty() {
            return Err(crate::Error::InvalidParameter("at least one tau is required".into()));
        }
        for &tau in &self.taus {
            validate_tau(tau)?;
        }
        validate_threshold_n(&self.n_grid, self.threshold_n)
    }
}

fn distance(a: &RootVector, b: &RootVector) -> Result<(f64, f64)> {
    if a.is_empty() {
        return Ok((0.0, 0.0));
    }
    let (a, b) = (EmpiricalMeasure::from_roots(a)?, EmpiricalMeasure::from_roots(b)?);
    Ok((wasserstein1(&a, &b), ks_distance(&a, &b)))
}

/// For every `(n, τ, β)`: W1 and KS distance from `μ_{n,⌊nτ⌋}` to the
/// deterministic β = ∞ state, per trial and averaged. Passes when the mean W1
/// decreases in `n` for every finite β and τ (one inversion within
/// [`INVERSION_BAND`] tolerated).
pub fn beta_independence(cfg: &BetaIndependenceConfig) -> Result<ExperimentReport> {
    let started = std::time::Instant::now();
    cfg.validate()?;

    let mut report = ExperimentReport::new("beta_independence", cfg, cfg.initial.support_bound());
    let mut per_trial = Table::new("trials", &["n", "tau", "beta", "trial", "w1_to_ref", "ks_to_ref"]);
    let mut aggregate = Table::new("aggregate", &["n", "tau", "beta", "mean_w1", "mean_ks", "trials"]);
    // means[tau][beta][n_idx]
    let mut means = vec![vec![Vec::new(); cfg.betas.len()]; cfg.taus.len()];

    for (ni, &n) in cfg.n_grid.iter().enumerate() {
        let initial = make_initial(&cfg.initial, n)?;
        let ms = cfg
            .taus
            .iter()
            .map(|&t| steps_for_tau(n, t))
            .collect::<Result<Vec<_>>>()?;
        let max_m = *ms.iter().max().unwrap();
        let capture = |beta, seed| -> Result<Vec<RootVector>> {
            let mut at = vec![RootVector::empty(); ms.len()];
            checked_chain(&initial, max_m, beta, seed, |m, s| {
                for (slot, &want) in at.iter_mut().zip(&ms) {
                    if m == want {
                        *slot = s.clone();
                    }
                }
            })?;
            Ok(at)
        };
        let reference = capture(InverseTemperature::Infinite, SeedSpec::new(cfg.seed, u64::MAX))?;

        let units: Vec<(usize, usize)> = (0..cfg.betas.len())
            .flat_map(|b| (0..cfg.trials).map(move |t| (b, t)))
            .collect();
        let runs = par_map(units.clone(), |(b, t)| {
            let seed = SeedSpec::new(cfg.seed, stream_index(ni * cfg.betas.len() + b, t));
            // the β = ∞ chain ignores its stream
            let states = if cfg.betas[b].is_infinite() {
                reference.clone()
            } else {
                capture(cfg.betas[b], seed)?
            };
            let dists = states
                .iter()
                .zip(&reference)
                .map(|(s, r)| distance(s, r))
                .collect::<Result<Vec<_>>>()?;
            Ok((dists, states))
        })?;

        for (ti, &tau) in cfg.taus.iter().enumerate() {
            for (b, beta) in cfg.betas.iter().enumerate() {
                let label = beta.to_string();
                let mut w1s = Vec::with_capacity(cfg.trials);
                let mut kss = Vec::with_capacity(cfg.trials);
                let mut pooled = Vec::new();
                for (&(ub, t), (dists, states)) in units.iter().zip(&runs) {
                    if ub != b {
                        continue;
                    }
                    let (w1, ks) = dists[ti];
                    per_trial.push(vec![
                        n.into(),
                        tau.into(),
                        label.as_str().into(),
                        t.into(),
                        w1.into(),
                        ks.into(),
                    ]);
                    w1s.push(w1);
                    kss.push(ks);
                    pooled.extend_from_slice(states[ti].as_slice());
                }
                let (mw, mk) = (mean(&w1s), mean(&kss));
                aggregate.push(vec![
                    n.into(),
                    tau.into(),
                    label.as_str().into(),
                    mw.into(),
                    mk.into(),
                    cfg.trials.into(),
                ]);
                means[ti][b].push(mw);
                report.samples.push(RootSample {
                    n,
                    tau,
                    beta: label,
                    roots: pooled,
                });
            }
        }
    }

    let mut ratios = Table::new("ratios", &["tau", "beta", "n_from", "n_to", "w1_ratio"]);
    for (ti, &tau) in cfg.taus.iter().enumerate() {
        for (b, beta) in cfg.betas.iter().enumerate() {
            let series = &means[ti][b];
            for (k, w) in series.windows(2).enumerate() {
                let ratio = w[0] / w[1];
                ratios.push(vec![
                    tau.into(),
                    beta.to_string().into(),
                    cfg.n_grid[k].into(),
                    cfg.n_grid[k + 1].into(),
                    ratio.into(),
                ]);
            }
            if beta.is_infinite() {
                let zero = series.iter().all(|&x| x == 0.0);
                report.add_check(Check::new(
                    format!("reference_zero tau={tau} beta=inf"),
                    series.iter().cloned().fold(0.0, f64::max),
                    0.0,
                    zero,
                ));
                continue;
            }
            let ok = decreasing_with_inversions(series, 1, INVERSION_BAND);
            let inversions = series.windows(2).filter(|w| w[1] >= w[0]).count();
            report.add_check(Check::new(
                format!("w1_decreasing tau={tau} beta={beta}"),
                inversions,
                1usize,
                ok,
            ));
            if let Some(limit) = cfg.w1_threshold {
                let (at, value) = threshold_point(&cfg.n_grid, cfg.threshold_n, series);
                report.add_check(Check::new(
                    format!("w1_below_threshold n={at} tau={tau} beta={beta}"),
                    value,
                    limit,
                    value < limit,
                ));
            }
        }
    }

    report.tables.extend([per_trial, aggregate, ratios]);
    report.wall_time = started.elapsed();
    Ok(report)
}
