use serde::{Deserialize, Serialize};

use super::{
    checked_chain, make_initial, mean, par_map, stream_index, validate_common, validate_n_grid, validate_tau, Check,
    ExperimentReport, InitialMeasureSpec, RootSample, Table,
};
use crate::error::{Error, Result};
use crate::flow::steps_for_tau;
use crate::measure::EmpiricalMeasure;
use crate::sampling::{InverseTemperature, SeedSpec};

/// Second moment of `μ_{n,⌊nτ⌋}` against an external prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentConfig {
    pub initial: InitialMeasureSpec,
    pub n: usize,
    pub tau: f64,
    pub betas: Vec<InverseTemperature>,
    pub trials: usize,
    pub seed: u64,
    /// Predicted second moment; defaults to `mean² + (1 − τ)·variance` of the
    /// initial law, the value for the rescaled free convolution power.
    pub target: Option<f64>,
    pub tolerance: f64,
}

impl MomentConfig {
    pub fn validate(&self) -> Result<()> {
        validate_common(&self.betas, self.trials)?;
        validate_tau(self.tau)?;
        validate_n_grid(&self.initial, &[self.n])?;
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance {} must be positive",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Per trial: the second moment of the state at `m = ⌊nτ⌋`. Passes when every
/// trial lies within `tolerance` of the target.
pub fn second_moment(cfg: &MomentConfig) -> Result<ExperimentReport> {
    let started = std::time::Instant::now();
    cfg.validate()?;
    let initial = make_initial(&cfg.initial, cfg.n)?;
    let m = steps_for_tau(cfg.n, cfg.tau)?;
    let (mu, var) = cfg.initial.mean_and_variance();
    let target = cfg.target.unwrap_or(mu * mu + (1.0 - cfg.tau) * var);

    let units: Vec<(usize, usize)> = (0..cfg.betas.len())
        .flat_map(|b| (0..cfg.trials).map(move |t| (b, t)))
        .collect();
    let runs = par_map(units.clone(), |(b, t)| {
        let seed = SeedSpec::new(cfg.seed, stream_index(b, t));
        let last = checked_chain(&initial, m, cfg.betas[b], seed, |_, _| {})?;
        Ok((EmpiricalMeasure::from_roots(&last)?.moment(2)?, last))
    })?;

    let mut report = ExperimentReport::new("second_moment", cfg, cfg.initial.support_bound());
    let mut rows = Table::new("trials", &["n", "tau", "beta", "trial", "second_moment"]);
    let mut aggregate = Table::new(
        "aggregate",
        &[
            "n",
            "tau",
            "beta",
            "mean_second_moment",
            "target",
            "max_deviation",
            "trials",
        ],
    );
    for (b, beta) in cfg.betas.iter().enumerate() {
        let label = beta.to_string();
        let mut values = Vec::new();
        let mut pooled = Vec::new();
        for (&(ub, t), (v, last)) in units.iter().zip(&runs) {
            if ub != b {
                continue;
            }
            rows.push(vec![
                cfg.n.into(),
                cfg.tau.into(),
                label.as_str().into(),
                t.into(),
                (*v).into(),
            ]);
            values.push(*v);
            pooled.extend_from_slice(last.as_slice());
        }
        let dev = values.iter().map(|v| (v - target).abs()).fold(0.0, f64::max);
        aggregate.push(vec![
            cfg.n.into(),
            cfg.tau.into(),
            label.as_str().into(),
            mean(&values).into(),
            target.into(),
            dev.into(),
            cfg.trials.into(),
        ]);
        report.add_check(Check::new(
            format!("second_moment_band beta={label}"),
            dev,
            cfg.tolerance,
            dev <= cfg.tolerance,
        ));
        report.samples.push(RootSample {
            n: cfg.n,
            tau: cfg.tau,
            beta: label,
            roots: pooled,
        });
    }

    report.tables.extend([rows, aggregate]);
    report.wall_time = started.elapsed();
    Ok(report)
}
