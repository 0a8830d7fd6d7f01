use serde::{Deserialize, Serialize};

use super::{
    checked_chain, make_initial, par_map, resolve_eval_point, stream_index, validate_common, validate_n_grid,
    validate_tau, Check, ExperimentReport, InitialMeasureSpec, Table,
};
use crate::error::Result;
use crate::flow::{iterated_derivative, log_monic_eval, steps_for_tau, RootVector};
use crate::sampling::{InverseTemperature, SeedSpec};

/// Exceedance is enforced only from this degree on.
pub const MIN_ENFORCED_N: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangularConfig {
    pub initial: InitialMeasureSpec,
    pub n: usize,
    pub tau: f64,
    pub betas: Vec<InverseTemperature>,
    /// Defaults to `A + 2`.
    pub z: Option<f64>,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
}

impl TriangularConfig {
    pub fn validate(&self) -> Result<()> {
        validate_common(&self.betas, self.trials)?;
        validate_tau(self.tau)?;
        validate_n_grid(&self.initial, &[self.n])?;
        if !(self.delta > 0.0) {
            return Err(crate::Error::InvalidParameter(format!(
                "delta = {} must be positive",
                self.delta
            )));
        }
        resolve_eval_point(self.z, self.initial.support_bound()).map(|_| ())
    }
}

/// `L_k = log P^{m−k}_{n,k}(z)` for `k = 0..=m`, where `P^{r}_{n,k}` is the
/// monic renormalized `r`-th derivative of state `k`.
pub fn triangular_logs(states: &[RootVector], z: f64) -> Result<Vec<f64>> {
    let m = states.len() - 1;
    states
        .iter()
        .enumerate()
        .map(|(k, s)| log_monic_eval(&iterated_derivative(s, m - k)?, z))
        .collect()
}

/// Per trial and `k ∈ 0..m`: `|L_{k+1} − L_k|`. Reports exceedance of `delta`
/// per `k` and the maximum increment; passes when nothing exceeds `delta`
/// (enforced for `n ≥ 200`).
pub fn triangular_increments(cfg: &TriangularConfig) -> Result<ExperimentReport> {
    let started = std::time::Instant::now();
    cfg.validate()?;
    let a = cfg.initial.support_bound();
    let z = resolve_eval_point(cfg.z, a)?;
    let initial = make_initial(&cfg.initial, cfg.n)?;
    let m = steps_for_tau(cfg.n, cfg.tau)?;

    let units: Vec<(usize, usize)> = (0..cfg.betas.len())
        .flat_map(|b| (0..cfg.trials).map(move |t| (b, t)))
        .collect();
    let runs = par_map(units.clone(), |(b, t)| {
        let seed = SeedSpec::new(cfg.seed, stream_index(b, t));
        let mut states = Vec::with_capacity(m + 1);
        checked_chain(&initial, m, cfg.betas[b], seed, |_, s| states.push(s.clone()))?;
        let logs = triangular_logs(&states, z)?;
        Ok(logs.windows(2).map(|w| (w[1] - w[0]).abs()).collect::<Vec<f64>>())
    })?;

    let mut report = ExperimentReport::new("triangular_increments", cfg, a);
    let mut rows = Table::new("increments", &["n", "tau", "beta", "trial", "k", "increment"]);
    let mut per_k = Table::new(
        "exceedance",
        &["n", "tau", "beta", "k", "exceed_frequency", "max_increment"],
    );
    let mut summary = Table::new(
        "summary",
        &["n", "tau", "beta", "delta", "max_increment", "exceed_count", "trials"],
    );
    for (b, beta) in cfg.betas.iter().enumerate() {
        let label = beta.to_string();
        let mut exceed = vec![0usize; m];
        let mut max_k = vec![0.0f64; m];
        for (&(ub, t), incs) in units.iter().zip(&runs) {
            if ub != b {
                continue;
            }
            for (k, &x) in incs.iter().enumerate() {
                rows.push(vec![
                    cfg.n.into(),
                    cfg.tau.into(),
                    label.as_str().into(),
                    t.into(),
                    k.into(),
                    x.into(),
                ]);
                exceed[k] += usize::from(x > cfg.delta);
                max_k[k] = max_k[k].max(x);
            }
        }
        for k in 0..m {
            let freq = exceed[k] as f64 / cfg.trials as f64;
            per_k.push(vec![
                cfg.n.into(),
                cfg.tau.into(),
                label.as_str().into(),
                k.into(),
                freq.into(),
                max_k[k].into(),
            ]);
        }
        let total: usize = exceed.iter().sum();
        let max_all = max_k.iter().cloned().fold(0.0, f64::max);
        summary.push(vec![
            cfg.n.into(),
            cfg.tau.into(),
            label.as_str().into(),
            cfg.delta.into(),
            max_all.into(),
            total.into(),
            cfg.trials.into(),
        ]);
        let enforced = cfg.n >= MIN_ENFORCED_N;
        report.add_check(Check::new(
            format!("no_exceedance beta={label}"),
            total,
            0usize,
            total == 0 || !enforced,
        ));
        report.add_check(Check::new(
            format!("max_increment beta={label}"),
            max_all,
            cfg.delta,
            max_all < cfg.delta || !enforced,
        ));
    }

    report.tables.extend([rows, per_k, summary]);
    report.wall_time = started.elapsed();
    Ok(report)
}
