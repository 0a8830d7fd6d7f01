//! Seeded experiment drivers. Each returns an [`ExperimentReport`] whose
//! numeric content depends only on the configuration and master seed: trial
//! `t` of cell `c` always draws from stream `(c << 32) | t`, and results are
//! collected in input order whatever the thread count.

mod beta;
mod corollary;
mod initial;
mod minors;
mod moments;
mod report;
mod triangular;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Chain, RootVector};
use crate::measure::check_interlacing;
use crate::sampling::{InverseTemperature, SeedSpec};

pub use beta::{beta_independence, BetaIndependenceConfig};
pub use corollary::{corollary_comparison, CorollaryConfig};
pub use initial::{make_initial, semicircle_cdf, InitialMeasureSpec};
pub use minors::{minors_equivalence, minors_equivalence_from, MinorsConfig, MAX_MINORS_DEGREE};
pub use moments::{second_moment, MomentConfig};
pub use report::{Cell, Check, ExperimentReport, RootSample, Table};
pub use triangular::{triangular_increments, triangular_logs, TriangularConfig, MIN_ENFORCED_N};

/// Environment variable capping the trial thread pool.
pub const THREADS_ENV: &str = "BETAFLOW_THREADS";

/// Relative band inside which one increase still counts as "decreasing".
pub const INVERSION_BAND: f64 = 0.10;

pub(crate) fn stream_index(cell: usize, trial: usize) -> u64 {
    ((cell as u64) << 32) | trial as u64
}

/// Maps `f` over `items` on a pool sized by [`THREADS_ENV`], preserving order.
pub(crate) fn par_map<T, R, F>(items: Vec<T>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Result<R> + Sync + Send,
{
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| items.into_par_iter().map(f).collect())
}

/// Runs `steps` transitions, checking interlacing after each one, and calls
/// `visit(m, state)` for `m = 0..=steps`.
pub(crate) fn checked_chain(
    initial: &RootVector,
    steps: usize,
    beta: InverseTemperature,
    seed: SeedSpec,
    mut visit: impl FnMut(usize, &RootVector),
) -> Result<RootVector> {
    if steps > initial.degree() {
        return Err(Error::InvalidArgument(format!(
            "{steps} steps requested from a degree-{} state",
            initial.degree()
        )));
    }
    visit(0, initial);
    let mut chain = Chain::new(initial.clone(), beta, seed);
    for m in 1..=steps {
        let prev = chain.state().clone();
        let next = chain.advance()?;
        ensure_interlacing(&prev, next, m)?;
        visit(m, next);
    }
    Ok(chain.into_state())
}

pub(crate) fn ensure_interlacing(outer: &RootVector, inner: &RootVector, m: usize) -> Result<()> {
    if check_interlacing(outer, inner, false)? {
        Ok(())
    } else {
        Err(Error::NumericDegeneracy(format!("interlacing violated at step {m}")))
    }
}

/// `true` when `values` decreases except for at most `allowed` increases, each
/// within a factor `1 + band` of its predecessor.
pub fn decreasing_with_inversions(values: &[f64], allowed: usize, band: f64) -> bool {
    let mut inversions = 0;
    for w in values.windows(2) {
        if w[1] >= w[0] {
            if w[1] > w[0] * (1.0 + band) {
                return false;
            }
            inversions += 1;
        }
    }
    inversions <= allowed
}

/// Evaluation point `z`, defaulting to `A + 2`; must exceed `A + 1`.
pub(crate) fn resolve_eval_point(z: Option<f64>, support_bound: f64) -> Result<f64> {
    let z = z.unwrap_or(support_bound + 2.0);
    if !(z > support_bound + 1.0) {
        return Err(Error::Domain(format!(
            "evaluation point z = {z} must exceed A + 1 = {}",
            support_bound + 1.0
        )));
    }
    Ok(z)
}

pub(crate) fn validate_common(betas: &[InverseTemperature], trials: usize) -> Result<()> {
    if betas.is_empty() {
        return Err(Error::InvalidParameter("at least one beta is required".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    Ok(())
}

pub(crate) fn validate_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tau = {tau} must lie in (0, 1)")))
    }
}

pub(crate) fn validate_n_grid(spec: &InitialMeasureSpec, n_grid: &[usize]) -> Result<()> {
    if n_grid.is_empty() {
        return Err(Error::InvalidParameter("n grid is empty".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n grid must be strictly increasing".into()));
    }
    if n_grid[0] < 2 {
        return Err(Error::InvalidParameter("every n must be at least 2".into()));
    }
    if let Some(d) = spec.fixed_degree() {
        if n_grid.iter().any(|&n| n != d) {
            return Err(Error::InvalidParameter(format!("explicit initial roots fix n = {d}")));
        }
    }
    Ok(())
}

pub(crate) fn validate_threshold_n(n_grid: &[usize], at: Option<usize>) -> Result<()> {
    match at {
        Some(n) if !n_grid.contains(&n) => Err(Error::InvalidParameter(format!(
            "threshold point n = {n} is not on the grid"
        ))),
        _ => Ok(()),
    }
}

/// The grid point a threshold applies to and the series value there.
pub(crate) fn threshold_point(n_grid: &[usize], at: Option<usize>, series: &[f64]) -> (usize, f64) {
    let i = at
        .and_then(|n| n_grid.iter().position(|&g| g == n))
        .unwrap_or(n_grid.len() - 1);
    (n_grid[i], series[i])
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Raw chain trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub initial: InitialMeasureSpec,
    pub n: usize,
    pub tau: f64,
    pub betas: Vec<InverseTemperature>,
    pub trials: usize,
    pub seed: u64,
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        validate_common(&self.betas, self.trials)?;
        validate_tau(self.tau)?;
        validate_n_grid(&self.initial, &[self.n])
    }
}

/// Every state `m = 0..=⌊nτ⌋` of `trials` chains per β, one row per root.
pub fn simulate(cfg: &SimulateConfig) -> Result<ExperimentReport> {
    let started = std::time::Instant::now();
    cfg.validate()?;
    let initial = make_initial(&cfg.initial, cfg.n)?;
    let steps = crate::flow::steps_for_tau(cfg.n, cfg.tau)?;

    let units: Vec<(usize, usize)> = (0..cfg.betas.len())
        .flat_map(|b| (0..cfg.trials).map(move |t| (b, t)))
        .collect();
    let runs = par_map(units.clone(), |(b, t)| {
        let seed = SeedSpec::new(cfg.seed, stream_index(b, t));
        let mut states = Vec::with_capacity(steps + 1);
        checked_chain(&initial, steps, cfg.betas[b], seed, |_, s| states.push(s.clone()))?;
        Ok(states)
    })?;

    let mut report = ExperimentReport::new("simulate", cfg, cfg.initial.support_bound());
    let mut table = Table::new("states", &["n", "tau", "beta", "trial", "m", "j", "root"]);
    let mut pooled: Vec<Vec<f64>> = vec![Vec::new(); cfg.betas.len()];
    for (&(b, t), states) in units.iter().zip(&runs) {
        let beta = cfg.betas[b].to_string();
        for (m, s) in states.iter().enumerate() {
            for (j, &x) in s.as_slice().iter().enumerate() {
                table.push(vec![
                    cfg.n.into(),
                    cfg.tau.into(),
                    beta.as_str().into(),
                    t.into(),
                    m.into(),
                    j.into(),
                    x.into(),
                ]);
            }
        }
        pooled[b].extend_from_slice(states[steps].as_slice());
    }
    report.tables.push(table);
    for (b, roots) in pooled.into_iter().enumerate() {
        report.samples.push(RootSample {
            n: cfg.n,
            tau: cfg.tau,
            beta: cfg.betas[b].to_string(),
            roots,
        });
    }
    report.wall_time = started.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inversion_rule() {
        assert!(decreasing_with_inversions(&[4.0, 3.0, 2.0, 1.0], 1, 0.1));
        assert!(decreasing_with_inversions(&[4.0, 3.0, 3.2, 1.0], 1, 0.1));
        assert!(!decreasing_with_inversions(&[4.0, 3.0, 3.5, 1.0], 1, 0.1));
        assert!(!decreasing_with_inversions(&[4.0, 4.1, 4.2, 1.0], 1, 0.1));
        assert!(!decreasing_with_inversions(&[1.0, 1.0], 0, 0.1));
        assert!(decreasing_with_inversions(&[1.0], 0, 0.1));
    }

    #[test]
    fn stream_layout() {
        assert_eq!(stream_index(0, 5), 5);
        assert_eq!(stream_index(3, 7), (3u64 << 32) | 7);
    }

    #[test]
    fn eval_point_rules() {
        assert_eq!(resolve_eval_point(None, 1.0).unwrap(), 3.0);
        assert!(matches!(resolve_eval_point(Some(2.0), 1.0), Err(Error::Domain(_))));
        assert_eq!(resolve_eval_point(Some(2.5), 1.0).unwrap(), 2.5);
    }

    #[test]
    fn simulate_dumps_every_state() {
        let cfg = SimulateConfig {
            initial: InitialMeasureSpec::UniformInterval { a: -1.0, b: 1.0 },
            n: 6,
            tau: 0.5,
            betas: vec![InverseTemperature::Finite(2.0), InverseTemperature::Infinite],
            trials: 2,
            seed: 3,
        };
        let r = simulate(&cfg).unwrap();
        // per chain: 6 + 5 + 4 + 3 roots
        assert_eq!(r.tables[0].rows.len(), 2 * 2 * 18);
        assert_eq!(r.samples.len(), 2);
        assert_eq!(r.samples[1].roots.len(), 2 * 3);
        assert_eq!(simulate(&cfg).unwrap().tables, r.tables);
    }
}
