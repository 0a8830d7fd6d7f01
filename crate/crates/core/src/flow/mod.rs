//! The Markov chain on real root sets.
//!
//! One step maps the `d` roots `λ` of a monic polynomial and positive weights
//! `ρ` (summing to one) to the `d − 1` roots of
//!
//! ```text
//! Σ_j ρ_j Π_{k≠j} (z − λ_k)
//! ```
//!
//! With uniform weights this is the monic-normalized derivative; with
//! Dirichlet(β/2) weights it is the randomized derivative. Everything works on
//! roots directly: away from the roots the polynomial above equals
//! `P(z) · Σ_j ρ_j / (z − λ_j)`, so the new roots are the zeros of a secular
//! function (see [`secular`]).

mod secular;
mod triangular;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::{dirichlet_weights, DirichletWeights, InverseTemperature, SeedSpec, Stream};

pub use secular::{solve_secular, SECULAR_MAX_ITER, SECULAR_REL_TOL};
pub use triangular::{xj_values, XJ_MAX_DEGREE};

/// Roots closer than `CLUSTER_REL_TOL · (1 + span)` are treated as one root
/// with multiplicity.
pub const CLUSTER_REL_TOL: f64 = 1e-12;

/// Sorted multiset of finite real roots of a monic polynomial.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RootVector(Vec<f64>);

impl RootVector {
    /// Sorts the input; rejects non-finite entries.
    pub fn new(mut roots: Vec<f64>) -> Result<Self> {
        if let Some(x) = roots.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("root {x} is not finite")));
        }
        roots.sort_by(f64::total_cmp);
        Ok(RootVector(roots))
    }

    /// Degree-zero polynomial (the constant 1).
    pub fn empty() -> Self {
        RootVector(Vec::new())
    }

    pub(crate) fn from_sorted(roots: Vec<f64>) -> Self {
        debug_assert!(roots.windows(2).all(|w| w[0] <= w[1]));
        RootVector(roots)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> Option<f64> {
        self.0.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.0.last().copied()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn span(&self) -> f64 {
        match (self.min(), self.max()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// True when every root lies in `[-bound, bound]`.
    pub fn within(&self, bound: f64) -> bool {
        self.0.iter().all(|x| x.abs() <= bound)
    }
}

/// Run parameters of one flow: initial degree, number of steps, β, the support
/// bound `A` of the initial roots and the evaluation point `z > A + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowParams {
    pub n: usize,
    pub steps: usize,
    pub beta: InverseTemperature,
    pub support_bound: f64,
    pub eval_point: f64,
}

impl FlowParams {
    pub fn new(n: usize, steps: usize, beta: InverseTemperature, support_bound: f64, eval_point: f64) -> Result<Self> {
        if n == 0 || steps >= n {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= steps < n, got steps = {steps}, n = {n}"
            )));
        }
        if !(support_bound > 0.0) || !support_bound.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "support bound {support_bound} must be positive"
            )));
        }
        if !(eval_point > support_bound + 1.0) {
            return Err(Error::Domain(format!(
                "evaluation point z = {eval_point} must exceed A + 1 = {}",
                support_bound + 1.0
            )));
        }
        Ok(FlowParams {
            n,
            steps,
            beta,
            support_bound,
            eval_point,
        })
    }

    /// Step count `floor(n τ)` for time `τ ∈ (0, 1)`.
    pub fn from_tau(n: usize, tau: f64, beta: InverseTemperature, support_bound: f64, eval_point: f64) -> Result<Self> {
        Self::new(n, steps_for_tau(n, tau)?, beta, support_bound, eval_point)
    }
}

/// `floor(n τ)`, rejecting τ outside the open unit interval.
pub fn steps_for_tau(n: usize, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must lie in (0, 1)")));
    }
    Ok((n as f64 * tau).floor() as usize)
}

/// Roots of `Σ_j ρ_j Π_{k≠j}(z − λ_k)`.
///
/// Roots closer than the clustering tolerance are merged (weights summed)
/// before the secular solve, and a root of multiplicity `r` is emitted `r − 1`
/// times.
pub fn randomized_step(state: &RootVector, weights: &DirichletWeights) -> Result<RootVector> {
    let roots = state.as_slice();
    let d = roots.len();
    if d == 0 {
        return Err(Error::InvalidArgument("cannot step a degree-0 state".into()));
    }
    if weights.len() != d {
        return Err(Error::InvalidArgument(format!(
            "{} weights for a degree-{d} state",
            weights.len()
        )));
    }
    let w = weights.as_slice();
    let eps = CLUSTER_REL_TOL * (1.0 + state.span());

    let mut poles: Vec<f64> = Vec::with_capacity(d);
    let mut mass: Vec<f64> = Vec::with_capacity(d);
    let mut mult: Vec<usize> = Vec::with_capacity(d);
    for (j, (&x, &rho)) in roots.iter().zip(w).enumerate() {
        if j > 0 && x - roots[j - 1] <= eps {
            *mass.last_mut().unwrap() += rho;
            *mult.last_mut().unwrap() += 1;
        } else {
            poles.push(x);
            mass.push(rho);
            mult.push(1);
        }
    }

    let interior = if poles.len() >= 2 {
        secular::solve_gaps(&poles, &mass)?
    } else {
        Vec::new()
    };

    let mut out = Vec::with_capacity(d - 1);
    for (c, (&pole, &r)) in poles.iter().zip(&mult).enumerate() {
        out.extend(std::iter::repeat_n(pole, r - 1));
        if let Some(&x) = interior.get(c) {
            out.push(x);
        }
    }
    Ok(RootVector::from_sorted(out))
}

/// Roots of the derivative of the monic polynomial with roots `state`.
pub fn derivative_step(state: &RootVector) -> Result<RootVector> {
    if state.is_empty() {
        return Err(Error::InvalidArgument("cannot differentiate a degree-0 state".into()));
    }
    randomized_step(state, &DirichletWeights::uniform(state.degree()))
}

/// Roots of the monic renormalized `r`-th derivative.
pub fn iterated_derivative(state: &RootVector, r: usize) -> Result<RootVector> {
    if r > state.degree() {
        return Err(Error::InvalidArgument(format!(
            "derivative order {r} exceeds degree {}",
            state.degree()
        )));
    }
    let mut cur = state.clone();
    for _ in 0..r {
        cur = derivative_step(&cur)?;
    }
    Ok(cur)
}

/// `Σ_j log(z − λ_j)`: the log of the monic polynomial at `z > max root`.
pub fn log_monic_eval(state: &RootVector, z: f64) -> Result<f64> {
    if let Some(top) = state.max() {
        if !(z > top) {
            return Err(Error::Domain(format!("z = {z} is not above the largest root {top}")));
        }
    }
    Ok(state.as_slice().iter().map(|x| (z - x).ln()).sum())
}

/// A chain being advanced one step at a time. Step `m` (1-based) draws fresh
/// weights of length `n + 1 − m` from the chain's own stream.
pub struct Chain {
    state: RootVector,
    beta: InverseTemperature,
    rng: Stream,
    taken: usize,
}

impl Chain {
    pub fn new(initial: RootVector, beta: InverseTemperature, seed: SeedSpec) -> Self {
        Chain {
            state: initial,
            beta,
            rng: seed.stream(),
            taken: 0,
        }
    }

    pub fn state(&self) -> &RootVector {
        &self.state
    }

    pub fn steps_taken(&self) -> usize {
        self.taken
    }

    pub fn into_state(self) -> RootVector {
        self.state
    }

    /// Advances one step and returns the new state.
    pub fn advance(&mut self) -> Result<&RootVector> {
        let weights = dirichlet_weights(self.state.degree(), self.beta, &mut self.rng)?;
        self.state = randomized_step(&self.state, &weights)?;
        self.taken += 1;
        Ok(&self.state)
    }
}

/// States `0..=steps` of one chain.
#[derive(Debug, Clone, Serialize)]
pub struct ChainTrajectory {
    pub states: Vec<RootVector>,
    pub beta: InverseTemperature,
    pub seed: SeedSpec,
}

impl ChainTrajectory {
    pub fn last(&self) -> &RootVector {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// Runs `steps` transitions from `initial`.
pub fn run_chain(
    initial: &RootVector,
    steps: usize,
    beta: InverseTemperature,
    seed: SeedSpec,
) -> Result<ChainTrajectory> {
    if steps > initial.degree() {
        return Err(Error::InvalidArgument(format!(
            "{steps} steps requested from a degree-{} state",
            initial.degree()
        )));
    }
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial.clone());
    let mut chain = Chain::new(initial.clone(), beta, seed);
    for _ in 0..steps {
        states.push(chain.advance()?.clone());
    }
    Ok(ChainTrajectory { states, beta, seed })
}

/// Final state after `steps` transitions, without keeping the trajectory.
pub fn run_chain_final(
    initial: &RootVector,
    steps: usize,
    beta: InverseTemperature,
    seed: SeedSpec,
) -> Result<RootVector> {
    if steps > initial.degree() {
        return Err(Error::InvalidArgument(format!(
            "{steps} steps requested from a degree-{} state",
            initial.degree()
        )));
    }
    let mut chain = Chain::new(initial.clone(), beta, seed);
    for _ in 0..steps {
        chain.advance()?;
    }
    Ok(chain.into_state())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rv(xs: &[f64]) -> RootVector {
        RootVector::new(xs.to_vec()).unwrap()
    }

    fn w(xs: &[f64]) -> DirichletWeights {
        DirichletWeights::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn linear_cases() {
        let out = randomized_step(&rv(&[-1.0, 1.0]), &w(&[0.5, 0.5])).unwrap();
        assert_eq!(out.as_slice(), &[0.0]);
        let out = randomized_step(&rv(&[-1.0, 1.0]), &w(&[0.25, 0.75])).unwrap();
        assert!((out.as_slice()[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn cubic_with_uniform_weights() {
        // 3z² − 6z + 2 = 0
        let third = 1.0 / 3.0;
        let out = randomized_step(&rv(&[0.0, 1.0, 2.0]), &w(&[third, third, third])).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((out.as_slice()[0] - (1.0 - s)).abs() < 1e-13);
        assert!((out.as_slice()[1] - (1.0 + s)).abs() < 1e-13);
        assert!((out.as_slice()[0] - 0.4226497).abs() < 1e-7);
    }

    #[test]
    fn derivative_examples() {
        let out = derivative_step(&rv(&[-1.0, 0.0, 1.0])).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((out.as_slice()[0] + s).abs() < 1e-13 && (out.as_slice()[1] - s).abs() < 1e-13);
        assert!(derivative_step(&rv(&[4.2])).unwrap().is_empty());
        assert_eq!(derivative_step(&rv(&[1.5, 1.5])).unwrap().as_slice(), &[1.5]);
        assert!(derivative_step(&RootVector::empty()).is_err());
    }

    #[test]
    fn multiplicities_drop_by_one() {
        let out = derivative_step(&rv(&[0.0, 0.0, 0.0, 1.0, 2.0, 2.0])).unwrap();
        let s = out.as_slice();
        assert_eq!(s.len(), 5);
        assert_eq!(&s[..2], &[0.0, 0.0]);
        assert!(s[2] > 0.0 && s[2] < 1.0);
        assert!(s[3] > 1.0 && s[3] < 2.0);
        assert_eq!(s[4], 2.0);
    }

    #[test]
    fn mismatch_is_rejected() {
        let e = randomized_step(&rv(&[0.0, 1.0]), &DirichletWeights::uniform(3));
        assert!(matches!(e, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn iterated_derivative_examples() {
        assert_eq!(
            iterated_derivative(&rv(&[0.0, 1.0, 2.0]), 2).unwrap().as_slice(),
            &[1.0]
        );
        let s = rv(&[0.3, 0.7, 2.0]);
        assert_eq!(iterated_derivative(&s, 0).unwrap(), s);
        assert_eq!(iterated_derivative(&rv(&[-1.0, 1.0]), 1).unwrap().as_slice(), &[0.0]);
        assert!(iterated_derivative(&rv(&[-1.0, 1.0]), 3).is_err());
    }

    #[test]
    fn log_eval_examples() {
        assert!((log_monic_eval(&rv(&[-1.0, 1.0]), 3.0).unwrap() - 8f64.ln()).abs() < 1e-15);
        assert_eq!(log_monic_eval(&RootVector::empty(), 5.0).unwrap(), 0.0);
        assert!((log_monic_eval(&rv(&[0.0, 0.0, 0.0]), 2.0).unwrap() - 3.0 * 2f64.ln()).abs() < 1e-15);
        assert!(matches!(log_monic_eval(&rv(&[0.0, 1.0]), 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn chain_examples() {
        let t = run_chain(&rv(&[-1.0, 1.0]), 2, InverseTemperature::Infinite, SeedSpec::new(0, 0)).unwrap();
        assert_eq!(t.states.len(), 3);
        assert_eq!(t.states[1].as_slice(), &[0.0]);
        assert!(t.states[2].is_empty());

        let init = rv(&[0.1, 0.5, 0.9, 1.3]);
        let t = run_chain(&init, 4, InverseTemperature::Finite(1.0), SeedSpec::new(1, 2)).unwrap();
        assert_eq!(t.last().degree(), 0);
        for (m, s) in t.states.iter().enumerate() {
            assert_eq!(s.degree(), 4 - m);
        }
        assert!(run_chain(&init, 5, InverseTemperature::Infinite, SeedSpec::new(0, 0)).is_err());
    }

    #[test]
    fn chain_step_matches_quadratic_for_sampled_weights() {
        let init = rv(&[0.0, 1.0, 2.0]);
        let seed = SeedSpec::new(2024, 7);
        let beta = InverseTemperature::Finite(2.0);
        let t = run_chain(&init, 1, beta, seed).unwrap();
        let weights = dirichlet_weights(3, beta, &mut seed.stream()).unwrap();
        let [a, b, c] = [weights.as_slice()[0], weights.as_slice()[1], weights.as_slice()[2]];
        // a(z−1)(z−2) + b z(z−2) + c z(z−1) = z² − (3a + 2b + c) z + 2a
        let p = 3.0 * a + 2.0 * b + c;
        let disc = (p * p - 8.0 * a).sqrt();
        let (r1, r2) = ((p - disc) / 2.0, (p + disc) / 2.0);
        let s = t.last().as_slice();
        assert!(0.0 < s[0] && s[0] < 1.0 && 1.0 < s[1] && s[1] < 2.0);
        assert!((s[0] - r1).abs() < 1e-12 && (s[1] - r2).abs() < 1e-12);
    }

    #[test]
    fn infinite_beta_chain_ignores_seed() {
        let init = rv(&[-0.9, -0.2, 0.1, 0.5, 0.8]);
        let a = run_chain(&init, 3, InverseTemperature::Infinite, SeedSpec::new(1, 0)).unwrap();
        let b = run_chain(&init, 3, InverseTemperature::Infinite, SeedSpec::new(2, 5)).unwrap();
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn flow_params_validation() {
        let inf = InverseTemperature::Infinite;
        let p = FlowParams::from_tau(1000, 0.5, inf, 1.0, 3.0).unwrap();
        assert_eq!(p.steps, 500);
        assert!(FlowParams::from_tau(10, 1.2, inf, 1.0, 3.0).is_err());
        assert!(matches!(
            FlowParams::from_tau(10, 0.5, inf, 1.0, 2.0),
            Err(Error::Domain(_))
        ));
        assert_eq!(steps_for_tau(7, 0.5).unwrap(), 3);
    }

    #[test]
    fn root_vector_sorts_and_rejects_nan() {
        assert_eq!(rv(&[2.0, -1.0, 0.5]).as_slice(), &[-1.0, 0.5, 2.0]);
        assert!(RootVector::new(vec![0.0, f64::NAN]).is_err());
    }
}
