//! Neyman-Pearson minimum type-II error and the hypothesis-testing route to
//! the size bound.
//!
//! [`ppv_bound`] is deliberately built from the minimax form (variables
//! `T_{xy}` with the substitution `R = p T` applied by hand, objective
//! `min mu`), not from the Charnes-Cooper form used in [`crate::converse`].
//! The two modules therefore provide independent computations of the same
//! quantity, which the test suite exploits.

use crate::channel::Channel;
use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, SolveOptions};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HtError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("inputs must be probability distributions: {0}")]
    BadDistribution(String),
    #[error("epsilon out of range: {0}")]
    BadEpsilon(f64),
    #[error("solver failure: {0}")]
    SolverFailure(#[from] LpError),
    #[error("inner test program infeasible; this cannot happen for eps in [0,1)")]
    Infeasible,
}

/// A randomized binary test: per-outcome acceptance probabilities in [0,1].
#[derive(Debug, Clone)]
pub struct BinaryTest {
    pub accept: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BetaResult {
    /// Minimum type-II error.
    pub beta: f64,
    /// Achieved acceptance under the null, `sum T P0 = 1 - eps` unless every
    /// outcome is accepted.
    pub null_acceptance: f64,
    pub test: BinaryTest,
}

fn check_distribution(name: &str, p: &[f64]) -> Result<(), HtError> {
    if p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(HtError::BadDistribution(format!("{name} has a negative or non-finite entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(HtError::BadDistribution(format!("{name} sums to {sum}")));
    }
    Ok(())
}

/// Minimum type-II error `beta_{1-eps}(P0, P1)` over randomized tests with
/// type-I error at most `eps`, by the Neyman-Pearson construction: outcomes
/// are accepted greedily in decreasing likelihood-ratio order (outcomes with
/// `P1 = 0` first), with a fractional acceptance on the boundary outcome so
/// the type-I budget is met exactly.
pub fn beta(p0: &[f64], p1: &[f64], eps: f64) -> Result<BetaResult, HtError> {
    if p0.len() != p1.len() {
        return Err(HtError::DimensionMismatch(format!(
            "P0 has {} outcomes, P1 has {}",
            p0.len(),
            p1.len()
        )));
    }
    check_distribution("P0", p0)?;
    check_distribution("P1", p1)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(HtError::BadEpsilon(eps));
    }

    // Likelihood-ratio order: P1 = 0 outcomes first, then P0/P1 descending,
    // ties by outcome index. Comparisons use cross products to avoid the
    // division.
    let mut order: Vec<usize> = (0..p0.len()).filter(|&i| p0[i] > 0.0).collect();
    order.sort_by(|&i, &j| {
        let inf_i = p1[i] == 0.0;
        let inf_j = p1[j] == 0.0;
        match (inf_i, inf_j) {
            (true, true) => i.cmp(&j),
            (true, false) => std::cmp::Ordering::Less,
            (false, true) => std::cmp::Ordering::Greater,
            (false, false) => {
                let lhs = p0[j] * p1[i];
                let rhs = p0[i] * p1[j];
                lhs.partial_cmp(&rhs).unwrap().then(i.cmp(&j))
            }
        }
    });

    let mut accept = vec![0.0; p0.len()];
    let mut budget = 1.0 - eps;
    let mut beta_val = 0.0;
    let mut null_acceptance = 0.0;
    for &i in &order {
        if budget <= 0.0 {
            break;
        }
        let take = (budget / p0[i]).min(1.0);
        accept[i] = take;
        null_acceptance += take * p0[i];
        beta_val += take * p1[i];
        budget -= take * p0[i];
    }
    Ok(BetaResult { beta: beta_val, null_acceptance, test: BinaryTest { accept } })
}

/// Inner test program for a fixed input distribution: the smallest value of
/// `max_y sum_x T_{xy} p(x)` over tests `T` in `[0,1]` whose acceptance under
/// the channel output is at least `1 - eps`. Equals the maximum over output
/// distributions `Q` of `beta_{1-eps}(P_XY, P_X x Q_Y)`.
pub fn ppv_inner(channel: &Channel, p: &[f64], eps: f64) -> Result<f64, HtError> {
    let a = channel.input_size();
    let b = channel.output_size();
    if p.len() != a {
        return Err(HtError::DimensionMismatch(format!(
            "p has {} entries, channel has {a} inputs",
            p.len()
        )));
    }
    check_distribution("p", p)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(HtError::BadEpsilon(eps));
    }

    // variables: T_{xy} (a*b, bounded by 1), then the epigraph variable t
    let nv = a * b + 1;
    let mut obj = vec![0.0; nv];
    obj[a * b] = 1.0;
    let mut lp = LinearProgram::minimize(obj);
    for x in 0..a {
        for y in 0..b {
            lp.set_upper(x * b + y, 1.0);
            lp.set_var_name(x * b + y, format!("T[{x},{y}]"));
        }
    }
    lp.set_var_name(a * b, "t");
    for y in 0..b {
        let mut coeffs = vec![0.0; nv];
        for x in 0..a {
            coeffs[x * b + y] = p[x];
        }
        coeffs[a * b] = -1.0;
        lp.add_row(format!("col[{y}]"), coeffs, Relation::Le, 0.0);
    }
    let mut coeffs = vec![0.0; nv];
    for x in 0..a {
        for y in 0..b {
            coeffs[x * b + y] = channel.prob(x, y) * p[x];
        }
    }
    lp.add_row("type1", coeffs, Relation::Ge, 1.0 - eps);

    let sol = lp::solve(&lp, &SolveOptions::default())?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.value),
        LpStatus::Infeasible => Err(HtError::Infeasible),
        LpStatus::Unbounded => Err(HtError::SolverFailure(LpError::NumericalBreakdown(
            "inner test program reported unbounded".into(),
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct PpvBound {
    /// The size bound `1/mu`.
    pub m_ppv: f64,
    pub mu: f64,
    /// Optimal input distribution.
    pub p: Vec<f64>,
    /// `R = p T` at the optimum.
    pub r: Vec<Vec<f64>>,
    pub lp_iterations: usize,
}

/// The hypothesis-testing size bound, from the combined program over
/// `(R, p, mu)` after the substitution `R = p T`:
///
/// ```text
/// min mu  s.t.  sum_x R_{xy} <= mu,  sum E R >= 1 - eps,
///               sum p = 1,  0 <= R_{xy} <= p(x)
/// ```
pub fn ppv_bound(channel: &Channel, eps: f64) -> Result<PpvBound, HtError> {
    let a = channel.input_size();
    let b = channel.output_size();
    if !(0.0..1.0).contains(&eps) {
        return Err(HtError::BadEpsilon(eps));
    }

    // variables: R (a*b), p (a), mu
    let nv = a * b + a + 1;
    let mu_ix = a * b + a;
    let mut obj = vec![0.0; nv];
    obj[mu_ix] = 1.0;
    let mut lp = LinearProgram::minimize(obj);
    for y in 0..b {
        let mut coeffs = vec![0.0; nv];
        for x in 0..a {
            coeffs[x * b + y] = 1.0;
        }
        coeffs[mu_ix] = -1.0;
        lp.add_row(format!("col[{y}]"), coeffs, Relation::Le, 0.0);
    }
    let mut coeffs = vec![0.0; nv];
    for x in 0..a {
        for y in 0..b {
            coeffs[x * b + y] = channel.prob(x, y);
        }
    }
    lp.add_row("type1", coeffs, Relation::Ge, 1.0 - eps);
    let mut coeffs = vec![0.0; nv];
    for x in 0..a {
        coeffs[a * b + x] = 1.0;
    }
    lp.add_row("norm", coeffs, Relation::Eq, 1.0);
    for x in 0..a {
        for y in 0..b {
            let mut coeffs = vec![0.0; nv];
            coeffs[x * b + y] = 1.0;
            coeffs[a * b + x] = -1.0;
            lp.add_row(format!("ub[{x},{y}]"), coeffs, Relation::Le, 0.0);
        }
    }

    let sol = lp::solve(&lp, &SolveOptions::default())?;
    if sol.status != LpStatus::Optimal {
        return Err(HtError::SolverFailure(LpError::NumericalBreakdown(format!(
            "combined program reported {:?}",
            sol.status
        ))));
    }
    let mu = sol.value;
    let mut r = vec![vec![0.0; b]; a];
    for x in 0..a {
        for y in 0..b {
            r[x][y] = sol.primal[x * b + y];
        }
    }
    let p = sol.primal[a * b..a * b + a].to_vec();
    Ok(PpvBound { m_ppv: 1.0 / mu, mu, p, r, lp_iterations: sol.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel;

    #[test]
    fn beta_identical_distributions() {
        let p = [0.2, 0.3, 0.5];
        for eps in [0.0, 0.1, 0.5, 0.9] {
            let r = beta(&p, &p, eps).unwrap();
            assert!((r.beta - (1.0 - eps)).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_disjoint_supports() {
        let r = beta(&[1.0, 0.0], &[0.0, 1.0], 0.0).unwrap();
        assert_eq!(r.beta, 0.0);
        assert_eq!(r.test.accept, vec![1.0, 0.0]);
    }

    #[test]
    fn beta_two_outcome_example() {
        let r = beta(&[0.9, 0.1], &[0.5, 0.5], 0.1).unwrap();
        assert!((r.beta - 0.5).abs() < 1e-12);
        assert!((r.test.accept[0] - 1.0).abs() < 1e-12);
        assert_eq!(r.test.accept[1], 0.0);
        assert!((r.null_acceptance - 0.9).abs() < 1e-12);
    }

    #[test]
    fn beta_budget_met_exactly_with_fractional_boundary() {
        let r = beta(&[0.6, 0.4], &[0.1, 0.9], 0.2).unwrap();
        // outcome 0 has the larger ratio: accept fully (0.6), then 0.2/0.4
        // of outcome 1
        assert!((r.null_acceptance - 0.8).abs() < 1e-12);
        assert!((r.test.accept[1] - 0.5).abs() < 1e-12);
        assert!((r.beta - (0.1 + 0.5 * 0.9)).abs() < 1e-12);
    }

    #[test]
    fn ppv_inner_examples() {
        let noiseless = channel::noiseless(2).unwrap();
        let v = ppv_inner(&noiseless, &[0.5, 0.5], 0.0).unwrap();
        assert!((v - 0.5).abs() < 1e-9);

        let u = channel::useless(&[0.5, 0.5]).unwrap();
        for p in [[0.5, 0.5], [0.9, 0.1]] {
            let v = ppv_inner(&u, &p, 0.5).unwrap();
            assert!((v - 0.5).abs() < 1e-9);
        }

        let bsc = channel::bsc(0.1).unwrap();
        let v = ppv_inner(&bsc, &[0.5, 0.5], 0.1).unwrap();
        assert!((v - 0.5).abs() < 1e-9);
    }

    #[test]
    fn ppv_bound_examples() {
        let noiseless = channel::noiseless(4).unwrap();
        let b = ppv_bound(&noiseless, 0.0).unwrap();
        assert!((b.m_ppv - 4.0).abs() < 1e-9);

        let u = channel::useless(&[0.5, 0.5]).unwrap();
        let b = ppv_bound(&u, 0.75).unwrap();
        assert!((b.m_ppv - 4.0).abs() < 1e-8);

        let bsc = channel::bsc(0.1).unwrap();
        let b = ppv_bound(&bsc, 0.1).unwrap();
        assert!((b.m_ppv - 2.0).abs() < 1e-8);
    }
}
