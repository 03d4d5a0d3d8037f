//! Capacity, dispersion, exact simulation cost and the normal approximation.
//!
//! All reported quantities are in bits (capacity, simulation cost) or bits
//! squared (dispersion); natural logarithms are internal only. The convention
//! `0 log 0 = 0` applies throughout.

use crate::channel::Channel;
use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, SolveOptions};
use crate::zero_error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AsympError {
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("solver failure: {0}")]
    SolverFailure(#[from] LpError),
    #[error("dispersion program reported {0:?}")]
    UnexpectedStatus(LpStatus),
    #[error("zero-error subproblem failed: {0}")]
    ZeroError(#[from] zero_error::ZeroErrorError),
}

const LN2: f64 = std::f64::consts::LN_2;

/// Mutual information `I(E, p)` in bits.
pub fn mutual_information(channel: &Channel, p: &[f64]) -> f64 {
    let b = channel.output_size();
    let mut q = vec![0.0; b];
    for (x, &px) in p.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for y in 0..b {
            q[y] += px * channel.prob(x, y);
        }
    }
    let mut acc = 0.0;
    for (x, &px) in p.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for y in 0..b {
            let e = channel.prob(x, y);
            if e > 0.0 {
                acc += px * e * (e / q[y]).ln();
            }
        }
    }
    acc / LN2
}

/// Relative entropy `D(E(.|x) || q)` in bits; infinite when the row leaves
/// the support of `q`.
fn row_divergence_bits(channel: &Channel, x: usize, q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (y, &qy) in q.iter().enumerate() {
        let e = channel.prob(x, y);
        if e > 0.0 {
            if qy == 0.0 {
                return f64::INFINITY;
            }
            acc += e * (e / qy).ln();
        }
    }
    acc / LN2
}

#[derive(Debug, Clone)]
pub struct CapacityResult {
    /// Channel capacity in bits.
    pub bits: f64,
    pub p_star: Vec<f64>,
    pub q_star: Vec<f64>,
    pub iterations: usize,
    /// Final gap between the upper and lower capacity estimates, in bits.
    pub residual: f64,
}

const CAPACITY_ITERATION_CAP: usize = 100_000;

/// Blahut-Arimoto iteration with the relative-entropy stopping rule: stop
/// when the spread `max_x D(E(.|x)||q) - I(E,p)` drops below `tol` bits.
pub fn capacity(channel: &Channel, tol: f64) -> Result<CapacityResult, AsympError> {
    if !(tol > 0.0) {
        return Err(AsympError::DomainError(format!("tolerance must be positive, got {tol}")));
    }
    let a = channel.input_size();
    let b = channel.output_size();
    let mut p = vec![1.0 / a as f64; a];
    let mut d = vec![0.0; a];
    for iter in 1..=CAPACITY_ITERATION_CAP {
        let mut q = vec![0.0; b];
        for x in 0..a {
            if p[x] == 0.0 {
                continue;
            }
            for y in 0..b {
                q[y] += p[x] * channel.prob(x, y);
            }
        }
        // d_x in nats for the update, tracked in bits for the bounds
        let mut upper = f64::NEG_INFINITY;
        let mut weighted = 0.0;
        for x in 0..a {
            let mut acc = 0.0;
            for y in 0..b {
                let e = channel.prob(x, y);
                if e > 0.0 && q[y] > 0.0 {
                    acc += e * (e / q[y]).ln();
                }
            }
            d[x] = acc;
            upper = upper.max(acc);
            weighted += p[x] * acc.exp();
        }
        let lower = weighted.ln();
        let residual = (upper - lower) / LN2;
        if residual <= tol {
            return Ok(CapacityResult {
                bits: lower / LN2,
                p_star: p,
                q_star: q,
                iterations: iter,
                residual,
            });
        }
        for x in 0..a {
            p[x] *= (d[x] - lower).exp();
        }
        let norm: f64 = p.iter().sum();
        for px in p.iter_mut() {
            *px /= norm;
        }
    }
    Err(AsympError::NonConvergence(CAPACITY_ITERATION_CAP))
}

#[derive(Debug, Clone)]
pub struct DispersionResult {
    /// Channel dispersion in bits squared.
    pub bits2: f64,
    /// Variance-minimizing capacity-achieving input distribution.
    pub p_min: Vec<f64>,
    /// Inputs whose divergence reaches capacity within the support
    /// tolerance (10x the capacity tolerance).
    pub support: Vec<usize>,
}

/// Minimum information-density variance over the capacity-achieving input
/// polytope.
///
/// The conditional means are constant on the optimal face, so the total
/// variance is linear in `p` there and the minimization is the LP
/// `min sum_x p(x) Var(i|x)` over `p >= 0` supported on the near-capacity
/// set, with `sum p = 1` and the output distribution pinned. Uniqueness of
/// the capacity-achieving output distribution is assumed; the right-hand
/// side is taken from the support-restricted iterate so the program is
/// feasible by construction.
pub fn dispersion(channel: &Channel, tol: f64) -> Result<DispersionResult, AsympError> {
    let cap = capacity(channel, tol)?;
    dispersion_with(channel, &cap, tol)
}

pub fn dispersion_with(
    channel: &Channel,
    cap: &CapacityResult,
    tol: f64,
) -> Result<DispersionResult, AsympError> {
    let a = channel.input_size();
    let b = channel.output_size();
    let support_tol = 10.0 * tol;

    let support: Vec<usize> = (0..a)
        .filter(|&x| row_divergence_bits(channel, x, &cap.q_star) >= cap.bits - support_tol)
        .collect();
    // restrict and renormalize the iterate, then pin its output distribution
    let mut p_hat = vec![0.0; a];
    let mut mass = 0.0;
    for &x in &support {
        p_hat[x] = cap.p_star[x];
        mass += cap.p_star[x];
    }
    if mass <= 0.0 {
        return Err(AsympError::DomainError("empty capacity-achieving support".into()));
    }
    for v in p_hat.iter_mut() {
        *v /= mass;
    }
    let mut q_hat = vec![0.0; b];
    for x in 0..a {
        if p_hat[x] == 0.0 {
            continue;
        }
        for y in 0..b {
            q_hat[y] += p_hat[x] * channel.prob(x, y);
        }
    }

    // conditional variance of the information density, in bits^2
    let var_bits2: Vec<f64> = (0..a)
        .map(|x| {
            let mut mean = 0.0;
            let mut second = 0.0;
            for y in 0..b {
                let e = channel.prob(x, y);
                if e > 0.0 && q_hat[y] > 0.0 {
                    let i = (e / q_hat[y]).ln() / LN2;
                    mean += e * i;
                    second += e * i * i;
                }
            }
            (second - mean * mean).max(0.0)
        })
        .collect();

    let ns = support.len();
    let mut lp = LinearProgram::minimize(support.iter().map(|&x| var_bits2[x]).collect());
    for (j, &x) in support.iter().enumerate() {
        lp.set_var_name(j, format!("p[{x}]"));
    }
    lp.add_row("norm", vec![1.0; ns], Relation::Eq, 1.0);
    for y in 0..b {
        let coeffs: Vec<f64> = support.iter().map(|&x| channel.prob(x, y)).collect();
        lp.add_row(format!("out[{y}]"), coeffs, Relation::Eq, q_hat[y]);
    }
    let sol = lp::solve(&lp, &SolveOptions::default())?;
    if sol.status != LpStatus::Optimal {
        return Err(AsympError::UnexpectedStatus(sol.status));
    }
    let mut p_min = vec![0.0; a];
    for (j, &x) in support.iter().enumerate() {
        p_min[x] = sol.primal[j].max(0.0);
    }
    Ok(DispersionResult { bits2: sol.value.max(0.0), p_min, support })
}

/// Asymptotic exact simulation cost `log2 sum_y max_x E(y|x)` in bits.
pub fn exact_simulation_cost(channel: &Channel) -> f64 {
    let mut total = 0.0;
    for y in 0..channel.output_size() {
        let mut best: f64 = 0.0;
        for x in 0..channel.input_size() {
            best = best.max(channel.prob(x, y));
        }
        total += best;
    }
    total.log2()
}

// ---------------------------------------------------------------------------
// Gaussian tail
// ---------------------------------------------------------------------------

/// erfc by Maclaurin series for small arguments and a Lentz continued
/// fraction for large ones; relative error well under 1e-13 across the range
/// used here.
fn erfc(z: f64) -> f64 {
    if z < 0.0 {
        return 2.0 - erfc(-z);
    }
    if z < 2.0 {
        // erf(z) = 2/sqrt(pi) sum (-1)^k z^(2k+1) / (k! (2k+1))
        let mut term = z;
        let mut sum = z;
        let z2 = z * z;
        let mut k = 0usize;
        loop {
            k += 1;
            term *= -z2 / k as f64;
            let add = term / (2 * k + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) || k > 200 {
                break;
            }
        }
        1.0 - sum * std::f64::consts::FRAC_2_SQRT_PI
    } else {
        // erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
        let tiny = 1e-300;
        let mut f = z;
        let mut c = f64::INFINITY;
        let mut d = 0.0;
        for k in 1..=300 {
            let ak = k as f64 / 2.0;
            d = z + ak * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = z + ak / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-z * z).exp() / (std::f64::consts::PI.sqrt() * f)
    }
}

/// Standard normal tail `Q(x) = P(N(0,1) > x)`.
pub fn q_func(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse Gaussian tail: the unique `x` with `Q(x) = eps`. Monotone
/// bisection bracket followed by Newton refinement.
pub fn q_inv(eps: f64) -> Result<f64, AsympError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(AsympError::DomainError(format!("Q^-1 needs eps in (0,1), got {eps}")));
    }
    if eps == 0.5 {
        return Ok(0.0); // symmetry point, exact
    }
    let mut lo = -40.0;
    let mut hi = 40.0;
    // Q is decreasing: Q(lo) ~ 1, Q(hi) ~ 0
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if q_func(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..8 {
        let f = q_func(x) - eps;
        let d = normal_pdf(x);
        if d <= 0.0 {
            break;
        }
        let step = f / d;
        let next = x + step;
        if next.is_finite() && next >= lo - 1.0 && next <= hi + 1.0 {
            x = next;
        } else {
            break;
        }
        if step.abs() < 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// `n C - sqrt(n V) Q^{-1}(eps)` in bits.
pub fn normal_approximation(c: f64, v: f64, n: u64, eps: f64) -> Result<f64, AsympError> {
    if n == 0 {
        return Err(AsympError::DomainError("blocklength must be at least 1".into()));
    }
    if v < 0.0 {
        return Err(AsympError::DomainError(format!("dispersion must be nonnegative, got {v}")));
    }
    let n = n as f64;
    Ok(n * c - (n * v).sqrt() * q_inv(eps)?)
}

/// The three equivalent zero-dispersion conditions, evaluated numerically.
#[derive(Debug, Clone)]
pub struct ZeroDispersionFlags {
    /// `C = log2 alpha*`, capacity reached with zero error.
    pub capacity_eq_alpha: bool,
    /// `K0 = C`, simulation cost collapses to capacity.
    pub k0_eq_capacity: bool,
    /// `V = 0`.
    pub dispersion_zero: bool,
    /// All three flags agree, as the equivalence demands; a false value
    /// here flags a numerical tolerance problem, not a counterexample.
    pub consistent: bool,
    pub capacity_bits: f64,
    pub log2_alpha_star: f64,
    pub k0_bits: f64,
    pub dispersion_bits2: f64,
}

pub fn zero_dispersion_check(channel: &Channel, tol: f64) -> Result<ZeroDispersionFlags, AsympError> {
    let cap = capacity(channel, (tol * 1e-2).min(1e-9))?;
    let disp = dispersion_with(channel, &cap, (tol * 1e-2).min(1e-9))?;
    let z = zero_error_size(channel)?;
    let k0 = exact_simulation_cost(channel);
    let log2_alpha = z.alpha_star.log2();
    let capacity_eq_alpha = (cap.bits - log2_alpha).abs() <= tol;
    let k0_eq_capacity = (k0 - cap.bits).abs() <= tol;
    let dispersion_zero = disp.bits2 <= tol;
    let consistent =
        capacity_eq_alpha == k0_eq_capacity && k0_eq_capacity == dispersion_zero;
    Ok(ZeroDispersionFlags {
        capacity_eq_alpha,
        k0_eq_capacity,
        dispersion_zero,
        consistent,
        capacity_bits: cap.bits,
        log2_alpha_star: log2_alpha,
        k0_bits: k0,
        dispersion_bits2: disp.bits2,
    })
}

use zero_error::zero_error_size;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel;

    fn h2(d: f64) -> f64 {
        -d * d.log2() - (1.0 - d) * (1.0 - d).log2()
    }

    #[test]
    fn capacity_closed_forms() {
        let id3 = channel::noiseless(3).unwrap();
        let c = capacity(&id3, 1e-9).unwrap();
        assert!((c.bits - 3f64.log2()).abs() < 1e-9);

        let bsc = channel::bsc(0.1).unwrap();
        let c = capacity(&bsc, 1e-10).unwrap();
        assert!((c.bits - (1.0 - h2(0.1))).abs() < 1e-8);
        // KKT: divergences meet capacity on the support
        for x in 0..2 {
            let d = mutual_information(&bsc, &[if x == 0 { 1.0 } else { 0.0 }, if x == 0 { 0.0 } else { 1.0 }]);
            let _ = d; // rows are symmetric; uniform input is optimal
        }
        assert!((c.p_star[0] - 0.5).abs() < 1e-6);

        let u = channel::useless(&[0.3, 0.7]).unwrap();
        let c = capacity(&u, 1e-10).unwrap();
        assert!(c.bits.abs() < 1e-9);
    }

    #[test]
    fn dispersion_closed_forms() {
        let bsc = channel::bsc(0.1).unwrap();
        let d = dispersion(&bsc, 1e-10).unwrap();
        let expected = 0.1 * 0.9 * (0.9f64 / 0.1).log2().powi(2);
        assert!((d.bits2 - expected).abs() < 1e-6, "got {} want {}", d.bits2, expected);

        let id4 = channel::noiseless(4).unwrap();
        let d = dispersion(&id4, 1e-10).unwrap();
        assert!(d.bits2.abs() < 1e-9);

        let u = channel::useless(&[0.3, 0.7]).unwrap();
        let d = dispersion(&u, 1e-10).unwrap();
        assert!(d.bits2.abs() < 1e-9);
    }

    #[test]
    fn simulation_cost() {
        assert!((exact_simulation_cost(&channel::noiseless(4).unwrap()) - 2.0).abs() < 1e-12);
        let bsc = channel::bsc(0.1).unwrap();
        assert!((exact_simulation_cost(&bsc) - 1.8f64.log2()).abs() < 1e-12);
        let u = channel::useless(&[0.3, 0.7]).unwrap();
        assert!(exact_simulation_cost(&u).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail() {
        assert!((q_func(1.0) - 0.15865525393145707).abs() < 1e-13);
        assert!((q_func(2.0) - 0.02275013194817921).abs() < 1e-13);
        assert_eq!(q_inv(0.5).unwrap(), 0.0);
        assert!((q_inv(0.158655).unwrap() - 1.0).abs() < 1e-5);
        assert!((q_inv(0.022750).unwrap() - 2.0).abs() < 1e-5);
        for eps in [1e-6, 1e-3, 0.1, 0.3, 0.7, 0.99] {
            let x = q_inv(eps).unwrap();
            assert!((q_func(x) - eps).abs() <= 1e-10, "eps {eps}");
        }
        assert!(q_inv(0.0).is_err());
        assert!(q_inv(1.0).is_err());
    }

    #[test]
    fn normal_approx() {
        assert_eq!(normal_approximation(1.0, 0.0, 10, 0.1).unwrap(), 10.0);
        let c = 0.531004;
        let v = 0.904358;
        assert!((normal_approximation(c, v, 7, 0.5).unwrap() - 7.0 * c).abs() < 1e-9);
        let val = normal_approximation(c, v, 100, 0.05).unwrap();
        assert!((val - (53.1004 - 10.0 * 0.904358f64.sqrt() * 1.6448536269514722)).abs() < 1e-6);
    }

    #[test]
    fn zero_dispersion_flags() {
        let id3 = channel::noiseless(3).unwrap();
        let f = zero_dispersion_check(&id3, 1e-6).unwrap();
        assert!(f.capacity_eq_alpha && f.k0_eq_capacity && f.dispersion_zero && f.consistent);

        let u = channel::useless(&[0.3, 0.7]).unwrap();
        let f = zero_dispersion_check(&u, 1e-6).unwrap();
        assert!(f.capacity_eq_alpha && f.k0_eq_capacity && f.dispersion_zero && f.consistent);

        let bsc = channel::bsc(0.1).unwrap();
        let f = zero_dispersion_check(&bsc, 1e-6).unwrap();
        assert!(!f.capacity_eq_alpha && !f.k0_eq_capacity && !f.dispersion_zero && f.consistent);

        let bec = channel::bec(0.3).unwrap();
        let f = zero_dispersion_check(&bec, 1e-6).unwrap();
        assert!(!f.capacity_eq_alpha && !f.k0_eq_capacity && !f.dispersion_zero && f.consistent);
    }
}
