//! The converse linear programs for a single channel use: minimum error
//! probability at a given message count, and maximum (real-valued) code size
//! at a given error budget, each with a primal witness and a dual
//! certificate.
//!
//! Error query, for messages `M` (variables `R_{xy}`, `p(x)`):
//!
//! ```text
//! max  sum_{x,y} E(y|x) R_{xy}
//! s.t. sum_x R_{xy} <= 1/M          for every y     (multiplier z_y >= 0)
//!      R_{xy} - p(x) <= 0           for every x,y   (multiplier D_{xy} >= 0)
//!      sum_x p(x) = 1                               (multiplier alpha, free)
//!      R, p >= 0
//! ```
//!
//! Size query, for error budget `eps` (variables `F_{xy}`, `v_x`, the
//! fractional form after the Charnes-Cooper change of variables):
//!
//! ```text
//! max  sum_x v_x
//! s.t. F_{xy} - v_x <= 0                      (multiplier V_{xy} >= 0)
//!      sum_x F_{xy} <= 1 for every y          (multiplier c_y >= 0)
//!      (1-eps) sum_x v_x - sum E F <= 0       (multiplier zeta >= 0)
//!      F, v >= 0
//! ```
//!
//! Any feasible point of the size dual certifies `sum_y c_y` as an upper
//! bound on the real-valued size, hence on the largest achievable integer
//! code size.

use crate::channel::Channel;
use crate::lp::{self, LinearProgram, LpError, LpScalar, LpStatus, Relation, SolveOptions};
use num::{BigRational, FromPrimitive, Signed, ToPrimitive};

fn rat_zero() -> BigRational {
    num::Zero::zero()
}

fn rat_one() -> BigRational {
    num::One::one()
}
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConverseError {
    #[error("solver failure: {0}")]
    SolverFailure(#[from] LpError),
    #[error("lp reported {0:?} for a program that is feasible and bounded by construction")]
    UnexpectedStatus(LpStatus),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bad query: {0}")]
    BadQuery(String),
}

/// A converse query: either the error probability at a message count or the
/// code size at an error budget. Exactly one quantity parameterizes each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Query {
    Error { messages: u64 },
    Size { epsilon: f64 },
}

impl Query {
    /// `mu = 1/M` for error queries.
    pub fn mu(&self) -> Option<f64> {
        match self {
            Query::Error { messages } => Some(1.0 / *messages as f64),
            Query::Size { .. } => None,
        }
    }
}

/// Primal witness of the error LP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorPrimalSolution {
    /// `R_{xy}`, row-indexed by input.
    pub r: Vec<Vec<f64>>,
    /// Input distribution `p(x)`.
    pub p: Vec<f64>,
    /// `sum E(y|x) R_{xy}`, the success probability.
    pub success: f64,
    pub p_err: f64,
}

/// Feasible dual point of the error LP; certifies a lower bound on the error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorDualCertificate {
    pub z: Vec<f64>,
    pub d: Vec<Vec<f64>>,
    pub alpha: f64,
}

impl ErrorDualCertificate {
    /// `1 - alpha - (1/M) sum_y z_y`, the certified error lower bound.
    pub fn certified_error(&self, messages: u64) -> f64 {
        1.0 - self.alpha - self.z.iter().sum::<f64>() / messages as f64
    }

    /// Largest violation of the dual constraints against a channel; a valid
    /// certificate keeps this at or below the working tolerance.
    pub fn max_violation(&self, channel: &Channel) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..channel.input_size() {
            let mut d_row = 0.0;
            for y in 0..channel.output_size() {
                worst = worst.max(channel.prob(x, y) - self.d[x][y] - self.z[y]);
                worst = worst.max(-self.d[x][y]);
                d_row += self.d[x][y];
            }
            worst = worst.max(d_row - self.alpha);
        }
        for &zy in &self.z {
            worst = worst.max(-zy);
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct ErrorBound {
    pub p_err: f64,
    pub primal: ErrorPrimalSolution,
    pub dual: ErrorDualCertificate,
    pub lp_iterations: usize,
}

/// Primal witness of the size LP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizePrimalSolution {
    pub f: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    /// `sum_x v_x`, the real-valued size bound.
    pub m_beta: f64,
    /// Charnes-Cooper scale; equals `m_beta` with the transform used here.
    pub t: f64,
}

/// Feasible dual point of the size LP; `sum_y c_y` certifies an upper bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeDualCertificate {
    pub zeta: f64,
    pub c: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
}

impl SizeDualCertificate {
    pub fn certified_bound(&self) -> f64 {
        self.c.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct SizeBound {
    pub m_beta: f64,
    /// `floor(m_beta)` with the float-noise safeguard; recomputed exactly
    /// when `m_beta` lands near an integer.
    pub m_ns: u64,
    pub primal: SizePrimalSolution,
    pub dual: SizeDualCertificate,
    pub lp_iterations: usize,
    /// True when the floor was confirmed by an exact-rational resolve.
    pub exact_floor_recheck: bool,
}

/// Additive slack used before flooring so an integral optimum perturbed by
/// float noise is not lost.
pub const FLOOR_GUARD: f64 = 1e-6;
/// Distance from an integer below which the floor is recomputed exactly.
const EXACT_RECHECK_WINDOW: f64 = 1e-4;
/// Largest `|A|(|B|+1)` for which the exact recheck is attempted.
const EXACT_RECHECK_SIZE_CAP: usize = 256;

pub fn default_options() -> SolveOptions {
    SolveOptions::default()
}

// ---------------------------------------------------------------------------
// LP builders, generic over the scalar so the exact path reuses them.
// ---------------------------------------------------------------------------

fn error_lp<T: LpScalar>(matrix: &[Vec<T>], mu: T) -> LinearProgram<T> {
    let a = matrix.len();
    let b = matrix[0].len();
    let nv = a * b + a;
    let mut obj = vec![T::zero(); nv];
    for x in 0..a {
        for y in 0..b {
            obj[x * b + y] = matrix[x][y].clone();
        }
    }
    let mut lp = LinearProgram::maximize(obj);
    for x in 0..a {
        for y in 0..b {
            lp.set_var_name(x * b + y, format!("R[{x},{y}]"));
        }
        lp.set_var_name(a * b + x, format!("p[{x}]"));
    }
    // one packing row per output symbol
    for y in 0..b {
        let mut coeffs = vec![T::zero(); nv];
        for x in 0..a {
            coeffs[x * b + y] = T::one();
        }
        lp.add_row(format!("cap[{y}]"), coeffs, Relation::Le, mu.clone());
    }
    // R_{xy} <= p(x)
    for x in 0..a {
        for y in 0..b {
            let mut coeffs = vec![T::zero(); nv];
            coeffs[x * b + y] = T::one();
            coeffs[a * b + x] = -T::one();
            lp.add_row(format!("ub[{x},{y}]"), coeffs, Relation::Le, T::zero());
        }
    }
    // sum p = 1
    let mut coeffs = vec![T::zero(); nv];
    for x in 0..a {
        coeffs[a * b + x] = T::one();
    }
    lp.add_row("norm", coeffs, Relation::Eq, T::one());
    lp
}

fn size_lp<T: LpScalar>(matrix: &[Vec<T>], eps: T) -> LinearProgram<T> {
    let a = matrix.len();
    let b = matrix[0].len();
    let nv = a * b + a;
    let mut obj = vec![T::zero(); nv];
    for x in 0..a {
        obj[a * b + x] = T::one();
    }
    let mut lp = LinearProgram::maximize(obj);
    for x in 0..a {
        for y in 0..b {
            lp.set_var_name(x * b + y, format!("F[{x},{y}]"));
        }
        lp.set_var_name(a * b + x, format!("v[{x}]"));
    }
    // F_{xy} <= v_x
    for x in 0..a {
        for y in 0..b {
            let mut coeffs = vec![T::zero(); nv];
            coeffs[x * b + y] = T::one();
            coeffs[a * b + x] = -T::one();
            lp.add_row(format!("ub[{x},{y}]"), coeffs, Relation::Le, T::zero());
        }
    }
    // sum_x F_{xy} <= 1
    for y in 0..b {
        let mut coeffs = vec![T::zero(); nv];
        for x in 0..a {
            coeffs[x * b + y] = T::one();
        }
        lp.add_row(format!("cap[{y}]"), coeffs, Relation::Le, T::one());
    }
    // (1-eps) sum v - sum E F <= 0
    let mut coeffs = vec![T::zero(); nv];
    for x in 0..a {
        for y in 0..b {
            coeffs[x * b + y] = -matrix[x][y].clone();
        }
        coeffs[a * b + x] = T::one() - eps.clone();
    }
    lp.add_row("quality", coeffs, Relation::Le, T::zero());
    lp
}

fn float_matrix(channel: &Channel) -> Vec<Vec<f64>> {
    channel.matrix().to_vec()
}

// ---------------------------------------------------------------------------
// Error query
// ---------------------------------------------------------------------------

/// Minimum error probability of a non-signalling code with `messages`
/// messages, with primal witness and dual certificate.
pub fn min_error(channel: &Channel, messages: u64) -> Result<ErrorBound, ConverseError> {
    min_error_with(channel, messages, &default_options())
}

pub fn min_error_with(
    channel: &Channel,
    messages: u64,
    opts: &SolveOptions,
) -> Result<ErrorBound, ConverseError> {
    if messages == 0 {
        return Err(ConverseError::BadQuery("message count must be at least 1".into()));
    }
    let a = channel.input_size();
    let b = channel.output_size();
    let lp = error_lp(&float_matrix(channel), 1.0 / messages as f64);
    let sol = lp::solve(&lp, opts)?;
    if sol.status != LpStatus::Optimal {
        return Err(ConverseError::UnexpectedStatus(sol.status));
    }
    let mut r = vec![vec![0.0; b]; a];
    for x in 0..a {
        for y in 0..b {
            r[x][y] = sol.primal[x * b + y];
        }
    }
    let p = sol.primal[a * b..].to_vec();
    let success = sol.value;
    let p_err = (1.0 - success).max(0.0);
    // multipliers: packing rows, then the R<=p grid, then the equality
    let z: Vec<f64> = sol.dual[..b].iter().map(|&v| v.max(0.0)).collect();
    let mut d = vec![vec![0.0; b]; a];
    for x in 0..a {
        for y in 0..b {
            d[x][y] = sol.dual[b + x * b + y].max(0.0);
        }
    }
    let alpha = sol.dual[b + a * b];
    Ok(ErrorBound {
        p_err,
        primal: ErrorPrimalSolution { r, p, success, p_err },
        dual: ErrorDualCertificate { z, d, alpha },
        lp_iterations: sol.iterations,
    })
}

/// Exact-rational error bound. The channel's decimal-exact matrix is used
/// when available, otherwise the lossless rational value of the floats.
pub fn min_error_exact(channel: &Channel, messages: u64) -> Result<BigRational, ConverseError> {
    if messages == 0 {
        return Err(ConverseError::BadQuery("message count must be at least 1".into()));
    }
    let matrix = channel.exact_or_lossless();
    let mu = rat_one() / BigRational::from_u64(messages).expect("u64 fits");
    let lp = error_lp(&matrix, mu);
    let sol = lp::solve(&lp, &default_options())?;
    if sol.status != LpStatus::Optimal {
        return Err(ConverseError::UnexpectedStatus(sol.status));
    }
    let err = rat_one() - sol.value;
    Ok(if err.is_negative() { rat_zero() } else { err })
}

/// Evaluates the closed-form dual objective
/// `min_x sum_y (min(z_y, E(y|x)) - z_y/M)`; any nonnegative `z` yields a
/// valid lower bound on the NS error probability.
pub fn error_dual_value(channel: &Channel, messages: u64, z: &[f64]) -> Result<f64, ConverseError> {
    if z.len() != channel.output_size() {
        return Err(ConverseError::DimensionMismatch(format!(
            "z has {} entries, channel has {} outputs",
            z.len(),
            channel.output_size()
        )));
    }
    if messages == 0 {
        return Err(ConverseError::BadQuery("message count must be at least 1".into()));
    }
    let m = messages as f64;
    let mut best = f64::INFINITY;
    for x in 0..channel.input_size() {
        let mut acc = 0.0;
        for (y, &zy) in z.iter().enumerate() {
            acc += zy.min(channel.prob(x, y)) - zy / m;
        }
        best = best.min(acc);
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Size query
// ---------------------------------------------------------------------------

/// Largest real-valued code size with error at most `eps`, with primal
/// witness, dual certificate and the integer part.
pub fn max_size(channel: &Channel, eps: f64) -> Result<SizeBound, ConverseError> {
    max_size_with(channel, eps, &default_options())
}

pub fn max_size_with(channel: &Channel, eps: f64, opts: &SolveOptions) -> Result<SizeBound, ConverseError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(ConverseError::BadQuery(format!("epsilon must lie in [0,1), got {eps}")));
    }
    let a = channel.input_size();
    let b = channel.output_size();
    let lp = size_lp(&float_matrix(channel), eps);
    let sol = lp::solve(&lp, opts)?;
    if sol.status != LpStatus::Optimal {
        return Err(ConverseError::UnexpectedStatus(sol.status));
    }
    let m_beta = sol.value;
    let mut f = vec![vec![0.0; b]; a];
    for x in 0..a {
        for y in 0..b {
            f[x][y] = sol.primal[x * b + y];
        }
    }
    let v = sol.primal[a * b..].to_vec();
    let mut vcert = vec![vec![0.0; b]; a];
    for x in 0..a {
        for y in 0..b {
            vcert[x][y] = sol.dual[x * b + y].max(0.0);
        }
    }
    let c: Vec<f64> = sol.dual[a * b..a * b + b].iter().map(|&t| t.max(0.0)).collect();
    let zeta = sol.dual[a * b + b].max(0.0);

    let mut exact_floor_recheck = false;
    let m_ns = {
        let guess = (m_beta + FLOOR_GUARD).floor();
        let near_integer = (m_beta - m_beta.round()).abs() <= EXACT_RECHECK_WINDOW;
        if near_integer && a * (b + 1) <= EXACT_RECHECK_SIZE_CAP {
            match max_size_exact(channel, &BigRational::from_f64(eps).expect("finite eps")) {
                Ok(exact) => {
                    exact_floor_recheck = true;
                    exact.floor().to_integer().to_u64().unwrap_or(guess as u64)
                }
                Err(_) => guess as u64,
            }
        } else {
            guess as u64
        }
    };

    Ok(SizeBound {
        m_beta,
        m_ns,
        primal: SizePrimalSolution { f, v, m_beta, t: m_beta },
        dual: SizeDualCertificate { zeta, c, v: vcert },
        lp_iterations: sol.iterations,
        exact_floor_recheck,
    })
}

/// Exact-rational size bound `M^beta`.
pub fn max_size_exact(channel: &Channel, eps: &BigRational) -> Result<BigRational, ConverseError> {
    if eps < &rat_zero() || eps >= &rat_one() {
        return Err(ConverseError::BadQuery("epsilon must lie in [0,1)".into()));
    }
    let matrix = channel.exact_or_lossless();
    let lp = size_lp(&matrix, eps.clone());
    let sol = lp::solve(&lp, &default_options())?;
    if sol.status != LpStatus::Optimal {
        return Err(ConverseError::UnexpectedStatus(sol.status));
    }
    Ok(sol.value)
}

// ---------------------------------------------------------------------------
// Certificate checking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CertificateViolation {
    pub constraint: String,
    pub amount: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifiedBound {
    pub valid: bool,
    /// `sum_y c_y`; rigorous upper bound on the size when `valid`.
    pub bound: f64,
    pub violations: Vec<CertificateViolation>,
}

/// Checks a size dual certificate against a channel: when every constraint
/// holds within `tol`, `sum_y c_y` is a certified upper bound on the
/// real-valued size (and hence on the achievable integer code size).
pub fn certify_size(
    channel: &Channel,
    eps: f64,
    cert: &SizeDualCertificate,
    tol: f64,
) -> Result<CertifiedBound, ConverseError> {
    let a = channel.input_size();
    let b = channel.output_size();
    if cert.c.len() != b || cert.v.len() != a || cert.v.iter().any(|row| row.len() != b) {
        return Err(ConverseError::DimensionMismatch(
            "certificate dimensions do not match the channel".into(),
        ));
    }
    let mut violations = Vec::new();
    if cert.zeta < -tol {
        violations.push(CertificateViolation { constraint: "zeta >= 0".into(), amount: -cert.zeta });
    }
    for y in 0..b {
        if cert.c[y] < -tol {
            violations.push(CertificateViolation {
                constraint: format!("c[{y}] >= 0"),
                amount: -cert.c[y],
            });
        }
    }
    for x in 0..a {
        let mut row_sum = 0.0;
        for y in 0..b {
            if cert.v[x][y] < -tol {
                violations.push(CertificateViolation {
                    constraint: format!("V[{x},{y}] >= 0"),
                    amount: -cert.v[x][y],
                });
            }
            let gap = cert.zeta * channel.prob(x, y) - cert.v[x][y] - cert.c[y];
            if gap > tol {
                violations.push(CertificateViolation {
                    constraint: format!("V[{x},{y}] + c[{y}] >= zeta E({y}|{x})"),
                    amount: gap,
                });
            }
            row_sum += cert.v[x][y];
        }
        let slack = row_sum - ((1.0 - eps) * cert.zeta - 1.0);
        if slack > tol {
            violations.push(CertificateViolation {
                constraint: format!("sum_y V[{x},y] <= (1-eps) zeta - 1"),
                amount: slack,
            });
        }
    }
    Ok(CertifiedBound { valid: violations.is_empty(), bound: cert.certified_bound(), violations })
}

/// Exact-rational certificate re-check: every comparison is exact, so a
/// `valid` result is a proof for the channel as represented.
pub fn certify_size_exact(
    channel: &Channel,
    eps: &BigRational,
    zeta: &BigRational,
    c: &[BigRational],
    v: &[Vec<BigRational>],
) -> Result<(bool, BigRational), ConverseError> {
    let a = channel.input_size();
    let b = channel.output_size();
    if c.len() != b || v.len() != a || v.iter().any(|row| row.len() != b) {
        return Err(ConverseError::DimensionMismatch(
            "certificate dimensions do not match the channel".into(),
        ));
    }
    let matrix = channel.exact_or_lossless();
    let zero = rat_zero();
    let mut valid = *zeta >= zero;
    for y in 0..b {
        valid &= c[y] >= zero;
    }
    for x in 0..a {
        let mut row_sum = rat_zero();
        for y in 0..b {
            valid &= v[x][y] >= zero;
            valid &= v[x][y].clone() + c[y].clone() >= zeta.clone() * matrix[x][y].clone();
            row_sum += v[x][y].clone();
        }
        valid &= row_sum <= (rat_one() - eps.clone()) * zeta.clone() - rat_one();
    }
    Ok((valid, c.iter().cloned().sum()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel;

    #[test]
    fn useless_channel_error_matches_closed_form() {
        let ch = channel::useless(&[0.5, 0.5]).unwrap();
        let bound = min_error(&ch, 4).unwrap();
        assert!((bound.p_err - 0.75).abs() < 1e-10);
        // dual certificate agrees
        assert!((bound.dual.certified_error(4) - 0.75).abs() < 1e-8);
        assert!(bound.dual.max_violation(&ch) < 1e-9);
    }

    #[test]
    fn single_message_is_error_free() {
        let ch = channel::bsc(0.3).unwrap();
        let bound = min_error(&ch, 1).unwrap();
        assert!(bound.p_err.abs() < 1e-10);
    }

    #[test]
    fn bsc_two_messages() {
        let ch = channel::bsc(0.1).unwrap();
        let bound = min_error(&ch, 2).unwrap();
        assert!((bound.p_err - 0.1).abs() < 1e-9);
        // the witness satisfies the primal constraints
        for y in 0..2 {
            let col: f64 = (0..2).map(|x| bound.primal.r[x][y]).sum();
            assert!(col <= 0.5 + 1e-9);
        }
        let psum: f64 = bound.primal.p.iter().sum();
        assert!((psum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dual_value_formula() {
        let ch = channel::bsc(0.1).unwrap();
        let v = error_dual_value(&ch, 2, &[0.1, 0.1]).unwrap();
        assert!((v - 0.1).abs() < 1e-12);

        let any = channel::bsc(0.37).unwrap();
        assert_eq!(error_dual_value(&any, 5, &[0.0, 0.0]).unwrap(), 0.0);

        let u = channel::useless(&[0.5, 0.5]).unwrap();
        let v = error_dual_value(&u, 4, &[0.5, 0.5]).unwrap();
        assert!((v - 0.75).abs() < 1e-12);

        assert!(error_dual_value(&ch, 2, &[0.1]).is_err());
    }

    #[test]
    fn size_queries() {
        let u = channel::useless(&[0.5, 0.5]).unwrap();
        let b = max_size(&u, 0.75).unwrap();
        assert!((b.m_beta - 4.0).abs() < 1e-9);
        assert_eq!(b.m_ns, 4);

        let noiseless = channel::noiseless(3).unwrap();
        let b = max_size(&noiseless, 0.0).unwrap();
        assert!((b.m_beta - 3.0).abs() < 1e-9);
        assert_eq!(b.m_ns, 3);

        let bsc = channel::bsc(0.1).unwrap();
        let b = max_size(&bsc, 0.1).unwrap();
        assert!((b.m_beta - 2.0).abs() < 1e-9);
        assert_eq!(b.m_ns, 2);
        assert!((b.dual.certified_bound() - b.m_beta).abs() < 1e-8 * b.m_beta.max(1.0));
    }

    #[test]
    fn certify_size_hand_examples() {
        let u = channel::useless(&[0.5, 0.5]).unwrap();
        let good = SizeDualCertificate { zeta: 2.0, c: vec![1.0, 1.0], v: vec![vec![0.0; 2]; 2] };
        let res = certify_size(&u, 0.5, &good, 1e-9).unwrap();
        assert!(res.valid);
        assert!((res.bound - 2.0).abs() < 1e-12);

        let bad = SizeDualCertificate { zeta: 4.0, c: vec![1.0, 1.0], v: vec![vec![0.0; 2]; 2] };
        let res = certify_size(&u, 0.5, &bad, 1e-9).unwrap();
        assert!(!res.valid);
        assert!(!res.violations.is_empty());

        let bsc = channel::bsc(0.1).unwrap();
        let b = max_size(&bsc, 0.1).unwrap();
        let res = certify_size(&bsc, 0.1, &b.dual, 1e-7).unwrap();
        assert!(res.valid);
        assert!((res.bound - b.m_beta).abs() < 1e-8 * b.m_beta.max(1.0));
    }

    #[test]
    fn exact_mode_agrees_with_float() {
        let ch = Channel::from_decimal_rows(&[vec!["0.9", "0.1"], vec!["0.1", "0.9"]]).unwrap();
        let e = min_error_exact(&ch, 2).unwrap();
        assert_eq!(e, BigRational::new(1.into(), 10.into()));

        let m = max_size_exact(&ch, &BigRational::new(1.into(), 10.into())).unwrap();
        assert_eq!(m, BigRational::from_integer(2.into()));
    }
}
