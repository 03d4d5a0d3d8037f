//! Materialized non-signalling codes.
//!
//! A symmetrized code is stored as the pair `(R, p)` with message count `M`;
//! the full conditional distribution is derived on demand:
//!
//! ```text
//! Z(x, w_hat | w, y) = R_{xy}                 if w_hat = w
//!                      (p(x) - R_{xy})/(M-1)  otherwise
//! ```
//!
//! Codes of this form never signal from the receiver to the sender (the
//! decoder-side marginal is `p(x)` regardless of `y`), and they do not
//! signal from the sender to the receiver exactly when every column sum of
//! `R` equals `1/M`. [`build_code`] therefore lifts slack columns to
//! saturation before materializing, which can only improve the success
//! probability of the supplied witness.

use crate::channel::Channel;
use crate::converse::ErrorPrimalSolution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NsCodeError {
    #[error("witness is infeasible: {0:?}")]
    InfeasibleWitness(Vec<String>),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Symmetrized non-signalling code.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NsCode {
    #[serde(rename = "M")]
    pub m: u64,
    pub p: Vec<f64>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
}

impl NsCode {
    pub fn input_size(&self) -> usize {
        self.p.len()
    }

    pub fn output_size(&self) -> usize {
        self.r[0].len()
    }

    /// Derived conditional `Z(x, w_hat | w, y)`.
    pub fn z(&self, x: usize, w_hat: u64, w: u64, y: usize) -> f64 {
        if self.m == 1 || w_hat == w {
            if self.m == 1 {
                // single message: the decoder always answers it
                return self.p[x];
            }
            self.r[x][y]
        } else {
            (self.p[x] - self.r[x][y]) / (self.m - 1) as f64
        }
    }
}

/// Residuals of the two non-signalling conditions plus the conditional
/// normalization of the code itself. All residuals are nonnegative; a valid
/// code keeps each at rounding level.
#[derive(Debug, Clone, Serialize)]
pub struct NsReport {
    /// Sender-to-receiver: dependence of `P(w_hat | w, y)` on `w`.
    pub ns_a_to_b: f64,
    /// Receiver-to-sender: dependence of `P(x | w, y)` on `y`.
    pub ns_b_to_a: f64,
    /// `max_{w,y} |sum_{x,w_hat} Z - 1|`.
    pub normalization: f64,
}

impl NsReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.ns_a_to_b <= tol && self.ns_b_to_a <= tol && self.normalization <= tol
    }
}

/// Builds the symmetrized code from an error-LP witness.
///
/// The witness must be feasible within `1e-8`; columns of `R` with slack
/// packing constraints are lifted toward `p` until they saturate at `1/M`,
/// and boundary rounding within `-1e-12` is clamped.
pub fn build_code(channel: &Channel, m: u64, witness: &ErrorPrimalSolution) -> Result<NsCode, NsCodeError> {
    const FEAS: f64 = 1e-8;
    const CLAMP: f64 = 1e-12;
    let a = channel.input_size();
    let b = channel.output_size();
    if witness.p.len() != a || witness.r.len() != a || witness.r.iter().any(|row| row.len() != b) {
        return Err(NsCodeError::DimensionMismatch(
            "witness dimensions do not match the channel".into(),
        ));
    }
    let mut violations = Vec::new();
    let psum: f64 = witness.p.iter().sum();
    if (psum - 1.0).abs() > FEAS {
        violations.push(format!("sum p = {psum}, expected 1"));
    }
    for x in 0..a {
        for y in 0..b {
            let r = witness.r[x][y];
            if r < -FEAS {
                violations.push(format!("R[{x},{y}] = {r} < 0"));
            }
            if r > witness.p[x] + FEAS {
                violations.push(format!("R[{x},{y}] = {r} exceeds p[{x}] = {}", witness.p[x]));
            }
        }
    }
    let mu = 1.0 / m as f64;
    for y in 0..b {
        let col: f64 = (0..a).map(|x| witness.r[x][y]).sum();
        if col > mu + FEAS {
            violations.push(format!("column {y} sums to {col} > 1/M = {mu}"));
        }
    }
    if !violations.is_empty() {
        return Err(NsCodeError::InfeasibleWitness(violations));
    }

    // normalize p exactly, clamp R into [0, p]
    let p: Vec<f64> = witness.p.iter().map(|&v| v.max(0.0) / psum).collect();
    let mut r = witness.r.clone();
    for x in 0..a {
        for y in 0..b {
            r[x][y] = r[x][y].clamp(0.0, p[x]);
        }
    }
    if m == 1 {
        // trivial always-correct code; R is irrelevant
        return Ok(NsCode { m, p, r });
    }
    // lift slack columns: R' = (1-lambda) R + lambda p saturates the column
    for y in 0..b {
        let col: f64 = (0..a).map(|x| r[x][y]).sum();
        if col < mu {
            let lambda = (mu - col) / (1.0 - col);
            for x in 0..a {
                r[x][y] = (1.0 - lambda) * r[x][y] + lambda * p[x];
            }
        } else if col > mu {
            // scale back rounding overshoot
            let scale = mu / col;
            for x in 0..a {
                r[x][y] *= scale;
            }
        }
    }
    // guard the derived Q entries against boundary rounding
    for x in 0..a {
        for y in 0..b {
            if p[x] - r[x][y] < 0.0 {
                if p[x] - r[x][y] < -CLAMP {
                    return Err(NsCodeError::InfeasibleWitness(vec![format!(
                        "derived Q[{x},{y}] is negative beyond clamp"
                    )]));
                }
                r[x][y] = p[x];
            }
        }
    }
    Ok(NsCode { m, p, r })
}

/// Non-signalling residuals of a code, by direct summation over the derived
/// conditional (the tensor is never materialized; the sums over `x` and
/// `w_hat` are carried out explicitly).
pub fn verify_nonsignalling(code: &NsCode, _tol: f64) -> NsReport {
    let a = code.input_size();
    let b = code.output_size();
    let m = code.m;
    if m == 1 {
        let norm: f64 = code.p.iter().sum::<f64>() - 1.0;
        return NsReport { ns_a_to_b: 0.0, ns_b_to_a: 0.0, normalization: norm.abs() };
    }
    let mf = m as f64;
    let mut ns_a_to_b: f64 = 0.0;
    let mut normalization: f64 = 0.0;
    for y in 0..b {
        // P(w_hat | w, y) takes one value when w_hat = w and another when
        // w_hat != w; independence of w is exactly their agreement.
        let s: f64 = (0..a).map(|x| code.r[x][y]).sum();
        let psum: f64 = code.p.iter().sum();
        let other = (psum - s) / (mf - 1.0);
        ns_a_to_b = ns_a_to_b.max((s - other).abs());
        // conditional normalization for every (w, y): s + (M-1)*other
        normalization = normalization.max((s + (mf - 1.0) * other - 1.0).abs());
    }
    // P(x | w, y) = sum_{w_hat} Z = R + (M-1) (p - R)/(M-1) = p(x): compute
    // it the long way and compare across y
    let mut ns_b_to_a: f64 = 0.0;
    for x in 0..a {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for y in 0..b {
            let px = code.r[x][y] + (mf - 1.0) * ((code.p[x] - code.r[x][y]) / (mf - 1.0));
            lo = lo.min(px);
            hi = hi.max(px);
        }
        ns_b_to_a = ns_b_to_a.max(hi - lo);
    }
    NsReport { ns_a_to_b, ns_b_to_a, normalization }
}

/// Average error probability of the code on a channel:
/// `1 - (1/M) sum_{w,x,y} Z(x,w|w,y) E(y|x)`.
pub fn code_error(code: &NsCode, channel: &Channel) -> Result<f64, NsCodeError> {
    check_dims(code, channel)?;
    if code.m == 1 {
        return Ok(0.0);
    }
    let mut success = 0.0;
    for x in 0..code.input_size() {
        for y in 0..code.output_size() {
            success += channel.prob(x, y) * code.r[x][y];
        }
    }
    // every message contributes the same success term under the uniform
    // source, so the 1/M and the sum over w cancel
    Ok((1.0 - success).max(0.0))
}

/// Residual of the channel-coupled normalization
/// `max_w |sum_{w_hat,x,y} Z(x,w_hat|w,y) E(y|x) - 1|`, zero for every
/// receiver-to-sender non-signalling code on every channel.
pub fn vpmf_residual(code: &NsCode, channel: &Channel) -> Result<f64, NsCodeError> {
    check_dims(code, channel)?;
    let a = code.input_size();
    let b = code.output_size();
    if code.m == 1 {
        let mut total = 0.0;
        for x in 0..a {
            for y in 0..b {
                total += channel.prob(x, y) * code.p[x];
            }
        }
        return Ok((total - 1.0).abs());
    }
    let mf = code.m as f64;
    // same value for every w by symmetry of the stored form
    let mut total = 0.0;
    for x in 0..a {
        for y in 0..b {
            let zsum = code.r[x][y] + (mf - 1.0) * ((code.p[x] - code.r[x][y]) / (mf - 1.0));
            total += channel.prob(x, y) * zsum;
        }
    }
    Ok((total - 1.0).abs())
}

fn check_dims(code: &NsCode, channel: &Channel) -> Result<(), NsCodeError> {
    if code.input_size() != channel.input_size() || code.output_size() != channel.output_size() {
        return Err(NsCodeError::DimensionMismatch(format!(
            "code is {}x{}, channel is {}x{}",
            code.input_size(),
            code.output_size(),
            channel.input_size(),
            channel.output_size()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Raw conditional tensors, for codes outside the symmetrized family
// ---------------------------------------------------------------------------

/// Fully materialized conditional `Z(x, w_hat | w, y)`, used to analyze
/// hand-built (possibly signalling) codes.
#[derive(Debug, Clone)]
pub struct ZTensor {
    pub a: usize,
    pub b: usize,
    pub m: usize,
    /// Indexed by `((w * b + y) * a + x) * m + w_hat`.
    data: Vec<f64>,
}

impl ZTensor {
    pub fn new(a: usize, b: usize, m: usize) -> Self {
        ZTensor { a, b, m, data: vec![0.0; a * b * m * m] }
    }

    fn idx(&self, x: usize, w_hat: usize, w: usize, y: usize) -> usize {
        ((w * self.b + y) * self.a + x) * self.m + w_hat
    }

    pub fn get(&self, x: usize, w_hat: usize, w: usize, y: usize) -> f64 {
        self.data[self.idx(x, w_hat, w, y)]
    }

    pub fn set(&mut self, x: usize, w_hat: usize, w: usize, y: usize, value: f64) {
        let i = self.idx(x, w_hat, w, y);
        self.data[i] = value;
    }

    pub fn from_code(code: &NsCode) -> Self {
        let a = code.input_size();
        let b = code.output_size();
        let m = code.m as usize;
        let mut z = ZTensor::new(a, b, m);
        for w in 0..m {
            for y in 0..b {
                for x in 0..a {
                    for w_hat in 0..m {
                        z.set(x, w_hat, w, y, code.z(x, w_hat as u64, w as u64, y));
                    }
                }
            }
        }
        z
    }

    /// Largest deviation of `sum_{x,w_hat} Z(.|w,y)` from 1.
    pub fn normalization_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for w in 0..self.m {
            for y in 0..self.b {
                let mut s = 0.0;
                for x in 0..self.a {
                    for w_hat in 0..self.m {
                        s += self.get(x, w_hat, w, y);
                    }
                }
                worst = worst.max((s - 1.0).abs());
            }
        }
        worst
    }

    /// Residual of the sender-to-receiver condition.
    pub fn ns_a_to_b_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for y in 0..self.b {
            for w_hat in 0..self.m {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for w in 0..self.m {
                    let mut s = 0.0;
                    for x in 0..self.a {
                        s += self.get(x, w_hat, w, y);
                    }
                    lo = lo.min(s);
                    hi = hi.max(s);
                }
                worst = worst.max(hi - lo);
            }
        }
        worst
    }

    /// Residual of the receiver-to-sender condition.
    pub fn ns_b_to_a_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for w in 0..self.m {
            for x in 0..self.a {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for y in 0..self.b {
                    let mut s = 0.0;
                    for w_hat in 0..self.m {
                        s += self.get(x, w_hat, w, y);
                    }
                    lo = lo.min(s);
                    hi = hi.max(s);
                }
                worst = worst.max(hi - lo);
            }
        }
        worst
    }

    /// `sum_{w_hat,x,y} Z(x,w_hat|w,y) E(y|x)` for a message.
    pub fn vpmf_sum(&self, channel: &Channel, w: usize) -> f64 {
        let mut total = 0.0;
        for x in 0..self.a {
            for y in 0..self.b {
                let mut zsum = 0.0;
                for w_hat in 0..self.m {
                    zsum += self.get(x, w_hat, w, y);
                }
                total += channel.prob(x, y) * zsum;
            }
        }
        total
    }
}

/// Constructive converse for the validity condition: given a code that
/// signals from receiver to sender, produce the deterministic channel under
/// which the channel-coupled normalization exceeds 1, together with the
/// witnessing message and the excess.
pub fn signalling_witness_channel(z: &ZTensor) -> Option<(Channel, usize, f64)> {
    let mut best: Option<(usize, usize, usize, usize, f64)> = None;
    for w in 0..z.m {
        for x in 0..z.a {
            for y0 in 0..z.b {
                for y1 in 0..z.b {
                    if y0 == y1 {
                        continue;
                    }
                    let s0: f64 = (0..z.m).map(|wh| z.get(x, wh, w, y0)).sum();
                    let s1: f64 = (0..z.m).map(|wh| z.get(x, wh, w, y1)).sum();
                    let gap = s0 - s1;
                    if gap > best.map_or(0.0, |b| b.4) {
                        best = Some((w, x, y0, y1, gap));
                    }
                }
            }
        }
    }
    let (w, x_star, y0, y1, _) = best?;
    let mut rows = vec![vec![0.0; z.b]; z.a];
    for (x, row) in rows.iter_mut().enumerate() {
        if x == x_star {
            row[y0] = 1.0;
        } else {
            row[y1] = 1.0;
        }
    }
    let channel = Channel::from_rows(rows).expect("deterministic rows are stochastic");
    let excess = z.vpmf_sum(&channel, w) - 1.0;
    Some((channel, w, excess))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel;
    use crate::converse;

    #[test]
    fn roundtrip_bsc() {
        let ch = channel::bsc(0.1).unwrap();
        let bound = converse::min_error(&ch, 2).unwrap();
        let code = build_code(&ch, 2, &bound.primal).unwrap();
        let err = code_error(&code, &ch).unwrap();
        assert!((err - bound.p_err).abs() < 1e-10);
        let report = verify_nonsignalling(&code, 1e-10);
        assert!(report.passes(1e-10), "{report:?}");
        assert!(vpmf_residual(&code, &ch).unwrap() < 1e-10);
    }

    #[test]
    fn hand_witness_bsc() {
        let ch = channel::bsc(0.1).unwrap();
        let witness = ErrorPrimalSolution {
            r: vec![vec![0.5, 0.0], vec![0.0, 0.5]],
            p: vec![0.5, 0.5],
            success: 0.9,
            p_err: 0.1,
        };
        let code = build_code(&ch, 2, &witness).unwrap();
        assert!((code_error(&code, &ch).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn useless_channel_codes() {
        let ch = channel::useless(&[0.5, 0.5]).unwrap();
        let bound = converse::min_error(&ch, 4).unwrap();
        let code = build_code(&ch, 4, &bound.primal).unwrap();
        assert!((code_error(&code, &ch).unwrap() - 0.75).abs() < 1e-10);

        let bound2 = converse::min_error(&ch, 2).unwrap();
        let code2 = build_code(&ch, 2, &bound2.primal).unwrap();
        assert!((code_error(&code2, &ch).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn trivial_single_message() {
        let ch = channel::bsc(0.2).unwrap();
        let witness = ErrorPrimalSolution {
            r: vec![vec![0.5, 0.0], vec![0.0, 0.5]],
            p: vec![0.5, 0.5],
            success: 1.0,
            p_err: 0.0,
        };
        let code = build_code(&ch, 1, &witness).unwrap();
        assert_eq!(code_error(&code, &ch).unwrap(), 0.0);
        let report = verify_nonsignalling(&code, 1e-12);
        assert!(report.passes(1e-12));
    }

    #[test]
    fn infeasible_witness_rejected() {
        let ch = channel::bsc(0.1).unwrap();
        let witness = ErrorPrimalSolution {
            r: vec![vec![0.9, 0.0], vec![0.0, 0.5]],
            p: vec![0.5, 0.5],
            success: 0.0,
            p_err: 1.0,
        };
        match build_code(&ch, 2, &witness) {
            Err(NsCodeError::InfeasibleWitness(v)) => assert!(!v.is_empty()),
            other => panic!("expected infeasible witness, got {other:?}"),
        }
    }

    #[test]
    fn signalling_code_detected_and_witnessed() {
        // decoder-side input is routed straight from the channel output:
        // Z(x, w_hat | w, y) = [x = y] / M, blatantly signalling B -> A
        let m = 2;
        let mut z = ZTensor::new(2, 2, m);
        for w in 0..m {
            for y in 0..2 {
                for w_hat in 0..m {
                    z.set(y, w_hat, w, y, 1.0 / m as f64);
                }
            }
        }
        assert!(z.normalization_residual() < 1e-12);
        assert!(z.ns_b_to_a_residual() >= 0.5);

        let (bad_channel, w, excess) = signalling_witness_channel(&z).unwrap();
        assert!(excess >= 1e-6, "excess {excess}");
        assert!(z.vpmf_sum(&bad_channel, w) > 1.0 + 1e-6);

        // a genuinely non-signalling code passes the same construction
        let ch = channel::bsc(0.1).unwrap();
        let bound = converse::min_error(&ch, 2).unwrap();
        let code = build_code(&ch, 2, &bound.primal).unwrap();
        let zt = ZTensor::from_code(&code);
        assert!(zt.ns_a_to_b_residual() < 1e-10);
        assert!(zt.ns_b_to_a_residual() < 1e-10);
        assert!(signalling_witness_channel(&zt).map_or(true, |(_, _, e)| e < 1e-9));
    }

    #[test]
    fn code_serialization() {
        let code = NsCode { m: 2, p: vec![0.5, 0.5], r: vec![vec![0.5, 0.0], vec![0.0, 0.5]] };
        let json = serde_json::to_string(&code).unwrap();
        assert!(json.contains("\"M\":2"));
        assert!(json.contains("\"R\":"));
        let back: NsCode = serde_json::from_str(&json).unwrap();
        assert_eq!(back.p, code.p);
    }
}
