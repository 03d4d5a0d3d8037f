//! Discrete channel model: validation, standard constructions, tensor powers
//! and the JSON file format.
//!
//! A [`Channel`] is a row-stochastic matrix `E(y|x)` over finite input and
//! output alphabets. Rows are validated against `ROW_SUM_TOL` and then
//! renormalized exactly once, so every consumer downstream sees rows that sum
//! to 1 up to machine rounding. Channels are immutable after construction and
//! safe to share across threads.

use num::{BigInt, BigRational, One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum allowed deviation of a row sum from 1 at ingestion.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Default cap on `|A|^n * |B|^n` for explicit tensor powers.
pub const DEFAULT_TENSOR_LIMIT: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("matrix is empty or has an empty row")]
    EmptyMatrix,
    #[error("matrix rows have inconsistent widths")]
    RaggedMatrix,
    #[error("negative entry {value} at row {row}, column {col}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("entry at row {row}, column {col} is not a finite probability")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("row {row} sums to 1{deviation:+e} (tolerance {tol:e})")]
    RowSumMismatch { row: usize, deviation: f64, tol: f64 },
    #[error("bad parameter for standard channel: {0}")]
    BadParameter(String),
    #[error("explicit channel would need {entries} entries (limit {limit}); use the type-reduced path")]
    SizeLimitExceeded { entries: u128, limit: u128 },
    #[error("channel JSON: {0}")]
    Json(String),
    #[error("invalid decimal literal {0:?}")]
    BadDecimal(String),
}

/// A discrete channel `E(y|x)` over input alphabet of size `|A|` and output
/// alphabet of size `|B|`.
///
/// When constructed from decimal text (JSON or [`Channel::from_decimal_rows`])
/// an exact rational copy of the matrix is kept alongside the floats so that
/// exact-mode solves operate on the channel as written, not as rounded.
#[derive(Debug, Clone)]
pub struct Channel {
    matrix: Vec<Vec<f64>>,
    input_labels: Vec<String>,
    output_labels: Vec<String>,
    exact: Option<Vec<Vec<BigRational>>>,
}

impl Channel {
    /// Validates a rectangular nonempty probability matrix and renormalizes
    /// each row once.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ChannelError> {
        Self::from_rows_labeled(rows, None, None)
    }

    pub fn from_rows_labeled(
        rows: Vec<Vec<f64>>,
        input_labels: Option<Vec<String>>,
        output_labels: Option<Vec<String>>,
    ) -> Result<Self, ChannelError> {
        let (a, b) = validate_shape(&rows)?;
        let mut matrix = rows;
        for (x, row) in matrix.iter_mut().enumerate() {
            let mut sum = 0.0;
            for (y, e) in row.iter_mut().enumerate() {
                if !e.is_finite() {
                    return Err(ChannelError::NonFiniteEntry { row: x, col: y });
                }
                if *e < 0.0 {
                    return Err(ChannelError::NegativeEntry { row: x, col: y, value: *e });
                }
                // normalize -0.0 so serialized output is stable
                if *e == 0.0 {
                    *e = 0.0;
                }
                sum += *e;
            }
            let dev = sum - 1.0;
            if dev.abs() > ROW_SUM_TOL {
                return Err(ChannelError::RowSumMismatch { row: x, deviation: dev, tol: ROW_SUM_TOL });
            }
            // single renormalization so downstream LPs see exact unit rows
            if sum != 1.0 {
                for e in row.iter_mut() {
                    *e /= sum;
                }
            }
        }
        let input_labels = input_labels.unwrap_or_else(|| (0..a).map(|i| i.to_string()).collect());
        let output_labels = output_labels.unwrap_or_else(|| (0..b).map(|i| i.to_string()).collect());
        if input_labels.len() != a || output_labels.len() != b {
            return Err(ChannelError::Json("label count does not match matrix shape".into()));
        }
        Ok(Channel { matrix, input_labels, output_labels, exact: None })
    }

    /// Builds a channel from decimal strings, keeping a lossless rational copy.
    pub fn from_decimal_rows(rows: &[Vec<&str>]) -> Result<Self, ChannelError> {
        let parsed: Vec<Vec<BigRational>> = rows
            .iter()
            .map(|r| r.iter().map(|s| rational_from_decimal(s)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        Self::from_exact_rows(parsed, None, None)
    }

    fn from_exact_rows(
        rows: Vec<Vec<BigRational>>,
        input_labels: Option<Vec<String>>,
        output_labels: Option<Vec<String>>,
    ) -> Result<Self, ChannelError> {
        let float_rows: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(rational_to_f64).collect())
            .collect();
        let mut ch = Self::from_rows_labeled(float_rows, input_labels, output_labels)?;
        let mut exact = rows;
        for (x, row) in exact.iter_mut().enumerate() {
            let sum: BigRational = row.iter().cloned().sum();
            if sum.is_zero() {
                return Err(ChannelError::RowSumMismatch { row: x, deviation: -1.0, tol: ROW_SUM_TOL });
            }
            if !sum.is_one() {
                for e in row.iter_mut() {
                    *e = e.clone() / sum.clone();
                }
            }
        }
        ch.exact = Some(exact);
        Ok(ch)
    }

    pub fn input_size(&self) -> usize {
        self.matrix.len()
    }

    pub fn output_size(&self) -> usize {
        self.matrix[0].len()
    }

    /// Transition probability `E(y|x)`.
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.matrix[x][y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    /// Exact rational matrix if the channel was built from decimal text.
    pub fn exact_matrix(&self) -> Option<&Vec<Vec<BigRational>>> {
        self.exact.as_ref()
    }

    /// Exact matrix, falling back to the (lossless) rational value of each
    /// stored float. The fallback is exact for the channel as represented,
    /// which is what exact-mode certificates are about.
    pub fn exact_or_lossless(&self) -> Vec<Vec<BigRational>> {
        match &self.exact {
            Some(m) => m.clone(),
            None => self
                .matrix
                .iter()
                .map(|row| {
                    let raw: Vec<BigRational> = row
                        .iter()
                        .map(|&e| BigRational::from_float(e).expect("validated finite entry"))
                        .collect();
                    let sum: BigRational = raw.iter().cloned().sum();
                    raw.into_iter().map(|e| e / sum.clone()).collect()
                })
                .collect(),
        }
    }

    /// Explicit `n`-fold memoryless extension with the default size limit.
    pub fn tensor_power(&self, n: u32) -> Result<Channel, ChannelError> {
        self.tensor_power_with_limit(n, DEFAULT_TENSOR_LIMIT)
    }

    /// Explicit `n`-fold memoryless extension.
    ///
    /// Strings are indexed with the leftmost symbol most significant, so the
    /// row for `x = (x_1..x_n)` is at index `sum x_i |A|^(n-1-i)`.
    pub fn tensor_power_with_limit(&self, n: u32, limit: u128) -> Result<Channel, ChannelError> {
        if n == 0 {
            return Err(ChannelError::BadParameter("tensor power requires n >= 1".into()));
        }
        let a = self.input_size() as u128;
        let b = self.output_size() as u128;
        let entries = a
            .checked_pow(n)
            .and_then(|ra| b.checked_pow(n).and_then(|rb| ra.checked_mul(rb)))
            .ok_or(ChannelError::SizeLimitExceeded { entries: u128::MAX, limit })?;
        if entries > limit {
            return Err(ChannelError::SizeLimitExceeded { entries, limit });
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = tensor(&acc, self)?;
        }
        Ok(acc)
    }
}

fn validate_shape(rows: &[Vec<f64>]) -> Result<(usize, usize), ChannelError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(ChannelError::EmptyMatrix);
    }
    let b = rows[0].len();
    if rows.iter().any(|r| r.len() != b) {
        return Err(ChannelError::RaggedMatrix);
    }
    Ok((rows.len(), b))
}

/// Product channel `E1 (x) E2` on the product alphabets. Left factor is most
/// significant in the string indexing.
pub fn tensor(e1: &Channel, e2: &Channel) -> Result<Channel, ChannelError> {
    let (a1, b1) = (e1.input_size(), e1.output_size());
    let (a2, b2) = (e2.input_size(), e2.output_size());
    let mut matrix = vec![vec![0.0; b1 * b2]; a1 * a2];
    for x1 in 0..a1 {
        for x2 in 0..a2 {
            let row = &mut matrix[x1 * a2 + x2];
            for y1 in 0..b1 {
                let p1 = e1.prob(x1, y1);
                if p1 == 0.0 {
                    continue;
                }
                for y2 in 0..b2 {
                    row[y1 * b2 + y2] = p1 * e2.prob(x2, y2);
                }
            }
        }
    }
    let in_labels = product_labels(&e1.input_labels, &e2.input_labels);
    let out_labels = product_labels(&e1.output_labels, &e2.output_labels);
    Channel::from_rows_labeled(matrix, Some(in_labels), Some(out_labels))
}

fn product_labels(l1: &[String], l2: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(l1.len() * l2.len());
    for a in l1 {
        for b in l2 {
            out.push(format!("{a}{b}"));
        }
    }
    out
}

/// Standard channel families.
#[derive(Debug, Clone, PartialEq)]
pub enum StandardKind {
    /// Binary symmetric channel with crossover probability `delta`.
    Bsc(f64),
    /// Binary erasure channel with erasure probability `delta`; outputs are
    /// `0`, `1`, `?`.
    Bec(f64),
    /// Z-channel: input 0 is noiseless, input 1 flips to 0 with probability
    /// `delta`.
    ZChannel(f64),
    /// Cyclic typewriter on `k` symbols: stays put with probability
    /// `1 - delta`, advances one step mod `k` with probability `delta`.
    Typewriter(usize, f64),
    /// Output distribution independent of the input.
    Useless(Vec<f64>),
    /// Noiseless `k`-ary identity channel.
    Noiseless(usize),
}

pub fn make_standard(kind: StandardKind) -> Result<Channel, ChannelError> {
    match kind {
        StandardKind::Bsc(d) => bsc(d),
        StandardKind::Bec(d) => bec(d),
        StandardKind::ZChannel(d) => z_channel(d),
        StandardKind::Typewriter(k, d) => typewriter(k, d),
        StandardKind::Useless(q) => useless(&q),
        StandardKind::Noiseless(k) => noiseless(k),
    }
}

fn check_unit(name: &str, d: f64) -> Result<(), ChannelError> {
    if !(0.0..=1.0).contains(&d) || !d.is_finite() {
        return Err(ChannelError::BadParameter(format!("{name} must lie in [0,1], got {d}")));
    }
    Ok(())
}

pub fn bsc(delta: f64) -> Result<Channel, ChannelError> {
    check_unit("bsc delta", delta)?;
    Channel::from_rows(vec![vec![1.0 - delta, delta], vec![delta, 1.0 - delta]])
}

pub fn bec(delta: f64) -> Result<Channel, ChannelError> {
    check_unit("bec delta", delta)?;
    let ch = Channel::from_rows_labeled(
        vec![vec![1.0 - delta, 0.0, delta], vec![0.0, 1.0 - delta, delta]],
        Some(vec!["0".into(), "1".into()]),
        Some(vec!["0".into(), "1".into(), "?".into()]),
    )?;
    Ok(ch)
}

pub fn z_channel(delta: f64) -> Result<Channel, ChannelError> {
    check_unit("zchannel delta", delta)?;
    Channel::from_rows(vec![vec![1.0, 0.0], vec![delta, 1.0 - delta]])
}

pub fn typewriter(k: usize, delta: f64) -> Result<Channel, ChannelError> {
    if k < 2 {
        return Err(ChannelError::BadParameter(format!("typewriter needs k >= 2, got {k}")));
    }
    check_unit("typewriter delta", delta)?;
    let mut rows = vec![vec![0.0; k]; k];
    for x in 0..k {
        rows[x][x] = 1.0 - delta;
        rows[x][(x + 1) % k] += delta;
    }
    Channel::from_rows(rows)
}

pub fn useless(q: &[f64]) -> Result<Channel, ChannelError> {
    if q.is_empty() {
        return Err(ChannelError::BadParameter("useless needs a nonempty distribution".into()));
    }
    let sum: f64 = q.iter().sum();
    if q.iter().any(|&e| e < 0.0 || !e.is_finite()) || (sum - 1.0).abs() > 1e-9 {
        return Err(ChannelError::BadParameter(format!(
            "useless parameter must be a distribution (sum {sum})"
        )));
    }
    let row: Vec<f64> = q.iter().map(|&e| e / sum).collect();
    Channel::from_rows(vec![row.clone(), row])
}

pub fn noiseless(k: usize) -> Result<Channel, ChannelError> {
    if k < 1 {
        return Err(ChannelError::BadParameter("noiseless needs k >= 1".into()));
    }
    let mut rows = vec![vec![0.0; k]; k];
    for (x, row) in rows.iter_mut().enumerate() {
        row[x] = 1.0;
    }
    Channel::from_rows(rows)
}

// ---------------------------------------------------------------------------
// JSON file format
// ---------------------------------------------------------------------------
//
// {"input_labels": ["0","1"], "output_labels": ["0","1"], "matrix": [[0.9,0.1],[0.1,0.9]]}
//
// Labels are optional. Numbers must be finite; JSON itself cannot encode
// NaN/Infinity, and oversized literals are rejected here. Negative zero is
// normalized to zero.

#[derive(Deserialize)]
struct ChannelFile {
    input_labels: Option<Vec<String>>,
    output_labels: Option<Vec<String>>,
    matrix: Vec<Vec<serde_json::Number>>,
}

#[derive(Serialize)]
struct ChannelFileOut<'a> {
    input_labels: &'a [String],
    output_labels: &'a [String],
    matrix: &'a [Vec<f64>],
}

impl Channel {
    /// Parses the channel JSON format. With `exact = true` the numeric
    /// literals are additionally converted losslessly to rationals.
    pub fn from_json_str(text: &str, exact: bool) -> Result<Self, ChannelError> {
        let file: ChannelFile =
            serde_json::from_str(text).map_err(|e| ChannelError::Json(e.to_string()))?;
        if file.matrix.is_empty() || file.matrix[0].is_empty() {
            return Err(ChannelError::EmptyMatrix);
        }
        if exact {
            let rows: Vec<Vec<BigRational>> = file
                .matrix
                .iter()
                .map(|r| r.iter().map(|n| rational_from_decimal(&n.to_string())).collect::<Result<_, _>>())
                .collect::<Result<_, _>>()?;
            Self::from_exact_rows(rows, file.input_labels, file.output_labels)
        } else {
            let rows: Vec<Vec<f64>> = file
                .matrix
                .iter()
                .enumerate()
                .map(|(x, r)| {
                    r.iter()
                        .enumerate()
                        .map(|(y, n)| {
                            n.as_f64()
                                .filter(|v| v.is_finite())
                                .ok_or(ChannelError::NonFiniteEntry { row: x, col: y })
                        })
                        .collect::<Result<Vec<f64>, _>>()
                })
                .collect::<Result<_, _>>()?;
            Self::from_rows_labeled(rows, file.input_labels, file.output_labels)
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ChannelFileOut {
            input_labels: &self.input_labels,
            output_labels: &self.output_labels,
            matrix: &self.matrix,
        })
        .expect("channel serialization cannot fail")
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    let numer = bigint_to_f64(r.numer());
    let denom = bigint_to_f64(r.denom());
    numer / denom
}

fn bigint_to_f64(i: &BigInt) -> f64 {
    // num's to_f64 handles magnitudes beyond f64 by saturating; fine here
    // because validated probabilities are tiny integers over powers of ten.
    use num::ToPrimitive;
    i.to_f64().unwrap_or(f64::INFINITY)
}

/// Parses a decimal literal (optional sign, fraction, exponent) into an exact
/// rational.
pub fn rational_from_decimal(text: &str) -> Result<BigRational, ChannelError> {
    let bad = || ChannelError::BadDecimal(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(bad());
    }
    let (sign, rest) = match s.as_bytes()[0] {
        b'-' => (-1, &s[1..]),
        b'+' => (1, &s[1..]),
        _ => (1, s),
    };
    let (mantissa, exp_part) = match rest.find(['e', 'E']) {
        Some(i) => (&rest[..i], Some(&rest[i + 1..])),
        None => (rest, None),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().map_err(|_| bad())?;
    let mut value = BigRational::new(numer * BigInt::from(sign), BigInt::one());
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut scale = frac_part.len() as i64;
    if let Some(e) = exp_part {
        let e: i64 = e.parse().map_err(|_| bad())?;
        scale -= e;
    }
    if scale > 0 {
        value /= num::pow::pow(ten, scale as usize);
    } else if scale < 0 {
        value *= num::pow::pow(ten, (-scale) as usize);
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_identity_and_bsc() {
        let id = Channel::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(id.input_size(), 2);
        assert_eq!(id.prob(0, 0), 1.0);

        let c = bsc(0.1).unwrap();
        assert_eq!(c.matrix(), &[vec![0.9, 0.1], vec![0.1, 0.9]]);
    }

    #[test]
    fn rejects_bad_rows() {
        let err = Channel::from_rows(vec![vec![0.9, 0.2], vec![0.1, 0.9]]).unwrap_err();
        match err {
            ChannelError::RowSumMismatch { row, deviation, .. } => {
                assert_eq!(row, 0);
                assert!((deviation - 0.1).abs() < 1e-12);
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(matches!(
            Channel::from_rows(vec![vec![-0.1, 1.1]]),
            Err(ChannelError::NegativeEntry { .. })
        ));
        assert!(matches!(Channel::from_rows(vec![]), Err(ChannelError::EmptyMatrix)));
    }

    #[test]
    fn standard_constructions() {
        let u = useless(&[0.3, 0.7]).unwrap();
        assert_eq!(u.matrix(), &[vec![0.3, 0.7], vec![0.3, 0.7]]);

        let t = typewriter(5, 0.5).unwrap();
        assert_eq!(t.input_size(), 5);
        for x in 0..5 {
            assert_eq!(t.prob(x, x), 0.5);
            assert_eq!(t.prob(x, (x + 1) % 5), 0.5);
        }

        assert!(typewriter(1, 0.5).is_err());
        assert!(bsc(1.5).is_err());
        assert!(useless(&[0.5, 0.6]).is_err());
    }

    #[test]
    fn tensor_power_entries() {
        let c = bsc(0.1).unwrap();
        let c1 = c.tensor_power(1).unwrap();
        assert_eq!(c1.matrix(), c.matrix());

        let c2 = c.tensor_power(2).unwrap();
        assert_eq!(c2.input_size(), 4);
        assert!((c2.prob(0, 0) - 0.81).abs() < 1e-15); // 00 -> 00
        assert!((c2.prob(0, 1) - 0.09).abs() < 1e-15); // 00 -> 01
        assert!((c2.prob(3, 0) - 0.01).abs() < 1e-15); // 11 -> 00

        match c.tensor_power(30) {
            Err(ChannelError::SizeLimitExceeded { .. }) => {}
            other => panic!("expected size limit, got {other:?}"),
        }
    }

    #[test]
    fn tensor_rows_stochastic_and_associative() {
        let c = Channel::from_rows(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3]]).unwrap();
        let c3 = c.tensor_power(3).unwrap();
        for x in 0..c3.input_size() {
            let s: f64 = c3.row(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
        let left = tensor(&c.tensor_power(2).unwrap(), &c).unwrap();
        for x in 0..left.input_size() {
            for y in 0..left.output_size() {
                assert!((left.prob(x, y) - c3.prob(x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn json_roundtrip_and_exact() {
        let text = r#"{"matrix": [[0.9, 0.1], [0.1, 0.9]]}"#;
        let ch = Channel::from_json_str(text, false).unwrap();
        assert_eq!(ch.input_labels(), &["0".to_string(), "1".to_string()]);

        let exact = Channel::from_json_str(text, true).unwrap();
        let m = exact.exact_matrix().unwrap();
        assert_eq!(m[0][0], BigRational::new(9.into(), 10.into()));

        let back = Channel::from_json_str(&ch.to_json_string(), false).unwrap();
        assert_eq!(back.matrix(), ch.matrix());

        assert!(Channel::from_json_str(r#"{"matrix": []}"#, false).is_err());
        assert!(Channel::from_json_str(r#"{"matrix": [[1e400, 0.0]]}"#, false).is_err());
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(rational_from_decimal("0.1").unwrap(), BigRational::new(1.into(), 10.into()));
        assert_eq!(rational_from_decimal("-2.5e-1").unwrap(), BigRational::new((-1).into(), 4.into()));
        assert_eq!(rational_from_decimal("3").unwrap(), BigRational::from_integer(3.into()));
        assert!(rational_from_decimal("abc").is_err());
    }
}
