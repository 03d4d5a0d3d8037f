//! Joint-type enumeration for n-fold memoryless channel uses and the
//! polynomial-size reduced programs that permutation symmetry affords.
//!
//! A joint type is the empirical count matrix of an (input string, output
//! string) pair; simultaneous coordinate permutations preserve exactly the
//! joint type, so the converse programs collapse from exponentially many
//! string variables to one variable per type.
//!
//! The reduced programs are built in rescaled variables
//! `S(tau) = m(tau) R(tau)` (and `G(tau) = m(tau) F(tau)` for the size
//! query), where `m(tau)` counts the input strings pairing with a fixed
//! output string of matching type. In these units every packing constraint
//! reads `sum S <= 1/M` with unit coefficients, the objective weight is
//! `exp(log|T_tauB| + sum counts log E)`, and the per-type cap becomes
//! `exp(-log m) S(tau) <= p(tau_A)`; caps whose coefficient underflows are
//! dropped and counted, being vacuous at float precision.
//!
//! Two solution paths produce identical values: a direct dense build solved
//! by [`crate::lp`] when the type count is small, and a column-generation
//! scheme (see [`colgen`]) whose master stays at one row per output type, for
//! blocklengths where the dense tableau would be quadratic in the number of
//! types and physically unbuildable.

mod colgen;

use crate::channel::Channel;
use crate::converse::FLOOR_GUARD;
use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, SolveOptions};
use num::BigUint;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TypeError {
    #[error("{count} joint types would exceed the configured limit {limit}")]
    LimitExceeded { count: u128, limit: u64 },
    #[error("blocklength must be at least 1")]
    BadBlocklength,
    #[error("solver failure: {0}")]
    SolverFailure(#[from] LpError),
    #[error("lp reported {0:?} for a reduced program")]
    UnexpectedStatus(LpStatus),
    #[error("bad query: {0}")]
    BadQuery(String),
    #[error("column generation stalled with relative gap {gap:.3e} (limit {limit:.3e})")]
    Stalled { gap: f64, limit: f64 },
}

/// One joint type: an `|A| x |B|` matrix of nonnegative counts summing to
/// the blocklength.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointType {
    pub n: u32,
    pub counts: Vec<Vec<u32>>,
}

impl JointType {
    pub fn new(counts: Vec<Vec<u32>>) -> Self {
        let n = counts.iter().flatten().sum();
        JointType { n, counts }
    }

    /// Input marginal counts `n tau_A`.
    pub fn marginal_a(&self) -> Vec<u32> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    /// Output marginal counts `n tau_B`.
    pub fn marginal_b(&self) -> Vec<u32> {
        let b = self.counts[0].len();
        let mut out = vec![0u32; b];
        for row in &self.counts {
            for (o, &c) in out.iter_mut().zip(row) {
                *o += c;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LogMults {
    /// `log |T^n_tau|`, the size of the joint type class.
    pub log_t: f64,
    /// `log m(tau; tau_B)`, input strings pairing with one fixed output
    /// string of the matching type.
    pub log_m: f64,
}

fn ln_factorial_table(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for k in 2..=n {
        t[k] = t[k - 1] + (k as f64).ln();
    }
    t
}

/// Closed-form multiplicities of a joint type, in natural logs.
pub fn log_multiplicities(jt: &JointType) -> LogMults {
    let n = jt.n as usize;
    let lf = ln_factorial_table(n);
    let mut log_t = lf[n];
    for &c in jt.counts.iter().flatten() {
        log_t -= lf[c as usize];
    }
    let mut log_m = 0.0;
    for (bi, &col) in jt.marginal_b().iter().enumerate() {
        log_m += lf[col as usize];
        for row in &jt.counts {
            log_m -= lf[row[bi] as usize];
        }
    }
    LogMults { log_t, log_m }
}

fn factorial_big(n: u32) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for k in 2..=n {
        acc *= BigUint::from(k);
    }
    acc
}

/// Exact integer multiplicities `(|T^n_tau|, m(tau; tau_B))`.
pub fn exact_multiplicities(jt: &JointType) -> (BigUint, BigUint) {
    let mut t_den = BigUint::from(1u32);
    for &c in jt.counts.iter().flatten() {
        t_den *= factorial_big(c);
    }
    let t = factorial_big(jt.n) / &t_den;
    let mut m_num = BigUint::from(1u32);
    for &col in &jt.marginal_b() {
        m_num *= factorial_big(col);
    }
    let m = m_num / t_den;
    (t, m)
}

/// All length-`cells` nonnegative compositions of `n`, ascending
/// lexicographic, streamed to `f`.
fn for_each_composition(n: u32, cells: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(buf: &mut Vec<u32>, remaining: u32, cells_left: usize, f: &mut impl FnMut(&[u32])) {
        if cells_left == 1 {
            buf.push(remaining);
            f(buf);
            buf.pop();
            return;
        }
        for c in 0..=remaining {
            buf.push(c);
            rec(buf, remaining - c, cells_left - 1, f);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(cells);
    rec(&mut buf, n, cells, f);
}

pub const DEFAULT_TYPE_LIMIT: u64 = 2_000_000;

/// Enumerated joint types for alphabet sizes `(a, b)` at blocklength `n`,
/// with their log-multiplicities and marginal type indices.
///
/// Types are ordered ascending-lexicographically on the flattened count
/// matrix; input and output types use the same order, so every index here is
/// reproducible.
#[derive(Debug, Clone)]
pub struct TypeTable {
    pub a: usize,
    pub b: usize,
    pub n: u32,
    cells: usize,
    counts: Vec<u32>,
    /// Input type index per joint type.
    pub ta: Vec<u32>,
    /// Output type index per joint type.
    pub tb: Vec<u32>,
    pub log_t: Vec<f64>,
    pub log_m: Vec<f64>,
    pub input_types: Vec<Vec<u32>>,
    pub output_types: Vec<Vec<u32>>,
    /// `log |T_sigma|` per input type.
    pub log_t_in: Vec<f64>,
    /// `log |T_sigmaB|` per output type.
    pub log_t_out: Vec<f64>,
}

impl TypeTable {
    pub fn num_types(&self) -> usize {
        self.ta.len()
    }

    pub fn counts_of(&self, i: usize) -> &[u32] {
        &self.counts[i * self.cells..(i + 1) * self.cells]
    }

    pub fn joint_type(&self, i: usize) -> JointType {
        let flat = self.counts_of(i);
        let counts = (0..self.a).map(|ai| flat[ai * self.b..(ai + 1) * self.b].to_vec()).collect();
        JointType { n: self.n, counts }
    }

    /// `sum counts(a,b) ln E(b|a)` per joint type; `-inf` marks types whose
    /// support leaves the channel's.
    pub fn log_channel_weights(&self, channel: &Channel) -> Vec<f64> {
        let mut ln_e = vec![0.0f64; self.cells];
        for ai in 0..self.a {
            for bi in 0..self.b {
                ln_e[ai * self.b + bi] = channel.prob(ai, bi).ln(); // ln 0 = -inf
            }
        }
        (0..self.num_types())
            .map(|i| {
                let mut acc = 0.0;
                for (cell, &c) in self.counts_of(i).iter().enumerate() {
                    if c > 0 {
                        acc += c as f64 * ln_e[cell];
                    }
                }
                acc
            })
            .collect()
    }

    /// Closed-form count of joint types, `C(n + ab - 1, ab - 1)`.
    pub fn count_closed_form(a: usize, b: usize, n: u32) -> Option<u128> {
        let k = (a * b - 1) as u128;
        let mut num = 1u128;
        for i in 1..=k {
            num = num.checked_mul(n as u128 + i)?;
            num /= i; // exact: product of j consecutive integers divides j!
        }
        Some(num)
    }
}

pub fn enumerate_joint_types(a: usize, b: usize, n: u32) -> Result<TypeTable, TypeError> {
    enumerate_joint_types_with_limit(a, b, n, DEFAULT_TYPE_LIMIT)
}

pub fn enumerate_joint_types_with_limit(
    a: usize,
    b: usize,
    n: u32,
    limit: u64,
) -> Result<TypeTable, TypeError> {
    assert!(a >= 1 && b >= 1, "alphabets must be nonempty");
    if n == 0 {
        return Err(TypeError::BadBlocklength);
    }
    let count = TypeTable::count_closed_form(a, b, n).unwrap_or(u128::MAX);
    if count > limit as u128 {
        return Err(TypeError::LimitExceeded { count, limit });
    }
    let cells = a * b;
    let lf = ln_factorial_table(n as usize);

    let mut input_types = Vec::new();
    let mut input_index: HashMap<Vec<u32>, u32> = HashMap::new();
    for_each_composition(n, a, &mut |c| {
        input_index.insert(c.to_vec(), input_types.len() as u32);
        input_types.push(c.to_vec());
    });
    let mut output_types = Vec::new();
    let mut output_index: HashMap<Vec<u32>, u32> = HashMap::new();
    for_each_composition(n, b, &mut |c| {
        output_index.insert(c.to_vec(), output_types.len() as u32);
        output_types.push(c.to_vec());
    });
    let log_multinomial = |counts: &[u32]| -> f64 {
        let mut v = lf[n as usize];
        for &c in counts {
            v -= lf[c as usize];
        }
        v
    };
    let log_t_in: Vec<f64> = input_types.iter().map(|c| log_multinomial(c)).collect();
    let log_t_out: Vec<f64> = output_types.iter().map(|c| log_multinomial(c)).collect();

    let cap = count as usize;
    let mut counts = Vec::with_capacity(cap * cells);
    let mut ta = Vec::with_capacity(cap);
    let mut tb = Vec::with_capacity(cap);
    let mut log_t = Vec::with_capacity(cap);
    let mut log_m = Vec::with_capacity(cap);
    let mut ma = vec![0u32; a];
    let mut mb = vec![0u32; b];
    for_each_composition(n, cells, &mut |flat| {
        ma.iter_mut().for_each(|v| *v = 0);
        mb.iter_mut().for_each(|v| *v = 0);
        let mut lt = lf[n as usize];
        for ai in 0..a {
            for bi in 0..b {
                let c = flat[ai * b + bi];
                ma[ai] += c;
                mb[bi] += c;
                lt -= lf[c as usize];
            }
        }
        let mut lm = 0.0;
        for (bi, &col) in mb.iter().enumerate() {
            lm += lf[col as usize];
            for ai in 0..a {
                lm -= lf[flat[ai * b + bi] as usize];
            }
        }
        counts.extend_from_slice(flat);
        ta.push(input_index[&ma]);
        tb.push(output_index[&mb]);
        log_t.push(lt);
        log_m.push(lm);
    });

    Ok(TypeTable {
        a,
        b,
        n,
        cells,
        counts,
        ta,
        tb,
        log_t,
        log_m,
        input_types,
        output_types,
        log_t_in,
        log_t_out,
    })
}

/// Log-compensated check that the reduced description keeps `E^n`
/// row-stochastic: for every input type `sigma`, the types with that input
/// marginal must carry total conditional mass 1. Returns the largest
/// deviation.
pub fn input_stochasticity_residual(table: &TypeTable, channel: &Channel) -> f64 {
    let log_e = table.log_channel_weights(channel);
    let mut sums = vec![0.0f64; table.input_types.len()];
    let mut comps = vec![0.0f64; table.input_types.len()];
    for i in 0..table.num_types() {
        let s = table.ta[i] as usize;
        // strings of y per fixed x of type sigma: |T_tau| / |T_sigma|
        let term = (table.log_t[i] - table.log_t_in[s] + log_e[i]).exp();
        // Kahan compensation
        let y = term - comps[s];
        let t = sums[s] + y;
        comps[s] = (t - sums[s]) - y;
        sums[s] = t;
    }
    sums.iter().map(|&s| (s - 1.0).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Reduced programs
// ---------------------------------------------------------------------------

/// Coefficient floor below which a per-type cap row is dropped.
const CAP_UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedPath {
    Direct,
    ColumnGeneration,
}

#[derive(Debug, Clone)]
pub struct ReduceStats {
    pub path: ReducedPath,
    pub types: usize,
    /// Cap rows dropped for coefficient underflow (direct path only).
    pub dropped_cap_rows: usize,
    pub colgen_iterations: usize,
    /// Certified relative optimality gap (column-generation path).
    pub certified_gap: f64,
    pub lp_iterations: usize,
}

/// Per-type witness entry; `value` is in original units (`R` or `F`),
/// `scaled` in the rescaled units actually solved (`S` or `G`).
#[derive(Debug, Clone)]
pub struct WitnessType {
    pub counts: Vec<Vec<u32>>,
    pub value: f64,
    pub scaled: f64,
}

#[derive(Debug, Clone)]
pub struct WitnessInput {
    pub counts: Vec<u32>,
    pub value: f64,
}

/// Reduced primal witness, keyed by count matrices.
#[derive(Debug, Clone)]
pub struct ReducedWitness {
    pub types: Vec<WitnessType>,
    pub p: Vec<WitnessInput>,
}

fn counts_key(counts: &[Vec<u32>]) -> String {
    counts
        .iter()
        .map(|row| row.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join(";")
}

impl ReducedWitness {
    /// JSON value with types keyed by their count matrices
    /// (rows joined by `;`, entries by `,`).
    pub fn to_json_value(&self) -> serde_json::Value {
        use serde_json::{json, Map, Value};
        let mut types = Map::new();
        for t in &self.types {
            types.insert(counts_key(&t.counts), json!({"value": t.value, "scaled": t.scaled}));
        }
        let mut p = Map::new();
        for e in &self.p {
            let key = e.counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
            p.insert(key, json!(e.value));
        }
        Value::Object(
            [("types".to_string(), Value::Object(types)), ("p".to_string(), Value::Object(p))]
                .into_iter()
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct ReducedErrorBound {
    pub p_err: f64,
    pub success: f64,
    pub witness: ReducedWitness,
    /// Packing multiplier per output type (aggregated over the type class).
    pub dual_z_by_output_type: Vec<f64>,
    pub dual_alpha: f64,
    pub stats: ReduceStats,
}

#[derive(Debug, Clone)]
pub struct ReducedSizeBound {
    pub m_beta: f64,
    /// Saturates at `u64::MAX` when the value exceeds integer range.
    pub m_ns: u64,
    pub witness: ReducedWitness,
    pub dual_c_by_output_type: Vec<f64>,
    pub dual_zeta: f64,
    pub stats: ReduceStats,
}

#[derive(Debug, Clone)]
pub struct ReducedOptions {
    pub type_limit: u64,
    /// Largest type count routed to the dense direct build.
    pub direct_limit: usize,
    /// Relative optimality gap at which column generation stops.
    pub colgen_tol: f64,
    pub colgen_max_iterations: usize,
    pub lp: SolveOptions,
}

impl Default for ReducedOptions {
    fn default() -> Self {
        ReducedOptions {
            type_limit: DEFAULT_TYPE_LIMIT,
            direct_limit: 1200,
            colgen_tol: 1e-10,
            colgen_max_iterations: 4000,
            lp: SolveOptions::default(),
        }
    }
}

/// Per-type channel data shared by both paths.
pub(crate) struct ProblemData {
    /// `|T_tau| E^n(tau)`: total success mass of the type class.
    pub mass: Vec<f64>,
    /// `m(tau; tau_B)`.
    pub m: Vec<f64>,
    /// `|T_tauB| E^n(tau)` = `mass / m`: the rescaled objective weight.
    pub w: Vec<f64>,
    /// `|T_sigma|` per input type.
    pub t_in: Vec<f64>,
    /// `log(|T_o| q^n(o))` per output type, for a near-capacity-achieving
    /// output distribution `q`. Dual thresholds proportional to this profile
    /// are likelihood-ratio tests against the product distribution `q^n`,
    /// which is the shape the optimal multipliers take; column generation
    /// seeds from this family.
    pub log_qn_out: Vec<f64>,
}

pub(crate) fn problem_data(table: &TypeTable, channel: &Channel) -> ProblemData {
    let log_e = table.log_channel_weights(channel);
    let nt = table.num_types();
    let mut mass = Vec::with_capacity(nt);
    let mut m = Vec::with_capacity(nt);
    let mut w = Vec::with_capacity(nt);
    for i in 0..nt {
        mass.push((table.log_t[i] + log_e[i]).exp());
        m.push(table.log_m[i].exp());
        w.push((table.log_t_out[table.tb[i] as usize] + log_e[i]).exp());
    }
    let t_in: Vec<f64> = table.log_t_in.iter().map(|&l| l.exp()).collect();

    let q = match crate::asymptotics::capacity(channel, 1e-7) {
        Ok(cap) => cap.q_star,
        Err(_) => {
            // fall back to the uniform-input output distribution
            let a = channel.input_size();
            let b = channel.output_size();
            let mut q = vec![0.0; b];
            for x in 0..a {
                for (y, qy) in q.iter_mut().enumerate() {
                    *qy += channel.prob(x, y) / a as f64;
                }
            }
            q
        }
    };
    let log_qn_out = table
        .output_types
        .iter()
        .zip(&table.log_t_out)
        .map(|(counts, &log_t_out)| {
            let mut acc = log_t_out;
            for (b, &c) in counts.iter().enumerate() {
                if c > 0 {
                    acc += c as f64 * q[b].ln();
                }
            }
            acc
        })
        .collect();
    ProblemData { mass, m, w, t_in, log_qn_out }
}

fn check_base(base: &Channel, n: u32) -> Result<(), TypeError> {
    if n == 0 {
        return Err(TypeError::BadBlocklength);
    }
    let _ = base;
    Ok(())
}

/// Reduced error query: `min_error` of the n-fold channel through the
/// type-class program.
pub fn reduced_min_error(base: &Channel, n: u32, messages: u64) -> Result<ReducedErrorBound, TypeError> {
    reduced_min_error_with(base, n, messages, &ReducedOptions::default())
}

pub fn reduced_min_error_with(
    base: &Channel,
    n: u32,
    messages: u64,
    opts: &ReducedOptions,
) -> Result<ReducedErrorBound, TypeError> {
    check_base(base, n)?;
    if messages == 0 {
        return Err(TypeError::BadQuery("message count must be at least 1".into()));
    }
    let table = enumerate_joint_types_with_limit(base.input_size(), base.output_size(), n, opts.type_limit)?;
    let data = problem_data(&table, base);
    if table.num_types() <= opts.direct_limit {
        direct_error(&table, &data, messages, opts)
    } else {
        colgen::colgen_error(&table, &data, messages, opts)
    }
}

/// Reduced size query: `max_size` of the n-fold channel through the
/// type-class program.
pub fn reduced_max_size(base: &Channel, n: u32, eps: f64) -> Result<ReducedSizeBound, TypeError> {
    reduced_max_size_with(base, n, eps, &ReducedOptions::default())
}

pub fn reduced_max_size_with(
    base: &Channel,
    n: u32,
    eps: f64,
    opts: &ReducedOptions,
) -> Result<ReducedSizeBound, TypeError> {
    check_base(base, n)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(TypeError::BadQuery(format!("epsilon must lie in [0,1), got {eps}")));
    }
    let table = enumerate_joint_types_with_limit(base.input_size(), base.output_size(), n, opts.type_limit)?;
    let data = problem_data(&table, base);
    if table.num_types() <= opts.direct_limit {
        direct_size(&table, &data, eps, opts)
    } else {
        colgen::colgen_size(&table, &data, eps, opts)
    }
}

fn extract_witness(
    table: &TypeTable,
    scaled: impl Fn(usize) -> f64,
    p: &[f64],
) -> ReducedWitness {
    let mut types = Vec::new();
    for i in 0..table.num_types() {
        let s = scaled(i);
        if s > 0.0 {
            types.push(WitnessType {
                counts: table.joint_type(i).counts,
                value: (s.ln() - table.log_m[i]).exp(),
                scaled: s,
            });
        }
    }
    let p_entries = table
        .input_types
        .iter()
        .zip(p)
        .filter(|(_, &v)| v != 0.0)
        .map(|(c, &v)| WitnessInput { counts: c.clone(), value: v })
        .collect();
    ReducedWitness { types, p: p_entries }
}

fn direct_error(
    table: &TypeTable,
    data: &ProblemData,
    messages: u64,
    opts: &ReducedOptions,
) -> Result<ReducedErrorBound, TypeError> {
    let nt = table.num_types();
    let ni = table.input_types.len();
    let no = table.output_types.len();
    let mu = 1.0 / messages as f64;

    // Variables: S(tau), then the class-mass variables pt(sigma) =
    // |T_sigma| p(sigma). In these units every coefficient is O(1).
    let mut obj = vec![0.0; nt + ni];
    obj[..nt].copy_from_slice(&data.w);
    let mut lp = LinearProgram::maximize(obj);
    // packing rows, one per output type
    for o in 0..no {
        let mut coeffs = vec![0.0; nt + ni];
        for i in 0..nt {
            if table.tb[i] as usize == o {
                coeffs[i] = 1.0;
            }
        }
        lp.add_row(format!("cap[{o}]"), coeffs, Relation::Le, mu);
    }
    // per-type caps S <= m p, scaled to exp(-log m) S - pt/|T_sigma| <= 0
    let mut dropped = 0usize;
    for i in 0..nt {
        let inv_m = (-table.log_m[i]).exp();
        if inv_m < CAP_UNDERFLOW {
            dropped += 1;
            continue;
        }
        let sigma = table.ta[i] as usize;
        let mut coeffs = vec![0.0; nt + ni];
        coeffs[i] = inv_m;
        coeffs[nt + sigma] = -(-table.log_t_in[sigma]).exp();
        lp.add_row(format!("ub[{i}]"), coeffs, Relation::Le, 0.0);
    }
    // normalization over input types: sum of class masses is 1
    let mut coeffs = vec![0.0; nt + ni];
    for j in 0..ni {
        coeffs[nt + j] = 1.0;
    }
    lp.add_row("norm", coeffs, Relation::Eq, 1.0);

    let sol = lp::solve(&lp, &opts.lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(TypeError::UnexpectedStatus(sol.status));
    }
    let success = sol.value.min(1.0);
    let p: Vec<f64> = (0..ni).map(|j| sol.primal[nt + j] / data.t_in[j]).collect();
    let witness = extract_witness(table, |i| sol.primal[i].max(0.0), &p);
    let z: Vec<f64> = sol.dual[..no].iter().map(|&v| v.max(0.0)).collect();
    let alpha = sol.dual[sol.dual.len() - 1];
    Ok(ReducedErrorBound {
        p_err: (1.0 - success).max(0.0),
        success,
        witness,
        dual_z_by_output_type: z,
        dual_alpha: alpha,
        stats: ReduceStats {
            path: ReducedPath::Direct,
            types: nt,
            dropped_cap_rows: dropped,
            colgen_iterations: 0,
            certified_gap: 0.0,
            lp_iterations: sol.iterations,
        },
    })
}

fn direct_size(
    table: &TypeTable,
    data: &ProblemData,
    eps: f64,
    opts: &ReducedOptions,
) -> Result<ReducedSizeBound, TypeError> {
    let nt = table.num_types();
    let ni = table.input_types.len();
    let no = table.output_types.len();

    // Variables: G(tau), then the class-mass variables vt(sigma) =
    // |T_sigma| v(sigma), keeping every coefficient O(1).
    let mut obj = vec![0.0; nt + ni];
    for j in 0..ni {
        obj[nt + j] = 1.0;
    }
    let mut lp = LinearProgram::maximize(obj);
    // per-type caps G <= m v
    let mut dropped = 0usize;
    for i in 0..nt {
        let inv_m = (-table.log_m[i]).exp();
        if inv_m < CAP_UNDERFLOW {
            dropped += 1;
            continue;
        }
        let sigma = table.ta[i] as usize;
        let mut coeffs = vec![0.0; nt + ni];
        coeffs[i] = inv_m;
        coeffs[nt + sigma] = -(-table.log_t_in[sigma]).exp();
        lp.add_row(format!("ub[{i}]"), coeffs, Relation::Le, 0.0);
    }
    // packing rows
    let cap_row_start = lp.num_rows();
    for o in 0..no {
        let mut coeffs = vec![0.0; nt + ni];
        for i in 0..nt {
            if table.tb[i] as usize == o {
                coeffs[i] = 1.0;
            }
        }
        lp.add_row(format!("cap[{o}]"), coeffs, Relation::Le, 1.0);
    }
    // (1-eps) sum |T_sigma| v - sum w G <= 0
    let mut coeffs = vec![0.0; nt + ni];
    for i in 0..nt {
        coeffs[i] = -data.w[i];
    }
    for j in 0..ni {
        coeffs[nt + j] = 1.0 - eps;
    }
    let quality_row = lp.add_row("quality", coeffs, Relation::Le, 0.0);

    let sol = lp::solve(&lp, &opts.lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(TypeError::UnexpectedStatus(sol.status));
    }
    let m_beta = sol.value;
    let v: Vec<f64> = (0..ni).map(|j| sol.primal[nt + j] / data.t_in[j]).collect();
    let witness = extract_witness(table, |i| sol.primal[i].max(0.0), &v);
    let c: Vec<f64> = (0..no).map(|o| sol.dual[cap_row_start + o].max(0.0)).collect();
    let zeta = sol.dual[quality_row].max(0.0);
    Ok(ReducedSizeBound {
        m_beta,
        m_ns: float_floor_to_u64(m_beta),
        witness,
        dual_c_by_output_type: c,
        dual_zeta: zeta,
        stats: ReduceStats {
            path: ReducedPath::Direct,
            types: nt,
            dropped_cap_rows: dropped,
            colgen_iterations: 0,
            certified_gap: 0.0,
            lp_iterations: sol.iterations,
        },
    })
}

pub(crate) fn float_floor_to_u64(value: f64) -> u64 {
    let f = (value + FLOOR_GUARD).floor();
    if f >= u64::MAX as f64 {
        u64::MAX
    } else if f <= 0.0 {
        0
    } else {
        f as u64
    }
}

#[cfg(test)]
mod tests;
