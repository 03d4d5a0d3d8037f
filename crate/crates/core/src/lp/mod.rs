//! Self-contained dense linear-program solver.
//!
//! Two-phase primal simplex on a dense tableau with Dantzig pricing and a
//! Bland fallback after a stall threshold, so termination is guaranteed. The
//! same engine is instantiated at `f64` (with tolerances) and at
//! `BigRational` (all comparisons exact). Equality rows carry free-signed
//! dual multipliers directly; they are never split into inequality pairs.
//!
//! Dual sign convention: in a maximization problem the multiplier of a `<=`
//! row is nonnegative and the multiplier of a `>=` row is nonpositive; the
//! convention flips with the objective sense, so weak duality always reads
//! `dual_value >= value` for max problems and `dual_value <= value` for min
//! problems.

mod scalar;
mod simplex;

pub use scalar::LpScalar;

use num::BigRational;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Row<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
    pub name: String,
}

/// Dense LP: `sense { objective . x }` subject to rows and simple bounds.
/// Variable lower bounds default to 0; upper bounds are optional.
#[derive(Debug, Clone)]
pub struct LinearProgram<T = f64> {
    pub sense: Sense,
    pub objective: Vec<T>,
    pub rows: Vec<Row<T>>,
    pub lower: Vec<T>,
    pub upper: Vec<Option<T>>,
    pub var_names: Vec<String>,
}

impl<T: LpScalar> LinearProgram<T> {
    pub fn new(sense: Sense, objective: Vec<T>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            rows: Vec::new(),
            lower: vec![T::zero(); n],
            upper: vec![None; n],
            var_names: (0..n).map(|j| format!("x{j}")).collect(),
        }
    }

    pub fn maximize(objective: Vec<T>) -> Self {
        Self::new(Sense::Maximize, objective)
    }

    pub fn minimize(objective: Vec<T>) -> Self {
        Self::new(Sense::Minimize, objective)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds a constraint row; returns its index for dual lookup.
    pub fn add_row(&mut self, name: impl Into<String>, coeffs: Vec<T>, relation: Relation, rhs: T) -> usize {
        self.rows.push(Row { coeffs, relation, rhs, name: name.into() });
        self.rows.len() - 1
    }

    pub fn set_lower(&mut self, var: usize, bound: T) {
        self.lower[var] = bound;
    }

    pub fn set_upper(&mut self, var: usize, bound: T) {
        self.upper[var] = Some(bound);
    }

    pub fn set_var_name(&mut self, var: usize, name: impl Into<String>) {
        self.var_names[var] = name.into();
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if n == 0 {
            return Err(LpError::Dimension("program has no variables".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::Dimension(format!(
                    "row {i} has width {} but the objective has {n} entries",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite_val() || row.coeffs.iter().any(|c| !c.is_finite_val()) {
                return Err(LpError::NonFinite);
            }
        }
        if self.objective.iter().any(|c| !c.is_finite_val()) {
            return Err(LpError::NonFinite);
        }
        for j in 0..n {
            if !self.lower[j].is_finite_val() {
                return Err(LpError::NonFinite);
            }
            if let Some(u) = &self.upper[j] {
                if !u.is_finite_val() {
                    return Err(LpError::NonFinite);
                }
                if *u < self.lower[j] {
                    return Err(LpError::Dimension(format!("variable {j} has upper bound below lower bound")));
                }
            }
        }
        Ok(())
    }

    /// Objective value at a point.
    pub fn objective_at(&self, point: &[T]) -> T {
        let mut acc = T::zero();
        for (c, x) in self.objective.iter().zip(point) {
            acc = acc + c.clone() * x.clone();
        }
        acc
    }

    /// Plain-text fixed-format listing for debugging with external tools.
    ///
    /// Format (one item per line):
    /// `NSBOUND-LP 1` / `MAXIMIZE|MINIMIZE` / `VARS n` /
    /// `OBJ c0 c1 ...` / `ROW <name> <=|=|>= rhs : a0 a1 ...` /
    /// `LB j v` and `UB j v` for non-default bounds / `END`.
    pub fn to_fixed_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        s.push_str("NSBOUND-LP 1\n");
        s.push_str(match self.sense {
            Sense::Maximize => "MAXIMIZE\n",
            Sense::Minimize => "MINIMIZE\n",
        });
        let _ = writeln!(s, "VARS {}", self.num_vars());
        s.push_str("OBJ");
        for c in &self.objective {
            let _ = write!(s, " {c}");
        }
        s.push('\n');
        for row in &self.rows {
            let _ = write!(s, "ROW {} {} {} :", row.name, row.relation.symbol(), row.rhs);
            for c in &row.coeffs {
                let _ = write!(s, " {c}");
            }
            s.push('\n');
        }
        for (j, l) in self.lower.iter().enumerate() {
            if !l.is_zero_val() {
                let _ = writeln!(s, "LB {j} {l}");
            }
        }
        for (j, u) in self.upper.iter().enumerate() {
            if let Some(u) = u {
                let _ = writeln!(s, "UB {j} {u}");
            }
        }
        s.push_str("END\n");
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output. `primal` and `dual` are empty unless `status` is
/// `Optimal`. `dual` has one multiplier per constraint row, in row order.
#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub value: T,
    pub dual_value: T,
    pub primal: Vec<T>,
    pub dual: Vec<T>,
    pub iterations: usize,
    pub degenerate_pivots: usize,
}

impl<T: LpScalar> LpSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("all coefficients must be finite")]
    NonFinite,
    #[error("numerical breakdown: {0}; consider exact mode")]
    NumericalBreakdown(String),
    #[error("iteration limit {0} exceeded")]
    IterationLimit(usize),
}

/// Tolerances and limits for the float path. The exact path ignores every
/// tolerance (they all collapse to zero) but honors the iteration limit.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Feasibility tolerance on constraint residuals.
    pub feas_tol: f64,
    /// Reduced-cost tolerance for optimality.
    pub opt_tol: f64,
    /// Duality-gap tolerance, relative to max(1, |value|).
    pub gap_tol: f64,
    /// Entries at or below this magnitude are not eligible pivots.
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_pivots: usize,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            gap_tol: 1e-8,
            pivot_tol: 1e-10,
            stall_pivots: 50,
            max_iterations: 1_000_000,
        }
    }
}

/// Arithmetic mode for [`solve_lp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Float,
    Exact,
}

/// Solves with the requested scalar type.
pub fn solve<T: LpScalar>(lp: &LinearProgram<T>, opts: &SolveOptions) -> Result<LpSolution<T>, LpError> {
    lp.validate()?;
    simplex::solve(lp, opts)
}

/// Solves a float program; in exact mode the coefficients are converted
/// losslessly to rationals, solved exactly, and the results rounded back.
pub fn solve_lp(lp: &LinearProgram<f64>, mode: Mode, opts: &SolveOptions) -> Result<LpSolution<f64>, LpError> {
    match mode {
        Mode::Float => solve(lp, opts),
        Mode::Exact => {
            let exact = to_exact(lp);
            let sol = solve(&exact, opts)?;
            Ok(LpSolution {
                status: sol.status,
                value: sol.value.to_f64(),
                dual_value: sol.dual_value.to_f64(),
                primal: sol.primal.iter().map(LpScalar::to_f64).collect(),
                dual: sol.dual.iter().map(LpScalar::to_f64).collect(),
                iterations: sol.iterations,
                degenerate_pivots: sol.degenerate_pivots,
            })
        }
    }
}

/// Lossless float-to-rational conversion of a whole program.
pub fn to_exact(lp: &LinearProgram<f64>) -> LinearProgram<BigRational> {
    let conv = |x: &f64| BigRational::from_f64_lossless(*x);
    LinearProgram {
        sense: lp.sense,
        objective: lp.objective.iter().map(conv).collect(),
        rows: lp
            .rows
            .iter()
            .map(|r| Row {
                coeffs: r.coeffs.iter().map(conv).collect(),
                relation: r.relation,
                rhs: conv(&r.rhs),
                name: r.name.clone(),
            })
            .collect(),
        lower: lp.lower.iter().map(conv).collect(),
        upper: lp.upper.iter().map(|u| u.as_ref().map(|x| conv(x))).collect(),
        var_names: lp.var_names.clone(),
    }
}

#[derive(Debug, Clone)]
pub struct RowViolation<T> {
    pub row: usize,
    pub name: String,
    /// Signed slack: negative means violated for `<=`/`>=`, any nonzero
    /// residual is reported for `=`.
    pub slack: T,
}

#[derive(Debug, Clone)]
pub struct BoundViolation<T> {
    pub var: usize,
    pub amount: T,
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport<T> {
    pub objective: T,
    pub feasible: bool,
    pub violations: Vec<RowViolation<T>>,
    pub bound_violations: Vec<BoundViolation<T>>,
    /// Rows satisfied with zero slack (within tolerance).
    pub tight_rows: Vec<usize>,
}

/// Evaluates a point against every constraint, listing violations and slack.
pub fn check_point<T: LpScalar>(
    lp: &LinearProgram<T>,
    point: &[T],
    tol: f64,
) -> Result<FeasibilityReport<T>, LpError> {
    if point.len() != lp.num_vars() {
        return Err(LpError::Dimension(format!(
            "point has {} coordinates, program has {} variables",
            point.len(),
            lp.num_vars()
        )));
    }
    let tol_t = T::tol(tol);
    let mut violations = Vec::new();
    let mut tight_rows = Vec::new();
    for (i, row) in lp.rows.iter().enumerate() {
        let mut lhs = T::zero();
        for (a, x) in row.coeffs.iter().zip(point) {
            lhs = lhs + a.clone() * x.clone();
        }
        // signed slack, >= 0 when satisfied
        let slack = match row.relation {
            Relation::Le => row.rhs.clone() - lhs,
            Relation::Ge => lhs - row.rhs.clone(),
            Relation::Eq => {
                let r = lhs - row.rhs.clone();
                if r.abs_val() > tol_t {
                    violations.push(RowViolation { row: i, name: row.name.clone(), slack: -r.abs_val() });
                } else {
                    tight_rows.push(i);
                }
                continue;
            }
        };
        if slack < -tol_t.clone() {
            violations.push(RowViolation { row: i, name: row.name.clone(), slack });
        } else if slack.abs_val() <= tol_t {
            tight_rows.push(i);
        }
    }
    let mut bound_violations = Vec::new();
    for j in 0..lp.num_vars() {
        let below = lp.lower[j].clone() - point[j].clone();
        if below > tol_t {
            bound_violations.push(BoundViolation { var: j, amount: below });
            continue;
        }
        if let Some(u) = &lp.upper[j] {
            let above = point[j].clone() - u.clone();
            if above > tol_t {
                bound_violations.push(BoundViolation { var: j, amount: above });
            }
        }
    }
    let feasible = violations.is_empty() && bound_violations.is_empty();
    Ok(FeasibilityReport {
        objective: lp.objective_at(point),
        feasible,
        violations,
        bound_violations,
        tight_rows,
    })
}

#[cfg(test)]
mod tests;
