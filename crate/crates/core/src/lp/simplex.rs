//! Two-phase dense primal simplex, generic over the scalar type.
//!
//! Internally every program is rewritten as `max c.xh` with `xh >= 0`:
//! the objective is negated for minimization, variables are shifted by their
//! lower bounds, upper bounds become extra `<=` rows, and rows with negative
//! right-hand sides are flipped. Slack columns are added per inequality and
//! artificial columns per `>=`/`=` row; phase 1 drives the artificials to
//! zero. Artificial columns are kept (priced out, barred from entering) so
//! dual multipliers can be read off the objective row under each row's
//! initial unit column.

use super::{LinearProgram, LpError, LpScalar, LpSolution, LpStatus, Relation, Sense, SolveOptions};

struct Canonical<T> {
    /// Constraint rows, canonical equalities with nonnegative rhs. Each row
    /// has `cols + 1` entries, rhs last.
    tab: Vec<Vec<T>>,
    /// Canonical (maximization) objective over all columns.
    obj: Vec<T>,
    obj_const: T,
    basis: Vec<usize>,
    cols: usize,
    n_struct: usize,
    art_start: usize,
    /// Initial unit column of each row, for dual extraction.
    unit_col: Vec<usize>,
    flipped: Vec<bool>,
    /// Canonical rhs of each row as built (the tableau copy mutates).
    rhs0: Vec<T>,
    /// Number of rows that came from the user program (prefix of `tab`).
    n_user_rows: usize,
    rhs_scale: f64,
}

fn build_canonical<T: LpScalar>(lp: &LinearProgram<T>) -> Result<Canonical<T>, LpError> {
    let n = lp.num_vars();
    let maximize = lp.sense == Sense::Maximize;
    let obj_struct: Vec<T> = lp
        .objective
        .iter()
        .map(|c| if maximize { c.clone() } else { -c.clone() })
        .collect();
    let mut obj_const = T::zero();
    for j in 0..n {
        obj_const = obj_const + obj_struct[j].clone() * lp.lower[j].clone();
    }

    // Shifted user rows followed by upper-bound rows.
    let mut raw: Vec<(Vec<T>, Relation, T)> = Vec::with_capacity(lp.rows.len());
    for row in &lp.rows {
        let mut shift = T::zero();
        for (a, l) in row.coeffs.iter().zip(&lp.lower) {
            shift = shift + a.clone() * l.clone();
        }
        raw.push((row.coeffs.clone(), row.relation, row.rhs.clone() - shift));
    }
    for j in 0..n {
        if let Some(u) = &lp.upper[j] {
            let mut coeffs = vec![T::zero(); n];
            coeffs[j] = T::one();
            raw.push((coeffs, Relation::Le, u.clone() - lp.lower[j].clone()));
        }
    }

    let m = raw.len();
    let mut flipped = vec![false; m];
    let mut relations = Vec::with_capacity(m);
    for (i, (coeffs, rel, rhs)) in raw.iter_mut().enumerate() {
        if *rhs < T::zero() {
            for a in coeffs.iter_mut() {
                *a = -a.clone();
            }
            *rhs = -rhs.clone();
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            flipped[i] = true;
        }
        relations.push(*rel);
    }

    let n_slack = relations.iter().filter(|r| **r != Relation::Eq).count();
    let n_art = relations.iter().filter(|r| **r != Relation::Le).count();
    let art_start = n + n_slack;
    let cols = n + n_slack + n_art;

    let mut tab: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    let mut unit_col = vec![0usize; m];
    let mut rhs0 = Vec::with_capacity(m);
    let mut next_slack = n;
    let mut next_art = art_start;
    let mut rhs_scale = 1.0f64;
    for (i, (coeffs, rel, rhs)) in raw.into_iter().enumerate() {
        let mut trow = vec![T::zero(); cols + 1];
        trow[..n].clone_from_slice(&coeffs);
        rhs_scale = rhs_scale.max(rhs.to_f64().abs());
        rhs0.push(rhs.clone());
        trow[cols] = rhs;
        match rel {
            Relation::Le => {
                trow[next_slack] = T::one();
                basis[i] = next_slack;
                unit_col[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                trow[next_slack] = -T::one();
                next_slack += 1;
                trow[next_art] = T::one();
                basis[i] = next_art;
                unit_col[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                trow[next_art] = T::one();
                basis[i] = next_art;
                unit_col[i] = next_art;
                next_art += 1;
            }
        }
        tab.push(trow);
    }

    let mut obj = vec![T::zero(); cols];
    obj[..n].clone_from_slice(&obj_struct);

    Ok(Canonical {
        tab,
        obj,
        obj_const,
        basis,
        cols,
        n_struct: n,
        art_start,
        unit_col,
        flipped,
        rhs0,
        n_user_rows: lp.rows.len(),
        rhs_scale,
    })
}

struct PivotState {
    iterations: usize,
    degenerate: usize,
    consecutive_degenerate: usize,
    bland: bool,
}

enum LoopEnd {
    Optimal,
    Unbounded,
}

/// One simplex phase: pivots until the reduced-cost row `zc` is nonnegative.
/// `zc` has `cols + 1` entries; the last carries the objective value and is
/// updated with the rest of the row. Leaving variables with index at or above
/// `bar_leaving_at` are barred from re-entering (used to retire artificials).
fn pivot_loop<T: LpScalar>(
    can: &mut Canonical<T>,
    zc: &mut [T],
    barred: &mut [bool],
    bar_leaving_at: usize,
    opts: &SolveOptions,
    state: &mut PivotState,
) -> Result<LoopEnd, LpError> {
    let cols = can.cols;
    let opt_tol = T::tol(opts.opt_tol);
    let pivot_tol = T::tol(opts.pivot_tol);

    loop {
        if state.iterations >= opts.max_iterations {
            return Err(LpError::IterationLimit(opts.max_iterations));
        }

        // entering column
        let mut enter: Option<usize> = None;
        if state.bland {
            for j in 0..cols {
                if !barred[j] && zc[j] < -opt_tol.clone() {
                    enter = Some(j);
                    break;
                }
            }
        } else {
            let mut best: Option<(usize, T)> = None;
            for j in 0..cols {
                if barred[j] || zc[j] >= -opt_tol.clone() {
                    continue;
                }
                match &best {
                    Some((_, b)) if zc[j] >= *b => {}
                    _ => best = Some((j, zc[j].clone())),
                }
            }
            enter = best.map(|(j, _)| j);
        }
        let Some(jcol) = enter else {
            return Ok(LoopEnd::Optimal);
        };

        // ratio test: strict minimum first, then a tolerance band for the
        // tie set so the numerically best pivot can be preferred
        let mut min_ratio: Option<T> = None;
        for i in 0..can.tab.len() {
            let a = can.tab[i][jcol].clone();
            if a <= pivot_tol {
                continue;
            }
            let mut b = can.tab[i][cols].clone();
            if b < T::zero() {
                b = T::zero(); // guard against rounding drift
            }
            let ratio = b / a;
            if min_ratio.as_ref().map_or(true, |m| ratio < *m) {
                min_ratio = Some(ratio);
            }
        }
        let Some(min_ratio) = min_ratio else {
            return Ok(LoopEnd::Unbounded);
        };
        let band = min_ratio.clone()
            + T::tol(1e-9) * min_ratio.clone().abs_val()
            + T::tol(1e-15);
        let mut leave: Option<usize> = None;
        for i in 0..can.tab.len() {
            let a = can.tab[i][jcol].clone();
            if a <= pivot_tol {
                continue;
            }
            let mut b = can.tab[i][cols].clone();
            if b < T::zero() {
                b = T::zero();
            }
            let ratio = b / a.clone();
            if ratio > band {
                continue;
            }
            let replace = match leave {
                None => true,
                Some(r) => {
                    if state.bland {
                        can.basis[i] < can.basis[r]
                    } else {
                        a.abs_val() > can.tab[r][jcol].abs_val()
                    }
                }
            };
            if replace {
                leave = Some(i);
            }
        }
        let Some(r) = leave else {
            return Ok(LoopEnd::Unbounded);
        };

        // progress-based stall detection: the objective gain of this pivot
        // is (-zc[jcol]) * ratio; treat relatively negligible gains as
        // degenerate and fall back to Bland's rule after a run of them
        let ratio_r = {
            let mut b = can.tab[r][cols].clone();
            if b < T::zero() {
                b = T::zero();
            }
            b / can.tab[r][jcol].clone()
        };
        let gain = (-zc[jcol].clone()) * ratio_r;
        let value_scale = zc[cols].to_f64().abs().max(1.0);
        let degenerate = gain.to_f64() <= 1e-13 * value_scale;
        if degenerate {
            state.degenerate += 1;
            state.consecutive_degenerate += 1;
            if state.consecutive_degenerate >= opts.stall_pivots {
                state.bland = true;
            }
        } else {
            state.consecutive_degenerate = 0;
            state.bland = false;
        }

        // pivot on (r, jcol)
        let piv = can.tab[r][jcol].clone();
        {
            let row = &mut can.tab[r];
            for v in row.iter_mut() {
                *v = v.clone() / piv.clone();
            }
            row[jcol] = T::one();
        }
        for i in 0..can.tab.len() {
            if i == r {
                continue;
            }
            let factor = can.tab[i][jcol].clone();
            if factor.is_zero_val() {
                continue;
            }
            let (pivot_row, target_row) = if i < r {
                let (lo, hi) = can.tab.split_at_mut(r);
                (&hi[0], &mut lo[i])
            } else {
                let (lo, hi) = can.tab.split_at_mut(i);
                (&lo[r], &mut hi[0])
            };
            for (t, p) in target_row.iter_mut().zip(pivot_row.iter()) {
                *t = t.clone() - factor.clone() * p.clone();
            }
            target_row[jcol] = T::zero();
        }
        let factor = zc[jcol].clone();
        if !factor.is_zero_val() {
            for (z, p) in zc.iter_mut().zip(can.tab[r].iter()) {
                *z = z.clone() - factor.clone() * p.clone();
            }
            zc[jcol] = T::zero();
        }
        let leaving = can.basis[r];
        if leaving >= bar_leaving_at {
            barred[leaving] = true;
        }
        can.basis[r] = jcol;
        state.iterations += 1;
    }
}

fn rebuild_zc<T: LpScalar>(can: &Canonical<T>, costs: &[T]) -> Vec<T> {
    let cols = can.cols;
    let mut zc = vec![T::zero(); cols + 1];
    for (i, row) in can.tab.iter().enumerate() {
        let cb = costs[can.basis[i]].clone();
        if cb.is_zero_val() {
            continue;
        }
        for (z, v) in zc.iter_mut().zip(row.iter()) {
            *z = z.clone() + cb.clone() * v.clone();
        }
    }
    for j in 0..cols {
        zc[j] = zc[j].clone() - costs[j].clone();
    }
    zc
}

pub(super) fn solve<T: LpScalar>(lp: &LinearProgram<T>, opts: &SolveOptions) -> Result<LpSolution<T>, LpError> {
    let mut can = build_canonical(lp)?;
    let cols = can.cols;
    let m = can.tab.len();
    let mut state = PivotState { iterations: 0, degenerate: 0, consecutive_degenerate: 0, bland: false };

    let infeasible = |state: &PivotState| LpSolution {
        status: LpStatus::Infeasible,
        value: T::zero(),
        dual_value: T::zero(),
        primal: Vec::new(),
        dual: Vec::new(),
        iterations: state.iterations,
        degenerate_pivots: state.degenerate,
    };

    // Phase 1: drive artificials out.
    let art_start = can.art_start;
    if art_start < cols {
        let mut costs = vec![T::zero(); cols];
        for c in costs.iter_mut().skip(art_start) {
            *c = -T::one();
        }
        let mut zc = rebuild_zc(&can, &costs);
        let mut barred = vec![false; cols];
        match pivot_loop(&mut can, &mut zc, &mut barred, art_start, opts, &mut state)? {
            LoopEnd::Unbounded => {
                // phase-1 objective is bounded above by zero; reaching here
                // means numerical trouble
                return Err(LpError::NumericalBreakdown("phase 1 reported unbounded".into()));
            }
            LoopEnd::Optimal => {}
        }
        let value1 = zc[cols].to_f64();
        let feas_scale = opts.feas_tol * (1.0 + can.rhs_scale);
        if value1 < -feas_scale {
            return Ok(infeasible(&state));
        }
        // Pivot remaining basic artificials onto structural/slack columns
        // where possible; rows with no eligible entry are redundant and stay
        // inert with their artificial basic at zero.
        let pivot_tol = T::tol(opts.pivot_tol);
        for r in 0..m {
            if can.basis[r] < art_start {
                continue;
            }
            let mut best: Option<usize> = None;
            for j in 0..art_start {
                if can.tab[r][j].abs_val() > pivot_tol {
                    match best {
                        Some(b) if can.tab[r][j].abs_val() <= can.tab[r][b].abs_val() => {}
                        _ => best = Some(j),
                    }
                }
            }
            if let Some(jcol) = best {
                let piv = can.tab[r][jcol].clone();
                {
                    let row = &mut can.tab[r];
                    for v in row.iter_mut() {
                        *v = v.clone() / piv.clone();
                    }
                    row[jcol] = T::one();
                }
                for i in 0..m {
                    if i == r {
                        continue;
                    }
                    let factor = can.tab[i][jcol].clone();
                    if factor.is_zero_val() {
                        continue;
                    }
                    let (pivot_row, target_row) = if i < r {
                        let (lo, hi) = can.tab.split_at_mut(r);
                        (&hi[0], &mut lo[i])
                    } else {
                        let (lo, hi) = can.tab.split_at_mut(i);
                        (&lo[r], &mut hi[0])
                    };
                    for (t, p) in target_row.iter_mut().zip(pivot_row.iter()) {
                        *t = t.clone() - factor.clone() * p.clone();
                    }
                    target_row[jcol] = T::zero();
                }
                can.basis[r] = jcol;
            }
        }
    }

    // Phase 2.
    let costs = can.obj.clone();
    let mut zc = rebuild_zc(&can, &costs);
    let mut barred = vec![false; cols];
    for b in barred.iter_mut().skip(art_start) {
        *b = true;
    }
    state.consecutive_degenerate = 0;
    state.bland = false;
    match pivot_loop(&mut can, &mut zc, &mut barred, art_start, opts, &mut state)? {
        LoopEnd::Unbounded => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                value: T::zero(),
                dual_value: T::zero(),
                primal: Vec::new(),
                dual: Vec::new(),
                iterations: state.iterations,
                degenerate_pivots: state.degenerate,
            });
        }
        LoopEnd::Optimal => {}
    }

    // Extract the primal point in user coordinates.
    let maximize = lp.sense == Sense::Maximize;
    let mut shifted = vec![T::zero(); can.n_struct];
    for (i, &bj) in can.basis.iter().enumerate() {
        if bj < can.n_struct {
            shifted[bj] = can.tab[i][cols].clone();
        }
    }
    let primal: Vec<T> = shifted
        .iter()
        .zip(&lp.lower)
        .map(|(xh, l)| xh.clone() + l.clone())
        .collect();
    let value = lp.objective_at(&primal);

    // Duals: objective-row entry under each row's initial unit column,
    // unflipped, then adjusted to the user's sense.
    let mut dual = Vec::with_capacity(can.n_user_rows);
    let mut dual_value_canon = can.obj_const.clone();
    for i in 0..m {
        let y_canon = zc[can.unit_col[i]].clone();
        dual_value_canon = dual_value_canon + y_canon.clone() * can.rhs0[i].clone();
        if i < can.n_user_rows {
            let y = if can.flipped[i] { -y_canon.clone() } else { y_canon.clone() };
            dual.push(if maximize { y } else { -y });
        }
    }
    let dual_value = if maximize { dual_value_canon } else { -dual_value_canon };

    // Float-path sanity: residual feasibility and the duality gap.
    let report = super::check_point(lp, &primal, opts.feas_tol * (1.0 + can.rhs_scale))?;
    if !report.feasible {
        return Err(LpError::NumericalBreakdown(format!(
            "optimal basis is outside feasibility tolerance ({} row, {} bound violations)",
            report.violations.len(),
            report.bound_violations.len()
        )));
    }
    let gap = (value.clone() - dual_value.clone()).to_f64().abs();
    if gap > opts.gap_tol * value.to_f64().abs().max(1.0) {
        return Err(LpError::NumericalBreakdown(format!(
            "duality gap {gap:.3e} exceeds tolerance"
        )));
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        dual_value,
        primal,
        dual,
        iterations: state.iterations,
        degenerate_pivots: state.degenerate,
    })
}
