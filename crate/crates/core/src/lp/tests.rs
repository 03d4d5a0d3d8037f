use super::*;
use num::BigRational;

fn opts() -> SolveOptions {
    SolveOptions::default()
}

#[test]
fn single_variable_box() {
    // max x s.t. x <= 3, x >= 0
    let mut lp = LinearProgram::maximize(vec![1.0]);
    lp.add_row("cap", vec![1.0], Relation::Le, 3.0);
    let sol = solve(&lp, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.value - 3.0).abs() < 1e-12);
    assert!((sol.primal[0] - 3.0).abs() < 1e-12);
    assert!((sol.dual[0] - 1.0).abs() < 1e-12);
}

#[test]
fn two_variable_hand_solvable() {
    // max x+y s.t. x+y <= 1, x <= 0.25
    let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
    lp.add_row("sum", vec![1.0, 1.0], Relation::Le, 1.0);
    lp.add_row("xcap", vec![1.0, 0.0], Relation::Le, 0.25);
    let sol = solve(&lp, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.value - 1.0).abs() < 1e-12);
}

#[test]
fn contradictory_bounds_infeasible() {
    // max x s.t. x >= 1, x <= 0
    let mut lp = LinearProgram::maximize(vec![1.0]);
    lp.add_row("lo", vec![1.0], Relation::Ge, 1.0);
    lp.add_row("hi", vec![1.0], Relation::Le, 0.0);
    let sol = solve(&lp, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Infeasible);
}

#[test]
fn unbounded_detected() {
    let mut lp = LinearProgram::maximize(vec![1.0, 0.0]);
    lp.add_row("other", vec![0.0, 1.0], Relation::Le, 1.0);
    let sol = solve(&lp, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Unbounded);
}

#[test]
fn equality_row_free_dual_and_min_sense() {
    // min 2x + 3y s.t. x + y = 1, x,y >= 0  -> x = 1, value 2, dual of the
    // equality is the shadow price 2 (free-signed).
    let mut lp = LinearProgram::minimize(vec![2.0, 3.0]);
    lp.add_row("mass", vec![1.0, 1.0], Relation::Eq, 1.0);
    let sol = solve(&lp, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.value - 2.0).abs() < 1e-12);
    assert!((sol.primal[0] - 1.0).abs() < 1e-12);
    assert!((sol.dual[0] - 2.0).abs() < 1e-12);
    assert!((sol.value - sol.dual_value).abs() < 1e-9);
}

#[test]
fn upper_bounds_and_lower_bounds() {
    // max x + y with 1 <= x <= 2, y <= 0.5, and x + y <= 2.2
    let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
    lp.set_lower(0, 1.0);
    lp.set_upper(0, 2.0);
    lp.set_upper(1, 0.5);
    lp.add_row("sum", vec![1.0, 1.0], Relation::Le, 2.2);
    let sol = solve(&lp, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.value - 2.2).abs() < 1e-12);
    assert!(sol.primal[0] >= 1.0 - 1e-12 && sol.primal[0] <= 2.0 + 1e-12);
}

#[test]
fn ge_rows_negative_rhs_flip() {
    // min x s.t. -x <= -2  (i.e. x >= 2)
    let mut lp = LinearProgram::minimize(vec![1.0]);
    lp.add_row("neg", vec![-1.0], Relation::Le, -2.0);
    let sol = solve(&lp, &opts()).unwrap();
    assert!((sol.value - 2.0).abs() < 1e-12);
    // dual of the <= row in a min problem is <= 0
    assert!(sol.dual[0] <= 1e-12);
    assert!((sol.value - sol.dual_value).abs() < 1e-9);
}

#[test]
fn check_point_reports() {
    let mut lp = LinearProgram::maximize(vec![1.0]);
    lp.add_row("cap", vec![1.0], Relation::Le, 3.0);

    let ok = check_point(&lp, &[2.0], 1e-9).unwrap();
    assert!(ok.feasible);
    assert!((ok.objective - 2.0).abs() < 1e-12);

    let bad = check_point(&lp, &[4.0], 1e-9).unwrap();
    assert!(!bad.feasible);
    assert_eq!(bad.violations.len(), 1);
    assert_eq!(bad.violations[0].row, 0);
    assert!((bad.violations[0].slack + 1.0).abs() < 1e-12);

    let mut lp2 = LinearProgram::maximize(vec![1.0, 1.0]);
    lp2.add_row("sum", vec![1.0, 1.0], Relation::Le, 1.0);
    let tight = check_point(&lp2, &[0.5, 0.5], 1e-9).unwrap();
    assert!(tight.feasible);
    assert_eq!(tight.tight_rows, vec![0]);

    assert!(check_point(&lp2, &[0.5], 1e-9).is_err());
}

#[test]
fn exact_mode_matches_float() {
    let mut lp = LinearProgram::maximize(vec![3.0, 5.0]);
    lp.add_row("r1", vec![1.0, 0.0], Relation::Le, 4.0);
    lp.add_row("r2", vec![0.0, 2.0], Relation::Le, 12.0);
    lp.add_row("r3", vec![3.0, 2.0], Relation::Le, 18.0);
    let f = solve_lp(&lp, Mode::Float, &opts()).unwrap();
    let e = solve_lp(&lp, Mode::Exact, &opts()).unwrap();
    assert!((f.value - 36.0).abs() < 1e-9);
    assert!((f.value - e.value).abs() < 1e-9);
    for (a, b) in f.primal.iter().zip(&e.primal) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn exact_rationals_are_exact() {
    // max x + y s.t. 3x + y <= 1, x + 3y <= 1 => x = y = 1/4, value 1/2
    let one = BigRational::from_integer(1.into());
    let three = BigRational::from_integer(3.into());
    let mut lp = LinearProgram::<BigRational>::maximize(vec![one.clone(), one.clone()]);
    lp.add_row("a", vec![three.clone(), one.clone()], Relation::Le, one.clone());
    lp.add_row("b", vec![one.clone(), three], Relation::Le, one.clone());
    let sol = solve(&lp, &opts()).unwrap();
    assert_eq!(sol.value, BigRational::new(1.into(), 2.into()));
    assert_eq!(sol.primal[0], BigRational::new(1.into(), 4.into()));
    assert_eq!(sol.value, sol.dual_value);
}

#[test]
fn deterministic_pivot_sequence() {
    let mut lp = LinearProgram::maximize(vec![2.0, 1.0, 3.0, 1.5]);
    lp.add_row("a", vec![1.0, 1.0, 1.0, 1.0], Relation::Le, 4.0);
    lp.add_row("b", vec![2.0, 0.5, 1.0, 0.0], Relation::Le, 3.0);
    lp.add_row("c", vec![0.0, 1.0, 2.0, 1.0], Relation::Le, 5.0);
    let s1 = solve(&lp, &opts()).unwrap();
    let s2 = solve(&lp, &opts()).unwrap();
    assert_eq!(s1.iterations, s2.iterations);
    assert_eq!(s1.value.to_bits(), s2.value.to_bits());
    let bits1: Vec<u64> = s1.primal.iter().map(|x| x.to_bits()).collect();
    let bits2: Vec<u64> = s2.primal.iter().map(|x| x.to_bits()).collect();
    assert_eq!(bits1, bits2);
}

#[test]
fn fixed_text_export() {
    let mut lp = LinearProgram::maximize(vec![1.0, 2.0]);
    lp.add_row("cap", vec![1.0, 1.0], Relation::Le, 1.0);
    lp.set_upper(1, 0.5);
    let text = lp.to_fixed_text();
    assert!(text.starts_with("NSBOUND-LP 1\nMAXIMIZE\nVARS 2\n"));
    assert!(text.contains("ROW cap <= 1 : 1 1"));
    assert!(text.contains("UB 1 0.5"));
    assert!(text.ends_with("END\n"));
}

#[test]
fn degenerate_lp_terminates() {
    // A classic cycling-prone instance (Beale); stall detection must engage
    // Bland and terminate at the optimum.
    let mut lp = LinearProgram::maximize(vec![0.75, -150.0, 0.02, -6.0]);
    lp.add_row("r1", vec![0.25, -60.0, -1.0 / 25.0, 9.0], Relation::Le, 0.0);
    lp.add_row("r2", vec![0.5, -90.0, -1.0 / 50.0, 3.0], Relation::Le, 0.0);
    lp.add_row("r3", vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
    let sol = solve(&lp, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.value - 0.05).abs() < 1e-9);
}
