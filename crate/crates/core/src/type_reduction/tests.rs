use super::*;
use crate::channel::{self, Channel};
use crate::converse;
use num::ToPrimitive;

/// Oracle: builds the joint type of a concrete string pair.
fn joint_type_of(a: usize, b: usize, xs: &[usize], ys: &[usize]) -> Vec<u32> {
    let mut counts = vec![0u32; a * b];
    for (&x, &y) in xs.iter().zip(ys) {
        counts[x * b + y] += 1;
    }
    counts
}

fn strings(alphabet: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for s in &out {
            for c in 0..alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Oracle: class size and per-fixed-y multiplicity by brute enumeration.
fn enumeration_mults(a: usize, b: usize, n: usize, counts: &[u32]) -> (u64, u64) {
    let xs = strings(a, n);
    let ys = strings(b, n);
    let mut t_count = 0u64;
    let mut per_y = std::collections::HashMap::new();
    for x in &xs {
        for y in &ys {
            if joint_type_of(a, b, x, y) == counts {
                t_count += 1;
                *per_y.entry(y.clone()).or_insert(0u64) += 1;
            }
        }
    }
    let m = per_y.values().copied().next().unwrap_or(0);
    // every compatible y sees the same count
    for &v in per_y.values() {
        assert_eq!(v, m);
    }
    (t_count, m)
}

#[test]
fn enumeration_counts() {
    let t = enumerate_joint_types(1, 1, 5).unwrap();
    assert_eq!(t.num_types(), 1);

    let t = enumerate_joint_types(2, 1, 2).unwrap();
    assert_eq!(t.num_types(), 3);
    let seen: Vec<Vec<u32>> = (0..3).map(|i| t.counts_of(i).to_vec()).collect();
    assert_eq!(seen, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);

    let t = enumerate_joint_types(2, 2, 2).unwrap();
    assert_eq!(t.num_types(), 10);
    assert_eq!(TypeTable::count_closed_form(2, 2, 2), Some(10));

    // brute enumeration over all string pairs finds the same set
    let mut from_strings = std::collections::BTreeSet::new();
    for x in strings(2, 2) {
        for y in strings(2, 2) {
            from_strings.insert(joint_type_of(2, 2, &x, &y));
        }
    }
    assert_eq!(from_strings.len(), 10);
    for i in 0..t.num_types() {
        assert!(from_strings.contains(t.counts_of(i)));
    }

    match enumerate_joint_types_with_limit(3, 3, 40, 1000) {
        Err(TypeError::LimitExceeded { .. }) => {}
        other => panic!("expected limit error, got {other:?}"),
    }
}

#[test]
fn closed_form_counts_match() {
    for (a, b, n) in [(2, 2, 3), (2, 3, 4), (3, 3, 2), (2, 1, 7)] {
        let t = enumerate_joint_types(a, b, n).unwrap();
        assert_eq!(t.num_types() as u128, TypeTable::count_closed_form(a, b, n).unwrap());
    }
}

#[test]
fn multiplicities_match_enumeration() {
    // diagonal pair type: |T| = 2, one x per fixed y
    let jt = JointType::new(vec![vec![1, 0], vec![0, 1]]);
    let lm = log_multiplicities(&jt);
    assert!((lm.log_t.exp() - 2.0).abs() < 1e-12);
    assert!((lm.log_m.exp() - 1.0).abs() < 1e-12);
    let (t, m) = enumeration_mults(2, 2, 2, &[1, 0, 0, 1]);
    assert_eq!((t, m), (2, 1));

    // constant strings
    let jt = JointType::new(vec![vec![3, 0], vec![0, 0]]);
    let lm = log_multiplicities(&jt);
    assert!((lm.log_t.exp() - 1.0).abs() < 1e-12);
    assert!((lm.log_m.exp() - 1.0).abs() < 1e-12);

    // x constant, y mixed: two orderings of y, single x each
    let jt = JointType::new(vec![vec![1, 1], vec![0, 0]]);
    let lm = log_multiplicities(&jt);
    let (t, m) = enumeration_mults(2, 2, 2, &[1, 1, 0, 0]);
    assert_eq!((t, m), (2, 1));
    assert!((lm.log_t.exp() - t as f64).abs() < 1e-12);
    assert!((lm.log_m.exp() - m as f64).abs() < 1e-12);

    // a handful of random types at n = 4 against the oracle
    for counts in [[2u32, 1, 1, 0], [0, 2, 2, 0], [1, 1, 1, 1], [4, 0, 0, 0], [0, 1, 0, 3]] {
        let jt = JointType::new(vec![vec![counts[0], counts[1]], vec![counts[2], counts[3]]]);
        let lm = log_multiplicities(&jt);
        let (t, m) = enumeration_mults(2, 2, 4, &counts);
        assert!((lm.log_t.exp() - t as f64).abs() < 1e-9 * t as f64);
        assert!((lm.log_m.exp() - m as f64).abs() < 1e-9 * m as f64);
    }
}

#[test]
fn log_identity_and_exact_values() {
    let table = enumerate_joint_types(2, 3, 12).unwrap();
    for i in 0..table.num_types() {
        let lhs = table.log_t[i];
        let rhs = table.log_m[i] + table.log_t_out[table.tb[i] as usize];
        assert!((lhs - rhs).abs() < 1e-10, "identity broke at type {i}");
    }

    // exact big-integer multiplicities agree with the float logs up to n = 20
    let table = enumerate_joint_types(2, 2, 20).unwrap();
    for i in (0..table.num_types()).step_by(17) {
        let jt = table.joint_type(i);
        let (t, m) = exact_multiplicities(&jt);
        let t = t.to_f64().unwrap();
        let m = m.to_f64().unwrap();
        assert!((table.log_t[i].exp() - t).abs() <= 1e-9 * t.max(1.0));
        assert!((table.log_m[i].exp() - m).abs() <= 1e-9 * m.max(1.0));
    }
}

#[test]
fn stochasticity_in_log_space() {
    let ch = Channel::from_rows(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3]]).unwrap();
    let table = enumerate_joint_types(2, 3, 9).unwrap();
    assert!(input_stochasticity_residual(&table, &ch) < 1e-9);

    let bsc = channel::bsc(0.11).unwrap();
    let table = enumerate_joint_types(2, 2, 40).unwrap();
    assert!(input_stochasticity_residual(&table, &bsc) < 1e-9);
}

#[test]
fn reduced_error_small_blocklengths() {
    let bsc = channel::bsc(0.1).unwrap();
    let r = reduced_min_error(&bsc, 1, 2).unwrap();
    assert!((r.p_err - 0.1).abs() < 1e-9);

    let explicit = converse::min_error(&bsc.tensor_power(2).unwrap(), 2).unwrap();
    let r = reduced_min_error(&bsc, 2, 2).unwrap();
    assert!((r.p_err - explicit.p_err).abs() < 1e-7, "reduced {} explicit {}", r.p_err, explicit.p_err);

    let useless = channel::useless(&[0.5, 0.5]).unwrap();
    let r = reduced_min_error(&useless, 3, 2).unwrap();
    assert!((r.p_err - 0.5).abs() < 1e-9);
}

#[test]
fn reduced_size_small_blocklengths() {
    let bsc = channel::bsc(0.1).unwrap();
    let r = reduced_max_size(&bsc, 1, 0.1).unwrap();
    assert!((r.m_beta - 2.0).abs() < 1e-8);

    let explicit = converse::max_size(&bsc.tensor_power(2).unwrap(), 0.01).unwrap();
    let r = reduced_max_size(&bsc, 2, 0.01).unwrap();
    assert!(
        (r.m_beta - explicit.m_beta).abs() < 1e-6 * explicit.m_beta,
        "reduced {} explicit {}",
        r.m_beta,
        explicit.m_beta
    );

    let noiseless = channel::noiseless(2).unwrap();
    let r = reduced_max_size(&noiseless, 5, 0.0).unwrap();
    assert!((r.m_beta - 32.0).abs() < 1e-6);
    assert_eq!(r.m_ns, 32);
}

#[test]
fn column_generation_matches_direct() {
    let bsc = channel::bsc(0.11).unwrap();
    let n = 10;
    let forced = ReducedOptions { direct_limit: 0, ..ReducedOptions::default() };

    let direct = reduced_max_size(&bsc, n, 0.05).unwrap();
    assert_eq!(direct.stats.path, ReducedPath::Direct);
    let cg = reduced_max_size_with(&bsc, n, 0.05, &forced).unwrap();
    assert_eq!(cg.stats.path, ReducedPath::ColumnGeneration);
    assert!(
        (direct.m_beta - cg.m_beta).abs() < 1e-7 * direct.m_beta,
        "direct {} colgen {} (gap {})",
        direct.m_beta,
        cg.m_beta,
        cg.stats.certified_gap,
    );

    let direct = reduced_min_error(&bsc, n, 4).unwrap();
    let cg = reduced_min_error_with(&bsc, n, 4, &forced).unwrap();
    assert!(
        (direct.p_err - cg.p_err).abs() < 1e-8,
        "direct {} colgen {}",
        direct.p_err,
        cg.p_err
    );

    // a non-symmetric base channel as well
    let skew = Channel::from_rows(vec![vec![0.7, 0.2, 0.1], vec![0.05, 0.85, 0.1]]).unwrap();
    let direct = reduced_max_size(&skew, 6, 0.1).unwrap();
    let cg = reduced_max_size_with(&skew, 6, 0.1, &forced).unwrap();
    assert!((direct.m_beta - cg.m_beta).abs() < 1e-7 * direct.m_beta);
}

#[test]
fn permutation_invariance_oracle() {
    // simultaneous coordinate permutation fixes the tensor power entrywise
    let base = Channel::from_rows(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3]]).unwrap();
    let n = 3;
    let e3 = base.tensor_power(n).unwrap();
    let a = base.input_size();
    let b = base.output_size();
    let perm = [2usize, 0, 1];

    let digits = |mut idx: usize, alphabet: usize| -> Vec<usize> {
        let mut d = vec![0; n as usize];
        for slot in (0..n as usize).rev() {
            d[slot] = idx % alphabet;
            idx /= alphabet;
        }
        d
    };
    let index = |d: &[usize], alphabet: usize| -> usize {
        d.iter().fold(0, |acc, &v| acc * alphabet + v)
    };
    for x in 0..e3.input_size() {
        for y in 0..e3.output_size() {
            let dx = digits(x, a);
            let dy = digits(y, b);
            let px: Vec<usize> = perm.iter().map(|&i| dx[i]).collect();
            let py: Vec<usize> = perm.iter().map(|&i| dy[i]).collect();
            let xp = index(&px, a);
            let yp = index(&py, b);
            assert!((e3.prob(x, y) - e3.prob(xp, yp)).abs() < 1e-15);
        }
    }

    // relabeling either alphabet leaves the error value unchanged
    let e2 = channel::bsc(0.13).unwrap().tensor_power(2).unwrap();
    let relabel_in = [3usize, 1, 0, 2];
    let relabel_out = [2usize, 0, 3, 1];
    let mut rows = vec![vec![0.0; 4]; 4];
    for x in 0..4 {
        for y in 0..4 {
            rows[relabel_in[x]][relabel_out[y]] = e2.prob(x, y);
        }
    }
    let shuffled = Channel::from_rows(rows).unwrap();
    let orig = converse::min_error(&e2, 3).unwrap();
    let moved = converse::min_error(&shuffled, 3).unwrap();
    assert!((orig.p_err - moved.p_err).abs() < 1e-9);
}

#[test]
fn witness_serialization_keys() {
    let bsc = channel::bsc(0.1).unwrap();
    let r = reduced_min_error(&bsc, 2, 2).unwrap();
    let json = r.witness.to_json_value();
    let types = json.get("types").unwrap().as_object().unwrap();
    assert!(!types.is_empty());
    for key in types.keys() {
        // keys look like "1,0;0,1"
        assert_eq!(key.split(';').count(), 2);
    }
}
