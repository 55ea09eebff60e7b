use cgesurv::copula::{CopulaSpec, Family};
use cgesurv::data::Observation;
use cgesurv::twosample::{
    enumerate_exact, l1_statistic, logrank_test, permutation_test, permutation_test_with_replicates,
    PhiTables, PooledSample, TwoSample,
};
use proptest::prelude::*;

fn group(max_len: usize) -> impl Strategy<Value = Vec<(f64, bool)>> {
    prop::collection::vec((1u32..30, prop::bool::weighted(0.7)), 1..=max_len)
        .prop_map(|v| v.into_iter().map(|(t, e)| (f64::from(t) * 0.25, e)).collect())
}

/// Groups with all times distinct across the pooled sample.
fn distinct_pair() -> impl Strategy<Value = (Vec<(f64, bool)>, Vec<(f64, bool)>)> {
    (2usize..12, 2usize..12, any::<u64>()).prop_flat_map(|(n1, n2, _)| {
        (
            Just(n1),
            prop::sample::subsequence((1..200).collect::<Vec<u32>>(), n1 + n2).prop_shuffle(),
            prop::collection::vec(prop::bool::weighted(0.7), n1 + n2),
        )
            .prop_map(|(n1, times, events)| {
                let all: Vec<(f64, bool)> = times
                    .iter()
                    .zip(events)
                    .map(|(&t, e)| (f64::from(t) * 0.1, e))
                    .collect();
                (all[..n1].to_vec(), all[n1..].to_vec())
            })
    })
}

fn specs() -> impl Strategy<Value = CopulaSpec> {
    prop_oneof![
        Just(CopulaSpec::independence()),
        (0.05f64..0.9).prop_map(|t| CopulaSpec::from_tau(Family::Clayton, t).unwrap()),
        (0.05f64..0.9).prop_map(|t| CopulaSpec::from_tau(Family::Frank, t).unwrap()),
    ]
}

fn scaled(g: &[(f64, bool)], c: f64) -> Vec<(f64, bool)> {
    g.iter().map(|&(t, e)| (t * c, e)).collect()
}

proptest! {
    #[test]
    fn pooled_kernel_matches_curve_construction(a in group(25), b in group(25), spec in specs()) {
        let s = TwoSample::from_pairs(&a, &b).unwrap();
        let slow = l1_statistic(&s, &spec).unwrap();
        let times: Vec<f64> = a.iter().chain(&b).map(|p| p.0).collect();
        let events: Vec<bool> = a.iter().chain(&b).map(|p| p.1).collect();
        let labels: Vec<bool> = (0..times.len()).map(|i| i < a.len()).collect();
        let pooled = PooledSample::new(&times, &events);
        let fast = pooled.observed(&labels, &spec);
        prop_assert!((fast.l1 - slow.l1).abs() < 1e-12, "{} vs {}", fast.l1, slow.l1);
        prop_assert!((fast.signed - slow.signed).abs() < 1e-12);
        let sorted = pooled.to_sorted(&labels);
        let tables = PhiTables::new(&spec, a.len(), b.len());
        prop_assert_eq!(pooled.statistic(&sorted, a.len(), &tables), fast);
    }

    #[test]
    fn statistic_is_bounded(a in group(20), b in group(20), spec in specs()) {
        let st = l1_statistic(&TwoSample::from_pairs(&a, &b).unwrap(), &spec).unwrap();
        prop_assert!(st.l1 >= 0.0 && st.l1 <= 1.0);
        prop_assert!(st.signed.abs() <= st.l1 + 1e-15);
    }

    #[test]
    fn swapping_groups(pair in distinct_pair(), spec in specs(), seed in any::<u64>()) {
        let (a, b) = pair;
        let s = TwoSample::from_pairs(&a, &b).unwrap();
        if a.len() + b.len() < 4 {
            return Ok(());
        }
        let r = permutation_test(&s, &spec, 99, seed).unwrap();
        let w = permutation_test(&s.swapped(), &spec, 99, seed).unwrap();
        prop_assert_eq!(r.observed_l1, w.observed_l1);
        prop_assert_eq!(r.signed_l1, -w.signed_l1);
        prop_assert_eq!(r.p_value, w.p_value);
    }

    #[test]
    fn doubling_times_changes_nothing(a in group(15), b in group(15), spec in specs(), seed in any::<u64>()) {
        let s = TwoSample::from_pairs(&a, &b).unwrap();
        let d = TwoSample::from_pairs(&scaled(&a, 2.0), &scaled(&b, 2.0)).unwrap();
        if s.n1() + s.n2() < 4 {
            return Ok(());
        }
        let r = permutation_test(&s, &spec, 99, seed).unwrap();
        let q = permutation_test(&d, &spec, 99, seed).unwrap();
        prop_assert_eq!(r.observed_l1, q.observed_l1);
        prop_assert_eq!(r.p_value, q.p_value);
    }

    #[test]
    fn general_rescaling_keeps_statistic(a in group(15), b in group(15), spec in specs(), c in 0.01f64..100.0) {
        let s = TwoSample::from_pairs(&a, &b).unwrap();
        let d = TwoSample::from_pairs(&scaled(&a, c), &scaled(&b, c)).unwrap();
        let (x, y) = (l1_statistic(&s, &spec).unwrap(), l1_statistic(&d, &spec).unwrap());
        prop_assert!((x.l1 - y.l1).abs() < 1e-12);
        if s.n1() + s.n2() >= 4 {
            let r = permutation_test(&s, &spec, 99, 1).unwrap();
            let q = permutation_test(&d, &spec, 99, 1).unwrap();
            prop_assert_eq!(r.p_value, q.p_value);
        }
    }

    #[test]
    fn repeat_runs_are_identical(a in group(15), b in group(15), spec in specs(), seed in any::<u64>()) {
        let s = TwoSample::from_pairs(&a, &b).unwrap();
        if s.n1() + s.n2() < 4 {
            return Ok(());
        }
        let r = permutation_test_with_replicates(&s, &spec, 50, seed).unwrap();
        prop_assert_eq!(&r, &permutation_test_with_replicates(&s, &spec, 50, seed).unwrap());
        let exceed = r.replicates.as_ref().unwrap().iter().filter(|&&x| x >= r.observed_l1 - 1e-12).count();
        prop_assert_eq!(r.p_value, (exceed + 1) as f64 / 51.0);
    }

    #[test]
    fn logrank_is_symmetric(a in group(15), b in group(15)) {
        let s = TwoSample::from_pairs(&a, &b).unwrap();
        let r = logrank_test(&s).unwrap();
        let w = logrank_test(&s.swapped()).unwrap();
        prop_assert!((r.chi_square - w.chi_square).abs() < 1e-9 * (1.0 + r.chi_square));
        prop_assert!(r.p_value > 0.0 && r.p_value <= 1.0);
    }
}

#[test]
fn monte_carlo_converges_to_enumeration() {
    let s = TwoSample::from_pairs(
        &[(0.4, true), (0.9, true), (1.1, true), (2.6, false)],
        &[(1.7, true), (2.0, false), (3.2, true), (4.0, true)],
    )
    .unwrap();
    for spec in [
        CopulaSpec::independence(),
        CopulaSpec::from_tau(Family::Clayton, 0.5).unwrap(),
    ] {
        let exact = enumerate_exact(&s, &spec).unwrap();
        let n_perm = 20_000;
        let r = permutation_test(&s, &spec, n_perm, 17).unwrap();
        let mc = r.exceed_count as f64 / n_perm as f64;
        let sd = (exact * (1.0 - exact) / n_perm as f64).sqrt();
        assert!(exact > 0.01 && exact < 0.5, "{spec}: exact {exact}");
        assert!((mc - exact).abs() < 4.0 * sd, "{spec}: {mc} vs {exact}");
    }
}

#[test]
fn enumeration_of_separated_pairs() {
    let s = TwoSample::from_pairs(&[(1.0, true), (2.0, true)], &[(9.0, true), (10.0, true)]).unwrap();
    let spec = CopulaSpec::independence();
    let observed = l1_statistic(&s, &spec).unwrap().l1;
    let pts = [(1.0, true), (2.0, true), (9.0, true), (10.0, true)];
    let mut values = Vec::new();
    for i in 0..4 {
        for j in (i + 1)..4 {
            let g1 = vec![pts[i], pts[j]];
            let g2: Vec<_> = (0..4).filter(|&k| k != i && k != j).map(|k| pts[k]).collect();
            values.push(l1_statistic(&TwoSample::from_pairs(&g1, &g2).unwrap(), &spec).unwrap().l1);
        }
    }
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    assert_eq!(observed, max);
    let ties = values.iter().filter(|&&v| v >= max - 1e-12).count();
    assert_eq!(enumerate_exact(&s, &spec).unwrap(), ties as f64 / 6.0);
}

#[test]
fn degenerate_pool_reports_flag() {
    let same = [(2.0, true), (2.0, false)];
    let s = TwoSample::from_pairs(&same, &same).unwrap();
    let r = permutation_test(&s, &CopulaSpec::independence(), 30, 0).unwrap();
    assert!(r.degenerate);
    assert_eq!(r.p_value, 1.0);
    let records: Vec<Observation> = vec![Observation::outcome(1.0, false); 3];
    let t = TwoSample::new(records.clone(), records).unwrap();
    assert!(permutation_test(&t, &CopulaSpec::independence(), 30, 0).unwrap().degenerate);
}
