use cgesurv::copula::{CopulaSpec, Family};
use cgesurv::data::Observation;
use cgesurv::survcurve::{cge, integrate_abs_diff, km, naive_survivor, StepFunction};
use proptest::prelude::*;

/// Product-limit estimate at `t`, straight from its definition.
fn product_limit(data: &[Observation], t: f64) -> f64 {
    let mut event_times: Vec<f64> = data.iter().filter(|o| o.event && o.time <= t).map(|o| o.time).collect();
    event_times.sort_by(f64::total_cmp);
    event_times.dedup();
    event_times
        .iter()
        .map(|&tj| {
            let d = data.iter().filter(|o| o.event && o.time == tj).count() as f64;
            let r = data.iter().filter(|o| o.time >= tj).count() as f64;
            1.0 - d / r
        })
        .product()
}

/// Records on a coarse time grid so that ties are common.
fn datasets() -> impl Strategy<Value = Vec<Observation>> {
    prop::collection::vec((1u32..25, any::<bool>()), 1..=60).prop_map(|v| {
        v.into_iter()
            .map(|(t, e)| Observation::outcome(f64::from(t) * 0.5, e))
            .collect()
    })
}

fn specs() -> impl Strategy<Value = CopulaSpec> {
    prop_oneof![
        Just(CopulaSpec::independence()),
        (0.05f64..0.9).prop_map(|t| CopulaSpec::from_tau(Family::Clayton, t).unwrap()),
        (0.05f64..0.9).prop_map(|t| CopulaSpec::from_tau(Family::Frank, t).unwrap()),
    ]
}

fn probe_times(data: &[Observation]) -> Vec<f64> {
    let mut ts: Vec<f64> = data.iter().flat_map(|o| [o.time, o.time - 0.25, o.time + 0.25]).collect();
    ts.push(0.0);
    ts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn independence_reduces_to_product_limit(data in datasets()) {
        let s = cge(&data, &CopulaSpec::independence()).unwrap();
        let k = km(&data).unwrap();
        for t in probe_times(&data) {
            let oracle = product_limit(&data, t);
            prop_assert!((s.eval(t) - oracle).abs() < 1e-10, "t = {}: {} vs {}", t, s.eval(t), oracle);
            prop_assert!((k.eval(t) - oracle).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn curves_are_monotone_in_unit_interval(data in datasets(), spec in specs()) {
        let s = cge(&data, &spec).unwrap();
        prop_assert!(s.is_non_increasing());
        prop_assert_eq!(s.initial_value(), 1.0);
        prop_assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn record_order_is_irrelevant(data in datasets(), spec in specs(), shift in 0usize..60) {
        let mut rotated = data.clone();
        let k = shift % rotated.len();
        rotated.rotate_left(k);
        rotated.reverse();
        prop_assert_eq!(cge(&data, &spec).unwrap(), cge(&rotated, &spec).unwrap());
    }

    #[test]
    fn constant_beyond_last_observation(data in datasets(), spec in specs()) {
        let s = cge(&data, &spec).unwrap();
        let max = data.iter().map(|o| o.time).fold(0.0, f64::max);
        prop_assert_eq!(s.eval(max + 1.0), s.eval(max));
        prop_assert_eq!(s.eval(max * 100.0), s.last_value());
    }

    #[test]
    fn jumps_only_at_event_times(data in datasets(), spec in specs()) {
        let s = cge(&data, &spec).unwrap();
        for t in s.jump_times() {
            prop_assert!(data.iter().any(|o| o.event && o.time == *t));
        }
    }

    #[test]
    fn naive_survivor_counts(data in datasets()) {
        let times: Vec<f64> = data.iter().map(|o| o.time).collect();
        let pi = naive_survivor(&times).unwrap();
        let n = times.len() as f64;
        for t in probe_times(&data) {
            let count = times.iter().filter(|&&x| x > t).count() as f64;
            prop_assert!((pi.eval(t) - count / n).abs() < 1e-15);
        }
    }

    #[test]
    fn integral_matches_riemann_sum(data in datasets(), other in datasets()) {
        let a = km(&data).unwrap();
        let b = km(&other).unwrap();
        let exact = integrate_abs_diff(&a, &b, 0.0, 13.0).unwrap();
        // Both curves are constant on the 0.5-grid cells.
        let coarse: f64 = (0..26)
            .map(|i| {
                let t = f64::from(i) * 0.5;
                0.5 * (a.eval(t) - b.eval(t)).abs()
            })
            .sum();
        prop_assert!((exact - coarse).abs() < 1e-12);
    }
}

#[test]
fn clayton_curves_sit_below_independence() {
    let deltas = [1, 0, 0, 1, 0, 1, 1, 0, 1, 1];
    let data: Vec<Observation> = deltas
        .iter()
        .enumerate()
        .map(|(i, &d)| Observation::outcome(i as f64 + 1.0, d == 1))
        .collect();
    let base = cge(&data, &CopulaSpec::clayton(0.0002).unwrap()).unwrap();
    let two = cge(&data, &CopulaSpec::clayton(2.0).unwrap()).unwrap();
    let six = cge(&data, &CopulaSpec::clayton(6.0).unwrap()).unwrap();
    for i in 0..=100 {
        let t = f64::from(i) * 0.1;
        let (b, s2, s6) = (base.eval(t), two.eval(t), six.eval(t));
        assert!(s2 <= b + 1e-12 && s6 <= s2 + 1e-12, "t = {t}: {b} {s2} {s6}");
    }
    let gap = |s: &StepFunction| integrate_abs_diff(s, &base, 0.0, 10.0).unwrap();
    assert!(gap(&six) > gap(&two) && gap(&two) > 0.0);
}
