//! Step-function survival curves.
//!
//! The copula-graphic estimator under an Archimedean generator `phi` is
//!
//! ```text
//! S(t) = phi^-1( sum over event times t_j <= t of
//!                phi(pi(t_j-) - d_j/n) - phi(pi(t_j-)) )
//! ```
//!
//! where `pi(t-) = #{x_i >= t} / n` is the left limit of the naive survivor of
//! the observed times and `d_j` the number of events at `t_j`. The tied block
//! telescopes, so the order of tied events does not matter. With
//! `phi(u) = -ln u` each factor becomes `(r_j - d_j) / r_j` and the estimator
//! is exactly Kaplan-Meier.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::copula::CopulaSpec;
use crate::data::Observation;
use crate::error::{Error, Result};

/// Right-continuous, piecewise-constant function on `[0, inf)`.
///
/// Takes `initial_value` on `[0, jump_times[0])` and `values[j]` on
/// `[jump_times[j], jump_times[j + 1])`; the last value extends to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    jump_times: Vec<f64>,
    values: Vec<f64>,
    initial_value: f64,
}

impl StepFunction {
    pub fn new(initial_value: f64, jump_times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if jump_times.len() != values.len() {
            return Err(Error::Domain(format!(
                "{} jump times but {} values",
                jump_times.len(),
                values.len()
            )));
        }
        if jump_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("jump times must be strictly increasing".into()));
        }
        if jump_times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("jump times must be finite".into()));
        }
        Ok(Self {
            jump_times,
            values,
            initial_value,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            jump_times: Vec::new(),
            values: Vec::new(),
            initial_value: value,
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    pub fn last_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.initial_value)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&x| x <= t) {
            0 => self.initial_value,
            k => self.values[k - 1],
        }
    }

    /// Value just before `t`.
    pub fn eval_left(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&x| x < t) {
            0 => self.initial_value,
            k => self.values[k - 1],
        }
    }

    /// Smallest jump time with value <= 0.5, if the curve gets there.
    pub fn median(&self) -> Option<f64> {
        if self.initial_value <= 0.5 {
            return Some(0.0);
        }
        self.jump_times
            .iter()
            .zip(&self.values)
            .find(|(_, &v)| v <= 0.5)
            .map(|(&t, _)| t)
    }

    pub fn is_non_increasing(&self) -> bool {
        let mut prev = self.initial_value;
        for &v in &self.values {
            if v > prev {
                return false;
            }
            prev = v;
        }
        true
    }

    /// Two-column `time,value` CSV: the point `0,<initial>` then every jump.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "time,value")?;
        writeln!(out, "0,{}", self.initial_value)?;
        for (t, v) in self.jump_times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

/// Sorted distinct times with their at-risk counts (`#x >= t`) and event
/// counts.
struct RiskTable {
    times: Vec<f64>,
    at_risk: Vec<usize>,
    events: Vec<usize>,
}

impl RiskTable {
    fn build(times: &[f64], events: &[bool]) -> Self {
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let n = times.len();
        let mut table = RiskTable {
            times: Vec::new(),
            at_risk: Vec::new(),
            events: Vec::new(),
        };
        let mut i = 0;
        while i < n {
            let t = times[order[i]];
            let mut j = i;
            let mut d = 0;
            while j < n && times[order[j]] == t {
                d += usize::from(events[order[j]]);
                j += 1;
            }
            table.times.push(t);
            table.at_risk.push(n - i);
            table.events.push(d);
            i = j;
        }
        table
    }
}

fn check_parts(times: &[f64], events: &[bool]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Domain("survival curve needs at least one observation".into()));
    }
    if times.len() != events.len() {
        return Err(Error::Domain(format!(
            "{} times but {} event flags",
            times.len(),
            events.len()
        )));
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::Domain(format!("times must be finite and > 0, got {t}")));
    }
    Ok(())
}

/// Empirical survivor `pi(t) = #{x_i > t} / n` of the observed times.
pub fn naive_survivor(times: &[f64]) -> Result<StepFunction> {
    if times.is_empty() {
        return Err(Error::Domain("naive survivor needs at least one time".into()));
    }
    let table = RiskTable::build(times, &vec![false; times.len()]);
    let n = times.len() as f64;
    let mut counts = table.at_risk.clone();
    counts.push(0);
    let values = (0..table.times.len())
        .map(|k| counts[k + 1] as f64 / n)
        .collect();
    StepFunction::new(1.0, table.times, values)
}

/// Copula-graphic estimator of the event-time survival function.
pub fn cge(data: &[Observation], spec: &CopulaSpec) -> Result<StepFunction> {
    let times: Vec<f64> = data.iter().map(|o| o.time).collect();
    let events: Vec<bool> = data.iter().map(|o| o.event).collect();
    cge_from_parts(&times, &events, spec)
}

pub fn cge_from_parts(times: &[f64], events: &[bool], spec: &CopulaSpec) -> Result<StepFunction> {
    check_parts(times, events)?;
    let table = RiskTable::build(times, events);
    let n = times.len() as f64;
    let mut jumps = Vec::new();
    let mut values = Vec::new();
    let mut acc = 0.0;
    for ((&t, &r), &d) in table.times.iter().zip(&table.at_risk).zip(&table.events) {
        if d == 0 {
            continue;
        }
        acc += spec.phi((r - d) as f64 / n) - spec.phi(r as f64 / n);
        jumps.push(t);
        values.push(spec.phi_inv(acc));
    }
    StepFunction::new(1.0, jumps, values)
}

/// Copula-graphic estimator of the censoring survival function (event flags
/// flipped; the Archimedean construction is symmetric in its arguments).
pub fn cge_censoring(data: &[Observation], spec: &CopulaSpec) -> Result<StepFunction> {
    let times: Vec<f64> = data.iter().map(|o| o.time).collect();
    let flipped: Vec<bool> = data.iter().map(|o| !o.event).collect();
    cge_from_parts(&times, &flipped, spec)
}

/// Kaplan-Meier product-limit estimator.
pub fn km(data: &[Observation]) -> Result<StepFunction> {
    let times: Vec<f64> = data.iter().map(|o| o.time).collect();
    let events: Vec<bool> = data.iter().map(|o| o.event).collect();
    km_from_parts(&times, &events)
}

pub fn km_from_parts(times: &[f64], events: &[bool]) -> Result<StepFunction> {
    check_parts(times, events)?;
    let table = RiskTable::build(times, events);
    let mut jumps = Vec::new();
    let mut values = Vec::new();
    let mut s = 1.0;
    for ((&t, &r), &d) in table.times.iter().zip(&table.at_risk).zip(&table.events) {
        if d == 0 {
            continue;
        }
        s *= (r - d) as f64 / r as f64;
        jumps.push(t);
        values.push(s);
    }
    StepFunction::new(1.0, jumps, values)
}

/// Kaplan-Meier estimate of the censoring survival function.
pub fn km_censoring(data: &[Observation]) -> Result<StepFunction> {
    let times: Vec<f64> = data.iter().map(|o| o.time).collect();
    let flipped: Vec<bool> = data.iter().map(|o| !o.event).collect();
    km_from_parts(&times, &flipped)
}

/// `int_lo^hi |a(t) - b(t)| dt`, exact.
pub fn integrate_abs_diff(a: &StepFunction, b: &StepFunction, lo: f64, hi: f64) -> Result<f64> {
    integrate_diff_with(a, b, lo, hi, f64::abs)
}

/// `int_lo^hi (a(t) - b(t)) dt`, exact.
pub fn integrate_diff(a: &StepFunction, b: &StepFunction, lo: f64, hi: f64) -> Result<f64> {
    integrate_diff_with(a, b, lo, hi, |x| x)
}

fn integrate_diff_with(
    a: &StepFunction,
    b: &StepFunction,
    lo: f64,
    hi: f64,
    f: impl Fn(f64) -> f64,
) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::Domain(format!("integration bounds reversed: {lo} > {hi}")));
    }
    let mut ia = a.jump_times.partition_point(|&x| x <= lo);
    let mut ib = b.jump_times.partition_point(|&x| x <= lo);
    let mut va = if ia == 0 { a.initial_value } else { a.values[ia - 1] };
    let mut vb = if ib == 0 { b.initial_value } else { b.values[ib - 1] };
    let mut left = lo;
    let mut total = 0.0;
    loop {
        let na = a.jump_times.get(ia).copied().unwrap_or(f64::INFINITY);
        let nb = b.jump_times.get(ib).copied().unwrap_or(f64::INFINITY);
        let next = na.min(nb).min(hi);
        total += f(va - vb) * (next - left);
        if next >= hi {
            break;
        }
        if na == next {
            va = a.values[ia];
            ia += 1;
        }
        if nb == next {
            vb = b.values[ib];
            ib += 1;
        }
        left = next;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::Family;

    fn appendix_data() -> Vec<Observation> {
        let delta = [1, 0, 0, 1, 0, 1, 1, 0, 1, 1];
        (1..=10)
            .zip(delta)
            .map(|(x, d)| Observation::outcome(x as f64, d == 1))
            .collect()
    }

    #[test]
    fn naive_survivor_examples() {
        let s = naive_survivor(&[1.0, 2.0, 3.0]).unwrap();
        assert!((s.eval(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.eval(0.5), 1.0);
        assert_eq!(s.eval(3.0), 0.0);
        let tied = naive_survivor(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(tied.eval(1.0), 0.0);
        assert!(naive_survivor(&[]).is_err());
    }

    #[test]
    fn cge_independence_matches_product_limit() {
        let s = cge(&appendix_data(), &CopulaSpec::independence()).unwrap();
        let expected = [
            (1.0, 0.9),
            (4.0, 0.9 * 6.0 / 7.0),
            (6.0, 0.9 * 6.0 / 7.0 * 4.0 / 5.0),
            (7.0, 0.9 * 6.0 / 7.0 * 4.0 / 5.0 * 3.0 / 4.0),
            (9.0, 0.9 * 6.0 / 7.0 * 4.0 / 5.0 * 3.0 / 4.0 * 0.5),
            (10.0, 0.0),
        ];
        for (t, v) in expected {
            assert!((s.eval(t) - v).abs() < 1e-12, "t={t}: {} vs {v}", s.eval(t));
        }
        assert!((s.eval(4.0) - 0.7714).abs() < 1e-4);
        assert!((s.eval(9.0) - 0.2314).abs() < 1e-4);
        assert_eq!(s.eval(0.5), 1.0);
        assert_eq!(s.eval(100.0), 0.0);
    }

    #[test]
    fn cge_clayton_frozen_values() {
        // Direct evaluation of the closed form, computed independently.
        let frozen: [(f64, [f64; 6]); 2] = [
            (
                2.0,
                [0.9, 0.712194107869719, 0.4867041992874466, 0.33181341364403083, 0.10905531317693219, 0.0],
            ),
            (
                6.0,
                [0.9, 0.6380895824123681, 0.4152827881418755, 0.30183127970554396, 0.10024038359835977, 0.0],
            ),
        ];
        let times = [1.0, 4.0, 6.0, 7.0, 9.0, 10.0];
        let ind = cge(&appendix_data(), &CopulaSpec::independence()).unwrap();
        let mut prev_gap = vec![0.0; times.len()];
        for (theta, values) in frozen {
            let s = cge(&appendix_data(), &CopulaSpec::clayton(theta).unwrap()).unwrap();
            for (k, (&t, &v)) in times.iter().zip(&values).enumerate() {
                assert!((s.eval(t) - v).abs() < 1e-12, "theta={theta} t={t}");
                let gap = ind.eval(t) - s.eval(t);
                assert!(gap >= -1e-15);
                assert!(gap >= prev_gap[k] - 1e-15);
                prev_gap[k] = gap;
            }
        }
    }

    #[test]
    fn all_censored_is_constant_one() {
        let data: Vec<Observation> = (1..6).map(|t| Observation::outcome(t as f64, false)).collect();
        for spec in [
            CopulaSpec::independence(),
            CopulaSpec::clayton(3.0).unwrap(),
            CopulaSpec::from_tau(Family::Frank, 0.4).unwrap(),
        ] {
            let s = cge(&data, &spec).unwrap();
            assert!(s.jump_times().is_empty());
            assert_eq!(s.eval(3.0), 1.0);
        }
    }

    #[test]
    fn km_examples() {
        let d = [Observation::outcome(1.0, true), Observation::outcome(2.0, true)];
        let s = km(&d).unwrap();
        assert_eq!(s.eval(1.0), 0.5);
        assert_eq!(s.eval(2.0), 0.0);
        let c = [Observation::outcome(1.0, false), Observation::outcome(2.0, false)];
        assert_eq!(km(&c).unwrap(), StepFunction::constant(1.0));
        assert!(km(&[]).is_err());
    }

    #[test]
    fn event_and_censoring_tie() {
        // Censored subject at t=2 is still at risk for the event at t=2.
        let d = [
            Observation::outcome(1.0, true),
            Observation::outcome(2.0, true),
            Observation::outcome(2.0, false),
            Observation::outcome(3.0, true),
        ];
        let s = km(&d).unwrap();
        assert!((s.eval(2.0) - 0.75 * 2.0 / 3.0).abs() < 1e-15);
        let c = cge(&d, &CopulaSpec::independence()).unwrap();
        assert!((c.eval(2.0) - s.eval(2.0)).abs() < 1e-15);
    }

    #[test]
    fn integration_examples() {
        let a = StepFunction::new(1.0, vec![1.0], vec![0.5]).unwrap();
        let b = StepFunction::new(1.0, vec![2.0], vec![0.5]).unwrap();
        assert_eq!(integrate_abs_diff(&a, &a, 0.0, 5.0).unwrap(), 0.0);
        assert_eq!(
            integrate_abs_diff(&StepFunction::constant(1.0), &StepFunction::constant(0.0), 0.0, 2.0)
                .unwrap(),
            2.0
        );
        assert_eq!(integrate_abs_diff(&a, &b, 1.0, 3.0).unwrap(), 0.5);
        assert_eq!(integrate_diff(&a, &b, 1.0, 3.0).unwrap(), -0.5);
        assert_eq!(integrate_diff(&b, &a, 0.0, 3.0).unwrap(), 0.5);
        assert_eq!(integrate_abs_diff(&a, &b, 1.5, 1.5).unwrap(), 0.0);
        assert!(integrate_abs_diff(&a, &b, 2.0, 1.0).is_err());
    }

    #[test]
    fn curve_csv_and_median() {
        let s = km(&[
            Observation::outcome(1.0, true),
            Observation::outcome(2.0, true),
            Observation::outcome(3.0, false),
        ])
        .unwrap();
        assert_eq!(s.to_csv_string(), "time,value\n0,1\n1,0.6666666666666666\n2,0.3333333333333333\n");
        assert_eq!(s.median(), Some(2.0));
        assert_eq!(StepFunction::constant(1.0).median(), None);
    }

    #[test]
    fn step_function_validation() {
        assert!(StepFunction::new(1.0, vec![2.0, 1.0], vec![0.5, 0.2]).is_err());
        assert!(StepFunction::new(1.0, vec![1.0], vec![]).is_err());
        let s = StepFunction::new(1.0, vec![1.0, 2.0], vec![0.5, 0.2]).unwrap();
        assert_eq!(s.eval_left(1.0), 1.0);
        assert_eq!(s.eval(1.0), 0.5);
        assert_eq!(s.eval_left(2.5), 0.2);
    }
}
