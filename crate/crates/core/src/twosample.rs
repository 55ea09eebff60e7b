//! Two-sample comparison of survival curves.
//!
//! The statistic is the time-normalised integrated distance between the
//! two groups' copula-graphic estimators,
//!
//! ```text
//! L1 = (1/m) int_{min x}^{m} |S1(t) - S2(t)| dt,   m = min(max x_1, max x_2),
//! ```
//!
//! with a signed variant (no absolute value) that is positive when group 1
//! survives longer. Significance comes from a Monte Carlo permutation test
//! over group labels with the add-one p-value `(#{L1_perm >= L1_obs} + 1) /
//! (n_perm + 1)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::CopulaSpec;
use crate::data::Observation;
use crate::error::{Error, Result};
use crate::rng;
use crate::survcurve::{cge, integrate_abs_diff, integrate_diff};

/// Replicates are counted as at least as extreme when they fall short of the
/// observed statistic by no more than this. The statistic lies in `[0, 1]`, so
/// an absolute tolerance absorbs the rounding noise of mathematically tied
/// label assignments.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Upper bound on the number of assignments `enumerate_exact` visits.
pub const MAX_ENUMERATION: u64 = 1_000_000;

const PARALLEL_REPLICATES: usize = 2048;

#[inline]
fn at_least(replicate: f64, observed: f64) -> bool {
    replicate >= observed - TIE_TOLERANCE
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSample {
    pub group1: Vec<Observation>,
    pub group2: Vec<Observation>,
}

impl TwoSample {
    pub fn new(group1: Vec<Observation>, group2: Vec<Observation>) -> Result<Self> {
        if group1.is_empty() || group2.is_empty() {
            return Err(Error::Domain("both groups must be non-empty".into()));
        }
        Ok(Self { group1, group2 })
    }

    /// Build from `(time, event)` pairs.
    pub fn from_pairs(group1: &[(f64, bool)], group2: &[(f64, bool)]) -> Result<Self> {
        let conv = |g: &[(f64, bool)]| -> Result<Vec<Observation>> {
            g.iter().map(|&(t, e)| Observation::new(t, e, Vec::new())).collect()
        };
        Self::new(conv(group1)?, conv(group2)?)
    }

    pub fn swapped(&self) -> Self {
        Self {
            group1: self.group2.clone(),
            group2: self.group1.clone(),
        }
    }

    pub fn n1(&self) -> usize {
        self.group1.len()
    }

    pub fn n2(&self) -> usize {
        self.group2.len()
    }

    fn pooled(&self) -> (Vec<f64>, Vec<bool>, Vec<bool>) {
        let all = self.group1.iter().chain(&self.group2);
        let times = all.clone().map(|o| o.time).collect();
        let events = all.map(|o| o.event).collect();
        let labels = (0..self.n1() + self.n2()).map(|i| i < self.n1()).collect();
        (times, events, labels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Statistic {
    pub l1: f64,
    pub signed: f64,
}

/// `L1` and its signed variant, computed from the two estimated curves.
pub fn l1_statistic(s: &TwoSample, spec: &CopulaSpec) -> Result<L1Statistic> {
    if s.group1.is_empty() || s.group2.is_empty() {
        return Err(Error::Domain("both groups must be non-empty".into()));
    }
    let s1 = cge(&s.group1, spec)?;
    let s2 = cge(&s.group2, spec)?;
    let max_time = |g: &[Observation]| g.iter().map(|o| o.time).fold(f64::MIN, f64::max);
    let lo = s
        .group1
        .iter()
        .chain(&s.group2)
        .map(|o| o.time)
        .fold(f64::INFINITY, f64::min);
    let m = max_time(&s.group1).min(max_time(&s.group2));
    Ok(L1Statistic {
        l1: integrate_abs_diff(&s1, &s2, lo, m)? / m,
        signed: integrate_diff(&s1, &s2, lo, m)? / m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub observed_l1: f64,
    pub signed_l1: f64,
    /// `(exceed_count + 1) / (n_perm + 1)`.
    pub p_value: f64,
    /// Replicates at least as large as the observed statistic.
    pub exceed_count: usize,
    pub n_perm: usize,
    pub seed: u64,
    /// Set when the pooled data carry no information (no events, or a single
    /// distinct time); `p_value` is then 1.
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<Vec<f64>>,
}

/// Monte Carlo permutation test of equal survival.
pub fn permutation_test(
    s: &TwoSample,
    spec: &CopulaSpec,
    n_perm: usize,
    seed: u64,
) -> Result<PermutationResult> {
    run_permutation_test(s, spec, n_perm, seed, false)
}

/// As [`permutation_test`], keeping every replicate statistic.
pub fn permutation_test_with_replicates(
    s: &TwoSample,
    spec: &CopulaSpec,
    n_perm: usize,
    seed: u64,
) -> Result<PermutationResult> {
    run_permutation_test(s, spec, n_perm, seed, true)
}

fn run_permutation_test(
    s: &TwoSample,
    spec: &CopulaSpec,
    n_perm: usize,
    seed: u64,
    keep: bool,
) -> Result<PermutationResult> {
    if s.n1() + s.n2() < 4 {
        return Err(Error::Domain(format!(
            "permutation test needs at least 4 pooled observations, got {}",
            s.n1() + s.n2()
        )));
    }
    if s.n1() == 0 || s.n2() == 0 {
        return Err(Error::Domain("both groups must be non-empty".into()));
    }
    if n_perm == 0 {
        return Err(Error::Domain("n_perm must be >= 1".into()));
    }
    let (times, events, labels) = s.pooled();
    let pooled = PooledSample::new(&times, &events);
    Ok(pooled.permutation_test(&labels, spec, n_perm, seed, keep))
}

/// Fraction of all distinct group assignments whose statistic is at least
/// the observed one. No add-one correction is applied.
pub fn enumerate_exact(s: &TwoSample, spec: &CopulaSpec) -> Result<f64> {
    if s.n1() == 0 || s.n2() == 0 {
        return Err(Error::Domain("both groups must be non-empty".into()));
    }
    let n = s.n1() + s.n2();
    let k = s.n1().min(s.n2());
    let total = binomial(n as u64, k as u64);
    if total > MAX_ENUMERATION {
        return Err(Error::Capacity(format!(
            "C({n}, {k}) = {total} assignments exceeds the limit of {MAX_ENUMERATION}"
        )));
    }
    let (times, events, labels) = s.pooled();
    let pooled = PooledSample::new(&times, &events);
    let sorted_labels = pooled.to_sorted(&labels);
    let n1 = s.n1();
    let tables = PhiTables::new(spec, n1, n - n1);
    let observed = pooled.statistic(&sorted_labels, n1, &tables).l1;

    // Enumerate the k-subsets that carry the smaller group's label.
    let small_is_first = s.n1() <= s.n2();
    let mut combo: Vec<usize> = (0..k).collect();
    let mut mask = vec![false; n];
    let mut hits = 0u64;
    let mut visited = 0u64;
    loop {
        mask.iter_mut().for_each(|m| *m = !small_is_first);
        for &c in &combo {
            mask[c] = small_is_first;
        }
        if at_least(pooled.statistic(&mask, n1, &tables).l1, observed) {
            hits += 1;
        }
        visited += 1;
        // Next combination in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                debug_assert_eq!(visited, total);
                return Ok(hits as f64 / visited as f64);
            }
            i -= 1;
            if combo[i] < n - k + i {
                combo[i] += 1;
                for j in (i + 1)..k {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return u64::MAX;
        }
    }
    acc as u64
}

/// `phi(k / n_g)` for each group's possible at-risk counts.
#[derive(Debug, Clone)]
pub struct PhiTables {
    spec: CopulaSpec,
    group1: Vec<f64>,
    group2: Vec<f64>,
}

impl PhiTables {
    pub fn new(spec: &CopulaSpec, n1: usize, n2: usize) -> Self {
        let table = |n: usize| -> Vec<f64> {
            (0..=n).map(|k| spec.phi(k as f64 / n as f64)).collect()
        };
        Self {
            spec: *spec,
            group1: table(n1),
            group2: table(n2),
        }
    }
}

/// Pooled two-sample data sorted once by time, so that every relabelling
/// evaluates the statistic in a single linear pass.
#[derive(Debug, Clone)]
pub struct PooledSample {
    /// `order[i]` is the input index of the i-th record in time order.
    order: Vec<usize>,
    events: Vec<bool>,
    /// Distinct times and the sorted-position range of each block.
    block_times: Vec<f64>,
    block_ends: Vec<usize>,
}

impl PooledSample {
    pub fn new(times: &[f64], events: &[bool]) -> Self {
        assert_eq!(times.len(), events.len());
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
        let sorted_events = order.iter().map(|&i| events[i]).collect();
        let mut block_times = Vec::new();
        let mut block_ends = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            if block_times.last() != Some(&times[i]) {
                if pos > 0 {
                    block_ends.push(pos);
                }
                block_times.push(times[i]);
            }
        }
        if !order.is_empty() {
            block_ends.push(order.len());
        }
        Self {
            order,
            events: sorted_events,
            block_times,
            block_ends,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// No events, or every record at one time.
    pub fn is_degenerate(&self) -> bool {
        self.block_times.len() <= 1 || !self.events.iter().any(|&e| e)
    }

    /// Re-index input-order labels into time order.
    pub fn to_sorted(&self, labels: &[bool]) -> Vec<bool> {
        self.order.iter().map(|&i| labels[i]).collect()
    }

    /// Statistic for time-ordered labels (`true` = group 1, `n1` of them).
    pub fn statistic(&self, labels: &[bool], n1: usize, tables: &PhiTables) -> L1Statistic {
        let n2 = self.len() - n1;
        let spec = &tables.spec;
        let (mut r1, mut r2) = (n1, n2);
        let (mut a1, mut a2) = (0.0, 0.0);
        let (mut s1, mut s2) = (1.0f64, 1.0f64);
        let mut abs_area = 0.0;
        let mut signed_area = 0.0;
        let mut prev = self.block_times.first().copied().unwrap_or(0.0);
        let mut m = prev;
        let mut start = 0;
        for (&t, &end) in self.block_times.iter().zip(&self.block_ends) {
            let width = t - prev;
            let diff = s1 - s2;
            abs_area += diff.abs() * width;
            signed_area += diff * width;
            prev = t;

            let (mut c1, mut d1, mut c2, mut d2) = (0, 0, 0, 0);
            for pos in start..end {
                let e = usize::from(self.events[pos]);
                if labels[pos] {
                    c1 += 1;
                    d1 += e;
                } else {
                    c2 += 1;
                    d2 += e;
                }
            }
            start = end;
            if d1 > 0 {
                a1 += tables.group1[r1 - d1] - tables.group1[r1];
                s1 = spec.phi_inv(a1);
            }
            if d2 > 0 {
                a2 += tables.group2[r2 - d2] - tables.group2[r2];
                s2 = spec.phi_inv(a2);
            }
            r1 -= c1;
            r2 -= c2;
            if r1 == 0 || r2 == 0 {
                m = t;
                break;
            }
        }
        if m <= 0.0 {
            return L1Statistic { l1: 0.0, signed: 0.0 };
        }
        L1Statistic {
            l1: abs_area / m,
            signed: signed_area / m,
        }
    }

    /// Permutation test for input-order `labels`; replicate `i` draws from
    /// sub-stream `i` of the stream keyed by `seed`.
    pub fn permutation_test(
        &self,
        labels: &[bool],
        spec: &CopulaSpec,
        n_perm: usize,
        seed: u64,
        keep_replicates: bool,
    ) -> PermutationResult {
        let sorted = self.to_sorted(labels);
        let n1 = sorted.iter().filter(|&&l| l).count();
        let tables = PhiTables::new(spec, n1, self.len() - n1);
        let observed = self.statistic(&sorted, n1, &tables);
        let key = rng::key(seed, &[rng::label("permutation")]);

        let replicate = |scratch: &mut Scratch, i: usize| -> f64 {
            let mut stream = rng::substream(key, i as u64);
            scratch.relabel(&mut stream, n1);
            self.statistic(&scratch.labels, n1, &tables).l1
        };
        let replicates: Vec<f64> = if n_perm >= PARALLEL_REPLICATES {
            (0..n_perm)
                .into_par_iter()
                .map_init(|| Scratch::new(self.len()), replicate)
                .collect()
        } else {
            let mut scratch = Scratch::new(self.len());
            (0..n_perm).map(|i| replicate(&mut scratch, i)).collect()
        };
        let exceed_count = replicates
            .iter()
            .filter(|&&r| at_least(r, observed.l1))
            .count();
        PermutationResult {
            observed_l1: observed.l1,
            signed_l1: observed.signed,
            p_value: (exceed_count + 1) as f64 / (n_perm + 1) as f64,
            exceed_count,
            n_perm,
            seed,
            degenerate: self.is_degenerate(),
            replicates: keep_replicates.then_some(replicates),
        }
    }
}

struct Scratch {
    positions: Vec<usize>,
    labels: Vec<bool>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            positions: (0..n).collect(),
            labels: vec![false; n],
        }
    }

    /// Uniformly random assignment of `n1` group-1 labels. The smaller
    /// group's positions are drawn (partial Fisher-Yates), so a sample and
    /// its group-swapped mirror see the same partitions.
    fn relabel<R: Rng>(&mut self, rng: &mut R, n1: usize) {
        let n = self.positions.len();
        let (k, mark) = if 2 * n1 <= n { (n1, true) } else { (n - n1, false) };
        for (i, p) in self.positions.iter_mut().enumerate() {
            *p = i;
        }
        self.labels.iter_mut().for_each(|l| *l = !mark);
        for i in 0..k {
            let j = rng.random_range(i..n);
            self.positions.swap(i, j);
            self.labels[self.positions[i]] = mark;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogrankResult {
    pub chi_square: f64,
    pub p_value: f64,
    /// Observed minus expected events in group 1; negative values mean
    /// group 1 survives longer.
    pub observed_minus_expected: f64,
    pub variance: f64,
    /// Zero variance (for instance no events); `p_value` is then 1.
    pub degenerate: bool,
}

impl LogrankResult {
    /// Signed z-score, positive when group 1 survives longer.
    pub fn signed_z(&self) -> f64 {
        if self.degenerate {
            0.0
        } else {
            -self.observed_minus_expected / self.variance.sqrt()
        }
    }
}

/// Two-sample logrank test with hypergeometric variance.
pub fn logrank_test(s: &TwoSample) -> Result<LogrankResult> {
    if s.group1.is_empty() || s.group2.is_empty() {
        return Err(Error::Domain("both groups must be non-empty".into()));
    }
    let (times, events, labels) = s.pooled();
    Ok(logrank_from_parts(&times, &events, &labels))
}

/// Logrank test on pooled records with group-1 membership flags.
pub fn logrank_from_parts(times: &[f64], events: &[bool], labels: &[bool]) -> LogrankResult {
    let pooled = PooledSample::new(times, events);
    pooled.logrank(&pooled.to_sorted(labels))
}

impl PooledSample {
    /// Observed statistic for input-order `labels`.
    pub fn observed(&self, labels: &[bool], spec: &CopulaSpec) -> L1Statistic {
        let sorted = self.to_sorted(labels);
        let n1 = sorted.iter().filter(|&&l| l).count();
        let tables = PhiTables::new(spec, n1, self.len() - n1);
        self.statistic(&sorted, n1, &tables)
    }

    /// Logrank test for time-ordered labels.
    pub fn logrank(&self, sorted: &[bool]) -> LogrankResult {
        let mut at_risk = self.len() as f64;
        let mut at_risk1 = sorted.iter().filter(|&&l| l).count() as f64;
        let (mut o_minus_e, mut var) = (0.0, 0.0);
        let mut start = 0;
        for &end in &self.block_ends {
            let (mut c1, mut d, mut d1) = (0.0, 0.0, 0.0);
            for pos in start..end {
                let e = f64::from(u8::from(self.events[pos]));
                d += e;
                if sorted[pos] {
                    c1 += 1.0;
                    d1 += e;
                }
            }
            if d > 0.0 {
                let share = at_risk1 / at_risk;
                o_minus_e += d1 - d * share;
                if at_risk > 1.0 {
                    var += d * share * (1.0 - share) * (at_risk - d) / (at_risk - 1.0);
                }
            }
            at_risk -= (end - start) as f64;
            at_risk1 -= c1;
            start = end;
        }
        if var <= 0.0 {
            return LogrankResult {
                chi_square: 0.0,
                p_value: 1.0,
                observed_minus_expected: o_minus_e,
                variance: var,
                degenerate: true,
            };
        }
        let chi_square = o_minus_e * o_minus_e / var;
        LogrankResult {
            chi_square,
            p_value: chi_square_1_upper(chi_square),
            observed_minus_expected: o_minus_e,
            variance: var,
            degenerate: false,
        }
    }
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi_square_1_upper(x: f64) -> f64 {
    libm::erfc((x / 2.0).sqrt()).min(1.0)
}
