//! Tree evaluation: split precision, Harrell's C over terminal-node
//! numbers, and the integrated Brier score on a time grid.

use serde::{Deserialize, Serialize};

use crate::copula::CopulaSpec;
use crate::data::{Dataset, Observation};
use crate::error::{Error, Result};
use crate::survcurve::{cge_censoring, km_censoring, StepFunction};
use crate::tree::Tree;

/// Share of internal nodes that split on a covariate in `informative`;
/// `None` for a single-node tree.
pub fn precision(tree: &Tree, informative: &[usize]) -> Option<f64> {
    let (hits, total) = tree.internal_nodes().fold((0usize, 0usize), |(h, t), node| {
        let j = node.split.expect("internal node has a split").covariate_index;
        (h + usize::from(informative.contains(&j)), t + 1)
    });
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Concordant, discordant and tied comparable pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Concordance {
    pub concordant: u64,
    pub discordant: u64,
    pub tied: u64,
}

impl Concordance {
    pub fn comparable(&self) -> u64 {
        self.concordant + self.discordant + self.tied
    }

    /// `(CC + TR / 2) / (CC + DC + TR)`, `None` without comparable pairs.
    pub fn index(&self) -> Option<f64> {
        let total = self.comparable();
        (total > 0).then(|| (self.concordant as f64 + 0.5 * self.tied as f64) / total as f64)
    }
}

/// Pair counts for prognosis ranks where a low number means long survival.
/// The ordered pair `(i, j)` is comparable when `x_i > x_j` and `j` had an
/// event.
pub fn concordance(terminal_numbers: &[usize], x: &[f64], delta: &[bool]) -> Result<Concordance> {
    let n = terminal_numbers.len();
    if x.len() != n || delta.len() != n {
        return Err(Error::Domain(format!(
            "length mismatch: {n} terminal numbers, {} times, {} event flags",
            x.len(),
            delta.len()
        )));
    }
    let mut c = Concordance::default();
    for j in (0..n).filter(|&j| delta[j]) {
        for i in (0..n).filter(|&i| x[i] > x[j]) {
            match terminal_numbers[i].cmp(&terminal_numbers[j]) {
                std::cmp::Ordering::Less => c.concordant += 1,
                std::cmp::Ordering::Greater => c.discordant += 1,
                std::cmp::Ordering::Equal => c.tied += 1,
            }
        }
    }
    Ok(c)
}

/// Harrell's C; `None` when no pair is comparable.
pub fn harrell_c(terminal_numbers: &[usize], x: &[f64], delta: &[bool]) -> Result<Option<f64>> {
    if terminal_numbers.len() < 2 {
        return Err(Error::Domain("Harrell's C needs at least two subjects".into()));
    }
    Ok(concordance(terminal_numbers, x, delta)?.index())
}

/// `{0}` together with every test or training time up to the largest test
/// time, sorted and deduplicated.
pub fn brier_grid(test: &[Observation], train: &[Observation]) -> Vec<f64> {
    let max_x = test.iter().map(|o| o.time).fold(0.0, f64::max);
    let mut grid: Vec<f64> = std::iter::once(0.0)
        .chain(test.iter().chain(train).map(|o| o.time))
        .filter(|&t| t <= max_x)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Integrated Brier score of the per-subject survival predictions
/// `survival[i]` on the grid, weighted by the censoring curve:
///
/// ```text
/// IB = 1/max(x) sum_j (t_{j+1} - t_j) 1/n sum_i
///        [ (1 - S_i(t_j))^2 / C(t_j)  if x_i >= t_j
///          S_i(t_j)^2 / C(x_i)        otherwise ]
/// ```
///
/// `C` is floored at its smallest positive value so that the weights stay
/// finite.
pub fn integrated_brier(
    test: &[Observation],
    survival: &[&StepFunction],
    censor_curve: &StepFunction,
    grid: &[f64],
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Domain("integrated Brier score needs test data".into()));
    }
    if survival.len() != test.len() {
        return Err(Error::Domain(format!(
            "{} predictions for {} test subjects",
            survival.len(),
            test.len()
        )));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("Brier grid must be strictly increasing".into()));
    }
    let max_x = test.iter().map(|o| o.time).fold(0.0, f64::max);
    let floor = std::iter::once(censor_curve.initial_value())
        .chain(censor_curve.values().iter().copied())
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return Err(Error::Domain("censoring curve is never positive".into()));
    }
    let weight = |t: f64| 1.0 / censor_curve.eval(t).max(floor);
    let at_exit: Vec<f64> = test.iter().map(|o| weight(o.time)).collect();
    let n = test.len() as f64;
    let mut total = 0.0;
    for w in grid.windows(2) {
        let t = w[0];
        let w_t = weight(t);
        let mut cell = 0.0;
        for ((o, s), &w_x) in test.iter().zip(survival).zip(&at_exit) {
            let p = s.eval(t);
            cell += if o.time >= t {
                (1.0 - p) * (1.0 - p) * w_t
            } else {
                p * p * w_x
            };
        }
        total += (w[1] - w[0]) * cell / n;
    }
    Ok(total / max_x)
}

/// Integrated Brier score of a fitted tree on `test`, with the censoring
/// curve and time grid taken from `train`.
pub fn tree_integrated_brier(
    tree: &Tree,
    train: &[Observation],
    test: &[Observation],
    censor_curve: &StepFunction,
) -> Result<f64> {
    let curves = test
        .iter()
        .map(|o| {
            let k = tree.predict_node(&o.covariates)?;
            Ok(tree.terminal(k).and_then(|n| n.curve.as_ref()).expect("terminal curve"))
        })
        .collect::<Result<Vec<_>>>()?;
    integrated_brier(test, &curves, censor_curve, &brier_grid(test, train))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_terminal: usize,
    pub precision: Option<f64>,
    pub harrell_c: Option<f64>,
    pub ibs_km: f64,
    pub ibs_cge: Option<f64>,
}

/// Evaluate `tree` (fitted on `train`) on `test`. `informative` enables the
/// precision; `censor_copula` adds a Brier score weighted by a copula-graphic
/// censoring curve.
pub fn evaluate_tree(
    tree: &Tree,
    train: &Dataset,
    test: &Dataset,
    informative: Option<&[usize]>,
    censor_copula: Option<&CopulaSpec>,
) -> Result<MetricReport> {
    let nodes = test
        .rows
        .iter()
        .map(|o| tree.predict_node(&o.covariates))
        .collect::<Result<Vec<_>>>()?;
    let harrell = harrell_c(&nodes, &test.times(), &test.events())?;
    let ibs_km = tree_integrated_brier(tree, &train.rows, &test.rows, &km_censoring(&train.rows)?)?;
    let ibs_cge = censor_copula
        .map(|spec| {
            let curve = cge_censoring(&train.rows, spec)?;
            tree_integrated_brier(tree, &train.rows, &test.rows, &curve)
        })
        .transpose()?;
    Ok(MetricReport {
        n_terminal: tree.n_terminal(),
        precision: informative.and_then(|set| precision(tree, set)),
        harrell_c: harrell,
        ibs_km,
        ibs_cge,
    })
}
