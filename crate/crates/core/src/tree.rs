//! Survival trees grown by recursive binary partitioning.
//!
//! At every node with at least `min_node_size` members, each covariate `j`
//! and each feasible cutoff `q` define the split `z_j <= q` versus `z_j > q`.
//! The split with the smallest two-sample p-value is taken when that p-value
//! is below the threshold; the child with the longer estimated survival goes
//! to the left, so terminal nodes numbered left to right run from the best
//! to the worst prognosis.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::CopulaSpec;
use crate::data::{censoring_fraction, Dataset, Observation};
use crate::error::{Error, Result};
use crate::rng;
use crate::survcurve::{cge, StepFunction};
use crate::twosample::PooledSample;

/// The two-sample test used as the splitting criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTest {
    /// Permutation test on the integrated CGE distance.
    Cge,
    /// Asymptotic logrank test.
    Logrank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Copula for the permutation statistic, the child ordering and the
    /// terminal-node curves.
    pub copula: CopulaSpec,
    pub test: SplitTest,
    pub p_threshold: f64,
    pub n_perm: usize,
    pub seed: u64,
    pub min_node_size: usize,
    /// Reject candidate splits leaving a child more censored than this.
    #[serde(default)]
    pub max_censoring_fraction_child: Option<f64>,
}

impl TreeConfig {
    pub fn new(copula: CopulaSpec, p_threshold: f64, n_perm: usize, seed: u64) -> Self {
        Self {
            copula,
            test: SplitTest::Cge,
            p_threshold,
            n_perm,
            seed,
            min_node_size: 3,
            max_censoring_fraction_child: None,
        }
    }

    /// Logrank splitting with Kaplan-Meier curves.
    pub fn logrank(p_threshold: f64) -> Self {
        Self {
            test: SplitTest::Logrank,
            ..Self::new(CopulaSpec::independence(), p_threshold, 0, 0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_threshold > 0.0 && self.p_threshold < 1.0) {
            return Err(Error::Config(format!(
                "p_threshold must lie in (0, 1), got {}",
                self.p_threshold
            )));
        }
        if self.min_node_size < 3 {
            return Err(Error::Config(format!(
                "min_node_size must be >= 3, got {}",
                self.min_node_size
            )));
        }
        if let Some(f) = self.max_censoring_fraction_child {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!(
                    "max_censoring_fraction_child must lie in [0, 1], got {f}"
                )));
            }
        }
        if self.test == SplitTest::Cge && 1.0 / (self.n_perm as f64 + 1.0) >= self.p_threshold {
            return Err(Error::Config(format!(
                "n_perm = {} gives a smallest p-value of 1/{} which cannot fall below p_threshold = {}",
                self.n_perm,
                self.n_perm + 1,
                self.p_threshold
            )));
        }
        Ok(())
    }
}

/// A candidate split `z_j <= cutoff`, scored by the splitting test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub covariate_index: usize,
    pub cutoff: f64,
    pub p_value: f64,
    /// Signed distance with the `<=` side as group 1: positive when the
    /// `<=` side survives longer.
    pub signed_l1: f64,
    pub left_count: usize,
    pub right_count: usize,
    /// Whether the `<=` side is the left child.
    pub low_goes_left: bool,
}

impl SplitCandidate {
    /// Signed distance of the left child against the right child.
    pub fn left_advantage(&self) -> f64 {
        if self.low_goes_left {
            self.signed_l1
        } else {
            -self.signed_l1
        }
    }

    /// The child a covariate value is routed to: `true` for left.
    pub fn goes_left(&self, z: f64) -> bool {
        (z <= self.cutoff) == self.low_goes_left
    }

    /// Ordering used to pick the best split: smaller p-value, then larger
    /// `|signed_l1|`, then smaller covariate index, then smaller cutoff.
    fn better_than(&self, other: &SplitCandidate) -> bool {
        self.p_value
            .total_cmp(&other.p_value)
            .then(other.signed_l1.abs().total_cmp(&self.signed_l1.abs()))
            .then(self.covariate_index.cmp(&other.covariate_index))
            .then(self.cutoff.total_cmp(&other.cutoff))
            .is_lt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub depth: usize,
    pub split: Option<SplitCandidate>,
    /// `(left_id, right_id)`.
    pub children: Option<(usize, usize)>,
    pub member_indices: Vec<usize>,
    /// 1 for the best prognosis; terminal nodes only.
    pub terminal_number: Option<usize>,
    /// Estimated survival in the node; terminal nodes only.
    pub curve: Option<StepFunction>,
    /// Best split found at a terminal node that was too weak to take.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_rejected: Option<SplitCandidate>,
}

impl TreeNode {
    pub fn is_terminal(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub config: TreeConfig,
    pub covariate_names: Vec<String>,
    /// Nodes in depth-first, left-first order; the root is node 0.
    pub nodes: Vec<TreeNode>,
}

/// Sorted distinct values excluding the maximum.
pub fn feasible_cutoffs(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.pop();
    v
}

/// Split shells (p-value 1, no ordering yet) for covariate `j` over the
/// node's `members`.
pub fn enumerate_splits(data: &Dataset, members: &[usize], j: usize) -> Vec<SplitCandidate> {
    let values: Vec<f64> = members.iter().map(|&i| data.rows[i].covariates[j]).collect();
    feasible_cutoffs(&values)
        .into_iter()
        .map(|cutoff| {
            let left_count = values.iter().filter(|&&z| z <= cutoff).count();
            SplitCandidate {
                covariate_index: j,
                cutoff,
                p_value: 1.0,
                signed_l1: 0.0,
                left_count,
                right_count: values.len() - left_count,
                low_goes_left: true,
            }
        })
        .collect()
}

/// Grow a tree on `data`.
pub fn fit_tree(data: &Dataset, config: &TreeConfig) -> Result<Tree> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Domain("cannot fit a tree on an empty dataset".into()));
    }
    if data.n_covariates() == 0 {
        return Err(Error::Domain("cannot fit a tree without covariates".into()));
    }
    if let Some((i, _)) = data
        .rows
        .iter()
        .enumerate()
        .find(|(_, r)| r.covariates.iter().any(|z| !z.is_finite()))
    {
        return Err(Error::Domain(format!("row {i} has a missing or non-finite covariate")));
    }
    let mut builder = Builder {
        data,
        config,
        nodes: Vec::new(),
        n_terminal: 0,
    };
    let root_key = rng::key(config.seed, &[rng::label("tree")]);
    builder.grow((0..data.len()).collect(), 0, root_key)?;
    Ok(Tree {
        config: config.clone(),
        covariate_names: data.covariate_names.clone(),
        nodes: builder.nodes,
    })
}

struct Builder<'a> {
    data: &'a Dataset,
    config: &'a TreeConfig,
    nodes: Vec<TreeNode>,
    n_terminal: usize,
}

impl Builder<'_> {
    fn grow(&mut self, members: Vec<usize>, depth: usize, key: u64) -> Result<usize> {
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            id,
            depth,
            split: None,
            children: None,
            member_indices: members.clone(),
            terminal_number: None,
            curve: None,
            best_rejected: None,
        });
        let best = if members.len() >= self.config.min_node_size {
            self.best_split(&members, key)
        } else {
            None
        };
        match best {
            Some(split) if split.p_value < self.config.p_threshold => {
                let j = split.covariate_index;
                let (low, high): (Vec<usize>, Vec<usize>) = members
                    .iter()
                    .partition(|&&i| self.data.rows[i].covariates[j] <= split.cutoff);
                let (low_key, high_key) = (rng::key(key, &[0]), rng::key(key, &[1]));
                let (left, right) = if split.low_goes_left {
                    let l = self.grow(low, depth + 1, low_key)?;
                    (l, self.grow(high, depth + 1, high_key)?)
                } else {
                    let l = self.grow(high, depth + 1, high_key)?;
                    (l, self.grow(low, depth + 1, low_key)?)
                };
                let node = &mut self.nodes[id];
                node.split = Some(split);
                node.children = Some((left, right));
            }
            rejected => {
                let rows: Vec<Observation> =
                    members.iter().map(|&i| self.data.rows[i].clone()).collect();
                self.n_terminal += 1;
                let node = &mut self.nodes[id];
                node.terminal_number = Some(self.n_terminal);
                node.curve = Some(cge(&rows, &self.config.copula)?);
                node.best_rejected = rejected;
            }
        }
        Ok(id)
    }

    fn best_split(&self, members: &[usize], key: u64) -> Option<SplitCandidate> {
        let rows = &self.data.rows;
        let times: Vec<f64> = members.iter().map(|&i| rows[i].time).collect();
        let events: Vec<bool> = members.iter().map(|&i| rows[i].event).collect();
        let pooled = PooledSample::new(&times, &events);
        let shells: Vec<(SplitCandidate, u64)> = (0..self.data.n_covariates())
            .flat_map(|j| {
                enumerate_splits(self.data, members, j)
                    .into_iter()
                    .enumerate()
                    .map(move |(k, s)| (s, rng::key(key, &[j as u64, k as u64])))
            })
            .filter(|(s, _)| self.censoring_ok(members, s))
            .collect();
        let scored: Vec<SplitCandidate> = shells
            .into_par_iter()
            .map(|(shell, seed)| self.score(&pooled, members, shell, seed))
            .collect();
        scored
            .into_iter()
            .reduce(|best, c| if c.better_than(&best) { c } else { best })
    }

    fn censoring_ok(&self, members: &[usize], s: &SplitCandidate) -> bool {
        let Some(limit) = self.config.max_censoring_fraction_child else {
            return true;
        };
        let (low, high): (Vec<Observation>, Vec<Observation>) = members
            .iter()
            .map(|&i| self.data.rows[i].clone())
            .partition(|r| r.covariates[s.covariate_index] <= s.cutoff);
        censoring_fraction(&low) <= limit && censoring_fraction(&high) <= limit
    }

    fn score(
        &self,
        pooled: &PooledSample,
        members: &[usize],
        mut shell: SplitCandidate,
        seed: u64,
    ) -> SplitCandidate {
        let labels: Vec<bool> = members
            .iter()
            .map(|&i| self.data.rows[i].covariates[shell.covariate_index] <= shell.cutoff)
            .collect();
        let (p_value, signed) = match self.config.test {
            SplitTest::Cge => {
                let r = pooled.permutation_test(
                    &labels,
                    &self.config.copula,
                    self.config.n_perm,
                    seed,
                    false,
                );
                (r.p_value, r.signed_l1)
            }
            SplitTest::Logrank => {
                let lr = pooled.logrank(&pooled.to_sorted(&labels));
                (lr.p_value, pooled.observed(&labels, &self.config.copula).signed)
            }
        };
        shell.p_value = p_value;
        shell.signed_l1 = signed;
        shell.low_goes_left = signed >= 0.0;
        if !shell.low_goes_left {
            std::mem::swap(&mut shell.left_count, &mut shell.right_count);
        }
        shell
    }
}

impl Tree {
    pub fn n_terminal(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_terminal()).count()
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| !n.is_terminal())
    }

    pub fn terminal_nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.is_terminal())
    }

    /// Terminal node with the given number.
    pub fn terminal(&self, number: usize) -> Option<&TreeNode> {
        self.terminal_nodes().find(|n| n.terminal_number == Some(number))
    }

    fn route(&self, row: &[f64]) -> Result<&TreeNode> {
        let mut node = &self.nodes[0];
        while let (Some(split), Some((left, right))) = (node.split, node.children) {
            let z = *row.get(split.covariate_index).ok_or_else(|| {
                Error::Routing(format!(
                    "row has {} covariates, the tree splits on index {}",
                    row.len(),
                    split.covariate_index
                ))
            })?;
            if !z.is_finite() {
                return Err(Error::Routing(format!(
                    "covariate {} is missing or non-finite",
                    self.covariate_names
                        .get(split.covariate_index)
                        .map_or("?", String::as_str)
                )));
            }
            node = &self.nodes[if split.goes_left(z) { left } else { right }];
        }
        Ok(node)
    }

    /// Terminal number of the node a covariate row falls into.
    pub fn predict_node(&self, row: &[f64]) -> Result<usize> {
        Ok(self.route(row)?.terminal_number.expect("terminal node"))
    }

    /// Estimated survival at `t` for a covariate row.
    pub fn predict_survival(&self, row: &[f64], t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be >= 0, got {t}")));
        }
        Ok(self.route(row)?.curve.as_ref().expect("terminal curve").eval(t))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid tree document: {e}")))
    }

    /// Graphviz rendering: internal nodes show their split, leaves their
    /// terminal number, size and median survival.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tree {\n  node [fontname=\"Helvetica\"];\n");
        for node in &self.nodes {
            match (node.split, node.children) {
                (Some(split), Some((left, right))) => {
                    let name = self
                        .covariate_names
                        .get(split.covariate_index)
                        .cloned()
                        .unwrap_or_else(|| format!("z{}", split.covariate_index));
                    let _ = writeln!(
                        out,
                        "  n{} [shape=ellipse, label=\"{} \u{2264} {}\\np = {:.4}\"];",
                        node.id,
                        escape(&name),
                        split.cutoff,
                        split.p_value
                    );
                    let (l_rule, r_rule) = if split.low_goes_left {
                        ("yes", "no")
                    } else {
                        ("no", "yes")
                    };
                    let _ = writeln!(out, "  n{} -> n{left} [label=\"{l_rule}\"];", node.id);
                    let _ = writeln!(out, "  n{} -> n{right} [label=\"{r_rule}\"];", node.id);
                }
                _ => {
                    let median = node
                        .curve
                        .as_ref()
                        .and_then(StepFunction::median)
                        .map_or_else(|| "NA".to_string(), |m| format!("{m}"));
                    let _ = writeln!(
                        out,
                        "  n{} [shape=box, label=\"node {}\\nn = {}\\nmedian = {}\"];",
                        node.id,
                        node.terminal_number.unwrap_or(0),
                        node.member_indices.len(),
                        median
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
