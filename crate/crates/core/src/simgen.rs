//! Simulated survival data with copula-dependent censoring, and the Monte
//! Carlo study runners.
//!
//! For a subject with linear predictor `eta`, a dependent uniform pair
//! `(U, V)` gives
//!
//! ```text
//! T = -ln(U) exp(-eta),   C = -ln(V) / lambda,   lambda = r / (1 - r),
//! ```
//!
//! so that `T` follows a Cox model with unit exponential baseline and, at
//! `eta = 0` under independence, a fraction `r` of subjects is censored.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::CopulaSpec;
use crate::data::{censoring_fraction, Dataset, Observation};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_tree, MetricReport};
use crate::rng;
use crate::tree::{fit_tree, TreeConfig};
use crate::twosample::{enumerate_exact, logrank_test, permutation_test, TwoSample};

/// Coefficient of the covariate in the normal and Poisson designs.
pub const COVARIATE_BETA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateKind {
    /// `z = 0` in group 1 and `z = 1` in group 2; `effect` is `beta`.
    BinaryGroups,
    /// `N(0, 1)` against `N(gamma, 1)`.
    NormalMeanShift,
    /// `N(0, 1)` against `N(0, gamma^2)`.
    NormalVarShift,
    /// `Poisson(1)` against `Poisson(1 + gamma)`.
    PoissonShift,
    /// `p` covariates in two correlated informative blocks of size `q` and
    /// an uncorrelated remainder; `effect` is the block coefficient.
    PathwayBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathwayParams {
    pub p: usize,
    pub q: usize,
    pub rho: f64,
    /// Decimal places kept after generation; `None` keeps full precision.
    pub round_decimals: Option<u32>,
}

impl Default for PathwayParams {
    fn default() -> Self {
        Self {
            p: 50,
            q: 10,
            rho: 0.5,
            round_decimals: Some(1),
        }
    }
}

impl PathwayParams {
    /// Indices of the covariates with non-zero coefficient.
    pub fn informative(&self) -> Vec<usize> {
        (0..2 * self.q).collect()
    }

    /// Indices that are median-binarized: the first half of each block.
    pub fn binarized(&self) -> Vec<usize> {
        let q = self.q;
        let rest = self.p - 2 * q;
        (0..q / 2)
            .chain(q..q + q / 2)
            .chain(2 * q..2 * q + rest / 2)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub covariate_kind: CovariateKind,
    pub effect: f64,
    /// Group sizes; pathway designs draw a single sample of `n1` subjects
    /// and require `n2 = 0`.
    pub n1: usize,
    pub n2: usize,
    pub censoring_r: f64,
    /// Copula of `(U, V)`.
    pub dependence: CopulaSpec,
    #[serde(default)]
    pub pathway: PathwayParams,
}

impl Scenario {
    pub fn two_group(
        covariate_kind: CovariateKind,
        effect: f64,
        n1: usize,
        n2: usize,
        censoring_r: f64,
        dependence: CopulaSpec,
    ) -> Self {
        Self {
            covariate_kind,
            effect,
            n1,
            n2,
            censoring_r,
            dependence,
            pathway: PathwayParams::default(),
        }
    }

    pub fn pathway(
        n: usize,
        beta: f64,
        censoring_r: f64,
        dependence: CopulaSpec,
        params: PathwayParams,
    ) -> Self {
        Self {
            covariate_kind: CovariateKind::PathwayBlock,
            effect: beta,
            n1: n,
            n2: 0,
            censoring_r,
            dependence,
            pathway: params,
        }
    }

    pub fn is_pathway(&self) -> bool {
        self.covariate_kind == CovariateKind::PathwayBlock
    }

    /// Censoring rate `lambda` of the exponential censoring times.
    pub fn censoring_rate(&self) -> f64 {
        self.censoring_r / (1.0 - self.censoring_r)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.censoring_r > 0.0 && self.censoring_r < 1.0) {
            return bad(format!("censoring_r must lie in (0, 1), got {}", self.censoring_r));
        }
        if !self.effect.is_finite() {
            return bad(format!("effect must be finite, got {}", self.effect));
        }
        match self.covariate_kind {
            CovariateKind::PathwayBlock => {
                let pw = &self.pathway;
                if self.n1 < 2 || self.n2 != 0 {
                    return bad("pathway designs need n1 >= 2 and n2 = 0".into());
                }
                if pw.q == 0 || pw.p <= 2 * pw.q {
                    return bad(format!("pathway needs q >= 1 and p > 2q, got p = {}, q = {}", pw.p, pw.q));
                }
                if !(0.0..1.0).contains(&pw.rho) {
                    return bad(format!("rho must lie in [0, 1), got {}", pw.rho));
                }
            }
            kind => {
                if self.n1 == 0 || self.n2 == 0 {
                    return bad("both group sizes must be >= 1".into());
                }
                if kind == CovariateKind::NormalVarShift && !(self.effect > 0.0) {
                    return bad(format!("normal_var_shift needs effect > 0, got {}", self.effect));
                }
                if kind == CovariateKind::PoissonShift && !(1.0 + self.effect > 0.0) {
                    return bad(format!("poisson_shift needs effect > -1, got {}", self.effect));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }
}

/// A generated dataset with its latent event and censoring times.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub data: Dataset,
    pub latent_t: Vec<f64>,
    pub latent_c: Vec<f64>,
}

impl Simulated {
    /// For two-group designs: the observations of group 1 and group 2.
    pub fn groups(&self) -> (Vec<Observation>, Vec<Observation>) {
        self.data
            .rows
            .iter()
            .cloned()
            .partition(|o| o.covariates[0] == 0.0)
    }

    pub fn two_sample(&self) -> Result<TwoSample> {
        let (a, b) = self.groups();
        TwoSample::new(a, b)
    }
}

/// Draw one dataset. Two-group designs yield covariates `group` (0 or 1)
/// and `z`; pathway designs yield `z1, ..., zp`.
pub fn generate_dataset<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<Simulated> {
    scenario.validate()?;
    let n = scenario.n();
    let (names, covariates, eta) = if scenario.is_pathway() {
        pathway_covariates(scenario, rng)
    } else {
        group_covariates(scenario, rng)
    };
    let lambda = scenario.censoring_rate();
    let mut rows = Vec::with_capacity(n);
    let mut latent_t = Vec::with_capacity(n);
    let mut latent_c = Vec::with_capacity(n);
    for (z, eta) in covariates.into_iter().zip(eta) {
        let pair = scenario.dependence.sample_pair(rng);
        let t = -pair.u.ln() * (-eta).exp();
        let c = -pair.v.ln() / lambda;
        let event = t <= c;
        rows.push(Observation::new(t.min(c), event, z)?);
        latent_t.push(t);
        latent_c.push(c);
    }
    Ok(Simulated {
        data: Dataset::new(names, rows)?,
        latent_t,
        latent_c,
    })
}

type Covariates = (Vec<String>, Vec<Vec<f64>>, Vec<f64>);

fn group_covariates<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Covariates {
    let mut rows = Vec::with_capacity(s.n());
    let mut eta = Vec::with_capacity(s.n());
    for i in 0..s.n() {
        let second = i >= s.n1;
        let g = f64::from(u8::from(second));
        let normal: f64 = rng.sample(StandardNormal);
        let (z, coef) = match s.covariate_kind {
            CovariateKind::BinaryGroups => (g, s.effect),
            CovariateKind::NormalMeanShift => (normal + if second { s.effect } else { 0.0 }, COVARIATE_BETA),
            CovariateKind::NormalVarShift => (normal * if second { s.effect } else { 1.0 }, COVARIATE_BETA),
            CovariateKind::PoissonShift => {
                let mean = if second { 1.0 + s.effect } else { 1.0 };
                let draw = Poisson::new(mean).expect("validated mean").sample(rng);
                (draw, COVARIATE_BETA)
            }
            CovariateKind::PathwayBlock => unreachable!("pathway handled separately"),
        };
        rows.push(vec![g, z]);
        eta.push(coef * z);
    }
    (vec!["group".into(), "z".into()], rows, eta)
}

/// Correlated standard normals mapped to `Uniform(-sqrt 3, sqrt 3)`; half of
/// each block binarized at the sample median; then rounded.
fn pathway_covariates<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Covariates {
    let pw = s.pathway;
    let n = s.n1;
    let (load, spread) = (pw.rho.sqrt(), (1.0 - pw.rho).sqrt());
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let w1: f64 = rng.sample(StandardNormal);
            let w2: f64 = rng.sample(StandardNormal);
            (0..pw.p)
                .map(|j| {
                    let e: f64 = rng.sample(StandardNormal);
                    let latent = if j < pw.q {
                        load * w1 + spread * e
                    } else if j < 2 * pw.q {
                        load * w2 + spread * e
                    } else {
                        e
                    };
                    3f64.sqrt() * (2.0 * normal_cdf(latent) - 1.0)
                })
                .collect()
        })
        .collect();
    for j in pw.binarized() {
        let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let m = median(&column);
        for r in &mut rows {
            r[j] = if r[j] >= m { 1.0 } else { 0.0 };
        }
    }
    if let Some(d) = pw.round_decimals {
        let scale = 10f64.powi(d as i32);
        for z in rows.iter_mut().flatten() {
            *z = (*z * scale).round() / scale;
        }
    }
    let eta = rows
        .iter()
        .map(|r| {
            let plus: f64 = r[..pw.q].iter().sum();
            let minus: f64 = r[pw.q..2 * pw.q].iter().sum();
            s.effect * (plus - minus)
        })
        .collect();
    let names = (1..=pw.p).map(|j| format!("z{j}")).collect();
    (names, rows, eta)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// A two-sample testing method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "lowercase")]
pub enum Method {
    /// Permutation test with the given assumed copula.
    Cge { copula: CopulaSpec },
    Logrank,
    /// Full enumeration of group assignments (small samples only).
    Exact { copula: CopulaSpec },
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Cge { copula } => format!("cge[{copula}]"),
            Method::Logrank => "logrank".into(),
            Method::Exact { copula } => format!("exact[{copula}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub scenario: Scenario,
    pub n_sim: usize,
    pub n_perm: usize,
    pub alpha: f64,
    pub methods: Vec<Method>,
    pub master_seed: u64,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.scenario.is_pathway() {
            return Err(Error::Config("two-sample studies need a two-group scenario".into()));
        }
        if self.n_sim == 0 {
            return Err(Error::Config("n_sim must be >= 1".into()));
        }
        if self.n_perm == 0 {
            return Err(Error::Config("n_perm must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        Ok(())
    }
}

/// One method's result on one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub method: String,
    pub p_value: f64,
    pub reject: bool,
    pub censoring_group1: f64,
    pub censoring_group2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub rejections: usize,
    pub power: f64,
    /// `sqrt(power (1 - power) / n_sim)`.
    pub se: f64,
    /// `0.5 / sqrt(n_sim)`, the largest possible SE.
    pub se_bound: f64,
    /// SE inflated by 1.2 for the finite number of permutations.
    pub se_inflated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub n_sim: usize,
    pub methods: Vec<MethodSummary>,
    pub mean_censoring_group1: f64,
    pub mean_censoring_group2: f64,
    pub records: Vec<ReplicateRecord>,
}

/// Rejection rates of every method over `n_sim` simulated datasets.
/// Replicate `i` draws its data and permutations from streams keyed by
/// `(master_seed, i)`, so the result does not depend on the thread count.
pub fn run_study(config: &StudyConfig) -> Result<StudySummary> {
    config.validate()?;
    let per_replicate: Vec<Vec<ReplicateRecord>> = (0..config.n_sim)
        .into_par_iter()
        .map(|i| study_replicate(config, i))
        .collect::<Result<_>>()?;
    let n_sim = config.n_sim as f64;
    let records: Vec<ReplicateRecord> = per_replicate.into_iter().flatten().collect();
    let methods = config
        .methods
        .iter()
        .map(|m| {
            let label = m.label();
            let rejections = records
                .iter()
                .filter(|r| r.method == label && r.reject)
                .count();
            let power = rejections as f64 / n_sim;
            let se = (power * (1.0 - power) / n_sim).sqrt();
            MethodSummary {
                method: label,
                rejections,
                power,
                se,
                se_bound: 0.5 / n_sim.sqrt(),
                se_inflated: 1.2 * se,
            }
        })
        .collect();
    let k = config.methods.len();
    let mean = |f: fn(&ReplicateRecord) -> f64| {
        records.iter().step_by(k).map(f).sum::<f64>() / n_sim
    };
    Ok(StudySummary {
        n_sim: config.n_sim,
        methods,
        mean_censoring_group1: mean(|r| r.censoring_group1),
        mean_censoring_group2: mean(|r| r.censoring_group2),
        records,
    })
}

fn study_replicate(config: &StudyConfig, i: usize) -> Result<Vec<ReplicateRecord>> {
    let mut stream = rng::stream(config.master_seed, &[rng::label("replicate"), i as u64]);
    let sim = generate_dataset(&config.scenario, &mut stream)?;
    let sample = sim.two_sample()?;
    let c1 = censoring_fraction(&sample.group1);
    let c2 = censoring_fraction(&sample.group2);
    let perm_seed = rng::key(config.master_seed, &[rng::label("permutation"), i as u64]);
    config
        .methods
        .iter()
        .map(|m| {
            let p_value = match m {
                Method::Cge { copula } => {
                    permutation_test(&sample, copula, config.n_perm, perm_seed)?.p_value
                }
                Method::Logrank => logrank_test(&sample)?.p_value,
                Method::Exact { copula } => enumerate_exact(&sample, copula)?,
            };
            Ok(ReplicateRecord {
                replicate: i,
                method: m.label(),
                p_value,
                reject: p_value <= config.alpha,
                censoring_group1: c1,
                censoring_group2: c2,
            })
        })
        .collect()
}

/// Tree-growing method of a tree study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "lowercase")]
pub enum TreeMethod {
    Cge { copula: CopulaSpec },
    Logrank,
}

impl TreeMethod {
    pub fn label(&self) -> String {
        match self {
            TreeMethod::Cge { copula } => format!("cge[{copula}]"),
            TreeMethod::Logrank => "logrank".into(),
        }
    }

    pub fn tree_config(&self, p_threshold: f64, n_perm: usize, seed: u64, min_node_size: usize) -> TreeConfig {
        let mut cfg = match self {
            TreeMethod::Cge { copula } => TreeConfig::new(*copula, p_threshold, n_perm, seed),
            TreeMethod::Logrank => TreeConfig::logrank(p_threshold),
        };
        cfg.min_node_size = min_node_size;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeStudyConfig {
    /// A pathway scenario; training and test sets both have `n1` subjects.
    pub scenario: Scenario,
    pub n_sim: usize,
    pub n_perm: usize,
    pub p_threshold: f64,
    pub min_node_size: usize,
    pub methods: Vec<TreeMethod>,
    pub master_seed: u64,
}

impl TreeStudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if !self.scenario.is_pathway() {
            return Err(Error::Config("tree studies need a pathway_block scenario".into()));
        }
        if self.n_sim == 0 {
            return Err(Error::Config("n_sim must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        for m in &self.methods {
            m.tree_config(self.p_threshold, self.n_perm, 0, self.min_node_size)
                .validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeReplicate {
    pub replicate: usize,
    pub method: String,
    pub report: MetricReport,
    pub censoring_train: f64,
}

/// Averages over replicates; undefined precisions and C-indices are left
/// out of their means and counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeMethodSummary {
    pub method: String,
    pub mean_terminal: f64,
    pub mean_precision: Option<f64>,
    pub precision_undefined: usize,
    pub mean_harrell_c: Option<f64>,
    pub mean_ibs_km: f64,
    pub mean_ibs_cge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeStudySummary {
    pub n_sim: usize,
    pub mean_censoring: f64,
    pub methods: Vec<TreeMethodSummary>,
    pub records: Vec<TreeReplicate>,
}

/// Fit every method's tree on a simulated training set and evaluate it on
/// an independent test set, `n_sim` times. The CGE-weighted Brier score
/// uses the true data-generating copula.
pub fn run_tree_study(config: &TreeStudyConfig) -> Result<TreeStudySummary> {
    config.validate()?;
    let per_replicate: Vec<Vec<TreeReplicate>> = (0..config.n_sim)
        .into_par_iter()
        .map(|i| tree_replicate(config, i))
        .collect::<Result<_>>()?;
    let records: Vec<TreeReplicate> = per_replicate.into_iter().flatten().collect();
    let n_sim = config.n_sim as f64;
    let methods = config
        .methods
        .iter()
        .map(|m| {
            let label = m.label();
            let reports: Vec<&MetricReport> = records
                .iter()
                .filter(|r| r.method == label)
                .map(|r| &r.report)
                .collect();
            let defined_mean = |vals: Vec<f64>| {
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            };
            let precisions: Vec<f64> = reports.iter().filter_map(|r| r.precision).collect();
            TreeMethodSummary {
                method: label,
                mean_terminal: reports.iter().map(|r| r.n_terminal as f64).sum::<f64>() / n_sim,
                precision_undefined: reports.len() - precisions.len(),
                mean_precision: defined_mean(precisions),
                mean_harrell_c: defined_mean(reports.iter().filter_map(|r| r.harrell_c).collect()),
                mean_ibs_km: reports.iter().map(|r| r.ibs_km).sum::<f64>() / n_sim,
                mean_ibs_cge: reports.iter().map(|r| r.ibs_cge.unwrap_or(f64::NAN)).sum::<f64>()
                    / n_sim,
            }
        })
        .collect();
    let k = config.methods.len();
    let mean_censoring = records.iter().step_by(k).map(|r| r.censoring_train).sum::<f64>() / n_sim;
    Ok(TreeStudySummary {
        n_sim: config.n_sim,
        mean_censoring,
        methods,
        records,
    })
}

fn tree_replicate(config: &TreeStudyConfig, i: usize) -> Result<Vec<TreeReplicate>> {
    let seed = config.master_seed;
    let train = generate_dataset(
        &config.scenario,
        &mut rng::stream(seed, &[rng::label("train"), i as u64]),
    )?
    .data;
    let test = generate_dataset(
        &config.scenario,
        &mut rng::stream(seed, &[rng::label("test"), i as u64]),
    )?
    .data;
    let tree_seed = rng::key(seed, &[rng::label("tree"), i as u64]);
    let informative = config.scenario.pathway.informative();
    config
        .methods
        .iter()
        .map(|m| {
            let cfg = m.tree_config(config.p_threshold, config.n_perm, tree_seed, config.min_node_size);
            let tree = fit_tree(&train, &cfg)?;
            let report = evaluate_tree(
                &tree,
                &train,
                &test,
                Some(&informative),
                Some(&config.scenario.dependence),
            )?;
            Ok(TreeReplicate {
                replicate: i,
                method: m.label(),
                report,
                censoring_train: train.censoring_fraction(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::Family;

    #[test]
    fn pathway_layout() {
        let pw = PathwayParams::default();
        assert_eq!(pw.informative(), (0..20).collect::<Vec<_>>());
        let b = pw.binarized();
        assert_eq!(b.len(), 5 + 5 + 15);
        assert_eq!(&b[..6], &[0, 1, 2, 3, 4, 10]);
    }

    #[test]
    fn pathway_dataset_shape() {
        let s = Scenario::pathway(40, 0.5, 0.2, CopulaSpec::independence(), PathwayParams::default());
        let sim = generate_dataset(&s, &mut rng::stream(1, &[])).unwrap();
        assert_eq!(sim.data.len(), 40);
        assert_eq!(sim.data.n_covariates(), 50);
        for &j in &s.pathway.binarized() {
            let ones = sim.data.rows.iter().filter(|r| r.covariates[j] == 1.0).count();
            assert_eq!(ones, 20, "median split of covariate {j}");
        }
        for r in &sim.data.rows {
            for &z in &r.covariates {
                assert!(z.abs() <= 1.8);
                assert!(((z * 10.0).round() - z * 10.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn groups_and_latent_times() {
        let s = Scenario::two_group(
            CovariateKind::BinaryGroups,
            1.0,
            7,
            5,
            0.3,
            CopulaSpec::from_tau(Family::Clayton, 0.5).unwrap(),
        );
        let sim = generate_dataset(&s, &mut rng::stream(2, &[])).unwrap();
        let (a, b) = sim.groups();
        assert_eq!((a.len(), b.len()), (7, 5));
        for (k, r) in sim.data.rows.iter().enumerate() {
            assert_eq!(r.time, sim.latent_t[k].min(sim.latent_c[k]));
            assert_eq!(r.event, sim.latent_t[k] <= sim.latent_c[k]);
        }
    }

    #[test]
    fn scenario_validation() {
        let ind = CopulaSpec::independence();
        let mut s = Scenario::two_group(CovariateKind::BinaryGroups, 0.0, 5, 5, 0.0, ind);
        assert!(s.validate().is_err());
        s.censoring_r = 0.5;
        assert!(s.validate().is_ok());
        s.n2 = 0;
        assert!(s.validate().is_err());
        let v = Scenario::two_group(CovariateKind::NormalVarShift, 0.0, 5, 5, 0.5, ind);
        assert!(v.validate().is_err());
        let p = Scenario::two_group(CovariateKind::PoissonShift, -1.0, 5, 5, 0.5, ind);
        assert!(p.validate().is_err());
        let bad = PathwayParams { p: 20, ..PathwayParams::default() };
        assert!(Scenario::pathway(50, 0.5, 0.5, ind, bad).validate().is_err());
    }

    #[test]
    fn study_alpha_zero_and_se() {
        let s = Scenario::two_group(CovariateKind::BinaryGroups, 0.0, 6, 6, 0.25, CopulaSpec::independence());
        let cfg = StudyConfig {
            scenario: s,
            n_sim: 20,
            n_perm: 49,
            alpha: 0.0,
            methods: vec![Method::Cge { copula: CopulaSpec::independence() }, Method::Logrank],
            master_seed: 3,
        };
        let summary = run_study(&cfg).unwrap();
        assert!(summary.methods.iter().all(|m| m.power == 0.0));
        let cfg = StudyConfig { alpha: 0.5, ..cfg };
        let summary = run_study(&cfg).unwrap();
        for m in &summary.methods {
            assert!((m.se * m.se * 20.0 - m.power * (1.0 - m.power)).abs() < 1e-15);
        }
        assert_eq!(summary.records.len(), 40);
        assert_eq!(run_study(&cfg).unwrap(), summary);
    }
}
