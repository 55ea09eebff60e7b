//! Flat TOML study files for the `simulate` command.
//!
//! ```toml
//! study = "two_sample"        # or "tree"
//! covariate = "binary_groups"
//! effect = -0.4
//! n1 = 150
//! n2 = 150
//! censoring_r = 0.5
//! dependence_family = "clayton"
//! dependence_tau = 0.5
//! n_sim = 200
//! n_perm = 500
//! alpha = 0.05
//! methods = ["cge:clayton:0", "cge:clayton:0.75", "logrank"]
//! seed = 1
//! ```

use std::io::Write;

use cgesurv::copula::{CopulaSpec, Family};
use cgesurv::simgen::{
    run_study, run_tree_study, CovariateKind, Method, PathwayParams, Scenario, StudyConfig,
    StudySummary, TreeMethod, TreeStudyConfig, TreeStudySummary,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    #[default]
    TwoSample,
    Tree,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    #[serde(default)]
    pub study: StudyKind,
    pub covariate: Option<CovariateKind>,
    pub effect: f64,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    /// Sample size of tree studies.
    pub n: Option<usize>,
    pub censoring_r: f64,
    #[serde(default = "default_family")]
    pub dependence_family: String,
    #[serde(default)]
    pub dependence_tau: f64,
    pub n_sim: usize,
    #[serde(default = "default_n_perm")]
    pub n_perm: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub methods: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_p_threshold")]
    pub p_threshold: f64,
    #[serde(default = "default_min_node")]
    pub min_node_size: usize,
    pub pathway_p: Option<usize>,
    pub pathway_q: Option<usize>,
    pub pathway_rho: Option<f64>,
    pub round_decimals: Option<i64>,
}

fn default_family() -> String {
    "clayton".into()
}
fn default_n_perm() -> usize {
    1000
}
fn default_alpha() -> f64 {
    0.05
}
fn default_p_threshold() -> f64 {
    0.01
}
fn default_min_node() -> usize {
    3
}

/// A copula from a family name and tau; tau = 0 means independence.
pub fn copula_from_tau(family: &str, tau: f64) -> Result<CopulaSpec> {
    let family: Family = family.parse()?;
    if tau == 0.0 {
        return Ok(CopulaSpec::independence());
    }
    Ok(CopulaSpec::from_tau(family, tau)?)
}

/// `logrank`, `cge:<family>:<tau>` or `exact:<family>:<tau>`.
fn parse_method(text: &str) -> Result<(String, Option<CopulaSpec>)> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let bad = || CliError::Input(format!("methods: cannot read `{text}` (expected logrank, cge:<family>:<tau> or exact:<family>:<tau>)"));
    match parts.as_slice() {
        ["logrank"] => Ok(("logrank".into(), None)),
        [kind @ ("cge" | "exact"), "independence"] => Ok((kind.to_string(), Some(CopulaSpec::independence()))),
        [kind @ ("cge" | "exact"), family, tau] => {
            let tau: f64 = tau.parse().map_err(|_| bad())?;
            Ok((kind.to_string(), Some(copula_from_tau(family, tau)?)))
        }
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum Study {
    TwoSample(StudyConfig),
    Tree(TreeStudyConfig),
}

pub fn parse_study(text: &str) -> Result<Study> {
    let file: StudyFile = toml::from_str(text)
        .map_err(|e| CliError::Input(format!("study config: {}", e.message())))?;
    file.resolve()
}

impl StudyFile {
    pub fn resolve(&self) -> Result<Study> {
        let dependence = copula_from_tau(&self.dependence_family, self.dependence_tau)?;
        let need = |v: Option<usize>, key: &str| {
            v.ok_or_else(|| CliError::Input(format!("study config: missing key `{key}`")))
        };
        let reject = |present: bool, key: &str| -> Result<()> {
            if present {
                Err(CliError::Input(format!(
                    "study config: key `{key}` does not apply to a {:?} study",
                    self.study
                )))
            } else {
                Ok(())
            }
        };
        let methods = self
            .methods
            .iter()
            .map(|m| parse_method(m))
            .collect::<Result<Vec<_>>>()?;
        let study = match self.study {
            StudyKind::TwoSample => {
                reject(self.n.is_some(), "n")?;
                reject(self.pathway_p.is_some(), "pathway_p")?;
                reject(self.pathway_q.is_some(), "pathway_q")?;
                reject(self.pathway_rho.is_some(), "pathway_rho")?;
                reject(self.round_decimals.is_some(), "round_decimals")?;
                let kind = self.covariate.unwrap_or(CovariateKind::BinaryGroups);
                let scenario = Scenario::two_group(
                    kind,
                    self.effect,
                    need(self.n1, "n1")?,
                    need(self.n2, "n2")?,
                    self.censoring_r,
                    dependence,
                );
                let methods = methods
                    .into_iter()
                    .map(|(kind, copula)| match (kind.as_str(), copula) {
                        ("logrank", _) => Method::Logrank,
                        ("exact", Some(copula)) => Method::Exact { copula },
                        (_, Some(copula)) => Method::Cge { copula },
                        _ => unreachable!("parsed method"),
                    })
                    .collect();
                Study::TwoSample(StudyConfig {
                    scenario,
                    n_sim: self.n_sim,
                    n_perm: self.n_perm,
                    alpha: self.alpha,
                    methods,
                    master_seed: self.seed,
                })
            }
            StudyKind::Tree => {
                reject(self.n1.is_some(), "n1")?;
                reject(self.n2.is_some(), "n2")?;
                if let Some(kind) = self.covariate.filter(|&k| k != CovariateKind::PathwayBlock) {
                    return Err(CliError::Input(format!(
                        "study config: tree studies use covariate = \"pathway_block\", got {kind:?}"
                    )));
                }
                let d = PathwayParams::default();
                let round = match self.round_decimals {
                    None => d.round_decimals,
                    Some(r) if r < 0 => None,
                    Some(r) => Some(r as u32),
                };
                let params = PathwayParams {
                    p: self.pathway_p.unwrap_or(d.p),
                    q: self.pathway_q.unwrap_or(d.q),
                    rho: self.pathway_rho.unwrap_or(d.rho),
                    round_decimals: round,
                };
                let scenario =
                    Scenario::pathway(need(self.n, "n")?, self.effect, self.censoring_r, dependence, params);
                let methods = methods
                    .into_iter()
                    .map(|(kind, copula)| match (kind.as_str(), copula) {
                        ("logrank", _) => Ok(TreeMethod::Logrank),
                        ("cge", Some(copula)) => Ok(TreeMethod::Cge { copula }),
                        _ => Err(CliError::Input("methods: tree studies accept only cge and logrank".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Study::Tree(TreeStudyConfig {
                    scenario,
                    n_sim: self.n_sim,
                    n_perm: self.n_perm,
                    p_threshold: self.p_threshold,
                    min_node_size: self.min_node_size,
                    methods,
                    master_seed: self.seed,
                })
            }
        };
        match &study {
            Study::TwoSample(c) => c.validate()?,
            Study::Tree(c) => c.validate()?,
        }
        Ok(study)
    }
}

pub enum StudyOutput {
    TwoSample(StudySummary),
    Tree(TreeStudySummary),
}

fn short(kind: &str, copula: &CopulaSpec) -> String {
    format!("{kind}-{}-tau{}", copula.family(), copula.tau())
}

/// Short method names used in the output files.
pub fn method_label(m: &Method) -> String {
    match m {
        Method::Logrank => "logrank".into(),
        Method::Cge { copula } => short("cge", copula),
        Method::Exact { copula } => short("exact", copula),
    }
}

pub fn tree_method_label(m: &TreeMethod) -> String {
    match m {
        TreeMethod::Logrank => "logrank".into(),
        TreeMethod::Cge { copula } => short("cge", copula),
    }
}

pub fn run(study: &Study) -> Result<StudyOutput> {
    let relabel = |name: &mut String, pairs: &[(String, String)]| {
        if let Some((_, s)) = pairs.iter().find(|(l, _)| l == name) {
            *name = s.clone();
        }
    };
    Ok(match study {
        Study::TwoSample(c) => {
            let pairs: Vec<(String, String)> =
                c.methods.iter().map(|m| (m.label(), method_label(m))).collect();
            let mut out = run_study(c)?;
            out.methods.iter_mut().for_each(|m| relabel(&mut m.method, &pairs));
            out.records.iter_mut().for_each(|r| relabel(&mut r.method, &pairs));
            StudyOutput::TwoSample(out)
        }
        Study::Tree(c) => {
            let pairs: Vec<(String, String)> =
                c.methods.iter().map(|m| (m.label(), tree_method_label(m))).collect();
            let mut out = run_tree_study(c)?;
            out.methods.iter_mut().for_each(|m| relabel(&mut m.method, &pairs));
            out.records.iter_mut().for_each(|r| relabel(&mut r.method, &pairs));
            StudyOutput::Tree(out)
        }
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("writing csv: {e}"))
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

impl StudyOutput {
    pub fn write_summary<W: Write>(&self, out: W) -> Result<()> {
        match self {
            StudyOutput::TwoSample(s) => write_rows(
                out,
                &["method", "n_sim", "rejections", "power", "se", "se_inflated", "mean_censoring_group1", "mean_censoring_group2"],
                s.methods
                    .iter()
                    .map(|m| {
                        vec![
                            m.method.clone(),
                            s.n_sim.to_string(),
                            m.rejections.to_string(),
                            m.power.to_string(),
                            m.se.to_string(),
                            m.se_inflated.to_string(),
                            s.mean_censoring_group1.to_string(),
                            s.mean_censoring_group2.to_string(),
                        ]
                    })
                    .collect(),
            ),
            StudyOutput::Tree(s) => write_rows(
                out,
                &["method", "n_sim", "mean_terminal", "mean_precision", "precision_undefined", "mean_harrell_c", "mean_ibs_km", "mean_ibs_cge", "mean_censoring"],
                s.methods
                    .iter()
                    .map(|m| {
                        vec![
                            m.method.clone(),
                            s.n_sim.to_string(),
                            m.mean_terminal.to_string(),
                            opt(m.mean_precision),
                            m.precision_undefined.to_string(),
                            opt(m.mean_harrell_c),
                            m.mean_ibs_km.to_string(),
                            m.mean_ibs_cge.to_string(),
                            s.mean_censoring.to_string(),
                        ]
                    })
                    .collect(),
            ),
        }
    }

    pub fn write_records<W: Write>(&self, out: W) -> Result<()> {
        match self {
            StudyOutput::TwoSample(s) => write_rows(
                out,
                &["replicate", "method", "p_value", "reject", "censoring_group1", "censoring_group2"],
                s.records
                    .iter()
                    .map(|r| {
                        vec![
                            r.replicate.to_string(),
                            r.method.clone(),
                            r.p_value.to_string(),
                            r.reject.to_string(),
                            r.censoring_group1.to_string(),
                            r.censoring_group2.to_string(),
                        ]
                    })
                    .collect(),
            ),
            StudyOutput::Tree(s) => write_rows(
                out,
                &["replicate", "method", "n_terminal", "precision", "harrell_c", "ibs_km", "ibs_cge", "censoring_train"],
                s.records
                    .iter()
                    .map(|r| {
                        vec![
                            r.replicate.to_string(),
                            r.method.clone(),
                            r.report.n_terminal.to_string(),
                            opt(r.report.precision),
                            opt(r.report.harrell_c),
                            r.report.ibs_km.to_string(),
                            opt(r.report.ibs_cge),
                            r.censoring_train.to_string(),
                        ]
                    })
                    .collect(),
            ),
        }
    }
}
