//! Subcommand implementations. Each returns the text written to stdout;
//! files go to `--out-dir`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cgesurv::copula::{CopulaSpec, Family};
use cgesurv::data::censoring_fraction;
use cgesurv::simgen::TreeMethod;
use cgesurv::survcurve::{cge, cge_censoring};
use cgesurv::tree::{fit_tree, SplitTest, Tree, TreeConfig};
use cgesurv::twosample::{logrank_test, permutation_test, TwoSample};
use cgesurv::{Dataset, Observation};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::crossval::{cross_validate, write_records, write_summary, CvSettings};
use crate::error::{CliError, Result};
use crate::folds::{assign_folds, write_folds};
use crate::ingest::{load_covariates, load_dataset};
use crate::study::{copula_from_tau, parse_study, run};

/// Copula-graphic survival tests and trees under dependent censoring.
#[derive(Debug, Parser)]
#[command(name = "cgesurv", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two-sample permutation test on a binary column.
    Test(TestArgs),
    /// Grow a survival tree.
    Fit(FitArgs),
    /// Route rows through a fitted tree.
    Predict(PredictArgs),
    /// k-fold cross-validation over a grid of assumed taus.
    Crossval(CrossvalArgs),
    /// Run a simulation study from a TOML file.
    Simulate(SimulateArgs),
    /// Write a survival or censoring curve as CSV.
    ExportCurve(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Independence,
    Clayton,
    Frank,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Independence => Family::Independence,
            FamilyArg::Clayton => Family::Clayton,
            FamilyArg::Frank => Family::Frank,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CopulaArgs {
    /// Copula family of the assumed dependence.
    #[arg(long, value_enum, default_value = "clayton")]
    pub family: FamilyArg,
    /// Assumed Kendall's tau; 0 means independence.
    #[arg(long, conflicts_with = "theta")]
    pub tau: Option<f64>,
    /// Assumed copula parameter.
    #[arg(long)]
    pub theta: Option<f64>,
}

impl CopulaArgs {
    /// Without `--tau` or `--theta` the copula is independence.
    pub fn spec(&self) -> Result<CopulaSpec> {
        let family = Family::from(self.family);
        match (self.tau, self.theta) {
            (None, None) => Ok(CopulaSpec::independence()),
            (Some(t), None) => copula_from_tau(&family.to_string(), t),
            (None, Some(th)) if family == Family::Independence => {
                Ok(CopulaSpec::from_parts(family, None, Some(th))?)
            }
            (None, Some(th)) => Ok(CopulaSpec::from_theta(family, th)?),
            (Some(_), Some(_)) => Err(CliError::Usage("give --tau or --theta, not both".into())),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with `time`, `status` and covariate columns.
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated covariates to leave out.
    #[arg(long, value_delimiter = ',')]
    pub drop: Vec<String>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        load_dataset(&self.data, &self.drop)
    }
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Binary covariate defining the groups (0 is group 1).
    #[arg(long)]
    pub group: String,
    #[command(flatten)]
    pub copula: CopulaArgs,
    #[arg(long, default_value_t = 1000)]
    pub n_perm: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also report the logrank test.
    #[arg(long)]
    pub logrank: bool,
    /// Write `report.txt` here as well.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Cge,
    Logrank,
}

#[derive(Debug, Clone, Args)]
pub struct TreeArgs {
    /// Split criterion.
    #[arg(long, value_enum, default_value = "cge")]
    pub split: SplitArg,
    #[arg(long, default_value_t = 0.01)]
    pub p_threshold: f64,
    #[arg(long, default_value_t = 1000)]
    pub n_perm: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub min_node_size: usize,
    /// Round covariates to this many decimals before fitting.
    #[arg(long)]
    pub round_decimals: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub copula: CopulaArgs,
    #[command(flatten)]
    pub tree: TreeArgs,
    /// Largest censoring fraction allowed in a child node.
    #[arg(long)]
    pub max_child_censoring: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Tree file written by `fit`.
    #[arg(long)]
    pub tree: PathBuf,
    /// CSV with the tree's covariate columns.
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated times at which to report survival.
    #[arg(long, value_delimiter = ',')]
    pub times: Vec<f64>,
    /// Write `predictions.csv` here instead of stdout.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub const DEFAULT_TAUS: [f64; 8] = [0.0001, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875];

#[derive(Debug, Clone, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Family of the assumed copulas.
    #[arg(long, value_enum, default_value = "clayton")]
    pub family: FamilyArg,
    /// Comma-separated assumed taus.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TAUS)]
    pub taus: Vec<f64>,
    /// Leave the logrank tree out of the comparison.
    #[arg(long)]
    pub no_logrank: bool,
    #[arg(long, default_value_t = 0.01)]
    pub p_threshold: f64,
    #[arg(long, default_value_t = 1000)]
    pub n_perm: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub min_node_size: usize,
    #[arg(long)]
    pub round_decimals: Option<u32>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Study file (flat TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Print the resolved study and stop.
    #[arg(long)]
    pub dry_run: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub copula: CopulaArgs,
    /// Export the censoring curve instead of the survival curve.
    #[arg(long)]
    pub censoring: bool,
    /// Restrict to rows where `column=value`, e.g. `trt=1`.
    #[arg(long)]
    pub subset: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn execute(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Test(a) => cmd_test(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Crossval(a) => cmd_crossval(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::ExportCurve(a) => cmd_export(&a),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn covariate_index(data: &Dataset, name: &str) -> Result<usize> {
    data.covariate_names
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| CliError::Usage(format!("no covariate named `{name}`")))
}

fn split_groups(data: &Dataset, column: &str) -> Result<(Vec<Observation>, Vec<Observation>)> {
    let j = covariate_index(data, column)?;
    if let Some(bad) = data.rows.iter().map(|r| r.covariates[j]).find(|&z| z != 0.0 && z != 1.0) {
        return Err(CliError::Usage(format!("group column `{column}` must be 0/1, found {bad}")));
    }
    let (a, b): (Vec<Observation>, Vec<Observation>) =
        data.rows.iter().cloned().partition(|r| r.covariates[j] == 0.0);
    if a.is_empty() || b.is_empty() {
        return Err(CliError::Usage(format!("group column `{column}` has a single level")));
    }
    Ok((a, b))
}

pub fn cmd_test(a: &TestArgs) -> Result<String> {
    let data = a.data.load()?;
    let spec = a.copula.spec()?;
    let (g1, g2) = split_groups(&data, &a.group)?;
    let (c1, c2) = (censoring_fraction(&g1), censoring_fraction(&g2));
    let sample = TwoSample::new(g1, g2)?;
    let r = permutation_test(&sample, &spec, a.n_perm, a.seed)?;
    let mut out = String::new();
    let _ = writeln!(out, "group_column = {}", a.group);
    let _ = writeln!(out, "copula = {spec}");
    let _ = writeln!(out, "n1 = {}", sample.n1());
    let _ = writeln!(out, "n2 = {}", sample.n2());
    let _ = writeln!(out, "censoring_group1 = {c1}");
    let _ = writeln!(out, "censoring_group2 = {c2}");
    let _ = writeln!(out, "l1 = {}", r.observed_l1);
    let _ = writeln!(out, "signed_l1 = {}", r.signed_l1);
    let _ = writeln!(out, "n_perm = {}", r.n_perm);
    let _ = writeln!(out, "seed = {}", r.seed);
    let _ = writeln!(out, "p_value = {}", r.p_value);
    if r.degenerate {
        let _ = writeln!(out, "degenerate = true");
    }
    if a.logrank {
        let lr = logrank_test(&sample)?;
        let _ = writeln!(out, "logrank_chi_square = {}", lr.chi_square);
        let _ = writeln!(out, "logrank_p_value = {}", lr.p_value);
    }
    if let Some(dir) = &a.out_dir {
        write_file(&dir.join("report.txt"), out.as_bytes())?;
    }
    Ok(out)
}

fn rounded(mut data: Dataset, decimals: Option<u32>) -> Dataset {
    if let Some(d) = decimals {
        data.round_covariates(d);
    }
    data
}

fn tree_config(copula: CopulaSpec, t: &TreeArgs) -> TreeConfig {
    let method = match t.split {
        SplitArg::Cge => TreeMethod::Cge { copula },
        SplitArg::Logrank => TreeMethod::Logrank,
    };
    method.tree_config(t.p_threshold, t.n_perm, t.seed, t.min_node_size)
}

/// One line per node in depth-first order.
pub fn describe_tree(tree: &Tree) -> String {
    let mut out = String::new();
    for node in &tree.nodes {
        let pad = "  ".repeat(node.depth);
        match node.split {
            Some(s) if node.children.is_some() => {
                let _ = writeln!(
                    out,
                    "{pad}node {}: {} <= {} (p = {}, n = {}) goes {}",
                    node.id,
                    tree.covariate_names[s.covariate_index],
                    s.cutoff,
                    s.p_value,
                    node.member_indices.len(),
                    if s.low_goes_left { "left" } else { "right" }
                );
            }
            _ => {
                let median = node
                    .curve
                    .as_ref()
                    .and_then(|c| c.median())
                    .map_or_else(|| "NA".into(), |m| m.to_string());
                let _ = writeln!(
                    out,
                    "{pad}terminal {} (node {}, n = {}, median = {median})",
                    node.terminal_number.unwrap_or(0),
                    node.id,
                    node.member_indices.len()
                );
            }
        }
    }
    out
}

pub fn cmd_fit(a: &FitArgs) -> Result<String> {
    let data = rounded(a.data.load()?, a.tree.round_decimals);
    let mut config = tree_config(a.copula.spec()?, &a.tree);
    config.max_censoring_fraction_child = a.max_child_censoring;
    let tree = fit_tree(&data, &config)?;
    write_file(&a.out_dir.join("tree.json"), tree.to_json().as_bytes())?;
    write_file(&a.out_dir.join("tree.dot"), tree.to_dot().as_bytes())?;
    for node in tree.terminal_nodes() {
        let k = node.terminal_number.expect("terminal number");
        let curve = node.curve.as_ref().expect("terminal curve");
        write_file(
            &a.out_dir.join("curves").join(format!("terminal_{k}.csv")),
            curve.to_csv_string().as_bytes(),
        )?;
    }
    let mut out = String::new();
    let test = match config.test {
        SplitTest::Cge => format!("cge {}", config.copula),
        SplitTest::Logrank => "logrank".into(),
    };
    let _ = writeln!(out, "split_test = {test}");
    let _ = writeln!(out, "n = {}", data.len());
    let _ = writeln!(out, "terminal_nodes = {}", tree.n_terminal());
    out.push_str(&describe_tree(&tree));
    Ok(out)
}

pub fn cmd_predict(a: &PredictArgs) -> Result<String> {
    let text = fs::read_to_string(&a.tree).map_err(|e| CliError::io(&a.tree, e))?;
    let tree = Tree::from_json(&text)?;
    let rows = load_covariates(&a.data, &tree.covariate_names)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Input(format!("writing csv: {e}"));
    let mut header = vec!["row".to_string(), "terminal_node".to_string()];
    header.extend(a.times.iter().map(|t| format!("survival_at_{t}")));
    w.write_record(&header).map_err(csv_err)?;
    for (i, row) in rows.iter().enumerate() {
        let mut rec = vec![i.to_string(), tree.predict_node(row)?.to_string()];
        for &t in &a.times {
            rec.push(tree.predict_survival(row, t)?.to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(format!("writing csv: {e}")))?;
    match &a.out_dir {
        Some(dir) => {
            let path = dir.join("predictions.csv");
            write_file(&path, &bytes)?;
            Ok(format!("wrote {} predictions to {}\n", rows.len(), path.display()))
        }
        None => Ok(String::from_utf8(bytes).expect("utf-8 csv")),
    }
}

pub fn cmd_crossval(a: &CrossvalArgs) -> Result<String> {
    let data = rounded(a.data.load()?, a.round_decimals);
    let family = Family::from(a.family).to_string();
    let mut methods = a
        .taus
        .iter()
        .map(|&t| Ok(TreeMethod::Cge { copula: copula_from_tau(&family, t)? }))
        .collect::<Result<Vec<_>>>()?;
    if !a.no_logrank {
        methods.push(TreeMethod::Logrank);
    }
    if methods.is_empty() {
        return Err(CliError::Usage("no methods: give --taus or drop --no-logrank".into()));
    }
    let folds = assign_folds(data.len(), a.folds, a.seed)?;
    let settings = CvSettings {
        methods,
        p_threshold: a.p_threshold,
        n_perm: a.n_perm,
        min_node_size: a.min_node_size,
        seed: a.seed,
    };
    let outcome = cross_validate(&data, &folds, &settings)?;
    let mut buf = Vec::new();
    write_folds(&folds, &mut buf).map_err(|e| CliError::io(&a.out_dir, e))?;
    write_file(&a.out_dir.join("folds.csv"), &buf)?;
    let mut summary = Vec::new();
    write_summary(&outcome.summaries, &mut summary)?;
    write_file(&a.out_dir.join("crossval_summary.csv"), &summary)?;
    let mut records = Vec::new();
    write_records(&outcome.records, &mut records)?;
    write_file(&a.out_dir.join("crossval_folds.csv"), &records)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    Ok(String::from_utf8(summary).expect("utf-8 csv"))
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<String> {
    let text = fs::read_to_string(&a.config).map_err(|e| CliError::io(&a.config, e))?;
    let study = parse_study(&text)?;
    let resolved = serde_json::to_string_pretty(&study).expect("study serializes") + "\n";
    if a.dry_run {
        return Ok(resolved);
    }
    let output = run(&study)?;
    let mut summary = Vec::new();
    output.write_summary(&mut summary)?;
    let mut records = Vec::new();
    output.write_records(&mut records)?;
    write_file(&a.out_dir.join("study.json"), resolved.as_bytes())?;
    write_file(&a.out_dir.join("summary.csv"), &summary)?;
    write_file(&a.out_dir.join("records.csv"), &records)?;
    Ok(String::from_utf8(summary).expect("utf-8 csv"))
}

pub fn cmd_export(a: &ExportArgs) -> Result<String> {
    let data = a.data.load()?;
    let rows: Vec<Observation> = match &a.subset {
        None => data.rows.clone(),
        Some(rule) => {
            let (name, value) = rule
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--subset expects column=value, got `{rule}`")))?;
            let j = covariate_index(&data, name.trim())?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--subset value `{value}` is not a number")))?;
            data.rows.iter().filter(|r| r.covariates[j] == v).cloned().collect()
        }
    };
    if rows.is_empty() {
        return Err(CliError::Usage("no rows left to estimate a curve from".into()));
    }
    let spec = a.copula.spec()?;
    let curve = if a.censoring { cge_censoring(&rows, &spec)? } else { cge(&rows, &spec)? };
    let text = curve.to_csv_string();
    match &a.out {
        Some(path) => {
            write_file(path, text.as_bytes())?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}
