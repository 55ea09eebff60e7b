//! k-fold cross-validation of tree-growing methods.

use std::io::Write;

use cgesurv::metrics::{harrell_c, tree_integrated_brier};
use cgesurv::survcurve::km_censoring;
use cgesurv::rng;
use cgesurv::simgen::TreeMethod;
use cgesurv::tree::fit_tree;
use cgesurv::Dataset;

use crate::error::{CliError, Result};
use crate::study::tree_method_label;

#[derive(Debug, Clone)]
pub struct CvSettings {
    pub methods: Vec<TreeMethod>,
    pub p_threshold: f64,
    pub n_perm: usize,
    pub min_node_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecord {
    pub method: String,
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_terminal: usize,
    pub harrell_c: Option<f64>,
    pub ibs_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSummary {
    pub method: String,
    pub folds_used: usize,
    pub mean_terminal: f64,
    pub mean_ibs_km: f64,
    /// Mean over folds where the index is defined.
    pub mean_harrell_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CvOutcome {
    pub records: Vec<FoldRecord>,
    pub summaries: Vec<CvSummary>,
    pub warnings: Vec<String>,
}

/// Cross-validate every method on the same folds. Fold `f` grows its trees
/// with seed `key(seed, ["fold", f])`, shared by all methods.
pub fn cross_validate(data: &Dataset, folds: &[usize], settings: &CvSettings) -> Result<CvOutcome> {
    let k = folds.iter().max().map_or(0, |m| m + 1);
    for m in &settings.methods {
        m.tree_config(settings.p_threshold, settings.n_perm, 0, settings.min_node_size)
            .validate()?;
    }
    let mut out = CvOutcome::default();
    let mut usable = Vec::new();
    for f in 0..k {
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] == f).collect();
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] != f).collect();
        let (train, test) = (data.subset(&train_idx), data.subset(&test_idx));
        if !train.rows.iter().any(|r| r.event) || !test.rows.iter().any(|r| r.event) {
            out.warnings.push(format!("fold {f} skipped: no events in its training or test part"));
            continue;
        }
        usable.push((f, train, test));
    }
    for m in &settings.methods {
        let label = tree_method_label(m);
        for (f, train, test) in &usable {
            let seed = rng::key(settings.seed, &[rng::label("fold"), *f as u64]);
            let cfg = m.tree_config(settings.p_threshold, settings.n_perm, seed, settings.min_node_size);
            let tree = fit_tree(train, &cfg)?;
            let nodes = test
                .rows
                .iter()
                .map(|o| tree.predict_node(&o.covariates))
                .collect::<cgesurv::Result<Vec<_>>>()?;
            let hc = if test.len() >= 2 {
                harrell_c(&nodes, &test.times(), &test.events())?
            } else {
                None
            };
            out.records.push(FoldRecord {
                method: label.clone(),
                fold: *f,
                n_train: train.len(),
                n_test: test.len(),
                n_terminal: tree.n_terminal(),
                harrell_c: hc,
                ibs_km: tree_integrated_brier(&tree, &train.rows, &test.rows, &km_censoring(&train.rows)?)?,
            });
        }
        let mine: Vec<&FoldRecord> = out.records.iter().filter(|r| r.method == label).collect();
        let n = mine.len() as f64;
        let hcs: Vec<f64> = mine.iter().filter_map(|r| r.harrell_c).collect();
        out.summaries.push(CvSummary {
            method: label,
            folds_used: mine.len(),
            mean_terminal: mine.iter().map(|r| r.n_terminal as f64).sum::<f64>() / n,
            mean_ibs_km: mine.iter().map(|r| r.ibs_km).sum::<f64>() / n,
            mean_harrell_c: (!hcs.is_empty()).then(|| hcs.iter().sum::<f64>() / hcs.len() as f64),
        });
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Input(format!("writing csv: {e}"))
}

pub fn write_summary<W: Write>(rows: &[CvSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "folds_used", "mean_terminal", "mean_ibs_km", "mean_harrell_c"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.folds_used.to_string(),
            r.mean_terminal.to_string(),
            r.mean_ibs_km.to_string(),
            opt(r.mean_harrell_c),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

pub fn write_records<W: Write>(rows: &[FoldRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "fold", "n_train", "n_test", "n_terminal", "harrell_c", "ibs_km"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.fold.to_string(),
            r.n_train.to_string(),
            r.n_test.to_string(),
            r.n_terminal.to_string(),
            opt(r.harrell_c),
            r.ibs_km.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}
