use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One right-censored record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Observed time `min(T, C)`, finite and positive.
    pub time: f64,
    /// `true` when the event was observed.
    pub event: bool,
    pub covariates: Vec<f64>,
}

impl Observation {
    pub fn new(time: f64, event: bool, covariates: Vec<f64>) -> Result<Self> {
        if !(time.is_finite() && time > 0.0) {
            return Err(Error::Domain(format!(
                "observation time must be finite and > 0, got {time}"
            )));
        }
        Ok(Self {
            time,
            event,
            covariates,
        })
    }

    /// Record without covariates.
    pub fn outcome(time: f64, event: bool) -> Self {
        Self {
            time,
            event,
            covariates: Vec::new(),
        }
    }
}

/// A set of observations sharing one covariate layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub covariate_names: Vec<String>,
    pub rows: Vec<Observation>,
}

impl Dataset {
    pub fn new(covariate_names: Vec<String>, rows: Vec<Observation>) -> Result<Self> {
        let p = covariate_names.len();
        if let Some((i, _)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.covariates.len() != p)
        {
            return Err(Error::Domain(format!(
                "row {i} has {} covariates, expected {p}",
                rows[i].covariates.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| !(r.time.is_finite() && r.time > 0.0)) {
            return Err(Error::Domain(format!(
                "observation time must be finite and > 0, got {}",
                r.time
            )));
        }
        Ok(Self {
            covariate_names,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time).collect()
    }

    pub fn events(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.event).collect()
    }

    pub fn censoring_fraction(&self) -> f64 {
        censoring_fraction(&self.rows)
    }

    /// Copy of the rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            covariate_names: self.covariate_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Round every covariate to `decimals` decimal places.
    pub fn round_covariates(&mut self, decimals: u32) {
        let scale = 10f64.powi(decimals as i32);
        for row in &mut self.rows {
            for z in &mut row.covariates {
                *z = (*z * scale).round() / scale;
            }
        }
    }
}

/// Fraction of records that are censored; 0 for an empty slice.
pub fn censoring_fraction(rows: &[Observation]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|r| !r.event).count() as f64 / rows.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_times() {
        assert!(Observation::new(0.0, true, vec![]).is_err());
        assert!(Observation::new(f64::NAN, true, vec![]).is_err());
        assert!(Observation::new(1.5, false, vec![]).is_ok());
    }

    #[test]
    fn rejects_ragged_rows() {
        let rows = vec![Observation::outcome(1.0, true)];
        assert!(Dataset::new(vec!["z".into()], rows).is_err());
    }

    #[test]
    fn rounding() {
        let mut d = Dataset::new(
            vec!["z".into()],
            vec![Observation::new(1.0, true, vec![0.349]).unwrap()],
        )
        .unwrap();
        d.round_covariates(1);
        assert_eq!(d.rows[0].covariates[0], 0.3);
    }
}
