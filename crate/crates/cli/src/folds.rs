use std::io::Write;

use cgesurv::rng;
use rand::seq::SliceRandom;

use crate::error::{CliError, Result};

/// Seeded assignment of `n` rows to `k` folds whose sizes differ by at most one.
pub fn assign_folds(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(CliError::Usage(format!("--folds must be >= 2, got {k}")));
    }
    if k > n {
        return Err(CliError::Usage(format!("--folds {k} exceeds the {n} rows")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, &[rng::label("folds")]));
    let mut fold = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        fold[row] = pos % k;
    }
    Ok(fold)
}

/// `row,fold` lines, rows numbered from 0 in file order.
pub fn write_folds<W: Write>(folds: &[usize], mut out: W) -> std::io::Result<()> {
    writeln!(out, "row,fold")?;
    for (i, f) in folds.iter().enumerate() {
        writeln!(out, "{i},{f}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_are_balanced() {
        for (n, k) in [(10, 3), (306, 5), (7, 7), (100, 2)] {
            let f = assign_folds(n, k, 9).unwrap();
            let sizes: Vec<usize> = (0..k).map(|j| f.iter().filter(|&&x| x == j).count()).collect();
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            assert!(hi - lo <= 1, "{sizes:?}");
            assert_eq!(sizes.iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn seeded() {
        assert_eq!(assign_folds(50, 5, 1).unwrap(), assign_folds(50, 5, 1).unwrap());
        assert_ne!(assign_folds(50, 5, 1).unwrap(), assign_folds(50, 5, 2).unwrap());
    }

    #[test]
    fn rejects_bad_k() {
        assert!(assign_folds(5, 1, 0).is_err());
        assert!(assign_folds(5, 6, 0).is_err());
    }
}
