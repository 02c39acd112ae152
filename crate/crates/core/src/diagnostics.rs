//! Convergence checks, α grid scans and the Hamming-similarity baseline.

use crate::error::{Error, Result};
use crate::matrix::{BinaryMatrix, RealMatrix};
use crate::sampler::{run_chain, ChainConfig, ChainResult, Observations};
use crate::sp::{argmax_prefer_smaller, SpParams};

/// Pairwise Pearson correlations between flattened snapshot averages.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub coefficients: RealMatrix,
    pub min_off_diagonal: f64,
}

impl CorrelationReport {
    /// One-line summary written next to the coefficient matrix.
    pub fn summary(&self) -> String {
        format!("min_off_diagonal={}", self.min_off_diagonal)
    }
}

/// Pearson coefficients between every pair of snapshots. With
/// `exclude_diagonal` the `(i, i)` cells of square snapshots are skipped.
pub fn pearson_matrix(snapshots: &[RealMatrix], exclude_diagonal: bool) -> Result<CorrelationReport> {
    if snapshots.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 snapshots, got {}",
            snapshots.len()
        )));
    }
    let shape = snapshots[0].shape();
    if let Some(bad) = snapshots.iter().find(|s| s.shape() != shape) {
        return Err(Error::Dimension(format!(
            "snapshot shapes differ: {:?} vs {:?}",
            shape,
            bad.shape()
        )));
    }
    let (rows, cols) = shape;
    let keep: Vec<usize> = (0..rows * cols)
        .filter(|&k| !(exclude_diagonal && k / cols == k % cols))
        .collect();

    // Centered, unit-norm vectors: the coefficient is then a dot product.
    let mut normed = Vec::with_capacity(snapshots.len());
    for (b, s) in snapshots.iter().enumerate() {
        let v = s.values();
        let mean = keep.iter().map(|&k| v[k]).sum::<f64>() / keep.len() as f64;
        let centered: Vec<f64> = keep.iter().map(|&k| v[k] - mean).collect();
        let norm = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
        if keep.is_empty() || norm == 0.0 {
            return Err(Error::DegenerateSnapshot(b));
        }
        normed.push(centered.into_iter().map(|x| x / norm).collect::<Vec<_>>());
    }

    let k = snapshots.len();
    let mut coefficients = RealMatrix::zeros(k, k);
    let mut min_off_diagonal = f64::INFINITY;
    for a in 0..k {
        coefficients.set(a, a, 1.0);
        for b in a + 1..k {
            let r: f64 = normed[a].iter().zip(&normed[b]).map(|(x, y)| x * y).sum();
            let r = r.clamp(-1.0, 1.0);
            coefficients.set(a, b, r);
            coefficients.set(b, a, r);
            min_off_diagonal = min_off_diagonal.min(r);
        }
    }
    Ok(CorrelationReport {
        coefficients,
        min_off_diagonal,
    })
}

/// Results of [`alpha_scan`], in grid order.
#[derive(Debug, Clone)]
pub struct AlphaScan {
    pub runs: Vec<(f64, ChainResult)>,
    pub selected_alpha: f64,
}

impl AlphaScan {
    /// `(α, mean log-posterior over the final block)` per grid point.
    pub fn scores(&self) -> Vec<(f64, f64)> {
        self.runs
            .iter()
            .map(|(a, r)| (*a, r.mean_final_block_log_posterior()))
            .collect()
    }
}

/// Runs one chain per α, seeded `template.seed + index`, concurrently.
/// Selects the α whose final block has the highest mean log-posterior;
/// ties go to the smaller α.
pub fn alpha_scan(data: &Observations, grid: &[f64], template: &ChainConfig) -> Result<AlphaScan> {
    if grid.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()));
    }
    let mut configs = Vec::with_capacity(grid.len());
    for (i, &a) in grid.iter().enumerate() {
        let mut cfg = template.clone();
        cfg.alpha = SpParams::new(a)?;
        cfg.seed = template.seed.wrapping_add(i as u64);
        cfg.validate()?;
        configs.push(cfg);
    }

    let results: Vec<Result<ChainResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| s.spawn(move || run_chain(data, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    });

    let mut runs = Vec::with_capacity(grid.len());
    for (&a, r) in grid.iter().zip(results) {
        let r = r.map_err(|e| Error::Scan {
            alpha: a,
            source: Box::new(e),
        })?;
        runs.push((a, r));
    }
    let scores: Vec<(f64, f64)> = runs
        .iter()
        .map(|(a, r)| (*a, r.mean_final_block_log_posterior()))
        .collect();
    Ok(AlphaScan {
        selected_alpha: argmax_prefer_smaller(&scores),
        runs,
    })
}

/// `S(i, j) = 1 / (1 + H(i, j))` with `H` the Hamming distance between rows.
pub fn hamming_similarity(m: &BinaryMatrix) -> RealMatrix {
    let n = m.rows();
    let s = RealMatrix::from_fn(n, n, |i, j| {
        let h = m.row(i).iter().zip(m.row(j)).filter(|(a, b)| a != b).count();
        1.0 / (1.0 + h as f64)
    });
    let labels = m.row_labels().map(<[String]>::to_vec);
    s.with_labels(labels.clone(), labels)
}

/// Area under the ROC curve of `scores` against binary `truth`, with tied
/// scores counted as half. `None` if either class is empty.
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), truth.len(), "scores and labels differ in length");
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| truth[k]).count() as f64 * mid;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Some(u / (pos * neg) as f64)
}
