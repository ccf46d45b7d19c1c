//! Convergence comparison of K-means and fuzzy C-means formation over a grid
//! of cluster counts on fixed deployments.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::engine::FuzzyParams;
use crate::error::{invalid, Result};
use crate::metrics::ToCsv;
use crate::model::Node;
use crate::partition::FcmParams;
use crate::protocols::{fuzzy_form_clusters, kmeans_form_clusters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k: usize,
    pub kmeans_iterations: Vec<usize>,
    pub fuzzy_iterations: Vec<usize>,
}

fn mean(v: &[usize]) -> f64 {
    v.iter().sum::<usize>() as f64 / v.len() as f64
}

impl SweepCell {
    pub fn kmeans_mean(&self) -> f64 {
        mean(&self.kmeans_iterations)
    }

    pub fn fuzzy_mean(&self) -> f64 {
        mean(&self.fuzzy_iterations)
    }
}

/// One row per cluster count; each cell holds one sample per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
}

/// One deployment and the FCM initialization seed used on it.
#[derive(Debug, Clone)]
pub struct SweepTrial<'a> {
    pub nodes: &'a [Node],
    pub fcm_seed: u64,
}

/// Runs K-means and FCM formation for every grid value on every trial.
pub fn iteration_sweep(
    trials: &[SweepTrial<'_>],
    grid: &[usize],
    kmeans_max_iter: usize,
    fuzzy: &FuzzyParams,
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(invalid("grid", "at least one cluster count is required"));
    }
    if trials.is_empty() {
        return Err(invalid("seeds", "at least one seed is required"));
    }
    let mut cells = Vec::with_capacity(grid.len());
    for &k in grid {
        let mut cell = SweepCell {
            k,
            kmeans_iterations: Vec::with_capacity(trials.len()),
            fuzzy_iterations: Vec::with_capacity(trials.len()),
        };
        for trial in trials {
            let (_, it) = kmeans_form_clusters(trial.nodes, k, kmeans_max_iter)?;
            cell.kmeans_iterations.push(it);
            let fcm = FcmParams {
                k,
                m: fuzzy.m,
                tol: fuzzy.tol,
                max_iter: fuzzy.max_iter,
                seed: trial.fcm_seed,
            };
            let (_, it) = fuzzy_form_clusters(trial.nodes, &fcm)?;
            cell.fuzzy_iterations.push(it);
        }
        cells.push(cell);
    }
    Ok(SweepTable { cells })
}

impl SweepTable {
    /// Cells where FCM needed no more iterations than K-means on average.
    pub fn fuzzy_not_slower(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.fuzzy_mean() <= c.kmeans_mean())
            .count()
    }
}

impl ToCsv for SweepTable {
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cluster_heads", "fuzzy", "kmeans"])?;
        for c in &self.cells {
            w.write_record([
                c.k.to_string(),
                c.fuzzy_mean().to_string(),
                c.kmeans_mean().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
