use serde::{Deserialize, Serialize};

use super::argmin_by;
use crate::error::{invalid, Result};
use crate::model::{squared_distance, Node, Position};

/// Result of a K-means run.
///
/// `assignment[i]` is the cluster of `point_ids[i]`. For runs started from
/// nodes, `point_ids` are the alive node ids in input order; for raw point
/// runs they are `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardPartition {
    pub point_ids: Vec<usize>,
    pub assignment: Vec<usize>,
    pub centroids: Vec<Position>,
    pub iterations: usize,
    pub converged: bool,
    /// Sum of squared point-to-centroid distances.
    pub objective: f64,
    /// Objective before the first iteration, then after every iteration.
    pub objective_trace: Vec<f64>,
}

/// Initial centroids: positions of the `k` alive nodes with the most residual
/// energy, ties broken by lower id.
pub fn kmeans_init(nodes: &[Node], k: usize) -> Result<Vec<Position>> {
    let mut alive: Vec<&Node> = nodes.iter().filter(|n| n.alive).collect();
    if k == 0 || k > alive.len() {
        return Err(invalid(
            "k",
            format!("must be in 1..={} (alive nodes), got {k}", alive.len()),
        ));
    }
    alive.sort_by(|a, b| b.energy.total_cmp(&a.energy).then(a.id.cmp(&b.id)));
    Ok(alive.iter().take(k).map(|n| n.pos).collect())
}

/// Nearest-centroid assignment, ties to the lower centroid index.
pub fn kmeans_assign(points: &[Position], centroids: &[Position]) -> Result<Vec<usize>> {
    if centroids.is_empty() {
        return Err(invalid("centroids", "at least one centroid is required"));
    }
    Ok(points
        .iter()
        .map(|p| argmin_by(centroids, |c| squared_distance(*p, *c)).expect("non-empty"))
        .collect())
}

/// Recomputes each centroid as the mean of its points. Empty clusters keep
/// their previous centroid.
pub fn kmeans_update(
    points: &[Position],
    assignment: &[usize],
    previous: &[Position],
) -> Vec<Position> {
    let k = previous.len();
    let mut sums = vec![(0.0_f64, 0.0_f64, 0_usize); k];
    for (p, &c) in points.iter().zip(assignment) {
        let s = &mut sums[c];
        s.0 += p.x;
        s.1 += p.y;
        s.2 += 1;
    }
    sums.iter()
        .zip(previous)
        .map(|(&(sx, sy, count), prev)| {
            if count == 0 {
                *prev
            } else {
                Position::new(sx / count as f64, sy / count as f64)
            }
        })
        .collect()
}

pub fn kmeans_objective(points: &[Position], assignment: &[usize], centroids: &[Position]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| squared_distance(*p, centroids[c]))
        .sum()
}

/// Lloyd iterations from explicit initial centroids until the assignment
/// stops changing or `max_iter` iterations have run.
pub fn kmeans_run_from(
    points: &[Position],
    initial: Vec<Position>,
    max_iter: usize,
) -> Result<HardPartition> {
    if max_iter == 0 {
        return Err(invalid("max_iter", "must be >= 1"));
    }
    let mut centroids = initial;
    let mut assignment = kmeans_assign(points, &centroids)?;
    let mut trace = vec![kmeans_objective(points, &assignment, &centroids)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        centroids = kmeans_update(points, &assignment, &centroids);
        let next = kmeans_assign(points, &centroids)?;
        trace.push(kmeans_objective(points, &next, &centroids));
        let unchanged = next == assignment;
        assignment = next;
        if unchanged {
            converged = true;
            break;
        }
    }
    Ok(HardPartition {
        point_ids: (0..points.len()).collect(),
        objective: *trace.last().expect("trace is never empty"),
        objective_trace: trace,
        assignment,
        centroids,
        iterations,
        converged,
    })
}

/// K-means over the alive nodes, seeded with the `k` highest-energy nodes.
pub fn kmeans_run(nodes: &[Node], k: usize, max_iter: usize) -> Result<HardPartition> {
    let initial = kmeans_init(nodes, k)?;
    let (ids, points): (Vec<usize>, Vec<Position>) = nodes
        .iter()
        .filter(|n| n.alive)
        .map(|n| (n.id, n.pos))
        .unzip();
    let mut partition = kmeans_run_from(&points, initial, max_iter)?;
    partition.point_ids = ids;
    Ok(partition)
}
