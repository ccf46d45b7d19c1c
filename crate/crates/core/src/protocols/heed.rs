use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Cluster, ClusterSet};
use crate::error::{invalid, Result};
use crate::model::{squared_distance, Node};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeedParams {
    /// Scale of the initial head probability for a full battery.
    pub c_prob: f64,
    /// Floor on the initial head probability; bounds the iteration count.
    pub p_min: f64,
    /// Neighborhood and joining range, meters.
    pub cluster_radius: f64,
    /// Hard cap on election iterations.
    pub max_iterations: usize,
}

impl Default for HeedParams {
    fn default() -> Self {
        Self {
            c_prob: 0.05,
            p_min: 1e-4,
            cluster_radius: 25.0,
            max_iterations: 64,
        }
    }
}

impl HeedParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_min > 0.0 && self.p_min <= self.c_prob && self.c_prob <= 1.0) {
            return Err(invalid(
                "c_prob",
                format!(
                    "need 0 < p_min <= c_prob <= 1, got p_min={} c_prob={}",
                    self.p_min, self.c_prob
                ),
            ));
        }
        if !(self.cluster_radius > 0.0 && self.cluster_radius.is_finite()) {
            return Err(invalid("cluster_radius", "must be finite and > 0"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations", "must be >= 1"));
        }
        Ok(())
    }
}

/// `ceil(log2(1/p_min)) + 1`: iterations needed for the smallest possible
/// probability to double up to one, plus the closing iteration.
pub fn heed_iteration_bound(p_min: f64) -> usize {
    let mut prob = p_min;
    let mut doublings = 0;
    while prob < 1.0 {
        prob *= 2.0;
        doublings += 1;
    }
    doublings + 1
}

/// Communication cost of `candidate` as a head: mean squared distance to its
/// alive neighbors within `radius`, or `radius^2` if it has none.
pub fn heed_cost(candidate: &Node, nodes: &[Node], radius: f64) -> f64 {
    let r2 = radius * radius;
    let (sum, count) = nodes
        .iter()
        .filter(|n| n.alive && n.id != candidate.id)
        .map(|n| squared_distance(n.pos, candidate.pos))
        .filter(|&d2| d2 <= r2)
        .fold((0.0, 0_usize), |(s, c), d2| (s + d2, c + 1));
    if count == 0 {
        r2
    } else {
        sum / count as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeedFormation {
    pub clusters: ClusterSet,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Plain,
    Tentative,
    Final,
}

/// Iterative distributed election.
///
/// Each node starts from `max(c_prob * E/E_init, p_min)`. In each iteration a
/// node looks at the heads announced in the previous iteration within range
/// (itself included). If one exists, the node follows the cheapest; a
/// tentative head that is not the cheapest withdraws, and one that is the
/// cheapest turns final once its probability is one. A node that sees no
/// head announces with its current probability, and declares itself final
/// when that probability is one. Probabilities double each iteration, and
/// the loop stops after the iteration run at probability one. Non-heads then
/// join the cheapest final head in range, or become orphans.
pub fn heed_form_clusters<R: Rng + ?Sized>(
    nodes: &[Node],
    params: &HeedParams,
    initial_energy: f64,
    rng: &mut R,
) -> Result<HeedFormation> {
    params.validate()?;
    let alive: Vec<usize> = nodes.iter().filter(|n| n.alive).map(|n| n.id).collect();
    if alive.is_empty() {
        return Err(invalid("nodes", "at least one alive node is required"));
    }
    let r2 = params.cluster_radius * params.cluster_radius;
    // neighbors[slot] lists slots within range, excluding the node itself
    let neighbors: Vec<Vec<usize>> = alive
        .iter()
        .map(|&i| {
            (0..alive.len())
                .filter(|&s| {
                    alive[s] != i && squared_distance(nodes[alive[s]].pos, nodes[i].pos) <= r2
                })
                .collect()
        })
        .collect();
    let cost: Vec<f64> = alive
        .iter()
        .map(|&i| heed_cost(&nodes[i], nodes, params.cluster_radius))
        .collect();
    let cheaper =
        |a: usize, b: usize| cost[a] < cost[b] || (cost[a] == cost[b] && alive[a] < alive[b]);

    let mut prob: Vec<f64> = alive
        .iter()
        .map(|&i| (params.c_prob * nodes[i].energy / initial_energy).clamp(params.p_min, 1.0))
        .collect();
    let mut status = vec![Status::Plain; alive.len()];
    let mut iterations = 0;

    loop {
        iterations += 1;
        let snapshot = status.clone();
        for s in 0..alive.len() {
            if snapshot[s] == Status::Final {
                continue;
            }
            let cheapest = std::iter::once(s)
                .filter(|&s| snapshot[s] != Status::Plain)
                .chain(
                    neighbors[s]
                        .iter()
                        .copied()
                        .filter(|&t| snapshot[t] != Status::Plain),
                )
                .reduce(|best, t| if cheaper(t, best) { t } else { best });
            status[s] = match cheapest {
                Some(best) if best == s => {
                    if prob[s] >= 1.0 {
                        Status::Final
                    } else {
                        Status::Tentative
                    }
                }
                Some(_) => Status::Plain,
                None if prob[s] >= 1.0 => Status::Final,
                None => {
                    if rng.gen::<f64>() < prob[s] {
                        Status::Tentative
                    } else {
                        Status::Plain
                    }
                }
            };
        }
        let finished = prob.iter().all(|&p| p >= 1.0);
        if finished || iterations >= params.max_iterations {
            break;
        }
        for p in &mut prob {
            *p = (*p * 2.0).min(1.0);
        }
    }

    let mut clusters: Vec<Cluster> = (0..alive.len())
        .filter(|&s| status[s] == Status::Final)
        .map(|s| Cluster {
            head: alive[s],
            members: Vec::new(),
        })
        .collect();
    let head_slot: Vec<Option<usize>> = {
        let mut v = vec![None; alive.len()];
        let mut c = 0;
        for s in 0..alive.len() {
            if status[s] == Status::Final {
                v[s] = Some(c);
                c += 1;
            }
        }
        v
    };
    let mut orphans = Vec::new();
    for s in 0..alive.len() {
        if status[s] == Status::Final {
            continue;
        }
        let best = neighbors[s]
            .iter()
            .copied()
            .filter(|&t| status[t] == Status::Final)
            .reduce(|best, t| if cheaper(t, best) { t } else { best });
        match best.and_then(|t| head_slot[t]) {
            Some(c) => clusters[c].members.push(alive[s]),
            None => orphans.push(alive[s]),
        }
    }
    Ok(HeedFormation {
        clusters: ClusterSet { clusters, orphans },
        iterations,
    })
}
