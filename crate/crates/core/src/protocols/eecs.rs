use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{by_energy_desc, enforce_ch_separation, form_clusters_by, ClusterSet};
use crate::error::{invalid, Result};
use crate::model::{euclidean_distance, squared_distance, Node, Position};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EecsParams {
    /// Probability that a node volunteers as a candidate head.
    pub p: f64,
    /// Joining-cost weight on member distance; `1 - w` weighs the head's
    /// distance to the base station.
    pub w: f64,
    /// Candidates closer than this compete and only the strongest survives.
    pub compete_radius: f64,
    /// Optional minimum spacing between final heads. Zero disables it.
    pub min_ch_separation: f64,
}

impl Default for EecsParams {
    fn default() -> Self {
        Self {
            p: 0.05,
            w: 0.5,
            compete_radius: 25.0,
            min_ch_separation: 0.0,
        }
    }
}

impl EecsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(invalid("p", format!("must be in (0, 1], got {}", self.p)));
        }
        if !(0.0..=1.0).contains(&self.w) {
            return Err(invalid("w", format!("must be in [0, 1], got {}", self.w)));
        }
        if !(self.compete_radius >= 0.0 && self.compete_radius.is_finite()) {
            return Err(invalid("compete_radius", "must be finite and >= 0"));
        }
        if !(self.min_ch_separation >= 0.0 && self.min_ch_separation.is_finite()) {
            return Err(invalid("min_ch_separation", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Candidate election and local competition. Volunteers are drawn with
/// probability `p` (the most energetic alive node if nobody volunteers);
/// then, in descending energy order, a volunteer survives only if no
/// surviving candidate lies within `compete_radius`.
pub fn eecs_candidates<R: Rng + ?Sized>(
    nodes: &[Node],
    params: &EecsParams,
    rng: &mut R,
) -> Vec<usize> {
    let mut volunteers: Vec<usize> = Vec::new();
    for node in nodes.iter().filter(|n| n.alive) {
        if rng.gen::<f64>() < params.p {
            volunteers.push(node.id);
        }
    }
    if volunteers.is_empty() {
        if let Some(best) = nodes
            .iter()
            .filter(|n| n.alive)
            .min_by(|a, b| by_energy_desc(a, b))
        {
            volunteers.push(best.id);
        }
    }
    let mut order: Vec<&Node> = volunteers.iter().map(|&id| &nodes[id]).collect();
    order.sort_by(|a, b| by_energy_desc(a, b));
    let r2 = params.compete_radius * params.compete_radius;
    let mut kept: Vec<&Node> = Vec::new();
    for cand in order {
        if kept.iter().all(|k| squared_distance(k.pos, cand.pos) > r2) {
            kept.push(cand);
        }
    }
    let mut ids: Vec<usize> = kept.iter().map(|n| n.id).collect();
    ids.sort_unstable();
    ids
}

/// Distance-aware formation: members weigh proximity to a head against that
/// head's distance to the base station, so heads far from the sink end up
/// with smaller clusters.
///
/// `cost(j, i) = w * d(j, i) / d_max(j) + (1 - w) * (d(i, bs) - d_bs_min) / (d_bs_max - d_bs_min)`
///
/// where `d_max(j)` is the distance from `j` to its farthest head and the BS
/// extremes are taken over the heads. The second term is zero when all
/// heads are equally far from the base station.
pub fn eecs_form_clusters<R: Rng + ?Sized>(
    nodes: &[Node],
    bs: Position,
    params: &EecsParams,
    rng: &mut R,
) -> Result<ClusterSet> {
    params.validate()?;
    if !nodes.iter().any(|n| n.alive) {
        return Err(invalid("nodes", "at least one alive node is required"));
    }
    let mut heads = eecs_candidates(nodes, params, rng);
    if params.min_ch_separation > 0.0 {
        heads = enforce_ch_separation(&heads, nodes, params.min_ch_separation);
    }
    eecs_join(nodes, &heads, bs, params.w)
}

/// Joining step of EECS over a fixed head set.
pub(crate) fn eecs_join(
    nodes: &[Node],
    heads: &[usize],
    bs: Position,
    w: f64,
) -> Result<ClusterSet> {
    let bs_dist: Vec<f64> = heads
        .iter()
        .map(|&h| euclidean_distance(nodes[h].pos, bs))
        .collect();
    let bs_min = bs_dist.iter().copied().fold(f64::INFINITY, f64::min);
    let bs_max = bs_dist.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bs_span = bs_max - bs_min;
    let bs_term = |head: &Node| {
        if bs_span > 0.0 {
            (euclidean_distance(head.pos, bs) - bs_min) / bs_span
        } else {
            0.0
        }
    };
    // farthest head per node, the member-distance normalizer
    let far: Vec<f64> = nodes
        .iter()
        .map(|n| {
            heads
                .iter()
                .map(|&h| euclidean_distance(n.pos, nodes[h].pos))
                .fold(0.0, f64::max)
        })
        .collect();
    form_clusters_by(nodes, heads, |member, head| {
        let d = euclidean_distance(member.pos, head.pos);
        let near = if far[member.id] > 0.0 {
            d / far[member.id]
        } else {
            0.0
        };
        w * near + (1.0 - w) * bs_term(head)
    })
}
