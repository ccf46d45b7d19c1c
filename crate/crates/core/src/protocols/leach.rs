use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{by_energy_desc, enforce_ch_separation, form_clusters_nearest, ClusterSet};
use crate::error::{invalid, Result};
use crate::model::Node;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeachParams {
    /// Desired fraction of cluster heads per round.
    pub p: f64,
    /// Optional minimum spacing between elected heads, meters. Zero disables it.
    pub min_ch_separation: f64,
}

impl Default for LeachParams {
    fn default() -> Self {
        Self {
            p: 0.05,
            min_ch_separation: 0.0,
        }
    }
}

impl LeachParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(invalid("p", format!("must be in (0, 1], got {}", self.p)));
        }
        if !(self.min_ch_separation >= 0.0 && self.min_ch_separation.is_finite()) {
            return Err(invalid("min_ch_separation", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Rounds in one rotation epoch, `ceil(1/p)`. Values of `1/p` within
/// rounding noise of an integer are taken as that integer.
pub fn epoch_length(p: f64) -> u64 {
    let inv = 1.0 / p;
    let nearest = inv.round();
    if (inv - nearest).abs() < 1e-9 {
        nearest as u64
    } else {
        inv.ceil() as u64
    }
}

/// Election threshold `p / (1 - p * (r mod epoch))` for eligible nodes, zero
/// otherwise. Evaluated as `1 / (1/p - r mod epoch)` so the last round of an
/// epoch yields exactly one.
pub fn leach_threshold(p: f64, round: u64, eligible: bool) -> f64 {
    if !eligible {
        return 0.0;
    }
    let phase = (round % epoch_length(p)) as f64;
    (1.0 / (1.0 / p - phase)).min(1.0)
}

/// A node is in the eligible set when it has not headed a cluster since the
/// current epoch began.
pub fn leach_eligible(node: &Node, p: f64, round: u64) -> bool {
    node.alive && node.rounds_since_ch >= round % epoch_length(p)
}

/// Self-election: every alive node draws once from `rng` and becomes a head
/// when the draw is below its threshold. If nobody elects, the eligible
/// node with the most energy (lowest id on ties) is appointed. Returns an
/// empty list only when no alive node is eligible.
pub fn leach_elect<R: Rng + ?Sized>(
    nodes: &[Node],
    params: &LeachParams,
    round: u64,
    rng: &mut R,
) -> Vec<usize> {
    let mut heads = Vec::new();
    for node in nodes.iter().filter(|n| n.alive) {
        let draw: f64 = rng.gen();
        let threshold = leach_threshold(params.p, round, leach_eligible(node, params.p, round));
        if draw < threshold {
            heads.push(node.id);
        }
    }
    if heads.is_empty() {
        if let Some(best) = nodes
            .iter()
            .filter(|n| leach_eligible(n, params.p, round))
            .min_by(|a, b| by_energy_desc(a, b))
        {
            heads.push(best.id);
        }
    }
    heads
}

/// Full LEACH setup: election, optional spacing filter, nearest-head joining.
/// A round with no eligible node leaves everyone transmitting directly.
pub fn leach_form_clusters<R: Rng + ?Sized>(
    nodes: &[Node],
    params: &LeachParams,
    round: u64,
    rng: &mut R,
) -> Result<ClusterSet> {
    let mut heads = leach_elect(nodes, params, round, rng);
    if heads.is_empty() {
        return Ok(ClusterSet::all_orphans(nodes));
    }
    if params.min_ch_separation > 0.0 {
        heads = enforce_ch_separation(&heads, nodes, params.min_ch_separation);
    }
    form_clusters_nearest(nodes, &heads)
}
