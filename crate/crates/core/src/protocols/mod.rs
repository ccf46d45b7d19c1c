//! Cluster-formation strategies.
//!
//! Every strategy maps the alive nodes of a round to a [`ClusterSet`]. Node
//! slices passed to these functions must be indexed by id
//! (`nodes[i].id == i`); dead nodes may be present and are ignored.

mod centralized;
mod eecs;
mod heed;
mod leach;

pub use centralized::{fuzzy_form_clusters, kmeans_form_clusters, select_head};
pub use eecs::{eecs_candidates, eecs_form_clusters, EecsParams};
pub use heed::{heed_cost, heed_form_clusters, heed_iteration_bound, HeedFormation, HeedParams};
pub use leach::{
    epoch_length, leach_elect, leach_eligible, leach_form_clusters, leach_threshold, LeachParams,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{squared_distance, Node};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub head: usize,
    pub members: Vec<usize>,
}

/// One round's partition of the alive nodes into clusters plus orphans that
/// talk to the base station directly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub orphans: Vec<usize>,
}

impl ClusterSet {
    pub fn all_orphans(nodes: &[Node]) -> Self {
        Self {
            clusters: Vec::new(),
            orphans: nodes.iter().filter(|n| n.alive).map(|n| n.id).collect(),
        }
    }

    pub fn heads(&self) -> impl Iterator<Item = usize> + '_ {
        self.clusters.iter().map(|c| c.head)
    }

    /// Checks that every alive node appears exactly once and that only alive
    /// nodes are referenced.
    pub fn validate(&self, nodes: &[Node]) -> Result<()> {
        let mut seen = vec![0_u32; nodes.len()];
        let mut mark = |id: usize, role: &str| -> Result<()> {
            let node = nodes
                .get(id)
                .ok_or_else(|| Error::BrokenPartition(format!("{role} {id} does not exist")))?;
            if !node.alive {
                return Err(Error::BrokenPartition(format!("{role} {id} is dead")));
            }
            seen[id] += 1;
            Ok(())
        };
        for c in &self.clusters {
            mark(c.head, "head")?;
            for &m in &c.members {
                if m == c.head {
                    return Err(Error::BrokenPartition(format!(
                        "head {m} lists itself as member"
                    )));
                }
                mark(m, "member")?;
            }
        }
        for &o in &self.orphans {
            mark(o, "orphan")?;
        }
        for n in nodes.iter().filter(|n| n.alive) {
            match seen[n.id] {
                1 => {}
                0 => {
                    return Err(Error::BrokenPartition(format!(
                        "node {} is unassigned",
                        n.id
                    )))
                }
                k => {
                    return Err(Error::BrokenPartition(format!(
                        "node {} appears {k} times",
                        n.id
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Every alive non-head node joins its nearest head; ties go to the lower
/// head id.
pub fn form_clusters_nearest(nodes: &[Node], ch_ids: &[usize]) -> Result<ClusterSet> {
    form_clusters_by(nodes, ch_ids, |node, head| {
        squared_distance(node.pos, head.pos)
    })
}

/// Shared joining rule: each alive non-head picks the head with the lowest
/// `cost`, ties to the lower head id.
pub(crate) fn form_clusters_by(
    nodes: &[Node],
    ch_ids: &[usize],
    mut cost: impl FnMut(&Node, &Node) -> f64,
) -> Result<ClusterSet> {
    if ch_ids.is_empty() {
        return Err(invalid("ch_ids", "at least one cluster head is required"));
    }
    let mut heads = ch_ids.to_vec();
    heads.sort_unstable();
    heads.dedup();
    let mut clusters: Vec<Cluster> = heads
        .iter()
        .map(|&head| Cluster {
            head,
            members: Vec::new(),
        })
        .collect();
    for node in nodes.iter().filter(|n| n.alive) {
        if heads.binary_search(&node.id).is_ok() {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (slot, &h) in heads.iter().enumerate() {
            let c = cost(node, &nodes[h]);
            if best.is_none_or(|(_, b)| c < b) {
                best = Some((slot, c));
            }
        }
        let (slot, _) = best.expect("heads is non-empty");
        clusters[slot].members.push(node.id);
    }
    Ok(ClusterSet {
        clusters,
        orphans: Vec::new(),
    })
}

/// Orders nodes by descending residual energy, ties by ascending id.
pub(crate) fn by_energy_desc(a: &Node, b: &Node) -> std::cmp::Ordering {
    b.energy.total_cmp(&a.energy).then(a.id.cmp(&b.id))
}

/// Greedy spacing filter: visits heads from most to least residual energy and
/// keeps one only if it is at least `min_dist` from every head already kept.
/// The first head visited is always kept.
pub fn enforce_ch_separation(ch_ids: &[usize], nodes: &[Node], min_dist: f64) -> Vec<usize> {
    let mut order: Vec<&Node> = ch_ids.iter().map(|&id| &nodes[id]).collect();
    order.sort_by(|a, b| by_energy_desc(a, b));
    let min_sq = min_dist * min_dist;
    let mut kept: Vec<&Node> = Vec::with_capacity(order.len());
    for cand in order {
        if kept
            .iter()
            .all(|k| squared_distance(k.pos, cand.pos) >= min_sq)
        {
            kept.push(cand);
        }
    }
    let mut ids: Vec<usize> = kept.iter().map(|n| n.id).collect();
    ids.sort_unstable();
    ids
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    #[test]
    fn nearest_single_head_takes_everyone() {
        let nodes = line(5, 3.0);
        let set = form_clusters_nearest(&nodes, &[2]).unwrap();
        assert_eq!(
            set.clusters,
            vec![Cluster {
                head: 2,
                members: vec![0, 1, 3, 4]
            }]
        );
        set.validate(&nodes).unwrap();
    }

    #[test]
    fn nearest_tie_goes_to_lower_head_id() {
        let mut nodes = line(10, 1.0);
        nodes[3].pos.x = 0.0;
        nodes[7].pos.x = 10.0;
        nodes[5].pos.x = 5.0;
        let set = form_clusters_nearest(&nodes, &[7, 3]).unwrap();
        let c3 = set.clusters.iter().find(|c| c.head == 3).unwrap();
        assert!(c3.members.contains(&5));
    }

    #[test]
    fn nearest_by_inspection() {
        let nodes = vec![
            node(0, 0.0, 0.0, 1.0),
            node(1, 10.0, 0.0, 1.0),
            node(2, 2.0, 0.0, 1.0),
        ];
        let set = form_clusters_nearest(&nodes, &[0, 1]).unwrap();
        assert_eq!(set.clusters[0].members, vec![2]);
        assert!(form_clusters_nearest(&nodes, &[]).is_err());
    }

    #[test]
    fn validate_catches_violations() {
        let mut nodes = line(4, 1.0);
        let ok = ClusterSet {
            clusters: vec![Cluster {
                head: 0,
                members: vec![1, 2],
            }],
            orphans: vec![3],
        };
        ok.validate(&nodes).unwrap();

        let missing = ClusterSet {
            clusters: vec![Cluster {
                head: 0,
                members: vec![1],
            }],
            orphans: vec![3],
        };
        assert!(missing.validate(&nodes).is_err());

        let twice = ClusterSet {
            clusters: vec![Cluster {
                head: 0,
                members: vec![1, 2, 3],
            }],
            orphans: vec![3],
        };
        assert!(twice.validate(&nodes).is_err());

        let self_member = ClusterSet {
            clusters: vec![Cluster {
                head: 0,
                members: vec![0, 1, 2, 3],
            }],
            orphans: vec![],
        };
        assert!(self_member.validate(&nodes).is_err());

        nodes[3].consume(10.0);
        assert!(ok.validate(&nodes).is_err());
    }

    #[test]
    fn separation_examples() {
        let mut nodes = line(4, 10.0);
        nodes[1].energy = 2.0;
        assert_eq!(
            enforce_ch_separation(&[0, 1, 2, 3], &nodes, 0.0),
            vec![0, 1, 2, 3]
        );
        assert_eq!(enforce_ch_separation(&[0, 1], &nodes, 50.0), vec![1]);
        assert_eq!(enforce_ch_separation(&[0, 3], &nodes, 30.0), vec![0, 3]);
        // 1 is kept first (most energy), then 3 is 20 m away; 0 and 2 are 10 m from 1
        assert_eq!(
            enforce_ch_separation(&[0, 1, 2, 3], &nodes, 15.0),
            vec![1, 3]
        );
        assert_eq!(enforce_ch_separation(&[2], &nodes, 1e9), vec![2]);
    }
}
