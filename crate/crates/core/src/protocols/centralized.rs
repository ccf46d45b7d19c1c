//! Formation driven by a global position clustering: partition the alive
//! nodes, then hand each non-empty cluster to its most energetic member.

use super::{Cluster, ClusterSet};
use crate::error::{invalid, Result};
use crate::model::{squared_distance, Node, Position};
use crate::partition::{defuzzify, fcm_run, kmeans_run, FcmParams};

/// Head of a cluster: maximum residual energy, then closest to the centroid,
/// then lowest id.
pub fn select_head(members: &[usize], nodes: &[Node], centroid: Position) -> Option<usize> {
    members.iter().copied().min_by(|&a, &b| {
        let (na, nb) = (&nodes[a], &nodes[b]);
        nb.energy
            .total_cmp(&na.energy)
            .then(squared_distance(na.pos, centroid).total_cmp(&squared_distance(nb.pos, centroid)))
            .then(a.cmp(&b))
    })
}

fn build(
    nodes: &[Node],
    ids: &[usize],
    assignment: &[usize],
    centroids: &[Position],
) -> ClusterSet {
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); centroids.len()];
    for (&id, &c) in ids.iter().zip(assignment) {
        groups[c].push(id);
    }
    let clusters = groups
        .into_iter()
        .zip(centroids)
        .filter_map(|(group, &centroid)| {
            let head = select_head(&group, nodes, centroid)?;
            let members = group.into_iter().filter(|&id| id != head).collect();
            Some(Cluster { head, members })
        })
        .collect();
    ClusterSet {
        clusters,
        orphans: Vec::new(),
    }
}

fn check_k(nodes: &[Node], k: usize) -> Result<usize> {
    let alive = nodes.iter().filter(|n| n.alive).count();
    if k == 0 || k > alive {
        return Err(invalid(
            "k",
            format!("must be in 1..={alive} (alive nodes), got {k}"),
        ));
    }
    Ok(alive)
}

/// K-means formation. Returns the cluster set and the K-means iteration count.
pub fn kmeans_form_clusters(
    nodes: &[Node],
    k: usize,
    max_iter: usize,
) -> Result<(ClusterSet, usize)> {
    check_k(nodes, k)?;
    let part = kmeans_run(nodes, k, max_iter)?;
    Ok((
        build(nodes, &part.point_ids, &part.assignment, &part.centroids),
        part.iterations,
    ))
}

/// Fuzzy C-means formation over alive positions, defuzzified by argmax.
/// Returns the cluster set and the FCM iteration count.
pub fn fuzzy_form_clusters(nodes: &[Node], fcm: &FcmParams) -> Result<(ClusterSet, usize)> {
    check_k(nodes, fcm.k)?;
    let (ids, points): (Vec<usize>, Vec<Position>) = nodes
        .iter()
        .filter(|n| n.alive)
        .map(|n| (n.id, n.pos))
        .unzip();
    let out = fcm_run(&points, fcm)?;
    let assignment = defuzzify(&out.memberships);
    Ok((
        build(nodes, &ids, &assignment, &out.centroids),
        out.iterations,
    ))
}
