//! Position-based clustering of nodes: hard K-means and fuzzy C-means.
//!
//! Both algorithms report an iteration count with the same meaning (one
//! centroid update followed by one reassignment) so their convergence speed
//! can be compared cell by cell.

mod fcm;
mod kmeans;

pub use fcm::{
    defuzzify, fcm_centroids, fcm_init, fcm_memberships, fcm_run, FcmParams, FcmResult,
    MembershipMatrix,
};
pub use kmeans::{
    kmeans_assign, kmeans_init, kmeans_objective, kmeans_run, kmeans_run_from, kmeans_update,
    HardPartition,
};

use crate::model::Position;

pub(crate) fn mean_position(points: &[Position]) -> Position {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Position::new(sx / n, sy / n)
}

/// Index of the smallest value; ties go to the lowest index.
pub(crate) fn argmin_by<T>(items: &[T], mut key: impl FnMut(&T) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, item) in items.iter().enumerate() {
        let v = key(item);
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
