use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mean_position;
use crate::error::{invalid, Result};
use crate::model::{squared_distance, Position};
use crate::rng::seeded_rng;

/// Row-major `n x k` fuzzy membership matrix. Rows sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipMatrix {
    n: usize,
    k: usize,
    u: Vec<f64>,
}

impl MembershipMatrix {
    /// Builds a matrix from rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(invalid(
                "memberships",
                "rows must be non-empty and equally long",
            ));
        }
        Ok(Self {
            n: rows.len(),
            k,
            u: rows.concat(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.u[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.u.chunks(self.k)
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &MembershipMatrix) -> f64 {
        debug_assert_eq!((self.n, self.k), (other.n, other.k));
        self.u
            .iter()
            .zip(&other.u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Fuzzy C-means parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcmParams {
    pub k: usize,
    /// Fuzzifier, strictly greater than one.
    pub m: f64,
    /// Stop once the largest membership change falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FcmParams {
    fn default() -> Self {
        Self {
            k: 5,
            m: 2.0,
            tol: 1e-4,
            max_iter: 100,
            seed: 0,
        }
    }
}

impl FcmParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k", "must be >= 1"));
        }
        if !(self.m > 1.0 && self.m.is_finite()) {
            return Err(invalid(
                "m",
                format!("fuzzifier must be > 1, got {}", self.m),
            ));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(invalid("tol", format!("must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be >= 1"));
        }
        Ok(())
    }
}

/// Random memberships, row-normalized.
pub fn fcm_init(n: usize, k: usize, seed: u64) -> MembershipMatrix {
    let mut rng = seeded_rng(seed);
    let mut u = Vec::with_capacity(n * k);
    for _ in 0..n {
        // 1 - [0, 1) keeps every draw strictly positive
        let row: Vec<f64> = (0..k).map(|_| 1.0 - rng.gen::<f64>()).collect();
        let total: f64 = row.iter().sum();
        u.extend(row.iter().map(|v| v / total));
    }
    MembershipMatrix { n, k, u }
}

/// Membership-weighted centroids. A cluster with no membership mass gets
/// the mean of all points.
pub fn fcm_centroids(points: &[Position], u: &MembershipMatrix, m: f64) -> Vec<Position> {
    debug_assert_eq!(points.len(), u.n());
    (0..u.k())
        .map(|j| {
            let (mut wx, mut wy, mut wsum) = (0.0, 0.0, 0.0);
            for (i, p) in points.iter().enumerate() {
                let w = if m == 2.0 {
                    u.get(i, j) * u.get(i, j)
                } else {
                    u.get(i, j).powf(m)
                };
                wx += w * p.x;
                wy += w * p.y;
                wsum += w;
            }
            if wsum > 0.0 {
                Position::new(wx / wsum, wy / wsum)
            } else {
                mean_position(points)
            }
        })
        .collect()
}

/// Memberships from distances to centroids. A point lying exactly on one or
/// more centroids splits its membership equally among them.
///
/// Evaluated as `w_j / sum_k w_k` with `w_j = (d_min^2 / d_j^2)^(1/(m-1))`,
/// which equals the ratio form and keeps every weight in `(0, 1]`.
pub fn fcm_memberships(points: &[Position], centroids: &[Position], m: f64) -> MembershipMatrix {
    let k = centroids.len();
    let exponent = 1.0 / (m - 1.0);
    let mut u = Vec::with_capacity(points.len() * k);
    let mut d2 = vec![0.0; k];
    for p in points {
        for (d, c) in d2.iter_mut().zip(centroids) {
            *d = squared_distance(*p, *c);
        }
        let coincident = d2.iter().filter(|&&d| d == 0.0).count();
        if coincident > 0 {
            let share = 1.0 / coincident as f64;
            u.extend(d2.iter().map(|&d| if d == 0.0 { share } else { 0.0 }));
            continue;
        }
        let nearest = d2.iter().copied().fold(f64::INFINITY, f64::min);
        let start = u.len();
        let mut total = 0.0;
        for &d in &d2 {
            let w = if exponent == 1.0 {
                nearest / d
            } else {
                (nearest / d).powf(exponent)
            };
            total += w;
            u.push(w);
        }
        for v in &mut u[start..] {
            *v /= total;
        }
    }
    MembershipMatrix {
        n: points.len(),
        k,
        u,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult {
    pub memberships: MembershipMatrix,
    pub centroids: Vec<Position>,
    pub iterations: usize,
    pub converged: bool,
}

/// Alternates centroid and membership updates from a seeded random start
/// until no membership moves by `tol` or more.
pub fn fcm_run(points: &[Position], params: &FcmParams) -> Result<FcmResult> {
    params.validate()?;
    if points.is_empty() {
        return Err(invalid("points", "at least one point is required"));
    }
    let mut u = fcm_init(points.len(), params.k, params.seed);
    let mut centroids = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        iterations += 1;
        centroids = fcm_centroids(points, &u, params.m);
        let next = fcm_memberships(points, &centroids, params.m);
        let delta = next.max_abs_diff(&u);
        u = next;
        if delta < params.tol {
            converged = true;
            break;
        }
    }
    Ok(FcmResult {
        memberships: u,
        centroids,
        iterations,
        converged,
    })
}

/// Hard assignment by row argmax, ties to the lower cluster index.
pub fn defuzzify(u: &MembershipMatrix) -> Vec<usize> {
    u.rows()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
