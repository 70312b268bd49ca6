//! Device grouping for deployments with more devices than RISs.
//!
//! Devices are clustered by position into as many groups as there are RISs.
//! In every slot one member per cluster, chosen round-robin, advances its
//! full learner; the rest use the direct link.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::uniform_index;
use crate::netmodel::Position3D;
use crate::Error;

pub const KMEANS_MAX_ITER: usize = 100;
pub const KMEANS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignment: Vec<usize>,
    pub centroids: Vec<(f64, f64)>,
    pub iterations: usize,
}

fn sq_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (a.0 - b.0, a.1 - b.1);
    dx * dx + dy * dy
}

fn nearest(p: (f64, f64), centroids: &[(f64, f64)]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, &c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn seed_plus_plus<R: Rng + ?Sized>(points: &[(f64, f64)], k: usize, rng: &mut R) -> Vec<(f64, f64)> {
    let mut centroids = vec![points[uniform_index(points.len(), rng)]];
    let mut chosen = vec![false; points.len()];
    while centroids.len() < k {
        let weights: Vec<f64> = points.iter().map(|&p| nearest(p, &centroids).1).collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if target < *w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            let free: Vec<usize> = (0..points.len()).filter(|&i| !chosen[i]).collect();
            free[uniform_index(free.len(), rng)]
        };
        chosen[pick] = true;
        centroids.push(points[pick]);
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding on XY coordinates.
pub fn kmeans<R: Rng + ?Sized>(points: &[(f64, f64)], k: usize, rng: &mut R) -> Result<KMeansResult, Error> {
    if k == 0 || k > points.len() {
        return Err(Error::Invalid(format!(
            "cannot form {k} clusters from {} points",
            points.len()
        )));
    }
    let mut centroids = seed_plus_plus(points, k, rng);
    let mut assignment = vec![0; points.len()];
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITER {
        iterations += 1;
        for (a, &p) in assignment.iter_mut().zip(points) {
            *a = nearest(p, &centroids).0;
        }
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (&a, &p) in assignment.iter().zip(points) {
            sums[a].0 += p.0;
            sums[a].1 += p.1;
            sums[a].2 += 1;
        }
        let mut next: Vec<(f64, f64)> = Vec::with_capacity(k);
        for (j, &(sx, sy, n)) in sums.iter().enumerate() {
            next.push(if n > 0 {
                (sx / n as f64, sy / n as f64)
            } else {
                centroids[j]
            });
        }
        // Empty clusters take the point farthest from its own centroid.
        for j in 0..k {
            if sums[j].2 == 0 {
                let far = (0..points.len())
                    .filter(|&i| sums[assignment[i]].2 > 1)
                    .max_by(|&a, &b| {
                        sq_dist(points[a], next[assignment[a]]).total_cmp(&sq_dist(points[b], next[assignment[b]]))
                    });
                if let Some(i) = far {
                    sums[assignment[i]].2 -= 1;
                    assignment[i] = j;
                    sums[j].2 = 1;
                    next[j] = points[i];
                }
            }
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(&a, &b)| sq_dist(a, b))
            .fold(0.0, f64::max);
        centroids = next;
        if shift <= KMEANS_TOLERANCE * KMEANS_TOLERANCE {
            break;
        }
    }
    for (a, &p) in assignment.iter_mut().zip(points) {
        *a = nearest(p, &centroids).0;
    }
    Ok(KMeansResult {
        assignment,
        centroids,
        iterations,
    })
}

/// Cluster membership and the round-robin rotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSchedule {
    pub assignment: Vec<usize>,
    /// Members of each cluster in ascending device order.
    pub members: Vec<Vec<usize>>,
    /// Position of each device within its cluster.
    rank: Vec<usize>,
}

impl ClusterSchedule {
    pub fn from_assignment(assignment: Vec<usize>, n_clusters: usize) -> Self {
        let mut members = vec![Vec::new(); n_clusters];
        let mut rank = vec![0; assignment.len()];
        for (device, &c) in assignment.iter().enumerate() {
            rank[device] = members[c].len();
            members[c].push(device);
        }
        Self {
            assignment,
            members,
            rank,
        }
    }

    /// Whether `device` runs its full learner in `slot`.
    pub fn is_flagged(&self, device: usize, slot: u64) -> bool {
        let size = self.members[self.assignment[device]].len() as u64;
        size > 0 && slot % size == self.rank[device] as u64
    }

    pub fn flagged(&self, slot: u64) -> Vec<usize> {
        self.members
            .iter()
            .filter(|m| !m.is_empty())
            .map(|m| m[(slot % m.len() as u64) as usize])
            .collect()
    }
}

/// Clusters devices into `k` groups and builds the rotation.
pub fn cluster_round_robin<R: Rng + ?Sized>(
    devices: &[Position3D],
    k: usize,
    rng: &mut R,
) -> Result<ClusterSchedule, Error> {
    if k > devices.len() {
        return Err(Error::TooFewDevices(format!("{} devices, {k} RISs", devices.len())));
    }
    let points: Vec<(f64, f64)> = devices.iter().map(|p| (p.x, p.y)).collect();
    let result = kmeans(&points, k, rng)?;
    Ok(ClusterSchedule::from_assignment(result.assignment, k))
}
