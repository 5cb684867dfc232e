use std::collections::{BTreeMap, VecDeque};

use super::Point2;
use crate::scalar::Scalar;

/// Label for points outside every cluster.
pub const NOISE: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityParams {
    pub min_pts: usize,
    /// Percentile (0..=100) of the k-distance distribution used as eps.
    pub eps_percentile: f64,
}

impl Default for DensityParams {
    fn default() -> Self {
        Self {
            min_pts: 3,
            eps_percentile: 85.0,
        }
    }
}

/// Cluster labels per id plus the number of topics.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub cluster_of: BTreeMap<String, i32>,
    pub topic_count: usize,
}

fn distance<T: Scalar>(a: &Point2<T>, b: &Point2<T>) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Linear-interpolation percentile of an unsorted sample.
pub(crate) fn percentile<T: Scalar>(values: &[T], pct: f64) -> T {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let rank = (pct / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = T::of(rank - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Density clustering with a data-driven radius: eps is the configured
/// percentile of each point's distance to its `(min_pts - 1)`-th nearest
/// neighbour. Core points have at least `min_pts` points (themselves
/// included) within eps; clusters are connected components of core points,
/// and border points join the cluster of their nearest core point. Labels
/// are renumbered by ascending smallest member id. If nothing clusters, all
/// points form a single catch-all topic 0.
pub fn cluster_points<T: Scalar>(
    points: &BTreeMap<String, Point2<T>>,
    params: DensityParams,
) -> Clustering {
    let ids: Vec<&String> = points.keys().collect();
    let pts: Vec<Point2<T>> = points.values().copied().collect();
    let n = pts.len();
    let min_pts = params.min_pts.max(2);

    let mut labels = vec![NOISE; n];
    if n >= min_pts {
        let dist: Vec<Vec<T>> = (0..n)
            .map(|i| (0..n).map(|j| distance(&pts[i], &pts[j])).collect())
            .collect();
        let kdist: Vec<T> = (0..n)
            .map(|i| {
                let mut others: Vec<T> = (0..n).filter(|&j| j != i).map(|j| dist[i][j]).collect();
                others.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                others[min_pts - 2]
            })
            .collect();
        let eps = percentile(&kdist, params.eps_percentile);
        let neighbours: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| dist[i][j] <= eps).collect())
            .collect();
        let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_pts).collect();

        let mut next = 0;
        for start in 0..n {
            if !core[start] || labels[start] != NOISE {
                continue;
            }
            labels[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(p) = queue.pop_front() {
                for &q in &neighbours[p] {
                    if core[q] && labels[q] == NOISE {
                        labels[q] = next;
                        queue.push_back(q);
                    }
                }
            }
            next += 1;
        }
        for i in 0..n {
            if core[i] {
                continue;
            }
            let nearest_core = neighbours[i]
                .iter()
                .copied()
                .filter(|&j| core[j])
                .min_by(|&a, &b| {
                    dist[i][a]
                        .partial_cmp(&dist[i][b])
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
            if let Some(j) = nearest_core {
                labels[i] = labels[j];
            }
        }
    }

    let topic_count = renumber_by_first_member(&mut labels);
    let topic_count = if topic_count == 0 {
        labels.iter_mut().for_each(|l| *l = 0);
        1
    } else {
        topic_count
    };
    Clustering {
        cluster_of: ids.into_iter().cloned().zip(labels).collect(),
        topic_count,
    }
}

/// Relabels clusters 0..T-1 in order of first appearance, which for
/// id-sorted input is ascending smallest member id. Negative labels become
/// noise. Returns T.
pub(crate) fn renumber_by_first_member(labels: &mut [i32]) -> usize {
    let mut map: BTreeMap<i32, i32> = BTreeMap::new();
    for label in labels.iter_mut() {
        if *label < 0 {
            *label = NOISE;
            continue;
        }
        let fresh = map.len() as i32;
        *label = *map.entry(*label).or_insert(fresh);
    }
    map.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(raw: &[[f64; 2]]) -> BTreeMap<String, Point2<f64>> {
        raw.iter()
            .enumerate()
            .map(|(i, p)| (format!("p{i:03}"), *p))
            .collect()
    }

    fn blob(cx: f64, cy: f64) -> Vec<[f64; 2]> {
        // 3x3 lattice of spacing 0.5 plus the centre nudged; spread ~1
        let mut out = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                out.push([cx + 0.5 * a as f64, cy + 0.5 * b as f64]);
            }
        }
        out.push([cx + 0.75, cy + 0.25]);
        out
    }

    #[test]
    fn percentile_interpolates() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
        assert!((percentile(&v, 50.0) - 2.5f64).abs() < 1e-12);
    }

    #[test]
    fn two_blobs_two_clusters_no_noise() {
        let mut raw = blob(0.0, 0.0);
        raw.extend(blob(100.0, 100.0));
        let pts = points(&raw);
        let c = cluster_points(&pts, DensityParams::default());
        assert_eq!(c.topic_count, 2);
        assert!(c.cluster_of.values().all(|&l| l >= 0));

        // brute-force oracle: eps is the 85th percentile of 2nd-NN distance;
        // every point must reach a core point of its own blob within eps
        let all: Vec<[f64; 2]> = pts.values().copied().collect();
        let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let mut k2: Vec<f64> = all
            .iter()
            .map(|&p| {
                let mut ds: Vec<f64> = all.iter().map(|&q| d(p, q)).collect();
                ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
                ds[2]
            })
            .collect();
        k2.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = 0.85 * (k2.len() - 1) as f64;
        let eps = k2[rank.floor() as usize]
            + (k2[rank.ceil() as usize] - k2[rank.floor() as usize]) * rank.fract();
        let count = |p: [f64; 2]| all.iter().filter(|&&q| d(p, q) <= eps).count();
        for &p in &all {
            let reaches_core = all.iter().any(|&q| d(p, q) <= eps && count(q) >= 3);
            assert!(reaches_core);
        }
        let first = c.cluster_of["p000"];
        let second = c.cluster_of["p010"];
        assert_eq!(first, 0);
        assert_eq!(second, 1);
        for i in 0..10 {
            assert_eq!(c.cluster_of[&format!("p{i:03}")], 0);
            assert_eq!(c.cluster_of[&format!("p{:03}", i + 10)], 1);
        }
    }

    #[test]
    fn single_point_is_catch_all() {
        let c = cluster_points(&points(&[[1.0, 1.0]]), DensityParams::default());
        assert_eq!(c.topic_count, 1);
        assert_eq!(c.cluster_of["p000"], 0);
    }

    #[test]
    fn unit_spaced_line_is_one_cluster() {
        // interior 2nd-NN distance 1, endpoints 2; the 85th percentile is 1,
        // interior points are core and endpoints are border
        let raw: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 0.0]).collect();
        let c = cluster_points(&points(&raw), DensityParams::default());
        assert_eq!(c.topic_count, 1);
        assert!(c.cluster_of.values().all(|&l| l == 0));
    }

    #[test]
    fn isolated_outlier_is_noise() {
        let mut raw = blob(0.0, 0.0);
        raw.push([50.0, 50.0]);
        let c = cluster_points(&points(&raw), DensityParams::default());
        assert_eq!(c.topic_count, 1);
        assert_eq!(c.cluster_of["p010"], NOISE);
    }

    #[test]
    fn renumbering_follows_first_member() {
        let mut labels = vec![5, 5, -3, 2, 5, 2, 9];
        assert_eq!(renumber_by_first_member(&mut labels), 3);
        assert_eq!(labels, vec![0, 0, NOISE, 1, 0, 1, 2]);
    }
}
