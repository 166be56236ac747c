//! Agglomerative clustering cut at a distance threshold.
//!
//! Single and complete linkage are both monotone (merge heights never
//! decrease), so merging greedily while the closest pair is within the
//! threshold yields exactly the dendrogram cut at that height.

use crate::config::Linkage;

/// Cluster `n` items given a symmetric distance lookup; returns a label per
/// item. Two items share a label iff they end up in one cluster under
/// `linkage` with every merge height <= `threshold`.
pub fn cluster_labels<F>(n: usize, dist: F, linkage: Linkage, threshold: f64) -> Vec<usize>
where
    F: Fn(usize, usize) -> f64,
{
    if n == 0 {
        return Vec::new();
    }
    // Dense inter-cluster distance matrix; usize::MAX marks dead clusters.
    let mut d = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = dist(i, j);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let mut alive: Vec<bool> = vec![true; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();

    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !alive[j] {
                    continue;
                }
                let v = d[i * n + j];
                match best {
                    Some((_, _, bv)) if v >= bv => {}
                    _ => best = Some((i, j, v)),
                }
            }
        }
        let (i, j, v) = match best {
            Some(b) => b,
            None => break,
        };
        if v > threshold {
            break;
        }
        // Merge j into i (Lance-Williams for single/complete).
        for k in 0..n {
            if k == i || k == j || !alive[k] {
                continue;
            }
            let dik = d[i * n + k];
            let djk = d[j * n + k];
            let merged = match linkage {
                Linkage::Single => dik.min(djk),
                Linkage::Complete => dik.max(djk),
            };
            d[i * n + k] = merged;
            d[k * n + i] = merged;
        }
        alive[j] = false;
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
    }

    let mut labels = vec![0usize; n];
    let mut next = 0usize;
    for i in 0..n {
        if alive[i] {
            for &m in &members[i] {
                labels[m] = next;
            }
            next += 1;
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist_from(points: &[f64]) -> impl Fn(usize, usize) -> f64 + '_ {
        move |i, j| (points[i] - points[j]).abs()
    }

    #[test]
    fn complete_linkage_stops_chaining() {
        // Points 0, 1, 2, 3 on a line; threshold 1.5. Single linkage chains
        // everything; complete linkage splits into pairs.
        let pts = [0.0, 1.0, 2.0, 3.0];
        let single = cluster_labels(4, dist_from(&pts), Linkage::Single, 1.5);
        assert!(single.iter().all(|&l| l == single[0]));
        let complete = cluster_labels(4, dist_from(&pts), Linkage::Complete, 1.5);
        assert_eq!(complete[0], complete[1]);
        assert_eq!(complete[2], complete[3]);
        assert_ne!(complete[0], complete[2]);
    }

    #[test]
    fn threshold_zero_keeps_singletons_apart() {
        let pts = [0.0, 5.0, 10.0];
        let labels = cluster_labels(3, dist_from(&pts), Linkage::Complete, 0.0);
        assert_eq!(labels.iter().collect::<std::collections::HashSet<_>>().len(), 3);
    }

    #[test]
    fn coincident_points_merge_at_zero() {
        let pts = [1.0, 1.0, 9.0];
        let labels = cluster_labels(3, dist_from(&pts), Linkage::Complete, 0.0);
        assert_eq!(labels[0], labels[1]);
        assert_ne!(labels[0], labels[2]);
    }

    #[test]
    fn empty_and_singleton_inputs() {
        assert!(cluster_labels(0, |_, _| 0.0, Linkage::Complete, 1.0).is_empty());
        assert_eq!(cluster_labels(1, |_, _| 0.0, Linkage::Complete, 1.0), vec![0]);
    }
}
