//! Pairwise reachability sampled over time, and its CCDF.

use crate::domain::NodeId;
use crate::metrics::graph::UnionFind;

/// For every unordered pair, how many samples found both nodes in the same
/// component of the instantaneous co-group graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilitySamples {
    node_count: usize,
    sample_period: f64,
    counts: Vec<u32>,
    total_samples: u32,
}

fn pair_index(n: usize, a: usize, b: usize) -> usize {
    let (i, j) = if a < b { (a, b) } else { (b, a) };
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl ReachabilitySamples {
    pub fn new(node_count: usize, sample_period: f64) -> Self {
        let pairs = node_count * node_count.saturating_sub(1) / 2;
        Self {
            node_count,
            sample_period,
            counts: vec![0; pairs],
            total_samples: 0,
        }
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn total_samples(&self) -> u32 {
        self.total_samples
    }

    pub fn count(&self, a: NodeId, b: NodeId) -> u32 {
        assert_ne!(a, b);
        self.counts[pair_index(self.node_count, a.index(), b.index())]
    }

    /// Records one sample. Each item of `groups` is one group's full
    /// membership, owner included.
    pub fn sample<'a, I>(&mut self, groups: I)
    where
        I: IntoIterator<Item = &'a [NodeId]>,
    {
        let mut uf = UnionFind::new(self.node_count);
        for g in groups {
            for w in g.windows(2) {
                uf.union(w[0].index(), w[1].index());
            }
        }
        for set in uf.groups() {
            if set.len() < 2 {
                break;
            }
            for (k, a) in set.iter().enumerate() {
                for b in &set[k + 1..] {
                    self.counts[pair_index(self.node_count, a.index(), b.index())] += 1;
                }
            }
        }
        self.total_samples += 1;
    }

    /// Fraction of samples in which `a` and `b` were connected.
    pub fn probability(&self, a: NodeId, b: NodeId) -> f64 {
        if self.total_samples == 0 {
            0.0
        } else {
            f64::from(self.count(a, b)) / f64::from(self.total_samples)
        }
    }

    /// One probability per unordered pair.
    pub fn probabilities(&self) -> Vec<f64> {
        if self.total_samples == 0 {
            return vec![0.0; self.counts.len()];
        }
        let total = f64::from(self.total_samples);
        self.counts.iter().map(|&c| f64::from(c) / total).collect()
    }
}

/// Empirical complementary CDF: the fraction of values at or above a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Ccdf {
    sorted: Vec<f64>,
}

impl Ccdf {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { sorted: values }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn at(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        let below = self.sorted.partition_point(|&v| v < x);
        (self.sorted.len() - below) as f64 / self.sorted.len() as f64
    }

    /// Evaluated on `points` evenly spaced thresholds over [0, 1].
    pub fn on_unit_grid(&self, points: usize) -> Vec<(f64, f64)> {
        let steps = points.saturating_sub(1).max(1) as f64;
        (0..points)
            .map(|i| {
                let x = i as f64 / steps;
                (x, self.at(x))
            })
            .collect()
    }
}

/// Convenience: CCDF of `values` on a 101-point grid.
pub fn ccdf(values: &[f64]) -> Vec<(f64, f64)> {
    Ccdf::new(values.to_vec()).on_unit_grid(101)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn pair_index_is_dense() {
        let n = 6;
        let mut seen = vec![false; n * (n - 1) / 2];
        for a in 0..n {
            for b in a + 1..n {
                let k = pair_index(n, a, b);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(k, pair_index(n, b, a));
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn static_group_is_always_reachable() {
        let mut rs = ReachabilitySamples::new(4, 30.0);
        let g = ids(&[0, 1, 2]);
        for _ in 0..5 {
            rs.sample([g.as_slice()]);
        }
        assert_eq!(rs.probability(NodeId(0), NodeId(2)), 1.0);
        assert_eq!(rs.probability(NodeId(0), NodeId(3)), 0.0);
    }

    #[test]
    fn half_the_samples_gives_one_half() {
        let mut rs = ReachabilitySamples::new(3, 30.0);
        let g = ids(&[0, 1]);
        for k in 0..60 {
            if k % 2 == 0 {
                rs.sample([g.as_slice()]);
            } else {
                rs.sample(std::iter::empty());
            }
        }
        assert_eq!(rs.probability(NodeId(1), NodeId(0)), 0.5);
    }

    #[test]
    fn ccdf_examples() {
        let c = Ccdf::new(vec![1.0; 10]);
        assert!(c.on_unit_grid(11).iter().all(|&(_, f)| f == 1.0));
        let c = Ccdf::new(vec![0.0, 1.0]);
        assert_eq!(c.at(0.5), 0.5);
        assert_eq!(c.at(0.0), 1.0);
        let grid = ccdf(&[0.2, 0.4, 0.4, 0.9]);
        assert_eq!(grid.len(), 101);
        assert!(grid.windows(2).all(|w| w[1].1 <= w[0].1));
    }
}
