//! Deterministic random link graphs.
//!
//! The random stream is xoshiro256** seeded through SplitMix64 (the
//! `seed_from_u64` construction of `rand_xoshiro`). Only `next_u64` is
//! consumed, and the mappings to indices and unit floats are fixed:
//!
//! * index in `0..n`: `(u64 as u128 * n as u128) >> 64`
//! * float in `[0, 1)`: `(u64 >> 11) * 2⁻⁵³`
//!
//! Generation order is: Fisher–Yates shuffle of `0..n` (the first
//! `⌈dangling_fraction·n⌉` shuffled nodes become dangling), then for each
//! node in index order its out-degree followed by its targets. A
//! host-clustered target draws one float (external or not) and then one index.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrix::CompressedSparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphModel {
    /// Targets drawn uniformly from all other nodes.
    UniformSparse,
    /// Targets drawn with probability proportional to in-degree + 1.
    PreferentialAttachment,
    /// Nodes grouped into contiguous hosts of `host_size`; a link leaves its
    /// host with probability `external_fraction`, otherwise it stays inside.
    HostClustered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    pub model: GraphModel,
    /// Mean out-degree over all nodes, dangling ones included.
    pub avg_outdegree: f64,
    pub dangling_fraction: f64,
    pub seed: u64,
    #[serde(default = "default_host_size")]
    pub host_size: usize,
    #[serde(default = "default_external_fraction")]
    pub external_fraction: f64,
}

fn default_host_size() -> usize {
    50
}

fn default_external_fraction() -> f64 {
    0.05
}

impl GraphSpec {
    pub fn new(n: usize, avg_outdegree: f64, dangling_fraction: f64, seed: u64) -> Self {
        Self {
            n,
            model: GraphModel::UniformSparse,
            avg_outdegree,
            dangling_fraction,
            seed,
            host_size: default_host_size(),
            external_fraction: default_external_fraction(),
        }
    }

    pub fn with_model(mut self, model: GraphModel) -> Self {
        self.model = model;
        self
    }

    pub fn with_hosts(mut self, host_size: usize, external_fraction: f64) -> Self {
        self.model = GraphModel::HostClustered;
        self.host_size = host_size;
        self.external_fraction = external_fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("graph needs at least one node"));
        }
        if !(self.avg_outdegree >= 0.0) || !self.avg_outdegree.is_finite() {
            return Err(invalid("average out-degree must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&self.dangling_fraction) {
            return Err(invalid("dangling fraction must lie in [0, 1)"));
        }
        if self.host_size == 0 {
            return Err(invalid("host size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.external_fraction) {
            return Err(invalid("external fraction must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Number of nodes generated without out-links.
    pub fn dangling_count(&self) -> usize {
        if self.n == 1 {
            // a lone node has nowhere to link
            return 1;
        }
        ((self.dangling_fraction * self.n as f64).ceil() as usize).min(self.n)
    }
}

pub(crate) struct Stream(Xoshiro256StarStar);

impl Stream {
    pub(crate) fn new(seed: u64) -> Self {
        Self(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub(crate) fn index(&mut self, n: usize) -> usize {
        ((self.0.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub(crate) fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Builds the graph described by `spec`. Same spec, same matrix.
pub fn generate(spec: &GraphSpec) -> Result<CompressedSparseMatrix> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = Stream::new(spec.seed);

    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.index(i + 1);
        order.swap(i, j);
    }
    let n_dangling = spec.dangling_count();
    let mut dangling = vec![false; n];
    for &i in &order[..n_dangling] {
        dangling[i] = true;
    }
    let linking = n - n_dangling;
    if linking == 0 {
        return CompressedSparseMatrix::from_edges(n, &[]);
    }

    // mean degree per linking node, at least one link each
    let per_node = (spec.avg_outdegree * n as f64 / linking as f64).max(1.0);
    let spread = 2.0 * (per_node - 1.0);
    let mut bag: Vec<usize> = match spec.model {
        GraphModel::UniformSparse | GraphModel::HostClustered => Vec::new(),
        GraphModel::PreferentialAttachment => (0..n).collect(),
    };
    let mut edges = Vec::with_capacity((per_node * linking as f64) as usize + 16);
    for i in 0..n {
        if dangling[i] {
            continue;
        }
        // uniform on 1..=1+spread has mean per_node; the fractional part is
        // resolved by one Bernoulli draw
        let lo = spread.floor();
        let mut width = lo as usize + 1;
        if rng.unit() < spread - lo {
            width += 1;
        }
        let degree = 1 + rng.index(width).min(n - 2);
        let host_lo = i / spec.host_size * spec.host_size;
        let host_len = spec.host_size.min(n - host_lo);
        for _ in 0..degree {
            let j = loop {
                let j = match spec.model {
                    GraphModel::UniformSparse => rng.index(n),
                    GraphModel::PreferentialAttachment => bag[rng.index(bag.len())],
                    GraphModel::HostClustered => {
                        if rng.unit() < spec.external_fraction || host_len < 2 {
                            rng.index(n)
                        } else {
                            host_lo + rng.index(host_len)
                        }
                    }
                };
                if j != i {
                    break j;
                }
            };
            edges.push((i, j));
            if spec.model == GraphModel::PreferentialAttachment {
                bag.push(j);
            }
        }
    }
    CompressedSparseMatrix::from_edges(n, &edges)
}
