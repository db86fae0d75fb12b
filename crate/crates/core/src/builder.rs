//! Randomized incremental construction.
//!
//! Points are inserted in a seeded random order. Every pending point sits in
//! the conflict list of the tile containing it, and carries a back-pointer to
//! that node, so locating the `i`-th point is `O(1)` and the iteration costs
//! `O(1 + k_i)` where `k_i` is the size of the located node's conflict list.
//!
//! Randomness comes from [`ChaCha8Rng`] seeded with
//! [`SeedableRng::seed_from_u64`]; the shuffle is Fisher-Yates drawing
//! `gen_range(0..=i)` on `u64`, which is portable across platforms.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{DuplicatePolicy, GeometryConfig, QuantizedPoint};
use crate::tree::{CompressedQuadtree, InsertCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildConfig {
    pub seed: u64,
    pub geometry: GeometryConfig,
    /// Keep per-iteration records. Totals are always kept.
    pub collect_stats: bool,
}

impl BuildConfig {
    pub fn new(geometry: GeometryConfig, seed: u64) -> Self {
        Self {
            seed,
            geometry,
            collect_stats: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub i: usize,
    pub point: usize,
    /// Conflict-list size `k_i` of the located node, the inserted point
    /// excluded.
    pub conflicts: usize,
    pub nodes_created: usize,
    pub case: InsertCase,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub iterations: Vec<IterationRecord>,
    pub insertions: usize,
    pub total_conflicts: u64,
    pub max_nodes_created: usize,
    pub node_count: usize,
    pub max_depth: usize,
}

impl BuildStats {
    /// Work units, `sum_i (1 + k_i)`.
    pub fn total_work(&self) -> u64 {
        self.insertions as u64 + self.total_conflicts
    }
}

/// The generator used for every seeded choice in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fisher-Yates shuffle driven by [`seeded_rng`].
pub fn shuffle<T>(items: &mut [T], seed: u64) {
    shuffle_with(items, &mut seeded_rng(seed));
}

pub fn shuffle_with<T, R: Rng + ?Sized>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i as u64) as usize;
        items.swap(i, j);
    }
}

/// Quantizes raw points and applies the configured duplicate policy. Kept
/// points are renumbered `0..m` in input order.
pub fn quantize_points<P: AsRef<[f64]>>(
    points: &[P],
    geom: &GeometryConfig,
) -> Result<Vec<QuantizedPoint>> {
    let quantized = points
        .iter()
        .enumerate()
        .map(|(i, p)| geom.quantize(i, p.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    dedup_points(quantized, geom)
}

/// Applies the duplicate policy to lattice points and renumbers them.
pub fn dedup_points(
    mut points: Vec<QuantizedPoint>,
    geom: &GeometryConfig,
) -> Result<Vec<QuantizedPoint>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_unstable_by(|&a, &b| points[a].coords.cmp(&points[b].coords).then(a.cmp(&b)));
    let mut keep = alloc::vec![true; points.len()];
    for w in order.windows(2) {
        if points[w[0]].coords == points[w[1]].coords {
            match geom.duplicate_policy {
                DuplicatePolicy::Reject => {
                    return Err(Error::DuplicatePoint {
                        first: points[w[0]].id,
                        second: points[w[1]].id,
                        resolution: geom.resolution(),
                    })
                }
                // the sort keeps index order within equal coordinates
                DuplicatePolicy::Deduplicate => keep[w[1]] = false,
            }
        }
    }
    let mut i = 0;
    points.retain(|_| {
        i += 1;
        keep[i - 1]
    });
    for (id, p) in points.iter_mut().enumerate() {
        p.id = id;
    }
    Ok(points)
}

/// A construction in progress, advanced one insertion at a time.
#[derive(Debug, Clone)]
pub struct IncrementalBuild {
    tree: CompressedQuadtree,
    order: Vec<usize>,
    next: usize,
    stats: BuildStats,
    collect_stats: bool,
}

impl IncrementalBuild {
    pub fn new(points: Vec<QuantizedPoint>, cfg: &BuildConfig) -> Result<Self> {
        let mut order: Vec<usize> = (0..points.len()).collect();
        shuffle(&mut order, cfg.seed);
        Self::with_order(points, order, cfg)
    }

    /// Uses a caller-chosen insertion order, a permutation of the point ids.
    pub fn with_order(
        points: Vec<QuantizedPoint>,
        order: Vec<usize>,
        cfg: &BuildConfig,
    ) -> Result<Self> {
        let n = points.len();
        let mut seen = alloc::vec![false; n];
        if order.len() != n || !order.iter().all(|&p| p < n && !core::mem::replace(&mut seen[p], true)) {
            return Err(Error::Contract("insertion order is not a permutation".into()));
        }
        let tree = CompressedQuadtree::new(cfg.geometry, points)?;
        Ok(Self {
            stats: BuildStats {
                node_count: tree.node_count(),
                ..BuildStats::default()
            },
            tree,
            order,
            next: 0,
            collect_stats: cfg.collect_stats,
        })
    }

    pub fn tree(&self) -> &CompressedQuadtree {
        &self.tree
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Number of insertions done so far.
    pub fn inserted(&self) -> usize {
        self.next
    }

    pub fn is_done(&self) -> bool {
        self.next == self.order.len()
    }

    /// Inserts the next point of the permutation.
    pub fn step(&mut self) -> Result<Option<IterationRecord>> {
        let Some(&p) = self.order.get(self.next) else {
            return Ok(None);
        };
        self.next += 1;
        let (report, k) = self.tree.insert_pending(p)?;
        let record = IterationRecord {
            i: self.next,
            point: p,
            conflicts: k,
            nodes_created: report.new_nodes.len(),
            case: report.case,
        };
        self.stats.insertions += 1;
        self.stats.total_conflicts += k as u64;
        self.stats.max_nodes_created = self.stats.max_nodes_created.max(record.nodes_created);
        if self.collect_stats {
            self.stats.iterations.push(record);
        }
        Ok(Some(record))
    }

    pub fn run(&mut self) -> Result<()> {
        while self.step()?.is_some() {}
        Ok(())
    }

    pub fn finish(mut self) -> Result<(CompressedQuadtree, BuildStats)> {
        self.run()?;
        self.stats.node_count = self.tree.node_count();
        self.stats.max_depth = self.tree.max_depth();
        Ok((self.tree, self.stats))
    }
}

/// Builds the compressed quadtree of raw points in `[0, 1)^d`.
pub fn build<P: AsRef<[f64]>>(
    points: &[P],
    cfg: &BuildConfig,
) -> Result<(CompressedQuadtree, BuildStats)> {
    build_quantized(quantize_points(points, &cfg.geometry)?, cfg)
}

pub fn build_quantized(
    points: Vec<QuantizedPoint>,
    cfg: &BuildConfig,
) -> Result<(CompressedQuadtree, BuildStats)> {
    IncrementalBuild::new(points, cfg)?.finish()
}
