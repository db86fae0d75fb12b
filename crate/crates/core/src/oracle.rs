//! Brute-force ground truth: top-down construction and exhaustive
//! defining-set search.
//!
//! Nothing here looks at insertion order or conflict lists, and the top-down
//! build finds each compressed cell by descending one level at a time rather
//! than through [`GeometryConfig::smallest_common_cell`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{CanonicalCell, GeometryConfig, QuantizedPoint, Tile};
use crate::tree::{CompressedQuadtree, NodeId};

/// Largest point set the subset census accepts.
pub const MAX_CENSUS_POINTS: usize = 16;

/// Which regions count as tiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TileModel {
    /// One tile per node: its cell minus its children's cells. Internal nodes
    /// with several occupied quadrants own a multi-hole residual region.
    Residual,
    /// Squares and annuli only. A node with two or more children splits into
    /// all of its quadrants: each empty quadrant is a square tile and each
    /// quadrant holding a compressed child is the annulus between the
    /// quadrant and the child's cell. Leaves are squares, and a root with a
    /// single child is the annulus between the unit cube and that child.
    #[default]
    Elementary,
}

/// Structural identity of a tile.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TileKey {
    pub outer: CanonicalCell,
    /// Sorted.
    pub holes: Vec<CanonicalCell>,
}

impl TileKey {
    pub fn new(outer: CanonicalCell, mut holes: Vec<CanonicalCell>) -> Self {
        holes.sort();
        Self { outer, holes }
    }

    pub fn square(outer: CanonicalCell) -> Self {
        Self {
            outer,
            holes: Vec::new(),
        }
    }
}

impl From<Tile> for TileKey {
    fn from(t: Tile) -> Self {
        TileKey::new(t.outer, t.holes)
    }
}

impl From<TileKey> for Tile {
    fn from(k: TileKey) -> Self {
        Tile {
            outer: k.outer,
            holes: k.holes,
        }
    }
}

/// Top-down construction of the canonical compressed quadtree.
pub fn build_topdown(geom: GeometryConfig, points: Vec<QuantizedPoint>) -> Result<CompressedQuadtree> {
    let n = points.len();
    let mut tree = CompressedQuadtree::new(geom, points)?;
    match n {
        0 => {}
        1 => tree.store_point(NodeId::ROOT, 0),
        _ => split(&mut tree, NodeId::ROOT, (0..n).collect())?,
    }
    Ok(tree)
}

fn split(tree: &mut CompressedQuadtree, v: NodeId, ids: Vec<usize>) -> Result<()> {
    let geom = *tree.geometry();
    let cell = tree.node(v).cell().clone();
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for id in ids {
        let q = geom.quadrant_index(&cell, tree.point(id))?;
        groups.entry(q).or_default().push(id);
    }
    for (q, group) in groups {
        let quadrant = geom.child_cell(&cell, q)?;
        if let [only] = group[..] {
            let leaf = tree.push_child(v, quadrant)?;
            tree.store_point(leaf, only);
        } else {
            let compressed = descend(&geom, quadrant, tree.points(), &group)?;
            let w = tree.push_child(v, compressed)?;
            split(tree, w, group)?;
        }
    }
    Ok(())
}

/// Shrinks `cell` one level at a time while every point of `group` stays in
/// a single quadrant.
fn descend(
    geom: &GeometryConfig,
    mut cell: CanonicalCell,
    points: &[QuantizedPoint],
    group: &[usize],
) -> Result<CanonicalCell> {
    loop {
        if cell.level == geom.resolution() {
            return Err(Error::Degenerate("coincident points in top-down build"));
        }
        let q = geom.quadrant_index(&cell, &points[group[0]])?;
        for &id in &group[1..] {
            if geom.quadrant_index(&cell, &points[id])? != q {
                return Ok(cell);
            }
        }
        cell = geom.child_cell(&cell, q)?;
    }
}

/// Nonempty tiles of a tree under the given model.
pub fn tile_keys(tree: &CompressedQuadtree, model: TileModel) -> BTreeSet<TileKey> {
    let geom = tree.geometry();
    let mut out = BTreeSet::new();
    for v in tree.node_ids() {
        let node = tree.node(v);
        let cell = node.cell();
        let children = node.children();
        match model {
            TileModel::Residual => {
                let full = children.len() == geom.quadrant_count() as usize
                    && children
                        .iter()
                        .all(|&(_, w)| tree.node(w).cell().level == cell.level + 1);
                if !full {
                    out.insert(TileKey::from(tree.tile_of(v)));
                }
            }
            TileModel::Elementary => {
                if children.is_empty() {
                    out.insert(TileKey::square(cell.clone()));
                } else if children.len() == 1 {
                    // only the root has a single child
                    let w = tree.node(children[0].1).cell().clone();
                    out.insert(TileKey::new(cell.clone(), vec![w]));
                } else {
                    for q in 0..geom.quadrant_count() {
                        let quadrant = geom
                            .child_cell(cell, q)
                            .expect("internal cells are divisible");
                        match node.child(q) {
                            None => {
                                out.insert(TileKey::square(quadrant));
                            }
                            Some(w) => {
                                let wc = tree.node(w).cell();
                                if wc.level > cell.level + 1 {
                                    out.insert(TileKey::new(quadrant, vec![wc.clone()]));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Tiles of the compressed quadtree of `points` (any ids; they are
/// renumbered internally).
pub fn tiles_of(
    geom: &GeometryConfig,
    points: &[QuantizedPoint],
    model: TileModel,
) -> Result<BTreeSet<TileKey>> {
    let renumbered = points
        .iter()
        .enumerate()
        .map(|(i, p)| QuantizedPoint {
            id: i,
            coords: p.coords.clone(),
        })
        .collect();
    Ok(tile_keys(&build_topdown(*geom, renumbered)?, model))
}

fn subset(points: &[QuantizedPoint], mask: u64) -> Vec<QuantizedPoint> {
    points
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, p)| p.clone())
        .collect()
}

fn ids_of(points: &[QuantizedPoint], mask: u64) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, p)| p.id)
        .collect()
}

/// Calls `f` on every `k`-subset mask of `0..n` in lexicographic order of
/// the chosen indices, stopping early when `f` returns `true`.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(u64) -> bool) -> bool {
    if k > n {
        return false;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mask = idx.iter().fold(0u64, |m, &i| m | 1 << i);
        if f(mask) {
            return true;
        }
        // rightmost index that can still move right
        let mut j = k;
        while j > 0 && idx[j - 1] == j - 1 + n - k {
            j -= 1;
        }
        if j == 0 {
            return false;
        }
        idx[j - 1] += 1;
        for t in j..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

fn check_tile(geom: &GeometryConfig, points: &[QuantizedPoint], f: &TileKey, model: TileModel) -> Result<()> {
    if points.len() > MAX_CENSUS_POINTS {
        return Err(Error::Contract(format!(
            "subset enumeration is limited to {MAX_CENSUS_POINTS} points, got {}",
            points.len()
        )));
    }
    if !tiles_of(geom, points, model)?.contains(f) {
        return Err(Error::TileNotPresent);
    }
    Ok(())
}

/// Smallest `X` (by cardinality, then lexicographically by position) with
/// `f` among the tiles of `X`, trying sizes `0..=k_max`. Returns point ids.
pub fn defining_set_search(
    geom: &GeometryConfig,
    points: &[QuantizedPoint],
    f: &TileKey,
    k_max: usize,
    model: TileModel,
) -> Result<Option<Vec<usize>>> {
    check_tile(geom, points, f, model)?;
    let n = points.len();
    let mut err = None;
    for k in 0..=k_max.min(n) {
        let mut found = None;
        for_each_combination(n, k, |mask| match tiles_of(geom, &subset(points, mask), model) {
            Ok(tiles) if tiles.contains(f) => {
                found = Some(mask);
                true
            }
            Ok(_) => false,
            Err(e) => {
                err = Some(e);
                true
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if let Some(mask) = found {
            return Ok(Some(ids_of(points, mask)));
        }
    }
    Ok(None)
}

/// Intersection of all defining sets of `f`. Returns point ids.
pub fn defining_set_intersection(
    geom: &GeometryConfig,
    points: &[QuantizedPoint],
    f: &TileKey,
    model: TileModel,
) -> Result<Vec<usize>> {
    check_tile(geom, points, f, model)?;
    SubsetCensus::new(geom, points, model)?.intersection(f)
}

/// For every tile of the full set, which subsets also have it as a tile.
#[derive(Debug, Clone)]
pub struct SubsetCensus {
    points: Vec<QuantizedPoint>,
    /// One flag per subset mask.
    membership: BTreeMap<TileKey, Vec<bool>>,
}

impl SubsetCensus {
    /// Builds the tree of every subset: `2^n` top-down builds.
    pub fn new(geom: &GeometryConfig, points: &[QuantizedPoint], model: TileModel) -> Result<Self> {
        let n = points.len();
        if n > MAX_CENSUS_POINTS {
            return Err(Error::Contract(format!(
                "subset enumeration is limited to {MAX_CENSUS_POINTS} points, got {n}"
            )));
        }
        let full = tiles_of(geom, points, model)?;
        let count = 1usize << n;
        let mut membership: BTreeMap<TileKey, Vec<bool>> =
            full.into_iter().map(|k| (k, vec![false; count])).collect();
        for mask in 0..count as u64 {
            for key in tiles_of(geom, &subset(points, mask), model)? {
                if let Some(flags) = membership.get_mut(&key) {
                    flags[mask as usize] = true;
                }
            }
        }
        Ok(Self {
            points: points.to_vec(),
            membership,
        })
    }

    pub fn tiles(&self) -> impl Iterator<Item = &TileKey> {
        self.membership.keys()
    }

    fn flags(&self, f: &TileKey) -> Result<&[bool]> {
        self.membership
            .get(f)
            .map(Vec::as_slice)
            .ok_or(Error::TileNotPresent)
    }

    /// Same contract as [`defining_set_search`].
    pub fn search(&self, f: &TileKey, k_max: usize) -> Result<Option<Vec<usize>>> {
        let flags = self.flags(f)?;
        let n = self.points.len();
        for k in 0..=k_max.min(n) {
            let mut found = None;
            for_each_combination(n, k, |mask| {
                let hit = flags[mask as usize];
                if hit {
                    found = Some(mask);
                }
                hit
            });
            if let Some(mask) = found {
                return Ok(Some(ids_of(&self.points, mask)));
            }
        }
        Ok(None)
    }

    /// Every inclusion-minimal subset having `f` as a tile, as point ids.
    pub fn defining_sets(&self, f: &TileKey) -> Result<Vec<Vec<usize>>> {
        Ok(self
            .minimal_masks(f)?
            .into_iter()
            .map(|m| ids_of(&self.points, m))
            .collect())
    }

    /// Intersection of all defining sets of `f`, as point ids.
    pub fn intersection(&self, f: &TileKey) -> Result<Vec<usize>> {
        let masks = self.minimal_masks(f)?;
        let z = masks.iter().fold(u64::MAX, |acc, &m| acc & m);
        Ok(if masks.is_empty() {
            Vec::new()
        } else {
            ids_of(&self.points, z)
        })
    }

    fn minimal_masks(&self, f: &TileKey) -> Result<Vec<u64>> {
        let good = self.flags(f)?;
        let n = self.points.len();
        // below[m]: some subset of m (m included) has f as a tile
        let mut below = vec![false; good.len()];
        let mut out = Vec::new();
        for m in 0..good.len() {
            let proper = (0..n).any(|i| m >> i & 1 == 1 && below[m ^ (1 << i)]);
            below[m] = good[m] || proper;
            if good[m] && !proper {
                out.push(m as u64);
            }
        }
        Ok(out)
    }
}
