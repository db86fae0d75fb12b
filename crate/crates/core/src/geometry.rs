//! Exact lattice geometry: quantized points, canonical cells, quadrants and tiles.
//!
//! Every coordinate lives on the integer lattice `[0, 2^L)` where `L` is the
//! resolution. A canonical cell at level `l` has side `2^(L - l)` lattice
//! units and covers the half-open box
//! `prod_k [corner_k * 2^(L-l), (corner_k + 1) * 2^(L-l))`.
//! Quadrant indices use bit `k` for "upper half along axis `k`".

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Largest supported dimension. Quadrant indices are `u32` bitmasks and the
/// analysis code enumerates all `2^d` quadrants of a cell.
pub const MAX_DIM: usize = 16;
/// Largest supported resolution in bits per coordinate.
pub const MAX_RESOLUTION: u32 = 62;

/// What to do with input points that coincide after quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Reject,
    /// Keep the first occurrence, drop later copies.
    Deduplicate,
}

impl fmt::Display for DuplicatePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DuplicatePolicy::Reject => f.write_str("reject"),
            DuplicatePolicy::Deduplicate => f.write_str("deduplicate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometryConfig {
    dim: usize,
    resolution: u32,
    pub duplicate_policy: DuplicatePolicy,
}

impl GeometryConfig {
    pub fn new(dim: usize, resolution: u32) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidConfig(format!(
                "dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        if resolution == 0 || resolution > MAX_RESOLUTION {
            return Err(Error::InvalidConfig(format!(
                "resolution must be in 1..={MAX_RESOLUTION}, got {resolution}"
            )));
        }
        Ok(Self {
            dim,
            resolution,
            duplicate_policy: DuplicatePolicy::Reject,
        })
    }

    /// Planar configuration at the given resolution.
    pub fn planar(resolution: u32) -> Result<Self> {
        Self::new(2, resolution)
    }

    pub fn with_duplicate_policy(mut self, policy: DuplicatePolicy) -> Self {
        self.duplicate_policy = policy;
        self
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Number of quadrants of a cell, `2^d`.
    #[inline]
    pub fn quadrant_count(&self) -> u32 {
        1 << self.dim
    }

    /// Exclusive upper bound of lattice coordinates, `2^L`.
    #[inline]
    pub fn side(&self) -> u64 {
        1 << self.resolution
    }

    /// The unit cube.
    pub fn root_cell(&self) -> CanonicalCell {
        CanonicalCell {
            level: 0,
            corner: vec![0; self.dim],
        }
    }

    /// Snaps a point of `[0, 1)^d` to the lattice: `floor(x_k * 2^L)`.
    pub fn quantize(&self, id: usize, coords: &[f64]) -> Result<QuantizedPoint> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch {
                point: id,
                expected: self.dim,
                found: coords.len(),
            });
        }
        let scale = self.side() as f64;
        let mut out = Vec::with_capacity(self.dim);
        for (axis, &x) in coords.iter().enumerate() {
            // also rejects NaN
            if !(0.0..1.0).contains(&x) {
                return Err(Error::OutOfDomain {
                    point: id,
                    axis,
                    value: x,
                });
            }
            // scaling by a power of two is exact, and truncation of a
            // non-negative value is floor
            out.push((x * scale) as u64);
        }
        Ok(QuantizedPoint { id, coords: out })
    }

    /// Builds a point directly from lattice coordinates.
    pub fn point(&self, id: usize, coords: &[u64]) -> Result<QuantizedPoint> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch {
                point: id,
                expected: self.dim,
                found: coords.len(),
            });
        }
        if let Some(axis) = coords.iter().position(|&c| c >= self.side()) {
            return Err(Error::Contract(format!(
                "lattice coordinate {} of point {id} is outside [0, 2^{})",
                coords[axis], self.resolution
            )));
        }
        Ok(QuantizedPoint {
            id,
            coords: coords.to_vec(),
        })
    }

    /// Builds a cell, checking level and corner ranges.
    pub fn cell(&self, level: u32, corner: &[u64]) -> Result<CanonicalCell> {
        if level > self.resolution {
            return Err(Error::Contract(format!(
                "cell level {level} exceeds resolution {}",
                self.resolution
            )));
        }
        if corner.len() != self.dim {
            return Err(Error::Contract(format!(
                "cell corner has {} coordinates, expected {}",
                corner.len(),
                self.dim
            )));
        }
        if corner.iter().any(|&c| c >> level != 0) {
            return Err(Error::Contract(format!(
                "cell corner {corner:?} is outside the level-{level} grid"
            )));
        }
        Ok(CanonicalCell {
            level,
            corner: corner.to_vec(),
        })
    }

    /// Half-open containment of a lattice point in a cell.
    #[inline]
    pub fn cell_contains(&self, cell: &CanonicalCell, p: &QuantizedPoint) -> bool {
        let shift = self.resolution - cell.level;
        cell.corner
            .iter()
            .zip(&p.coords)
            .all(|(&c, &x)| x >> shift == c)
    }

    /// Index of the quadrant of `cell` that holds `p`; bit `k` set iff `p`
    /// lies in the upper half of `cell` along axis `k`.
    pub fn quadrant_index(&self, cell: &CanonicalCell, p: &QuantizedPoint) -> Result<u32> {
        if cell.level >= self.resolution {
            return Err(Error::Indivisible {
                level: cell.level,
                resolution: self.resolution,
            });
        }
        if !self.cell_contains(cell, p) {
            return Err(Error::Contract(format!(
                "point {} is not inside cell {cell}",
                p.id
            )));
        }
        Ok(self.quadrant_unchecked(cell.level, &p.coords, self.resolution))
    }

    /// Quadrant of `outer` containing the strictly smaller cell `inner`.
    pub fn quadrant_of_cell(&self, outer: &CanonicalCell, inner: &CanonicalCell) -> Result<u32> {
        if !outer.contains_cell(inner) || inner.level == outer.level {
            return Err(Error::Contract(format!(
                "cell {inner} is not a strict descendant of {outer}"
            )));
        }
        Ok(self.quadrant_unchecked(outer.level, &inner.corner, inner.level))
    }

    /// `coords` are given at `coord_level` (the lattice is level `L`).
    #[inline]
    fn quadrant_unchecked(&self, level: u32, coords: &[u64], coord_level: u32) -> u32 {
        let shift = coord_level - level - 1;
        coords
            .iter()
            .enumerate()
            .fold(0u32, |q, (k, &x)| q | ((((x >> shift) & 1) as u32) << k))
    }

    /// The child of `cell` in quadrant `q`, one level down.
    pub fn child_cell(&self, cell: &CanonicalCell, q: u32) -> Result<CanonicalCell> {
        if cell.level >= self.resolution {
            return Err(Error::Indivisible {
                level: cell.level,
                resolution: self.resolution,
            });
        }
        if q >= self.quadrant_count() {
            return Err(Error::Contract(format!(
                "quadrant {q} out of range for dimension {}",
                self.dim
            )));
        }
        let corner = cell
            .corner
            .iter()
            .enumerate()
            .map(|(k, &c)| (c << 1) | u64::from((q >> k) & 1))
            .collect();
        Ok(CanonicalCell {
            level: cell.level + 1,
            corner,
        })
    }

    /// Smallest canonical cell containing both arguments.
    ///
    /// Computed per coordinate from the length of the common binary prefix;
    /// no bits are interleaved across axes. Fails when both arguments denote
    /// the same region.
    pub fn smallest_common_cell<'a, 'b>(
        &self,
        a: impl Into<Region<'a>>,
        b: impl Into<Region<'b>>,
    ) -> Result<CanonicalCell> {
        let (a, b) = (a.into(), b.into());
        let (la, ca) = self.region_parts(&a);
        let (lb, cb) = self.region_parts(&b);
        let l = self.resolution;
        let mut level = la.min(lb);
        for (&x, &y) in ca.iter().zip(cb) {
            // both sides scaled to the lattice
            let diff = (x << (l - la)) ^ (y << (l - lb));
            let prefix = if diff == 0 {
                l
            } else {
                l - (u64::BITS - diff.leading_zeros())
            };
            level = level.min(prefix);
        }
        if la == lb && level == la {
            return Err(Error::Degenerate(
                "smallest common cell of two identical regions",
            ));
        }
        let shift = l - level;
        let corner = ca.iter().map(|&x| (x << (l - la)) >> shift).collect();
        Ok(CanonicalCell { level, corner })
    }

    fn region_parts<'r>(&self, r: &'r Region<'_>) -> (u32, &'r [u64]) {
        match r {
            Region::Point(p) => (self.resolution, &p.coords),
            Region::Cell(c) => (c.level, &c.corner),
        }
    }

    #[inline]
    pub fn tile_contains(&self, tile: &Tile, p: &QuantizedPoint) -> bool {
        self.cell_contains(&tile.outer, p) && !tile.holes.iter().any(|h| self.cell_contains(h, p))
    }
}

/// A point of the unit cube snapped to the lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuantizedPoint {
    pub id: usize,
    pub coords: Vec<u64>,
}

/// A dyadic cell: `level` halvings of the unit cube, addressed by its corner
/// on the level's grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCell {
    pub level: u32,
    pub corner: Vec<u64>,
}

impl CanonicalCell {
    /// Whether `other` lies inside `self` (equality included).
    pub fn contains_cell(&self, other: &CanonicalCell) -> bool {
        if other.level < self.level {
            return false;
        }
        let shift = other.level - self.level;
        self.corner
            .iter()
            .zip(&other.corner)
            .all(|(&c, &o)| o >> shift == c)
    }

    pub fn is_root(&self) -> bool {
        self.level == 0
    }
}

impl fmt::Display for CanonicalCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cell(level={}, corner={:?})", self.level, self.corner)
    }
}

/// Argument of [`GeometryConfig::smallest_common_cell`]. A point behaves like
/// the level-`L` cell holding it.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Point(&'a QuantizedPoint),
    Cell(&'a CanonicalCell),
}

impl<'a> From<&'a QuantizedPoint> for Region<'a> {
    fn from(p: &'a QuantizedPoint) -> Self {
        Region::Point(p)
    }
}

impl<'a> From<&'a CanonicalCell> for Region<'a> {
    fn from(c: &'a CanonicalCell) -> Self {
        Region::Cell(c)
    }
}

/// A cell minus a set of disjoint strict sub-cells.
///
/// No holes: a square. One hole: an annulus. More holes: the residual left
/// to an internal node by its occupied quadrants.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tile {
    pub outer: CanonicalCell,
    pub holes: Vec<CanonicalCell>,
}

impl Tile {
    pub fn square(outer: CanonicalCell) -> Self {
        Self {
            outer,
            holes: Vec::new(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.holes.is_empty()
    }

    pub fn is_annulus(&self) -> bool {
        self.holes.len() == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(d: usize, l: u32) -> GeometryConfig {
        GeometryConfig::new(d, l).unwrap()
    }

    fn pt(geom: &GeometryConfig, c: &[u64]) -> QuantizedPoint {
        geom.point(0, c).unwrap()
    }

    #[test]
    fn quantize_examples() {
        let geom = g(2, 2);
        assert_eq!(geom.quantize(0, &[0.0, 0.0]).unwrap().coords, [0, 0]);
        assert_eq!(geom.quantize(0, &[0.5, 0.75]).unwrap().coords, [2, 3]);
        // floor(0.3 * 4) = 1, floor(0.7 * 4) = 2
        assert_eq!(geom.quantize(0, &[0.3, 0.7]).unwrap().coords, [1, 2]);
    }

    #[test]
    fn quantize_rejects_out_of_domain() {
        let geom = g(2, 8);
        for bad in [[1.0, 0.5], [-0.1, 0.5], [0.5, f64::NAN], [0.5, f64::INFINITY]] {
            assert!(matches!(
                geom.quantize(3, &bad),
                Err(Error::OutOfDomain { point: 3, .. })
            ));
        }
        assert!(matches!(
            geom.quantize(0, &[0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quantize_largest_double_below_one() {
        let geom = g(1, 62);
        let x = 1.0f64.next_down();
        let p = geom.quantize(0, &[x]).unwrap();
        assert!(p.coords[0] < geom.side());
    }

    #[test]
    fn config_bounds() {
        assert!(GeometryConfig::new(0, 8).is_err());
        assert!(GeometryConfig::new(2, 0).is_err());
        assert!(GeometryConfig::new(2, 63).is_err());
        assert!(GeometryConfig::new(MAX_DIM + 1, 8).is_err());
        assert!(GeometryConfig::new(3, 62).is_ok());
    }

    #[test]
    fn containment_examples() {
        let geom = g(2, 2);
        let root = geom.root_cell();
        let c = geom.cell(1, &[0, 0]).unwrap();
        assert!(geom.cell_contains(&root, &pt(&geom, &[3, 2])));
        assert!(geom.cell_contains(&c, &pt(&geom, &[1, 1])));
        assert!(!geom.cell_contains(&c, &pt(&geom, &[2, 1])));
    }

    #[test]
    fn quadrant_examples() {
        let geom = g(2, 2);
        let root = geom.root_cell();
        assert_eq!(geom.quadrant_index(&root, &pt(&geom, &[0, 0])).unwrap(), 0);
        assert_eq!(geom.quadrant_index(&root, &pt(&geom, &[3, 3])).unwrap(), 3);
        assert_eq!(geom.quadrant_index(&root, &pt(&geom, &[3, 0])).unwrap(), 1);
    }

    #[test]
    fn quadrant_errors() {
        let geom = g(2, 2);
        let c = geom.cell(1, &[0, 0]).unwrap();
        assert!(matches!(
            geom.quadrant_index(&c, &pt(&geom, &[3, 3])),
            Err(Error::Contract(_))
        ));
        let unit = geom.cell(2, &[1, 1]).unwrap();
        assert!(matches!(
            geom.quadrant_index(&unit, &pt(&geom, &[1, 1])),
            Err(Error::Indivisible { level: 2, .. })
        ));
        assert!(geom.child_cell(&unit, 0).is_err());
        assert!(geom.child_cell(&c, 4).is_err());
    }

    #[test]
    fn child_cell_examples() {
        let geom = g(2, 2);
        let root = geom.root_cell();
        assert_eq!(geom.child_cell(&root, 0).unwrap(), geom.cell(1, &[0, 0]).unwrap());
        assert_eq!(geom.child_cell(&root, 3).unwrap(), geom.cell(1, &[1, 1]).unwrap());
        let c = geom.cell(1, &[1, 0]).unwrap();
        assert_eq!(geom.child_cell(&c, 2).unwrap(), geom.cell(2, &[2, 1]).unwrap());
    }

    #[test]
    fn smallest_common_cell_examples() {
        let geom = g(2, 2);
        let (a, b) = (pt(&geom, &[0, 0]), pt(&geom, &[3, 3]));
        assert_eq!(geom.smallest_common_cell(&a, &b).unwrap(), geom.root_cell());
        let b = pt(&geom, &[1, 1]);
        assert_eq!(
            geom.smallest_common_cell(&a, &b).unwrap(),
            geom.cell(1, &[0, 0]).unwrap()
        );
        let geom = g(2, 8);
        let (a, b) = (pt(&geom, &[25, 25]), pt(&geom, &[30, 30]));
        assert_eq!(
            geom.smallest_common_cell(&a, &b).unwrap(),
            geom.cell(5, &[3, 3]).unwrap()
        );
    }

    #[test]
    fn smallest_common_cell_with_cells() {
        let geom = g(2, 8);
        let c = geom.cell(5, &[3, 3]).unwrap();
        // (31, 24) shares the level-5 cell with c
        assert_eq!(geom.smallest_common_cell(&pt(&geom, &[31, 24]), &c).unwrap(), c);
        // (0, 0) splits off at level 3
        assert_eq!(
            geom.smallest_common_cell(&c, &pt(&geom, &[0, 0])).unwrap(),
            geom.cell(3, &[0, 0]).unwrap()
        );
        let inner = geom.cell(7, &[12, 13]).unwrap();
        assert_eq!(geom.smallest_common_cell(&c, &inner).unwrap(), c);
    }

    #[test]
    fn smallest_common_cell_degenerate() {
        let geom = g(2, 4);
        let a = pt(&geom, &[5, 9]);
        assert_eq!(
            geom.smallest_common_cell(&a, &a.clone()),
            Err(Error::Degenerate("smallest common cell of two identical regions"))
        );
        let c = geom.cell(2, &[1, 2]).unwrap();
        assert!(geom.smallest_common_cell(&c, &c).is_err());
    }

    #[test]
    fn tile_examples() {
        let geom = g(2, 2);
        let root = geom.root_cell();
        assert!(geom.tile_contains(&Tile::square(root.clone()), &pt(&geom, &[2, 1])));
        let annulus = Tile {
            outer: root,
            holes: vec![geom.cell(1, &[0, 0]).unwrap()],
        };
        assert!(annulus.is_annulus());
        assert!(!geom.tile_contains(&annulus, &pt(&geom, &[0, 0])));
        assert!(geom.tile_contains(&annulus, &pt(&geom, &[3, 3])));
    }

    #[test]
    fn quadrant_of_cell_matches_points() {
        let geom = g(2, 8);
        let outer = geom.cell(2, &[1, 2]).unwrap();
        let inner = geom.cell(6, &[16 + 15, 32]).unwrap();
        let p = pt(&geom, &[(16 + 15) << 2, 32 << 2]);
        assert_eq!(
            geom.quadrant_of_cell(&outer, &inner).unwrap(),
            geom.quadrant_index(&outer, &p).unwrap()
        );
        assert!(geom.quadrant_of_cell(&outer, &outer).is_err());
    }

    #[test]
    fn half_open_partition_sweep() {
        // every lattice point of every cell lands in exactly one child
        for d in 1..=3usize {
            let geom = g(d, 3);
            let n = geom.side();
            let total = n.pow(d as u32);
            let mut cells = vec![geom.root_cell()];
            while let Some(cell) = cells.pop() {
                if cell.level == geom.resolution() {
                    continue;
                }
                let children: Vec<_> = (0..geom.quadrant_count())
                    .map(|q| geom.child_cell(&cell, q).unwrap())
                    .collect();
                for idx in 0..total {
                    let coords: Vec<u64> = (0..d).map(|k| (idx / n.pow(k as u32)) % n).collect();
                    let p = pt(&geom, &coords);
                    let hits = children.iter().filter(|c| geom.cell_contains(c, &p)).count();
                    assert_eq!(hits, usize::from(geom.cell_contains(&cell, &p)));
                }
                cells.extend(children);
            }
        }
    }
}
