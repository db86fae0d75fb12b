//! The compressed quadtree with per-tile conflict lists.
//!
//! Canonical form: the root cell is the unit cube; an internal non-root node
//! has the smallest cell holding every point below it; a leaf has the full
//! quadrant cell of its parent. Only the root may have a single child.
//! Empty quadrants are never materialized, so an internal node owns the
//! residual region of its cell not covered by its children.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};
use core::mem;

use arrayvec::ArrayVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{CanonicalCell, GeometryConfig, QuantizedPoint, Tile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    cell: CanonicalCell,
    /// Sorted by quadrant index.
    children: Vec<(u32, NodeId)>,
    point: Option<usize>,
    conflicts: Vec<usize>,
    parent: Option<NodeId>,
}

impl Node {
    fn new(cell: CanonicalCell, parent: Option<NodeId>) -> Self {
        Self {
            cell,
            children: Vec::new(),
            point: None,
            conflicts: Vec::new(),
            parent,
        }
    }

    pub fn cell(&self) -> &CanonicalCell {
        &self.cell
    }

    /// `(quadrant, child)` pairs in ascending quadrant order.
    pub fn children(&self) -> &[(u32, NodeId)] {
        &self.children
    }

    pub fn child(&self, quadrant: u32) -> Option<NodeId> {
        self.children
            .binary_search_by_key(&quadrant, |&(q, _)| q)
            .ok()
            .map(|i| self.children[i].1)
    }

    /// Id of the stored point, leaves only.
    pub fn point(&self) -> Option<usize> {
        self.point
    }

    /// Ids of the pending points lying in this node's tile.
    pub fn conflicts(&self) -> &[usize] {
        &self.conflicts
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn set_child(&mut self, quadrant: u32, child: NodeId) {
        match self.children.binary_search_by_key(&quadrant, |&(q, _)| q) {
            Ok(i) => self.children[i].1 = child,
            Err(i) => self.children.insert(i, (quadrant, child)),
        }
    }
}

/// Which restructuring case an insertion went through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InsertCase {
    /// The tree was empty; the root now stores the point.
    EmptyRoot,
    /// The point fell in an unoccupied quadrant of an internal node.
    EmptyQuadrant,
    /// The point fell in an occupied leaf, which splits.
    SplitLeaf,
    /// The point fell in the annulus above a compressed child, which gets a
    /// new parent.
    SpliceEdge,
}

/// Outcome of [`CompressedQuadtree::insert`]: the located node, the nodes
/// that were allocated, and every node whose tile may now hold a point of the
/// located node's conflict list (new leaves first).
#[derive(Debug, Clone)]
pub struct RestructureReport {
    pub case: InsertCase,
    pub located: NodeId,
    pub new_nodes: ArrayVec<NodeId, 3>,
    pub candidates: ArrayVec<NodeId, 4>,
}

/// One line of the canonical serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SerializedNode {
    pub level: u32,
    pub corner: Vec<u64>,
    /// `(point id, lattice coordinates)` for leaves.
    pub leaf: Option<(usize, Vec<u64>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub node: Option<NodeId>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(v) => write!(f, "node {v}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompressedQuadtree {
    geom: GeometryConfig,
    nodes: Vec<Node>,
    points: Vec<QuantizedPoint>,
    /// Conflict-list owner while pending, leaf once inserted.
    location: Vec<NodeId>,
    /// Position in the owner's conflict list while pending.
    slot: Vec<usize>,
    inserted: Vec<bool>,
    inserted_count: usize,
}

/// Checks ids, arity, lattice range and pairwise distinctness.
pub(crate) fn check_points(geom: &GeometryConfig, points: &[QuantizedPoint]) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        if p.id != i {
            return Err(Error::Contract(format!(
                "point at position {i} carries id {}",
                p.id
            )));
        }
        if p.coords.len() != geom.dim() {
            return Err(Error::DimensionMismatch {
                point: i,
                expected: geom.dim(),
                found: p.coords.len(),
            });
        }
        if p.coords.iter().any(|&c| c >= geom.side()) {
            return Err(Error::Contract(format!(
                "point {i} lies outside the lattice"
            )));
        }
    }
    if points.len() > u32::MAX as usize {
        return Err(Error::Contract(format!("too many points: {}", points.len())));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_unstable_by(|&a, &b| points[a].coords.cmp(&points[b].coords).then(a.cmp(&b)));
    for w in order.windows(2) {
        if points[w[0]].coords == points[w[1]].coords {
            return Err(Error::DuplicatePoint {
                first: w[0],
                second: w[1],
                resolution: geom.resolution(),
            });
        }
    }
    Ok(())
}

impl CompressedQuadtree {
    /// An empty tree whose root conflict list holds every point of `points`.
    /// Point ids must equal their positions.
    pub fn new(geom: GeometryConfig, points: Vec<QuantizedPoint>) -> Result<Self> {
        check_points(&geom, &points)?;
        let n = points.len();
        let mut root = Node::new(geom.root_cell(), None);
        root.conflicts = (0..n).collect();
        Ok(Self {
            geom,
            nodes: vec![root],
            points,
            location: vec![NodeId::ROOT; n],
            slot: (0..n).collect(),
            inserted: vec![false; n],
            inserted_count: 0,
        })
    }

    pub fn geometry(&self) -> &GeometryConfig {
        &self.geom
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn points(&self) -> &[QuantizedPoint] {
        &self.points
    }

    pub fn point(&self, id: usize) -> &QuantizedPoint {
        &self.points[id]
    }

    pub fn inserted_count(&self) -> usize {
        self.inserted_count
    }

    pub fn is_inserted(&self, id: usize) -> bool {
        self.inserted[id]
    }

    /// The node whose conflict list holds a pending point, or the leaf
    /// storing an inserted one.
    pub fn location(&self, id: usize) -> NodeId {
        self.location[id]
    }

    /// Whether the tile owned by `v` contains `p`, in `O(d)`.
    pub fn node_tile_contains(&self, v: NodeId, p: &QuantizedPoint) -> bool {
        let node = &self.nodes[v.index()];
        if !self.geom.cell_contains(&node.cell, p) {
            return false;
        }
        if node.children.is_empty() {
            return true;
        }
        let q = self.point_quadrant(&node.cell, p);
        match node.child(q) {
            None => true,
            Some(w) => !self.geom.cell_contains(&self.nodes[w.index()].cell, p),
        }
    }

    pub fn tile_of(&self, v: NodeId) -> Tile {
        let node = &self.nodes[v.index()];
        Tile {
            outer: node.cell.clone(),
            holes: node
                .children
                .iter()
                .map(|&(_, w)| self.nodes[w.index()].cell.clone())
                .collect(),
        }
    }

    /// Descends from the root to the node whose tile contains `p`.
    pub fn locate_tile(&self, p: &QuantizedPoint) -> NodeId {
        let mut v = NodeId::ROOT;
        loop {
            let node = &self.nodes[v.index()];
            if node.children.is_empty() {
                return v;
            }
            let q = self.point_quadrant(&node.cell, p);
            match node.child(q) {
                Some(w) if self.geom.cell_contains(&self.nodes[w.index()].cell, p) => v = w,
                _ => return v,
            }
        }
    }

    #[inline]
    fn point_quadrant(&self, cell: &CanonicalCell, p: &QuantizedPoint) -> u32 {
        // cells with children are never at the finest level
        self.geom
            .quadrant_index(cell, p)
            .expect("point inside a divisible cell")
    }

    /// Inserts pending point `p` into node `v`, whose tile must contain it,
    /// and restructures the tree around `v`. At most three nodes are
    /// allocated. The conflict list of `v` is left for
    /// [`redistribute`](Self::redistribute).
    pub fn insert(&mut self, v: NodeId, p: usize) -> Result<RestructureReport> {
        if p >= self.points.len() {
            return Err(Error::Contract(format!("unknown point id {p}")));
        }
        if v.index() >= self.nodes.len() {
            return Err(Error::Contract(format!("unknown node {v}")));
        }
        if self.inserted[p] {
            return Err(Error::Degenerate("point inserted twice"));
        }
        if !self.node_tile_contains(v, &self.points[p]) {
            return Err(Error::Contract(format!(
                "tile of node {v} does not contain point {p}"
            )));
        }
        self.detach(p);
        self.inserted[p] = true;
        self.inserted_count += 1;

        let node = &self.nodes[v.index()];
        if node.children.is_empty() {
            match node.point {
                None if v == NodeId::ROOT => {
                    self.nodes[0].point = Some(p);
                    self.location[p] = v;
                    Ok(RestructureReport {
                        case: InsertCase::EmptyRoot,
                        located: v,
                        new_nodes: ArrayVec::new(),
                        candidates: [v].into_iter().collect(),
                    })
                }
                None => Err(Error::Invariant(format!("non-root leaf {v} stores no point"))),
                Some(q) => self.split_leaf(v, p, q),
            }
        } else {
            let quadrant = self.point_quadrant(&node.cell, &self.points[p]);
            match node.child(quadrant) {
                None => {
                    let leaf = self.hang_leaf(v, p)?;
                    Ok(RestructureReport {
                        case: InsertCase::EmptyQuadrant,
                        located: v,
                        new_nodes: [leaf].into_iter().collect(),
                        candidates: [leaf, v].into_iter().collect(),
                    })
                }
                Some(w) => self.splice_edge(v, w, p, quadrant),
            }
        }
    }

    fn split_leaf(&mut self, v: NodeId, p: usize, q: usize) -> Result<RestructureReport> {
        let c = self
            .geom
            .smallest_common_cell(&self.points[p], &self.points[q])?;
        let mut new_nodes = ArrayVec::new();
        let mut tail: ArrayVec<NodeId, 2> = ArrayVec::new();
        let target = if c == self.nodes[v.index()].cell {
            v
        } else if v == NodeId::ROOT {
            // the root keeps the unit cube and gains a compressed edge
            let quadrant = self.geom.quadrant_of_cell(&self.nodes[0].cell, &c)?;
            let u = self.alloc(c, v);
            self.nodes[0].set_child(quadrant, u);
            new_nodes.push(u);
            tail.push(u);
            u
        } else {
            // the leaf shrinks; the vacated part of its old quadrant goes to
            // the parent's tile
            self.nodes[v.index()].cell = c;
            let parent = self.nodes[v.index()].parent.expect("non-root has a parent");
            tail.push(parent);
            v
        };
        self.nodes[v.index()].point = None;
        let leaf_p = self.hang_leaf(target, p)?;
        let leaf_q = self.hang_leaf(target, q)?;
        new_nodes.insert(0, leaf_q);
        new_nodes.insert(0, leaf_p);

        let mut candidates: ArrayVec<NodeId, 4> = [leaf_p, leaf_q].into_iter().collect();
        // spliced root child comes before the root itself
        if target != v {
            candidates.push(target);
            candidates.push(v);
        } else {
            candidates.push(v);
            candidates.extend(tail);
        }
        Ok(RestructureReport {
            case: InsertCase::SplitLeaf,
            located: v,
            new_nodes,
            candidates,
        })
    }

    fn splice_edge(
        &mut self,
        v: NodeId,
        w: NodeId,
        p: usize,
        quadrant: u32,
    ) -> Result<RestructureReport> {
        let c = self
            .geom
            .smallest_common_cell(&self.points[p], &self.nodes[w.index()].cell)?;
        if c == self.nodes[v.index()].cell {
            // p and w share a quadrant of v, so their common cell is smaller
            return Err(Error::Invariant(format!(
                "common cell of point {p} and child {w} is the cell of {v}"
            )));
        }
        let w_quadrant = self.geom.quadrant_of_cell(&c, &self.nodes[w.index()].cell)?;
        let u = self.alloc(c, v);
        self.nodes[v.index()].set_child(quadrant, u);
        self.nodes[w.index()].parent = Some(u);
        self.nodes[u.index()].set_child(w_quadrant, w);
        let leaf = self.hang_leaf(u, p)?;
        Ok(RestructureReport {
            case: InsertCase::SpliceEdge,
            located: v,
            new_nodes: [leaf, u].into_iter().collect(),
            candidates: [leaf, u, v].into_iter().collect(),
        })
    }

    fn alloc(&mut self, cell: CanonicalCell, parent: NodeId) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node::new(cell, Some(parent)));
        id
    }

    /// New leaf under `parent` in the quadrant holding `p`.
    fn hang_leaf(&mut self, parent: NodeId, p: usize) -> Result<NodeId> {
        let pc = &self.nodes[parent.index()].cell;
        let quadrant = self.geom.quadrant_index(pc, &self.points[p])?;
        if self.nodes[parent.index()].child(quadrant).is_some() {
            return Err(Error::Invariant(format!(
                "quadrant {quadrant} of node {parent} is already occupied"
            )));
        }
        let cell = self.geom.child_cell(pc, quadrant)?;
        let leaf = self.alloc(cell, parent);
        self.nodes[leaf.index()].point = Some(p);
        self.nodes[parent.index()].set_child(quadrant, leaf);
        self.location[p] = leaf;
        Ok(leaf)
    }

    /// Moves every point of the located node's conflict list to the candidate
    /// tile containing it. Returns the number of points examined.
    pub fn redistribute(&mut self, report: &RestructureReport) -> Result<usize> {
        let v = report.located;
        let list = mem::take(&mut self.nodes[v.index()].conflicts);
        let k = list.len();
        for x in list {
            let p = &self.points[x];
            let dest = report
                .candidates
                .iter()
                .copied()
                .find(|&c| self.node_tile_contains(c, p))
                .ok_or_else(|| {
                    Error::Invariant(format!(
                        "conflict point {x} of node {v} lies in no candidate tile"
                    ))
                })?;
            self.attach(x, dest);
        }
        Ok(k)
    }

    /// One full iteration for a pending point: insert at its recorded
    /// location, then redistribute. Returns the report and the conflict-list
    /// size handled.
    pub fn insert_pending(&mut self, p: usize) -> Result<(RestructureReport, usize)> {
        if p >= self.points.len() {
            return Err(Error::Contract(format!("unknown point id {p}")));
        }
        let v = self.location[p];
        let report = self.insert(v, p)?;
        let k = self.redistribute(&report)?;
        Ok((report, k))
    }

    fn detach(&mut self, p: usize) {
        let v = self.location[p];
        let s = self.slot[p];
        let list = &mut self.nodes[v.index()].conflicts;
        list.swap_remove(s);
        if let Some(&moved) = list.get(s) {
            self.slot[moved] = s;
        }
    }

    fn attach(&mut self, p: usize, v: NodeId) {
        let list = &mut self.nodes[v.index()].conflicts;
        self.slot[p] = list.len();
        list.push(p);
        self.location[p] = v;
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn max_depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(NodeId::ROOT, 0usize)];
        while let Some((v, depth)) = stack.pop() {
            best = best.max(depth);
            stack.extend(self.nodes[v.index()].children.iter().map(|&(_, w)| (w, depth + 1)));
        }
        best
    }

    /// Node ids in preorder, children in ascending quadrant order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![NodeId::ROOT];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.nodes[v.index()].children.iter().rev().map(|&(_, w)| w));
        }
        out
    }

    /// One line per node in preorder:
    /// `level corner.. [leaf id coord..]`, ASCII decimal, newline-terminated.
    pub fn canonical_serialize(&self) -> String {
        let mut out = String::new();
        for v in self.preorder() {
            let node = &self.nodes[v.index()];
            let _ = write!(out, "{}", node.cell.level);
            for c in &node.cell.corner {
                let _ = write!(out, " {c}");
            }
            if let Some(p) = node.point {
                let _ = write!(out, " leaf {p}");
                for c in &self.points[p].coords {
                    let _ = write!(out, " {c}");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Rebuilds a fully inserted tree from its preorder listing. The listing
    /// must describe a canonical tree; leaf point ids must be `0..n`.
    pub fn from_preorder(geom: GeometryConfig, entries: &[SerializedNode]) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::Contract("empty node listing".into()))?;
        if geom.cell(first.level, &first.corner)? != geom.root_cell() {
            return Err(Error::Contract("first node is not the root".into()));
        }
        let mut nodes = vec![Node::new(geom.root_cell(), None)];
        let mut leaves: Vec<(usize, Vec<u64>, NodeId)> = Vec::new();
        let mut stack = vec![NodeId::ROOT];
        for (line, entry) in entries.iter().enumerate() {
            let id = if line == 0 {
                NodeId::ROOT
            } else {
                let cell = geom.cell(entry.level, &entry.corner)?;
                while let Some(&top) = stack.last() {
                    let tc = &nodes[top.index()].cell;
                    if tc.level < cell.level && tc.contains_cell(&cell) {
                        break;
                    }
                    stack.pop();
                }
                let parent = *stack.last().ok_or_else(|| {
                    Error::Contract(format!("node {line} lies outside every preceding cell"))
                })?;
                if nodes[parent.index()].point.is_some() {
                    return Err(Error::Contract(format!("node {line} hangs below a leaf")));
                }
                let quadrant = geom.quadrant_of_cell(&nodes[parent.index()].cell, &cell)?;
                if nodes[parent.index()].child(quadrant).is_some() {
                    return Err(Error::Contract(format!(
                        "node {line} reuses quadrant {quadrant} of its parent"
                    )));
                }
                let id = NodeId(nodes.len() as u32);
                nodes.push(Node::new(cell, Some(parent)));
                nodes[parent.index()].set_child(quadrant, id);
                id
            };
            if let Some((pid, coords)) = &entry.leaf {
                nodes[id.index()].point = Some(*pid);
                leaves.push((*pid, coords.clone(), id));
            }
            stack.push(id);
        }
        leaves.sort_by_key(|l| l.0);
        let mut points = Vec::with_capacity(leaves.len());
        let mut location = Vec::with_capacity(leaves.len());
        for (i, (pid, coords, leaf)) in leaves.into_iter().enumerate() {
            if pid != i {
                return Err(Error::Contract(format!(
                    "leaf point ids are not 0..n (missing or repeated id {i})"
                )));
            }
            points.push(geom.point(pid, &coords)?);
            location.push(leaf);
        }
        check_points(&geom, &points)?;
        let n = points.len();
        let tree = Self {
            geom,
            nodes,
            points,
            location,
            slot: vec![0; n],
            inserted: vec![true; n],
            inserted_count: n,
        };
        if let Some(v) = tree.validate_with(0, 0).into_iter().next() {
            return Err(Error::Contract(format!("listing is not a canonical tree: {v}")));
        }
        Ok(tree)
    }

    /// Appends a node to a tree under construction by the oracle.
    pub(crate) fn push_child(&mut self, parent: NodeId, cell: CanonicalCell) -> Result<NodeId> {
        let quadrant = self
            .geom
            .quadrant_of_cell(&self.nodes[parent.index()].cell, &cell)?;
        let id = self.alloc(cell, parent);
        self.nodes[parent.index()].set_child(quadrant, id);
        Ok(id)
    }

    /// Stores a pending point at a node of a tree under construction by the
    /// oracle, bypassing the conflict lists.
    pub(crate) fn store_point(&mut self, v: NodeId, p: usize) {
        self.detach(p);
        self.nodes[v.index()].point = Some(p);
        self.inserted[p] = true;
        self.inserted_count += 1;
        self.location[p] = v;
    }

    /// Checks every structural invariant plus `samples` random lattice
    /// points against the tile partition.
    pub fn validate(&self) -> Vec<Violation> {
        self.validate_with(256, 0x5eed)
    }

    pub fn validate_with(&self, samples: usize, seed: u64) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |node: Option<NodeId>, message: String| out.push(Violation { node, message });
        let geom = &self.geom;

        let root = &self.nodes[0];
        if root.cell != geom.root_cell() {
            bad(Some(NodeId::ROOT), "root cell is not the unit cube".into());
        }
        if root.parent.is_some() {
            bad(Some(NodeId::ROOT), "root has a parent".into());
        }

        // reachability and per-node shape
        let order = self.preorder();
        if order.len() != self.nodes.len() {
            bad(
                None,
                format!(
                    "{} nodes reachable from the root, {} allocated",
                    order.len(),
                    self.nodes.len()
                ),
            );
        }
        for &v in &order {
            let node = &self.nodes[v.index()];
            let is_root = v == NodeId::ROOT;
            match (node.children.is_empty(), node.point) {
                (true, None) if !(is_root && self.inserted_count == 0) => {
                    bad(Some(v), "leaf without a stored point".into())
                }
                (false, Some(_)) => bad(Some(v), "internal node stores a point".into()),
                _ => {}
            }
            if !is_root && !node.children.is_empty() && node.children.len() < 2 {
                bad(Some(v), "non-root internal node has a single child".into());
            }
            if let Some(p) = node.point {
                if p >= self.points.len() || !self.inserted[p] || self.location[p] != v {
                    bad(Some(v), format!("stored point {p} is not recorded here"));
                } else if !geom.cell_contains(&node.cell, &self.points[p]) {
                    bad(Some(v), format!("stored point {p} lies outside the cell"));
                }
            }
            let mut last = None;
            for &(q, w) in &node.children {
                let child = &self.nodes[w.index()];
                if last.is_some_and(|l| l >= q) {
                    bad(Some(v), "children not in ascending quadrant order".into());
                }
                last = Some(q);
                if child.parent != Some(v) {
                    bad(Some(w), format!("parent pointer does not point to {v}"));
                }
                match geom.quadrant_of_cell(&node.cell, &child.cell) {
                    Ok(cq) if cq == q => {}
                    _ => bad(Some(w), format!("cell is not inside quadrant {q} of its parent")),
                }
                if child.children.is_empty() && child.cell.level != node.cell.level + 1 {
                    bad(Some(w), "leaf cell is not its parent's quadrant".into());
                }
            }
        }

        // internal non-root cells are the smallest cells spanning their points
        let mut span: Vec<Option<CanonicalCell>> = vec![None; self.nodes.len()];
        for &v in order.iter().rev() {
            let node = &self.nodes[v.index()];
            let s = if let Some(p) = node.point.filter(|&p| p < self.points.len()) {
                Some(CanonicalCell {
                    level: geom.resolution(),
                    corner: self.points[p].coords.clone(),
                })
            } else {
                let mut acc: Option<CanonicalCell> = None;
                for &(_, w) in &node.children {
                    let Some(cs) = span[w.index()].take() else { continue };
                    acc = Some(match acc {
                        None => cs,
                        Some(a) => match geom.smallest_common_cell(&a, &cs) {
                            Ok(c) => c,
                            Err(_) => {
                                bad(Some(v), "two subtrees span the same cell".into());
                                a
                            }
                        },
                    });
                }
                acc
            };
            if v != NodeId::ROOT && !node.children.is_empty() && s.as_ref() != Some(&node.cell) {
                bad(Some(v), "cell is not the smallest cell spanning its points".into());
            }
            span[v.index()] = s;
        }

        // points and conflict lists
        let mut listed = vec![0usize; self.points.len()];
        for &v in &order {
            for (s, &x) in self.nodes[v.index()].conflicts.iter().enumerate() {
                if x >= self.points.len() {
                    bad(Some(v), format!("conflict list holds unknown point {x}"));
                    continue;
                }
                listed[x] += 1;
                if self.inserted[x] {
                    bad(Some(v), format!("inserted point {x} still in a conflict list"));
                }
                if self.location[x] != v || self.slot[x] != s {
                    bad(Some(v), format!("back-pointer of pending point {x} is stale"));
                }
                if !self.node_tile_contains(v, &self.points[x]) {
                    bad(Some(v), format!("pending point {x} lies outside the tile"));
                }
            }
        }
        let mut stored = vec![0usize; self.points.len()];
        for &v in &order {
            if let Some(p) = self.nodes[v.index()].point.filter(|&p| p < stored.len()) {
                stored[p] += 1;
            }
        }
        for x in 0..self.points.len() {
            if self.inserted[x] {
                if stored[x] != 1 {
                    bad(None, format!("inserted point {x} stored {} times", stored[x]));
                }
            } else if listed[x] != 1 {
                bad(None, format!("pending point {x} listed {} times", listed[x]));
            }
        }
        if self.nodes.len() > 2 * self.inserted_count + 1 {
            bad(
                None,
                format!(
                    "{} nodes for {} points exceeds 2n + 1",
                    self.nodes.len(),
                    self.inserted_count
                ),
            );
        }

        // sampled partition check, brute force over all tiles
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let coords: Vec<u64> = (0..geom.dim()).map(|_| rng.gen_range(0..geom.side())).collect();
            let x = QuantizedPoint { id: usize::MAX, coords };
            let owners: Vec<NodeId> = order
                .iter()
                .copied()
                .filter(|&v| {
                    let node = &self.nodes[v.index()];
                    geom.cell_contains(&node.cell, &x)
                        && !node
                            .children
                            .iter()
                            .any(|&(_, w)| geom.cell_contains(&self.nodes[w.index()].cell, &x))
                })
                .collect();
            if owners.len() != 1 {
                bad(
                    None,
                    format!("lattice point {:?} lies in {} tiles", x.coords, owners.len()),
                );
            } else if self.locate_tile(&x) != owners[0] {
                bad(None, format!("locate_tile disagrees on lattice point {:?}", x.coords));
            }
        }
        out
    }
}
