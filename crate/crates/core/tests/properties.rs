use cqric_core::builder::dedup_points;
use cqric_core::oracle::{build_topdown, tile_keys, tiles_of, TileModel};
use cqric_core::{
    BuildConfig, CanonicalCell, CompressedQuadtree, DuplicatePolicy, GeometryConfig, IncrementalBuild,
    QuantizedPoint, SerializedNode,
};
use proptest::prelude::*;

fn geom(dim: usize, res: u32) -> GeometryConfig {
    GeometryConfig::new(dim, res)
        .unwrap()
        .with_duplicate_policy(DuplicatePolicy::Deduplicate)
}

/// `(geometry, distinct points)`; small resolutions force deep shared
/// prefixes and coincidences.
fn point_set(max_n: usize) -> impl Strategy<Value = (GeometryConfig, Vec<QuantizedPoint>)> {
    (1usize..=3, prop_oneof![Just(4u32), Just(8), Just(31)]).prop_flat_map(move |(d, l)| {
        let side = 1u64 << l;
        prop::collection::vec(prop::collection::vec(0..side, d), 0..=max_n).prop_map(move |raw| {
            let g = geom(d, l);
            let pts = raw
                .iter()
                .enumerate()
                .map(|(i, c)| g.point(i, c).unwrap())
                .collect();
            (g, dedup_points(pts, &g).unwrap())
        })
    })
}

/// Points packed into one small corner so that compressed edges appear.
fn clustered_set(max_n: usize) -> impl Strategy<Value = (GeometryConfig, Vec<QuantizedPoint>)> {
    (0u64..1 << 20, 0u64..1 << 20, prop::collection::vec((0u64..64, 0u64..64), 1..=max_n)).prop_map(
        |(bx, by, offs)| {
            let g = geom(2, 31);
            let pts = offs
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| g.point(i, &[(bx << 11) + x, (by << 11) + y]).unwrap())
                .collect();
            (g, dedup_points(pts, &g).unwrap())
        },
    )
}

fn naive_common_cell(g: &GeometryConfig, a: &QuantizedPoint, b: &QuantizedPoint) -> CanonicalCell {
    let mut cell = g.root_cell();
    loop {
        let qa = g.quadrant_index(&cell, a).unwrap();
        let qb = g.quadrant_index(&cell, b).unwrap();
        if qa != qb {
            return cell;
        }
        cell = g.child_cell(&cell, qa).unwrap();
    }
}

fn serialized(tree: &CompressedQuadtree) -> Vec<SerializedNode> {
    tree.preorder()
        .into_iter()
        .map(|v| {
            let node = tree.node(v);
            SerializedNode {
                level: node.cell().level,
                corner: node.cell().corner.clone(),
                leaf: node.point().map(|p| (p, tree.point(p).coords.clone())),
            }
        })
        .collect()
}

/// Every not-yet-inserted point sits in exactly one conflict list, and that
/// node's tile contains it.
fn conflicts_partition(tree: &CompressedQuadtree) -> Result<(), String> {
    let mut seen = vec![0usize; tree.points().len()];
    for v in tree.node_ids() {
        for &p in tree.node(v).conflicts() {
            if tree.is_inserted(p) {
                return Err(format!("inserted point {p} in a conflict list"));
            }
            if !tree.node_tile_contains(v, tree.point(p)) {
                return Err(format!("point {p} outside the tile listing it"));
            }
            seen[p] += 1;
        }
    }
    for (p, &times) in seen.iter().enumerate() {
        if times != usize::from(!tree.is_inserted(p)) {
            return Err(format!("point {p} listed {times} times"));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quadrant_and_child_cell_agree((g, pts) in point_set(8), level in 0u32..4) {
        for p in &pts {
            let level = level.min(g.resolution() - 1);
            let corner: Vec<u64> = p.coords.iter().map(|&c| c >> (g.resolution() - level)).collect();
            let cell = g.cell(level, &corner).unwrap();
            prop_assert!(g.cell_contains(&cell, p));
            let q = g.quadrant_index(&cell, p).unwrap();
            let child = g.child_cell(&cell, q).unwrap();
            prop_assert!(g.cell_contains(&child, p));
            prop_assert_eq!(g.quadrant_of_cell(&cell, &child).unwrap(), q);
            for other in (0..g.quadrant_count()).filter(|&o| o != q) {
                prop_assert!(!g.cell_contains(&g.child_cell(&cell, other).unwrap(), p));
            }
        }
    }

    #[test]
    fn common_cell_matches_descent((g, pts) in point_set(6)) {
        for a in &pts {
            for b in &pts {
                if a.coords == b.coords {
                    prop_assert!(g.smallest_common_cell(a, b).is_err());
                    continue;
                }
                let c = g.smallest_common_cell(a, b).unwrap();
                prop_assert_eq!(&c, &g.smallest_common_cell(b, a).unwrap());
                prop_assert_eq!(&c, &naive_common_cell(&g, a, b));
                prop_assert!(g.cell_contains(&c, a) && g.cell_contains(&c, b));
                // a point against a cell holding it is the cell itself
                let cell = g.child_cell(&c, g.quadrant_index(&c, a).unwrap()).unwrap();
                prop_assert_eq!(&c, &g.smallest_common_cell(&cell, b).unwrap());
            }
        }
    }

    #[test]
    fn any_order_gives_the_canonical_tree((g, pts) in point_set(40), s1: u64, s2: u64) {
        let reference = build_topdown(g, pts.clone()).unwrap();
        prop_assert!(reference.validate().is_empty());
        for seed in [s1, s2] {
            let (tree, stats) = IncrementalBuild::new(pts.clone(), &BuildConfig::new(g, seed))
                .unwrap()
                .finish()
                .unwrap();
            prop_assert!(tree.validate().is_empty());
            prop_assert_eq!(tree.canonical_serialize(), reference.canonical_serialize());
            prop_assert!(stats.max_nodes_created <= 3);
            prop_assert!(tree.node_count() <= (2 * pts.len()).max(1));
            if pts.len() > 1 {
                prop_assert_eq!(stats.iterations[0].conflicts, pts.len() - 1);
            }
        }
    }

    #[test]
    fn clustered_sets_compress((g, pts) in clustered_set(40), seed: u64) {
        let (tree, stats) = IncrementalBuild::new(pts.clone(), &BuildConfig::new(g, seed))
            .unwrap()
            .finish()
            .unwrap();
        prop_assert_eq!(tree.canonical_serialize(), build_topdown(g, pts.clone()).unwrap().canonical_serialize());
        prop_assert!(stats.max_nodes_created <= 3);
        if pts.len() > 1 {
            // the cluster lies far below the root
            let root = tree.root();
            prop_assert_eq!(root.children().len(), 1);
            prop_assert!(tree.node(root.children()[0].1).cell().level > 1);
        }
    }

    #[test]
    fn every_prefix_is_canonical((g, pts) in point_set(24), seed: u64) {
        let mut run = IncrementalBuild::new(pts.clone(), &BuildConfig::new(g, seed)).unwrap();
        prop_assert!(conflicts_partition(run.tree()).is_ok());
        while let Some(rec) = run.step().unwrap() {
            let tree = run.tree();
            prop_assert!(rec.nodes_created <= 3);
            let v = tree.validate();
            prop_assert!(v.is_empty(), "{:?}", v);
            if let Err(e) = conflicts_partition(tree) {
                prop_assert!(false, "{}", e);
            }
            let prefix: Vec<QuantizedPoint> =
                run.order()[..rec.i].iter().map(|&p| tree.point(p).clone()).collect();
            for model in [TileModel::Residual, TileModel::Elementary] {
                prop_assert_eq!(tile_keys(tree, model), tiles_of(&g, &prefix, model).unwrap());
            }
        }
        prop_assert!(run.is_done());
    }

    #[test]
    fn serialization_round_trips((g, pts) in point_set(40), seed: u64) {
        let (tree, _) = IncrementalBuild::new(pts, &BuildConfig::new(g, seed)).unwrap().finish().unwrap();
        let back = CompressedQuadtree::from_preorder(g, &serialized(&tree)).unwrap();
        prop_assert_eq!(back.canonical_serialize(), tree.canonical_serialize());
    }

    #[test]
    fn sampled_lattice_points_hit_one_tile((g, pts) in point_set(30), probes in prop::collection::vec(any::<u64>(), 16)) {
        let tree = build_topdown(g, pts).unwrap();
        for (i, chunk) in probes.chunks(g.dim()).enumerate() {
            if chunk.len() < g.dim() {
                break;
            }
            let coords: Vec<u64> = chunk.iter().map(|c| c >> (64 - g.resolution())).collect();
            let p = g.point(usize::MAX - i, &coords).unwrap();
            let hits: Vec<_> = tree.node_ids().filter(|&v| tree.node_tile_contains(v, &p)).collect();
            prop_assert_eq!(hits.len(), 1);
            prop_assert_eq!(hits[0], tree.locate_tile(&p));
        }
    }
}
