use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cqric::treefile::read_tree;

const GOLDEN_GEN: &str = "\
# cqric gen n=4 dim=2 dist=uniform seed=11
0.3566629358852744 0.09035465329636139
0.3953416120554226 0.5534545976881229
0.2095668535935209 0.8689245507065526
0.2177018508738161 0.3648909642337652
";

const PAIR_TREE: &str = "0 0 0\n5 3 3\n6 6 6 leaf 0 25 25\n6 7 7 leaf 1 30 30\n";

fn cqric(args: &[&str], paths: &[&Path]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cqric"));
    cmd.args(args);
    for p in paths {
        cmd.arg(p);
    }
    cmd.output().unwrap()
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn gen_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.txt", "b.txt"] {
        let out = dir.path().join(name);
        ok(&cqric(&["gen", "--n", "4", "--seed", "11", "--out"], &[&out]));
        assert_eq!(fs::read_to_string(&out).unwrap(), GOLDEN_GEN);
    }
}

#[test]
fn gen_without_points_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.txt");
    ok(&cqric(&["gen", "--n", "0", "--out"], &[&out]));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("# "));
}

#[test]
fn build_pair_and_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let pair = write(dir.path(), "pair.txt", "0.1 0.1\n0.12 0.12\n");
    let out = dir.path().join("pair.tree");
    let summary = ok(&cqric(&["build", "--resolution", "8", "--out"], &[&out, &pair]));
    assert_eq!(fs::read_to_string(&out).unwrap(), PAIR_TREE);
    assert!(summary.contains("n: 2\n"));
    assert!(summary.contains("nodes: 4\n"));
    assert!(summary.contains("total_work: 3\n"));

    let one = write(dir.path(), "one.txt", "# single\n0.5 0.25\n");
    let out = dir.path().join("one.tree");
    ok(&cqric(&["build", "--out"], &[&out, &one]));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1);
}

#[test]
fn build_is_order_independent_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("p.txt");
    ok(&cqric(&["gen", "--n", "500", "--seed", "3", "--out"], &[&pts]));
    let mut texts = Vec::new();
    for seed in ["0", "1", "99"] {
        let out = dir.path().join(format!("t{seed}.tree"));
        ok(&cqric(&["build", "--seed", seed, "--out"], &[&out, &pts]));
        texts.push(fs::read_to_string(&out).unwrap());
    }
    assert!(texts.windows(2).all(|w| w[0] == w[1]));
    let tree = read_tree(&dir.path().join("t0.tree"), 31).unwrap();
    assert!(tree.validate().is_empty());
    assert_eq!(tree.canonical_serialize(), texts[0]);
}

#[test]
fn clustered_input_has_a_compressed_edge() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("c.txt");
    ok(&cqric(
        &["gen", "--n", "100", "--dist", "clustered", "--clusters", "2", "--seed", "5", "--out"],
        &[&pts],
    ));
    let out = dir.path().join("c.tree");
    ok(&cqric(&["build", "--out"], &[&out, &pts]));
    let tree = read_tree(&out, 31).unwrap();
    let compressed = tree.node_ids().any(|v| {
        let level = tree.node(v).cell().level;
        tree.node(v)
            .children()
            .iter()
            .any(|&(_, w)| tree.node(w).cell().level > level + 1)
    });
    assert!(compressed);
}

#[test]
fn check_reports_suites() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("p.txt");
    ok(&cqric(&["gen", "--n", "12", "--seed", "8", "--out"], &[&pts]));
    let report = ok(&cqric(&["check"], &[&pts]));
    assert!(report.contains("PASS validate"));
    assert!(report.contains("PASS oracle equivalence"));
    assert!(report.contains("PASS node budget"));
    let line = report
        .lines()
        .find(|l| l.contains("Lemma 1: max defining-set size = "))
        .expect("defining-set line");
    assert!(line.starts_with("PASS") && line.ends_with("≤ 4"));
}

#[test]
fn duplicate_points_exit_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write(dir.path(), "d.txt", "0.1 0.1\n0.5 0.5\n0.1 0.1\n");
    let o = cqric(&["check"], &[&pts]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("coincide") && err.contains("reject"), "{err}");

    let out = dir.path().join("d.tree");
    assert_eq!(cqric(&["build", "--out"], &[&out, &pts]).status.code(), Some(2));
    ok(&cqric(&["build", "--dedup", "--out"], &[&out, &pts]));
    assert_eq!(read_tree(&out, 31).unwrap().points().len(), 2);
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write(dir.path(), "bad.txt", "0.1 0.2\n# ok\n0.3 1.5\n");
    let out = dir.path().join("bad.tree");
    let o = cqric(&["build", "--out"], &[&out, &pts]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn render_produces_well_formed_svg() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("c.txt");
    ok(&cqric(
        &["gen", "--n", "100", "--dist", "clustered", "--clusters", "2", "--seed", "1", "--out"],
        &[&pts],
    ));
    let svg = dir.path().join("c.svg");
    ok(&cqric(&["render", "--out"], &[&svg, &pts]));
    let text = fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let circles = doc.descendants().filter(|n| n.has_tag_name("circle")).count();
    assert_eq!(circles, 100);

    let again = dir.path().join("again.svg");
    ok(&cqric(&["render", "--out"], &[&again, &pts]));
    assert_eq!(fs::read(&again).unwrap(), text.as_bytes());
}

#[test]
fn render_pair_shades_the_annulus() {
    let dir = tempfile::tempdir().unwrap();
    let tree = write(dir.path(), "pair.tree", PAIR_TREE);
    let svg = dir.path().join("pair.svg");
    ok(&cqric(&["render", "--resolution", "8", "--out"], &[&svg, &tree]));
    let text = fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let rects: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("rect")).collect();
    // background, root, compressed cell, two leaves
    assert_eq!(rects.len(), 5);
    // cell (5; 3, 3) is 1/32 wide at x = 3/32, flipped vertically
    let inner = rects[2];
    assert_eq!(inner.attribute("x"), Some("48.000"));
    assert_eq!(inner.attribute("y"), Some("448.000"));
    assert_eq!(inner.attribute("width"), Some("16.000"));
    let paths: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("path")).collect();
    assert_eq!(paths.len(), 1);
    assert_eq!(paths[0].attribute("fill-rule"), Some("evenodd"));
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("circle")).count(), 2);
}

#[test]
fn render_rejects_three_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write(dir.path(), "p3.txt", "0.1 0.2 0.3\n0.4 0.5 0.6\n");
    let o = cqric(&["render", "--out"], &[&dir.path().join("x.svg"), &pts]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("d = 3"));
}

#[test]
fn bench_writes_reproducible_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&cqric(
            &[
                "bench", "--n", "64,256", "--trials", "3", "--seed", "4", "--profile-n", "128",
                "--profile-trials", "3", "--lemma2-points", "8", "--lemma2-trials", "300", "--out",
            ],
            &[&out],
        ));
        ["scaling.csv", "profile.csv", "lemma2.csv"].map(|f| fs::read_to_string(out.join(f)).unwrap())
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert!(a[0].starts_with("n,trials,mean_total_work,normalized\n"));
    assert_eq!(a[0].lines().count(), 3);
    assert!(a[1].starts_with("i,mean_k,reference_4n_over_i\n1,127.000000,512.000000\n"));
    assert_eq!(a[1].lines().count(), 129);
    assert!(a[2].starts_with("tile_id,i,present,created,freq,bound,flagged\n"));
}
