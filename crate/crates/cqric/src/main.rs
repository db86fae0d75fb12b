use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cqric::experiments::{
    lemma1_set, lemma2_monte_carlo, per_iteration_profile, trial_rng, uniform_points, work_scaling,
    write_lemma2_csv, write_profile_csv, write_scaling_csv, Lemma2Summary,
};
use cqric::points::{generate, read_points, write_points, Distribution, GenSpec};
use cqric::render::{render_points, render_tree};
use cqric::treefile::read_tree;
use cqric::{Error, Result};
use cqric_core::builder::{quantize_points, seeded_rng};
use cqric_core::oracle::{build_topdown, TileModel};
use cqric_core::{BuildConfig, CompressedQuadtree, DuplicatePolicy, GeometryConfig, IncrementalBuild};

/// Largest input for which `check` runs the exhaustive defining-set search.
const CHECK_CENSUS_MAX: usize = 12;

#[derive(Parser)]
#[command(name = "cqric", version, about = "Compressed quadtrees by randomized incremental construction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random point file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = Distribution::Uniform)]
        dist: Distribution,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cluster count for the clustered distribution.
        #[arg(long, default_value_t = 4)]
        clusters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the tree of a point file and write its canonical serialization.
    Build {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 31)]
        resolution: u32,
        /// Drop points that coincide after quantization instead of failing.
        #[arg(long)]
        dedup: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate the construction on a point file.
    Check {
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 31)]
        resolution: u32,
    },
    /// Run the statistical experiments and write scaling.csv, profile.csv
    /// and lemma2.csv.
    Bench {
        /// Comma-separated sizes for the scaling run.
        #[arg(long, value_delimiter = ',', default_values_t = [1024, 4096, 16384, 65536])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4096)]
        profile_n: usize,
        #[arg(long, default_value_t = 50)]
        profile_trials: usize,
        #[arg(long, default_value_t = 16)]
        lemma2_points: usize,
        #[arg(long, default_value_t = 5000)]
        lemma2_trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a planar tree or point file as SVG.
    Render {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 31)]
        resolution: u32,
        #[arg(long, value_enum, default_value_t = Kind::Auto)]
        kind: Kind,
        /// Seed for building the tree of a point file.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    /// Tree serialization if it parses as one, otherwise a point file.
    Auto,
    /// Build the tree of a point file and draw it.
    Tree,
    /// Draw the points of a point file only.
    Points,
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Core(cqric_core::Error::Invariant(_)) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Gen {
            n,
            dim,
            dist,
            seed,
            clusters,
            out,
        } => {
            let spec = GenSpec {
                n,
                dim,
                distribution: dist,
                clusters,
            };
            let pts = generate(&spec, &mut seeded_rng(seed));
            let header = match dist {
                Distribution::Uniform => format!("cqric gen n={n} dim={dim} dist={dist} seed={seed}"),
                Distribution::Clustered => {
                    format!("cqric gen n={n} dim={dim} dist={dist} clusters={clusters} seed={seed}")
                }
            };
            write_points(&out, &header, &pts)?;
            Ok(Outcome::Ok)
        }
        Command::Build {
            input,
            seed,
            resolution,
            dedup,
            out,
        } => {
            let policy = if dedup {
                DuplicatePolicy::Deduplicate
            } else {
                DuplicatePolicy::Reject
            };
            let (pts, dim) = read_points(&input)?;
            let geom = GeometryConfig::new(dim.unwrap_or(2), resolution)?.with_duplicate_policy(policy);
            let cfg = BuildConfig::new(geom, seed);
            let (tree, stats) = IncrementalBuild::new(quantize_points(&pts, &geom)?, &cfg)?.finish()?;
            fs::write(&out, tree.canonical_serialize()).map_err(|source| Error::Io {
                path: out.clone(),
                source,
            })?;
            println!("n: {}", tree.points().len());
            println!("nodes: {}", stats.node_count);
            println!("max_depth: {}", stats.max_depth);
            println!("total_work: {}", stats.total_work());
            println!("total_conflicts: {}", stats.total_conflicts);
            println!("max_nodes_per_insertion: {}", stats.max_nodes_created);
            Ok(Outcome::Ok)
        }
        Command::Check {
            input,
            trials,
            seed,
            resolution,
        } => check(&input, trials, seed, resolution),
        Command::Bench {
            n,
            trials,
            seed,
            profile_n,
            profile_trials,
            lemma2_points,
            lemma2_trials,
            out,
        } => {
            fs::create_dir_all(&out).map_err(|source| Error::Io {
                path: out.clone(),
                source,
            })?;
            let mut ns = n;
            ns.sort_unstable();
            let scaling = work_scaling(&ns, trials, seed)?;
            write_scaling_csv(&out.join("scaling.csv"), &scaling)?;
            for r in &scaling {
                println!(
                    "n={} mean_total_work={:.1} normalized={:.4}",
                    r.n, r.mean_total_work, r.normalized
                );
            }
            let profile = per_iteration_profile(profile_n, profile_trials, seed)?;
            write_profile_csv(&out.join("profile.csv"), &profile)?;
            let geom = GeometryConfig::planar(31)?;
            let pts = uniform_points(&geom, lemma2_points, &mut trial_rng(seed, u64::MAX));
            let rows = lemma2_monte_carlo(&geom, &pts, lemma2_trials, seed, TileModel::Elementary)?;
            write_lemma2_csv(&out.join("lemma2.csv"), &rows)?;
            let s = Lemma2Summary::of(&rows);
            println!(
                "lemma2: {} rows, {} with presence >= 100, {} flagged",
                s.rows, s.tested, s.flagged
            );
            Ok(Outcome::Ok)
        }
        Command::Render {
            input,
            out,
            resolution,
            kind,
            seed,
        } => {
            let svg = match kind {
                Kind::Points => render_points(&read_points(&input)?.0)?,
                Kind::Tree => render_tree(&tree_of_points(&input, resolution, seed)?)?,
                Kind::Auto => match read_tree(&input, resolution) {
                    Ok(tree) => render_tree(&tree)?,
                    Err(_) => render_tree(&tree_of_points(&input, resolution, seed)?)?,
                },
            };
            fs::write(&out, svg).map_err(|source| Error::Io {
                path: out.clone(),
                source,
            })?;
            Ok(Outcome::Ok)
        }
    }
}

fn tree_of_points(path: &Path, resolution: u32, seed: u64) -> Result<CompressedQuadtree> {
    let (pts, dim) = read_points(path)?;
    let geom = GeometryConfig::new(dim.unwrap_or(2), resolution)?;
    let cfg = BuildConfig::new(geom, seed);
    Ok(IncrementalBuild::new(quantize_points(&pts, &geom)?, &cfg)?.finish()?.0)
}

fn report(ok: bool, line: String) -> bool {
    println!("{} {line}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn check(input: &Path, trials: usize, seed: u64, resolution: u32) -> Result<Outcome> {
    let (raw, dim) = read_points(input)?;
    let geom = GeometryConfig::new(dim.unwrap_or(2), resolution)?;
    let pts = quantize_points(&raw, &geom)?;
    let n = pts.len();
    let reference = build_topdown(geom, pts.clone())?.canonical_serialize();

    let mut violations = 0;
    let mut mismatches = 0;
    let mut max_new = 0;
    for t in 0..trials.max(1) {
        let cfg = BuildConfig::new(geom, seed.wrapping_add(t as u64));
        let (tree, stats) = IncrementalBuild::new(pts.clone(), &cfg)?.finish()?;
        violations += tree.validate().len();
        if tree.canonical_serialize() != reference {
            mismatches += 1;
        }
        max_new = max_new.max(stats.max_nodes_created);
    }
    let trials = trials.max(1);
    let mut ok = report(
        violations == 0,
        format!("validate: {violations} violations over {trials} builds"),
    );
    ok &= report(
        mismatches == 0,
        format!("oracle equivalence: {mismatches} of {trials} builds differ from the top-down tree"),
    );
    ok &= report(
        max_new <= 3,
        format!("node budget: at most {max_new} new nodes per insertion (limit 3)"),
    );
    if n <= CHECK_CENSUS_MAX {
        let s = lemma1_set(&geom, &pts, TileModel::Elementary, 4)?;
        ok &= report(
            s.failures == 0 && s.max_min_size <= 4,
            format!("Lemma 1: max defining-set size = {} ≤ 4", s.max_min_size),
        );
        ok &= report(
            s.max_intersection <= 4,
            format!("Lemma 1: max |Z| = {} ≤ 4", s.max_intersection),
        );
        let r = lemma1_set(&geom, &pts, TileModel::Residual, n)?;
        println!(
            "INFO residual tiles: max defining-set size = {}, max |Z| = {}",
            r.max_min_size, r.max_intersection
        );
    } else {
        println!("SKIP Lemma 1: exhaustive search needs n ≤ {CHECK_CENSUS_MAX}, got {n}");
    }
    Ok(if ok { Outcome::Ok } else { Outcome::Failed })
}
