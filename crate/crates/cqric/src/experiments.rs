//! Statistical harnesses for the analysis of the construction.
//!
//! - [`lemma2_monte_carlo`]: how often a tile present after `i` insertions
//!   was created by the `i`-th one, against the `4/i` bound.
//! - [`per_iteration_profile`]: mean conflict-list size `k_i` per iteration,
//!   against `1 + 4n/i`.
//! - [`work_scaling`]: mean total work `sum (1 + k_i)` normalized by
//!   `n ln n`.
//! - [`lemma1_census`]: exhaustive defining-set sizes over small sets.
//!
//! Trial `t` of a run seeded with `s` draws from `ChaCha8Rng` seeded with `s`
//! on stream `t`, so trials are independent of scheduling and results do
//! not depend on the thread count.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use cqric_core::builder::{dedup_points, seeded_rng, shuffle_with};
use cqric_core::oracle::{tile_keys, SubsetCensus, TileKey, TileModel};
use cqric_core::{BuildConfig, DuplicatePolicy, GeometryConfig, IncrementalBuild, QuantizedPoint};
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::Result;

/// Presence floor below which a Lemma 2 row is not tested.
pub const LEMMA2_MIN_PRESENCE: u64 = 100;
/// Slack, in binomial standard deviations, on top of `4/i`.
pub const LEMMA2_SIGMAS: f64 = 3.0;

pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(stream);
    rng
}

/// `n` uniform points of `[0, 1)^d` on the lattice of `geom`. Coincident
/// draws are dropped, so fewer than `n` points may come back.
pub fn uniform_points(geom: &GeometryConfig, n: usize, rng: &mut impl Rng) -> Vec<QuantizedPoint> {
    let pts = (0..n)
        .map(|i| {
            let coords: Vec<f64> = (0..geom.dim()).map(|_| rng.gen::<f64>()).collect();
            geom.quantize(i, &coords).expect("draws lie in [0, 1)")
        })
        .collect();
    let dedup = geom.with_duplicate_policy(DuplicatePolicy::Deduplicate);
    dedup_points(pts, &dedup).expect("deduplication cannot fail")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Row {
    pub tile_id: usize,
    pub tile: TileKey,
    pub i: usize,
    pub present: u64,
    pub created: u64,
    pub bound: f64,
    pub flagged: bool,
}

impl Lemma2Row {
    pub fn freq(&self) -> f64 {
        self.created as f64 / self.present as f64
    }
}

/// Whether an observed creation frequency exceeds `4/i` by more than the
/// binomial slack. Rows under the presence floor are never flagged.
pub fn lemma2_flag(i: usize, present: u64, created: u64) -> bool {
    if present < LEMMA2_MIN_PRESENCE {
        return false;
    }
    let bound = 4.0 / i as f64;
    let var = (bound * (1.0 - bound)).max(0.0) / present as f64;
    created as f64 / present as f64 > bound + LEMMA2_SIGMAS * var.sqrt()
}

/// Tiles present after each prefix of random permutations of `points`,
/// with how often each was new at that step. The empty prefix has no tiles.
pub fn lemma2_monte_carlo(
    geom: &GeometryConfig,
    points: &[QuantizedPoint],
    trials: usize,
    seed: u64,
    model: TileModel,
) -> Result<Vec<Lemma2Row>> {
    let cfg = BuildConfig {
        seed,
        geometry: *geom,
        collect_stats: false,
    };
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<HashMap<(TileKey, usize), (u64, u64)>> {
            let mut rng = trial_rng(seed, t as u64);
            let mut order: Vec<usize> = (0..points.len()).collect();
            shuffle_with(&mut order, &mut rng);
            let mut run = IncrementalBuild::with_order(points.to_vec(), order, &cfg)?;
            let mut prev: BTreeSet<TileKey> = BTreeSet::new();
            let mut local = HashMap::new();
            while let Some(rec) = run.step()? {
                let cur = tile_keys(run.tree(), model);
                for key in &cur {
                    let e = local.entry((key.clone(), rec.i)).or_insert((0, 0));
                    e.0 += 1;
                    if !prev.contains(key) {
                        e.1 += 1;
                    }
                }
                prev = cur;
            }
            Ok(local)
        })
        .try_reduce(HashMap::new, |mut a, b| {
            for (k, (p, c)) in b {
                let e = a.entry(k).or_insert((0, 0));
                e.0 += p;
                e.1 += c;
            }
            Ok(a)
        })?;

    let ordered: BTreeMap<(TileKey, usize), (u64, u64)> = counts.into_iter().collect();
    let ids: BTreeMap<&TileKey, usize> = ordered
        .keys()
        .map(|(k, _)| k)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(id, k)| (k, id))
        .collect();
    Ok(ordered
        .iter()
        .map(|((tile, i), &(present, created))| Lemma2Row {
            tile_id: ids[tile],
            tile: tile.clone(),
            i: *i,
            present,
            created,
            bound: 4.0 / *i as f64,
            flagged: lemma2_flag(*i, present, created),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma2Summary {
    pub rows: usize,
    pub tested: usize,
    pub flagged: usize,
}

impl Lemma2Summary {
    pub fn of(rows: &[Lemma2Row]) -> Self {
        Self {
            rows: rows.len(),
            tested: rows.iter().filter(|r| r.present >= LEMMA2_MIN_PRESENCE).count(),
            flagged: rows.iter().filter(|r| r.flagged).count(),
        }
    }

    pub fn flagged_fraction(&self) -> f64 {
        if self.tested == 0 {
            0.0
        } else {
            self.flagged as f64 / self.tested as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub trials: usize,
    pub mean_total_work: f64,
    pub normalized: f64,
}

/// `n ln n`, taken as 1 below `n = 2`.
pub fn n_log_n(n: usize) -> f64 {
    if n < 2 {
        1.0
    } else {
        n as f64 * (n as f64).ln()
    }
}

fn planar_fine() -> GeometryConfig {
    GeometryConfig::planar(31).expect("valid configuration")
}

/// Conflict sizes `k_1..k_n` of one build of `n` uniform planar points.
fn uniform_build(n: usize, rng: &mut ChaCha8Rng, collect: bool) -> Result<(u64, Vec<usize>)> {
    let geom = planar_fine();
    let pts = uniform_points(&geom, n, rng);
    let cfg = BuildConfig {
        seed: rng.next_u64(),
        geometry: geom,
        collect_stats: collect,
    };
    let (_, stats) = IncrementalBuild::new(pts, &cfg)?.finish()?;
    let ks = stats.iterations.iter().map(|r| r.conflicts).collect();
    Ok((stats.total_work(), ks))
}

fn size_stream(n: usize, trial: usize) -> u64 {
    ((n as u64) << 32) | trial as u64
}

/// Mean total work over `trials` uniform planar builds for each `n`.
pub fn work_scaling(ns: &[usize], trials: usize, seed: u64) -> Result<Vec<ScalingRow>> {
    ns.iter()
        .map(|&n| {
            let works = (0..trials)
                .into_par_iter()
                .map(|t| Ok(uniform_build(n, &mut trial_rng(seed, size_stream(n, t)), false)?.0))
                .collect::<Result<Vec<u64>>>()?;
            let mean = works.iter().sum::<u64>() as f64 / trials.max(1) as f64;
            Ok(ScalingRow {
                n,
                trials,
                mean_total_work: mean,
                normalized: mean / n_log_n(n),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub i: usize,
    pub mean_k: f64,
    pub reference_4n_over_i: f64,
}

/// Mean `k_i` per iteration over `trials` uniform planar builds of `n`
/// points.
pub fn per_iteration_profile(n: usize, trials: usize, seed: u64) -> Result<Vec<ProfileRow>> {
    let runs = (0..trials)
        .into_par_iter()
        .map(|t| Ok(uniform_build(n, &mut trial_rng(seed, size_stream(n, t)), true)?.1))
        .collect::<Result<Vec<Vec<usize>>>>()?;
    // coincident draws may shorten a run; average over the runs reaching i
    let len = runs.iter().map(Vec::len).max().unwrap_or(0);
    Ok((0..len)
        .map(|idx| {
            let (sum, cnt) = runs
                .iter()
                .filter_map(|r| r.get(idx))
                .fold((0usize, 0usize), |(s, c), &k| (s + k, c + 1));
            let i = idx + 1;
            ProfileRow {
                i,
                mean_k: sum as f64 / cnt as f64,
                reference_4n_over_i: 4.0 * n as f64 / i as f64,
            }
        })
        .collect())
}

/// Per decile of iterations: `(mean k_i, mean of 1 + 4n/i)`.
pub fn profile_deciles(profile: &[ProfileRow]) -> Vec<(f64, f64)> {
    let m = profile.len();
    (0..10)
        .filter_map(|d| {
            let chunk = &profile[d * m / 10..(d + 1) * m / 10];
            if chunk.is_empty() {
                return None;
            }
            let len = chunk.len() as f64;
            let k = chunk.iter().map(|r| r.mean_k).sum::<f64>() / len;
            let r = chunk.iter().map(|r| 1.0 + r.reference_4n_over_i).sum::<f64>() / len;
            Some((k, r))
        })
        .collect()
}

/// Smallest `c` with every decile mean `k` at most `c` times its reference.
pub fn fit_profile_constant(profile: &[ProfileRow]) -> f64 {
    profile_deciles(profile)
        .into_iter()
        .map(|(k, r)| k / r)
        .fold(0.0, f64::max)
}

/// Deciles (0-based) whose mean `k` exceeds `c` times the reference.
pub fn profile_violations(profile: &[ProfileRow], c: f64) -> Vec<usize> {
    profile_deciles(profile)
        .into_iter()
        .enumerate()
        .filter(|(_, (k, r))| *k > c * r)
        .map(|(d, _)| d)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Lemma1Summary {
    pub sets: usize,
    pub tiles: usize,
    /// Largest minimum-cardinality defining set over all tiles.
    pub max_min_size: usize,
    /// Largest inclusion-minimal defining set over all tiles.
    pub max_defining_size: usize,
    /// Largest intersection of all defining sets of one tile.
    pub max_intersection: usize,
    /// Tiles with no defining set of size at most `k_max`.
    pub failures: usize,
}

impl Lemma1Summary {
    fn merge(self, o: Self) -> Self {
        Self {
            sets: self.sets + o.sets,
            tiles: self.tiles + o.tiles,
            max_min_size: self.max_min_size.max(o.max_min_size),
            max_defining_size: self.max_defining_size.max(o.max_defining_size),
            max_intersection: self.max_intersection.max(o.max_intersection),
            failures: self.failures + o.failures,
        }
    }
}

/// Exhaustive defining-set statistics for one point set.
pub fn lemma1_set(
    geom: &GeometryConfig,
    points: &[QuantizedPoint],
    model: TileModel,
    k_max: usize,
) -> Result<Lemma1Summary> {
    let census = SubsetCensus::new(geom, points, model)?;
    let mut s = Lemma1Summary {
        sets: 1,
        ..Default::default()
    };
    for f in census.tiles() {
        s.tiles += 1;
        match census.search(f, points.len())? {
            Some(x) => {
                s.max_min_size = s.max_min_size.max(x.len());
                if x.len() > k_max {
                    s.failures += 1;
                }
            }
            None => s.failures += 1,
        }
        for d in census.defining_sets(f)? {
            s.max_defining_size = s.max_defining_size.max(d.len());
        }
        s.max_intersection = s.max_intersection.max(census.intersection(f)?.len());
    }
    Ok(s)
}

pub fn lemma1_census(
    geom: &GeometryConfig,
    sets: &[Vec<QuantizedPoint>],
    model: TileModel,
    k_max: usize,
) -> Result<Lemma1Summary> {
    sets.par_iter()
        .map(|pts| lemma1_set(geom, pts, model, k_max))
        .try_reduce(Lemma1Summary::default, |a, b| Ok(a.merge(b)))
}

pub fn write_lemma2_csv(path: &Path, rows: &[Lemma2Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["tile_id", "i", "present", "created", "freq", "bound", "flagged"])?;
    for r in rows {
        w.write_record([
            r.tile_id.to_string(),
            r.i.to_string(),
            r.present.to_string(),
            r.created.to_string(),
            format!("{:.6}", r.freq()),
            format!("{:.6}", r.bound),
            r.flagged.to_string(),
        ])?;
    }
    w.flush().map_err(crate::io_err(path))?;
    Ok(())
}

pub fn write_scaling_csv(path: &Path, rows: &[ScalingRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "trials", "mean_total_work", "normalized"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.trials.to_string(),
            format!("{:.3}", r.mean_total_work),
            format!("{:.6}", r.normalized),
        ])?;
    }
    w.flush().map_err(crate::io_err(path))?;
    Ok(())
}

pub fn write_profile_csv(path: &Path, rows: &[ProfileRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["i", "mean_k", "reference_4n_over_i"])?;
    for r in rows {
        w.write_record([
            r.i.to_string(),
            format!("{:.6}", r.mean_k),
            format!("{:.6}", r.reference_4n_over_i),
        ])?;
    }
    w.flush().map_err(crate::io_err(path))?;
    Ok(())
}
