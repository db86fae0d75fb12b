//! Point files: one point per line, `d` whitespace-separated reals in
//! `[0, 1)`, lines starting with `#` ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::{io_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distribution {
    #[default]
    Uniform,
    Clustered,
}

impl FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "clustered" => Ok(Self::Clustered),
            other => Err(format!("unknown distribution `{other}` (uniform | clustered)")),
        }
    }
}

impl std::fmt::Display for Distribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::Clustered => "clustered",
        })
    }
}

/// Half-width of the box each clustered point is drawn from.
pub const CLUSTER_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub dim: usize,
    pub distribution: Distribution,
    /// Cluster count for [`Distribution::Clustered`].
    pub clusters: usize,
}

/// Draws a point set. Uniform: i.i.d. coordinates. Clustered: each point
/// picks one of `clusters` uniform centers and is offset by up to
/// [`CLUSTER_RADIUS`] per axis, clipped to `[0, 1)`.
pub fn generate(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let below_one = 1.0f64.next_down();
    match spec.distribution {
        Distribution::Uniform => (0..spec.n)
            .map(|_| (0..spec.dim).map(|_| rng.gen::<f64>()).collect())
            .collect(),
        Distribution::Clustered => {
            let k = spec.clusters.max(1);
            let centers: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..spec.dim).map(|_| rng.gen::<f64>()).collect())
                .collect();
            (0..spec.n)
                .map(|_| {
                    let c = &centers[rng.gen_range(0..k)];
                    c.iter()
                        .map(|&x| {
                            let off = rng.gen_range(-CLUSTER_RADIUS..CLUSTER_RADIUS);
                            (x + off).clamp(0.0, below_one)
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// Writes a point file with a one-line header comment. Reals use the
/// shortest decimal form that reads back to the same `f64`.
pub fn format_points(header: &str, points: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    for p in points {
        let row: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn write_points(path: &Path, header: &str, points: &[Vec<f64>]) -> Result<()> {
    fs::write(path, format_points(header, points)).map_err(io_err(path))
}

/// Parses a point file. All rows must share one arity; the returned
/// dimension is `None` for a file without points.
pub fn parse_points(text: &str) -> Result<(Vec<Vec<f64>>, Option<usize>)> {
    let mut points = Vec::new();
    let mut dim = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("`{tok}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {d} coordinates, found {}", row.len()),
                })
            }
            _ => {}
        }
        if let Some(k) = row.iter().position(|x| !(0.0..1.0).contains(x)) {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("coordinate {} is outside [0, 1)", row[k]),
            });
        }
        points.push(row);
    }
    Ok((points, dim))
}

pub fn read_points(path: &Path) -> Result<(Vec<Vec<f64>>, Option<usize>)> {
    parse_points(&fs::read_to_string(path).map_err(io_err(path))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cqric_core::builder::seeded_rng;

    #[test]
    fn parse_skips_comments_and_checks_arity() {
        let (pts, dim) = parse_points("# hi\n0.5 0.25\n\n  # indented\n0 0.75\n").unwrap();
        assert_eq!(pts, vec![vec![0.5, 0.25], vec![0.0, 0.75]]);
        assert_eq!(dim, Some(2));
        assert!(matches!(
            parse_points("0.1 0.2\n0.3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_points("0.1 x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_points("# c\n0.1 1.0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert_eq!(parse_points("# only\n").unwrap(), (vec![], None));
    }

    #[test]
    fn formatting_round_trips() {
        let mut rng = seeded_rng(9);
        let spec = GenSpec {
            n: 50,
            dim: 3,
            distribution: Distribution::Clustered,
            clusters: 3,
        };
        let pts = generate(&spec, &mut rng);
        assert!(pts.iter().flatten().all(|x| (0.0..1.0).contains(x)));
        let (back, dim) = parse_points(&format_points("x", &pts)).unwrap();
        assert_eq!(back, pts);
        assert_eq!(dim, Some(3));
    }
}
