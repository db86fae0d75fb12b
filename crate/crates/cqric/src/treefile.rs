//! Reading the canonical serialization back into a tree.

use std::fs;
use std::path::Path;

use cqric_core::{CompressedQuadtree, GeometryConfig, SerializedNode};

use crate::{io_err, Error, Result};

fn parse_u64(tok: &str, line: usize) -> Result<u64> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{tok}` is not an unsigned integer"),
    })
}

/// Splits one serialization line into its fields.
pub fn parse_line(text: &str, line: usize) -> Result<SerializedNode> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let (head, leaf) = match toks.iter().position(|&t| t == "leaf") {
        Some(at) => (&toks[..at], Some(&toks[at + 1..])),
        None => (&toks[..], None),
    };
    let Some((level, corner)) = head.split_first() else {
        return Err(Error::Parse {
            line,
            message: "empty node line".into(),
        });
    };
    let level = u32::try_from(parse_u64(level, line)?).map_err(|_| Error::Parse {
        line,
        message: "level out of range".into(),
    })?;
    let corner = corner
        .iter()
        .map(|t| parse_u64(t, line))
        .collect::<Result<Vec<_>>>()?;
    let leaf = match leaf {
        None => None,
        Some(rest) => {
            if rest.len() != corner.len() + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "leaf needs an id and {} coordinates, found {} fields",
                        corner.len(),
                        rest.len()
                    ),
                });
            }
            let id = parse_u64(rest[0], line)? as usize;
            let coords = rest[1..]
                .iter()
                .map(|t| parse_u64(t, line))
                .collect::<Result<Vec<_>>>()?;
            Some((id, coords))
        }
    };
    Ok(SerializedNode {
        level,
        corner,
        leaf,
    })
}

/// Parses a serialization; the dimension is read off the root line and the
/// resolution must be supplied (the format does not carry it).
pub fn parse_tree(text: &str, resolution: u32) -> Result<CompressedQuadtree> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let entry = parse_line(raw, idx + 1)?;
        if let Some(first) = entries.first() {
            let first: &SerializedNode = first;
            if entry.corner.len() != first.corner.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!(
                        "expected {} corner coordinates, found {}",
                        first.corner.len(),
                        entry.corner.len()
                    ),
                });
            }
        }
        entries.push(entry);
    }
    let dim = entries
        .first()
        .map(|e| e.corner.len())
        .ok_or(Error::Parse {
            line: 1,
            message: "no nodes".into(),
        })?;
    let geom = GeometryConfig::new(dim, resolution)?;
    Ok(CompressedQuadtree::from_preorder(geom, &entries)?)
}

pub fn read_tree(path: &Path, resolution: u32) -> Result<CompressedQuadtree> {
    parse_tree(&fs::read_to_string(path).map_err(io_err(path))?, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_pair_tree() {
        let text = "0 0 0\n5 3 3\n6 6 6 leaf 0 25 25\n6 7 7 leaf 1 30 30\n";
        let tree = parse_tree(text, 8).unwrap();
        assert_eq!(tree.node_count(), 4);
        assert_eq!(tree.canonical_serialize(), text);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(
            parse_tree("0 0 0\n1 0 x\n", 8),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_tree("0 0 0\n1 0 0 leaf 0 1\n", 8),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_tree("0 0 0\n1 0 0 0 leaf 0 1 1 1\n", 8),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_tree("", 8).is_err());
        // coordinates beyond 2^L
        assert!(parse_tree("0 0 leaf 0 300 3\n", 8).is_err());
    }
}
