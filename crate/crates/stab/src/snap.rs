//! SNAP edge-list ingestion.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use stab_core::{DirectedGraph, NodeId};

use crate::error::{Error, Result};

/// A loaded graph together with the original id of every dense node.
#[derive(Clone, Debug)]
pub struct SnapGraph {
    pub graph: DirectedGraph,
    pub original_ids: Vec<u64>,
}

/// Reads a whitespace-separated edge list. Lines starting with `#` are
/// comments. Ids are remapped to `0..n` in increasing order of the original
/// id; only nodes with at least one non-loop edge are kept.
pub fn load_snap_edgelist(path: &Path, symmetrize: bool) -> Result<SnapGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_snap(BufReader::new(file), path, symmetrize)
}

/// Parses edge-list text from any reader; `path` only labels errors.
pub fn parse_snap<R: BufRead>(reader: R, path: &Path, symmetrize: bool) -> Result<SnapGraph> {
    let mut raw: Vec<(u64, u64)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let bad = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg,
        };
        let mut fields = body.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(bad(format!("expected two node ids, got {body:?}")));
        };
        let parse = |s: &str| s.parse::<u64>().map_err(|_| bad(format!("bad node id {s:?}")));
        let (u, v) = (parse(a)?, parse(b)?);
        if u != v {
            raw.push((u, v));
        }
    }

    let mut ids: Vec<u64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: "edge list contains no edges".into(),
        });
    }
    if ids.len() > u32::MAX as usize {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: "too many distinct nodes for 32-bit ids".into(),
        });
    }
    let dense = |x: u64| ids.binary_search(&x).expect("id collected above") as NodeId;
    let edges: Vec<(NodeId, NodeId)> = raw.iter().map(|&(u, v)| (dense(u), dense(v))).collect();
    let mut graph = DirectedGraph::from_edges(ids.len(), edges)?;
    if symmetrize {
        graph = graph.symmetrized();
    }
    Ok(SnapGraph {
        graph,
        original_ids: ids,
    })
}
