//! Binary graph cache (`TAPG`) and oracle file (`TAPO`). All integers and
//! floats are little-endian.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use stab_core::sketch::{RankEntry, Sketch, SketchOracle};
use stab_core::{DirectedGraph, NodeId};

use crate::error::{Error, Result};

pub const GRAPH_MAGIC: &[u8; 4] = b"TAPG";
pub const GRAPH_VERSION: u32 = 1;
pub const ORACLE_MAGIC: &[u8; 4] = b"TAPO";
pub const ORACLE_VERSION: u32 = 1;

/// Serializes a graph: header, then edges sorted by source.
pub fn encode_graph(g: &DirectedGraph) -> Result<Vec<u8>> {
    if g.removed_nodes().is_some() {
        return Err(Error::Config("residual graphs are not stored".into()));
    }
    let m = g.edge_count();
    let mut out = Vec::with_capacity(24 + 8 * m);
    out.extend_from_slice(GRAPH_MAGIC);
    out.extend_from_slice(&GRAPH_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.node_count() as u64).to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    for (u, v) in g.edges() {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_graph(bytes: &[u8], path: &Path) -> Result<DirectedGraph> {
    let mut r = Reader::new(bytes, path);
    r.magic(GRAPH_MAGIC)?;
    r.version(GRAPH_VERSION)?;
    let n = r.len_u64("node count")?;
    let m = r.len_u64("edge count")?;
    if r.remaining() != m.checked_mul(8).ok_or_else(|| r.err("edge count overflows"))? {
        return Err(r.err("file length does not match edge count"));
    }
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        edges.push((r.u32()?, r.u32()?));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(r.err("edges are not sorted and unique"));
    }
    Ok(DirectedGraph::from_edges(n, edges)?)
}

pub fn write_graph(path: &Path, g: &DirectedGraph) -> Result<()> {
    fs::write(path, encode_graph(g)?).map_err(|e| Error::io(path, e))
}

pub fn read_graph(path: &Path) -> Result<DirectedGraph> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_graph(&bytes, path)
}

/// Hex SHA-256 of the graph's canonical `TAPG` encoding.
pub fn graph_hash(g: &DirectedGraph) -> Result<String> {
    Ok(hex::encode(Sha256::digest(encode_graph(g)?)))
}

pub fn encode_oracle(o: &SketchOracle) -> Result<Vec<u8>> {
    if o.k() > u16::MAX as usize {
        return Err(Error::Config(format!(
            "sketch size {} does not fit the 16-bit length field",
            o.k()
        )));
    }
    let entries: usize = o.sketches().iter().map(Sketch::len).sum();
    let mut out = Vec::with_capacity(44 + 2 * o.node_count() + 16 * entries);
    out.extend_from_slice(ORACLE_MAGIC);
    out.extend_from_slice(&ORACLE_VERSION.to_le_bytes());
    out.extend_from_slice(&(o.node_count() as u64).to_le_bytes());
    out.extend_from_slice(&(o.ell() as u64).to_le_bytes());
    out.extend_from_slice(&(o.k() as u32).to_le_bytes());
    out.extend_from_slice(&o.offset().to_le_bytes());
    out.extend_from_slice(&o.rank_seed().to_le_bytes());
    for s in o.sketches() {
        out.extend_from_slice(&(s.len() as u16).to_le_bytes());
        for e in s.entries() {
            out.extend_from_slice(&e.rank.to_le_bytes());
            out.extend_from_slice(&e.node.to_le_bytes());
            out.extend_from_slice(&e.world.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_oracle(bytes: &[u8], path: &Path) -> Result<SketchOracle> {
    let mut r = Reader::new(bytes, path);
    r.magic(ORACLE_MAGIC)?;
    r.version(ORACLE_VERSION)?;
    let n = r.len_u64("node count")?;
    let ell = r.len_u64("world count")?;
    let k = r.u32()? as usize;
    let offset = r.f64()?;
    let rank_seed = r.u64()?;
    let mut sketches = Vec::with_capacity(n.min(r.remaining() / 2));
    for u in 0..n {
        let len = r.u16()? as usize;
        let mut entries = Vec::with_capacity(len.min(r.remaining() / 16));
        for _ in 0..len {
            let rank = r.f64()?;
            let node: NodeId = r.u32()?;
            let world = r.u32()?;
            if node as usize >= n || world as usize >= ell {
                return Err(r.err(&format!("sketch of node {u} names a pair outside the oracle")));
            }
            entries.push(RankEntry { rank, node, world });
        }
        let sketch = Sketch::from_sorted(k, entries)
            .map_err(|e| r.err(&format!("sketch of node {u}: {e}")))?;
        sketches.push(sketch);
    }
    if r.remaining() != 0 {
        return Err(r.err("trailing bytes after the last sketch"));
    }
    Ok(SketchOracle::from_parts(k, ell, offset, rank_seed, sketches)?)
}

pub fn write_oracle(path: &Path, o: &SketchOracle) -> Result<()> {
    let bytes = encode_oracle(o)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes)
        .and_then(|()| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_oracle(path: &Path) -> Result<SketchOracle> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_oracle(&bytes, path)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        Self { bytes, pos: 0, path }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            msg: format!("{msg} (at byte {})", self.pos),
        }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| self.err("unexpected end of file"))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice has length N"))
    }

    fn magic(&mut self, want: &[u8; 4]) -> Result<()> {
        if &self.take::<4>()? != want {
            return Err(self.err(&format!(
                "missing {} magic",
                String::from_utf8_lossy(want)
            )));
        }
        Ok(())
    }

    fn version(&mut self, want: u32) -> Result<()> {
        let got = self.u32()?;
        if got != want {
            return Err(self.err(&format!("unsupported format version {got}")));
        }
        Ok(())
    }

    fn u16(&mut self) -> Result<u16> {
        self.take().map(u16::from_le_bytes)
    }

    fn u32(&mut self) -> Result<u32> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.take().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.take().map(f64::from_le_bytes)
    }

    fn len_u64(&mut self, what: &str) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.err(&format!("{what} {v} too large")))
    }
}
