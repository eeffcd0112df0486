//! Triple text files, TSV dictionaries and binary CSR snapshots.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{build_csr, DataGraph, GraphPair, Orientation, TermDictionary, TermTable};
use crate::{Error, LabelId, NodeId, Result};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"GPSM";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Loads a whitespace-separated `subject relation object` file.
///
/// Unseen terms are appended to `dict`; the returned graph has one node per
/// concept known to the dictionary afterwards.
pub fn load_triples(path: &Path, dict: &mut TermDictionary) -> Result<GraphPair> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_triples(BufReader::new(file), dict).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_triples<R: BufRead>(reader: R, dict: &mut TermDictionary) -> Result<GraphPair> {
    let mut edges = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<triples>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: index + 1,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let subject = dict.concepts.intern(fields[0]);
        let relation = dict.relations.intern(fields[1]);
        let object = dict.concepts.intern(fields[2]);
        edges.push((subject, object, relation));
    }
    let g = build_csr(&edges, dict.concepts.len())?;
    Ok(GraphPair::from_outgoing(g))
}

/// Reads `concept<TAB>label` lines, interning both terms.
pub fn read_node_labels(path: &Path, dict: &mut TermDictionary) -> Result<Vec<(NodeId, LabelId)>> {
    let rows = read_tsv_pairs(path)?;
    Ok(rows
        .into_iter()
        .map(|(concept, label)| {
            (
                dict.concepts.intern(&concept),
                dict.node_labels.intern(&label),
            )
        })
        .collect())
}

/// Expands `(node, label)` pairs into one label per node.
pub fn dense_node_labels(pairs: &[(NodeId, LabelId)], n: usize) -> Result<Vec<LabelId>> {
    let mut labels = vec![None; n];
    for &(node, label) in pairs {
        let slot = labels.get_mut(node as usize).ok_or(Error::Bounds {
            index: node as u64,
            node_count: n as u64,
        })?;
        *slot = Some(label);
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(v, l)| l.ok_or_else(|| Error::Config(format!("node {v} has no label"))))
        .collect()
}

fn read_tsv_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, '\t');
        match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => rows.push((a.to_owned(), b.trim().to_owned())),
            _ => {
                return Err(Error::Parse {
                    line: index + 1,
                    message: "expected two tab-separated fields".into(),
                })
            }
        }
    }
    Ok(rows)
}

fn table_path(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn write_table(path: &Path, table: &TermTable) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (id, term) in table.iter() {
        writeln!(out, "{term}\t{id}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn read_table(path: &Path) -> Result<TermTable> {
    let mut table = TermTable::new();
    if !path.exists() {
        return Ok(table);
    }
    for (index, (term, id)) in read_tsv_pairs(path)?.into_iter().enumerate() {
        let id: u32 = id.parse().map_err(|_| Error::Parse {
            line: index + 1,
            message: format!("invalid id {id:?}"),
        })?;
        table.insert_at(&term, id).map_err(|message| Error::Parse {
            line: index + 1,
            message,
        })?;
    }
    Ok(table)
}

/// Writes `<base>.nodes.tsv`, `<base>.rels.tsv` and `<base>.labels.tsv`, each
/// holding `term<TAB>id` lines.
pub fn write_dictionary(base: &Path, dict: &TermDictionary) -> Result<()> {
    write_table(&table_path(base, ".nodes.tsv"), &dict.concepts)?;
    write_table(&table_path(base, ".rels.tsv"), &dict.relations)?;
    write_table(&table_path(base, ".labels.tsv"), &dict.node_labels)
}

/// Reads the tables written by [`write_dictionary`]. Missing files yield empty
/// tables.
pub fn read_dictionary(base: &Path) -> Result<TermDictionary> {
    Ok(TermDictionary {
        concepts: read_table(&table_path(base, ".nodes.tsv"))?,
        relations: read_table(&table_path(base, ".rels.tsv"))?,
        node_labels: read_table(&table_path(base, ".labels.tsv"))?,
    })
}

/// Writes the little-endian binary snapshot of an outgoing graph.
pub fn write_snapshot<W: Write>(out: &mut W, g: &DataGraph) -> std::io::Result<()> {
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    out.write_all(&(g.node_count() as u64).to_le_bytes())?;
    out.write_all(&(g.edge_count() as u64).to_le_bytes())?;
    for &o in g.node_offsets() {
        out.write_all(&(o as u64).to_le_bytes())?;
    }
    for &t in g.edge_targets() {
        out.write_all(&t.to_le_bytes())?;
    }
    for &l in g.edge_labels() {
        out.write_all(&l.to_le_bytes())?;
    }
    if let Some(labels) = g.node_labels() {
        for &l in labels {
            out.write_all(&l.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_snapshot_file(path: &Path, g: &DataGraph) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_snapshot(&mut out, g)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() < n {
            return Err(Error::Format("unexpected end of snapshot".into()));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        let raw = self.take(n.checked_mul(4).ok_or(Error::Overflow("snapshot size"))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Reads a snapshot. Node labels are present iff bytes remain after the edge
/// arrays.
pub fn read_snapshot<R: Read>(input: &mut R) -> Result<DataGraph> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<snapshot>", e))?;
    let mut cur = Cursor { bytes: &bytes };
    if cur.take(4)? != SNAPSHOT_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = usize::try_from(cur.u64()?).map_err(|_| Error::Overflow("node_count"))?;
    let m = usize::try_from(cur.u64()?).map_err(|_| Error::Overflow("edge_count"))?;
    let mut offsets = Vec::with_capacity(n.saturating_add(1).min(bytes.len()));
    for _ in 0..=n {
        offsets.push(usize::try_from(cur.u64()?).map_err(|_| Error::Overflow("offset"))?);
    }
    let targets = cur.u32s(m)?;
    let labels = cur.u32s(m)?;
    let node_labels = match cur.bytes.len() {
        0 => None,
        len if len == n * 4 => Some(cur.u32s(n)?),
        len => return Err(Error::Format(format!("{len} trailing bytes"))),
    };
    DataGraph::from_parts(offsets, targets, labels, node_labels, Orientation::Outgoing)
}

pub fn read_snapshot_file(path: &Path) -> Result<DataGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_snapshot(&mut BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}
