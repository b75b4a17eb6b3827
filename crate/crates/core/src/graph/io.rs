//! Tab-separated dataset files.
//!
//! - nodes:    `id<TAB>popularity_rank<TAB>country` (rank and country may be empty)
//! - edges:    `src<TAB>dst<TAB>weight`
//! - features: `id<TAB>v1<TAB>…<TAB>vf`
//! - split:    `id<TAB>{train|valid|test}`
//!
//! Blank lines and lines starting with `#` are ignored. Node ids are
//! arbitrary strings, densified to `0..n` in node-file order.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

use super::{AttributeTable, DataSplit, Dataset, DirectedWeightedGraph, NodeId, NodeMeta};

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').to_string()))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .collect())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn load_dataset(node_path: &Path, edge_path: &Path, feature_path: &Path) -> Result<Dataset> {
    // nodes
    let mut ids = Vec::new();
    let mut index: HashMap<String, NodeId> = HashMap::new();
    let mut ranks = Vec::new();
    let mut countries = Vec::new();
    for (ln, line) in read_lines(node_path)? {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.is_empty() || fields.len() > 3 || fields[0].is_empty() {
            return Err(parse_err(node_path, ln, "expected `id<TAB>popularity_rank<TAB>country`"));
        }
        let id = fields[0].to_string();
        if index.insert(id.clone(), ids.len()).is_some() {
            return Err(parse_err(node_path, ln, format!("duplicate node id `{id}`")));
        }
        let rank = match fields.get(1).map(|s| s.trim()) {
            None | Some("") => None,
            Some(s) => Some(
                s.parse::<u32>()
                    .map_err(|_| parse_err(node_path, ln, format!("bad popularity rank `{s}`")))?,
            ),
        };
        let country = match fields.get(2).map(|s| s.trim()) {
            None | Some("") => None,
            Some(s) => Some(s.to_string()),
        };
        ids.push(id);
        ranks.push((ln, rank));
        countries.push(country);
    }
    let n = ids.len();
    let mut rank_seen = HashMap::new();
    for &(ln, r) in &ranks {
        if let Some(r) = r {
            if r == 0 || r as usize > n {
                return Err(parse_err(node_path, ln, format!("popularity rank {r} outside 1..={n}")));
            }
            if let Some(prev) = rank_seen.insert(r, ln) {
                return Err(parse_err(
                    node_path,
                    ln,
                    format!("popularity rank {r} already used on line {prev}"),
                ));
            }
        }
    }
    let meta = NodeMeta {
        popularity_rank: ranks.into_iter().map(|(_, r)| r).collect(),
        country: countries,
    };

    // edges
    let mut adjacency: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n];
    for (ln, line) in read_lines(edge_path)? {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(edge_path, ln, "expected `src<TAB>dst<TAB>weight`"));
        }
        let lookup = |s: &str| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| parse_err(edge_path, ln, format!("dangling endpoint `{s}`")))
        };
        let (s, t) = (lookup(fields[0])?, lookup(fields[1])?);
        let w: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(edge_path, ln, format!("bad weight `{}`", fields[2])))?;
        if !(0.0..=1.0).contains(&w) {
            return Err(parse_err(edge_path, ln, format!("weight {w} outside [0,1]")));
        }
        if s == t {
            return Err(parse_err(edge_path, ln, format!("self-loop on `{}`", fields[0])));
        }
        if adjacency[s].iter().any(|&(x, _)| x == t) {
            return Err(parse_err(
                edge_path,
                ln,
                format!("duplicate edge {}->{}", fields[0], fields[1]),
            ));
        }
        adjacency[s].push((t, w));
    }
    let graph = DirectedWeightedGraph::from_adjacency(adjacency)?;

    // features
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut dim: Option<usize> = None;
    for (ln, line) in read_lines(feature_path)? {
        let fields: Vec<&str> = line.split('\t').collect();
        let node = *index
            .get(fields[0])
            .ok_or_else(|| parse_err(feature_path, ln, format!("unknown node `{}`", fields[0])))?;
        let values = fields[1..]
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(feature_path, ln, format!("bad feature value `{s}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(f) if f != values.len() => {
                return Err(parse_err(
                    feature_path,
                    ln,
                    format!("feature dimension {} differs from {f}", values.len()),
                ))
            }
            _ => {}
        }
        if rows[node].replace(values).is_some() {
            return Err(parse_err(feature_path, ln, format!("duplicate features for `{}`", fields[0])));
        }
    }
    let f = dim.unwrap_or(0);
    let mut data = Vec::with_capacity(n * f);
    for (i, r) in rows.into_iter().enumerate() {
        match r {
            Some(r) => data.extend(r),
            None => {
                return Err(Error::Parse {
                    path: feature_path.to_path_buf(),
                    line: 0,
                    msg: format!("no feature row for node `{}`", ids[i]),
                })
            }
        }
    }
    let attrs = AttributeTable::new(DenseMatrix::from_vec(n, f, data)?)?;
    Dataset::new(ids, graph, attrs, meta)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Writes the three dataset files. Floats use the shortest representation
/// that parses back to the same bits.
pub fn write_dataset(ds: &Dataset, node_path: &Path, edge_path: &Path, feature_path: &Path) -> Result<()> {
    fn io(p: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
        move |e| Error::io(p, e)
    }

    let mut w = create(node_path)?;
    for i in 0..ds.len() {
        let rank = ds.meta.popularity_rank[i].map(|r| r.to_string()).unwrap_or_default();
        let country = ds.meta.country[i].clone().unwrap_or_default();
        writeln!(w, "{}\t{}\t{}", ds.ids[i], rank, country).map_err(io(node_path))?;
    }
    w.flush().map_err(io(node_path))?;

    let mut w = create(edge_path)?;
    for (s, t, wt) in ds.graph.edges() {
        writeln!(w, "{}\t{}\t{}", ds.ids[s], ds.ids[t], wt).map_err(io(edge_path))?;
    }
    w.flush().map_err(io(edge_path))?;

    let mut w = create(feature_path)?;
    for i in 0..ds.len() {
        write!(w, "{}", ds.ids[i]).map_err(io(feature_path))?;
        for v in ds.attrs.row(i) {
            write!(w, "\t{v}").map_err(io(feature_path))?;
        }
        writeln!(w).map_err(io(feature_path))?;
    }
    w.flush().map_err(io(feature_path))
}

pub fn write_split(path: &Path, ids: &[String], split: &DataSplit) -> Result<()> {
    let mut role = vec![""; ids.len()];
    for &i in &split.warm {
        role[i] = "train";
    }
    for &i in &split.valid {
        role[i] = "valid";
    }
    for &i in &split.test {
        role[i] = "test";
    }
    let mut w = create(path)?;
    for (id, r) in ids.iter().zip(role) {
        writeln!(w, "{id}\t{r}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_split(path: &Path, ds: &Dataset) -> Result<DataSplit> {
    let index = ds.index();
    let (mut warm, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (ln, line) in read_lines(path)? {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(parse_err(path, ln, "expected `id<TAB>{train|valid|test}`"));
        }
        let node = *index
            .get(fields[0])
            .ok_or_else(|| parse_err(path, ln, format!("unknown node `{}`", fields[0])))?;
        match fields[1].trim() {
            "train" => warm.push(node),
            "valid" => valid.push(node),
            "test" => test.push(node),
            other => return Err(parse_err(path, ln, format!("unknown split part `{other}`"))),
        }
    }
    DataSplit::new(ds.len(), warm, valid, test)
        .map_err(|e| parse_err(path, 0, e.to_string()))
}

/// Dense index → external id table.
pub fn write_id_table(path: &Path, ids: &[String]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# index\tid").map_err(|e| Error::io(path, e))?;
    for (i, id) in ids.iter().enumerate() {
        writeln!(w, "{i}\t{id}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
