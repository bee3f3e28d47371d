//! Line-oriented text formats for map graphs, covers, solutions and
//! residual traces.
//!
//! Map graph:
//!
//! ```text
//! objects <n>
//! <id> <points>          (n lines)
//! edges <e>
//! <i> <j> <nnz>          (per edge, followed by nnz lines)
//! <row> <col> <value>
//! ```
//!
//! Cover: `cover <K>` followed by one line `<node> <size> <ids...>` per node.
//! Solution: `solution <K>`, then per node a line `node <i>` and the rounded
//! node matrix as a map graph.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use dmatch_core::cover::{CoverComplex, Nerve};
use dmatch_core::solver::{node_graph, AdmmSolution, ConvergenceReport};
use dmatch_core::{MapGraph, ObjectGraph, ObjectId};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

struct Cursor<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    path: &'a Path,
    last: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, path: &'a Path) -> Self {
        Self { lines: text.lines().enumerate().peekable(), path, last: 0 }
    }

    fn skip_blank(&mut self) {
        while let Some((_, l)) = self.lines.peek() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                self.lines.next();
            } else {
                break;
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_blank();
        self.lines.peek().is_none()
    }

    fn trailing(&mut self) -> Error {
        self.skip_blank();
        let line = self.lines.peek().map_or(self.last + 1, |(no, _)| no + 1);
        Error::Parse { path: self.path.to_path_buf(), line, msg: "unexpected trailing content".into() }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { path: self.path.to_path_buf(), line: self.last, msg: msg.into() }
    }

    fn line(&mut self) -> Result<Vec<&'a str>> {
        self.skip_blank();
        let (no, l) = self.lines.next().ok_or_else(|| {
            Error::Parse { path: self.path.to_path_buf(), line: self.last + 1, msg: "unexpected end of file".into() }
        })?;
        self.last = no + 1;
        Ok(l.split_whitespace().collect())
    }

    fn fields<const N: usize>(&mut self) -> Result<[&'a str; N]> {
        let toks = self.line()?;
        toks.as_slice().try_into().map_err(|_| self.err(format!("expected {N} fields, found {}", toks.len())))
    }

    fn num<T: FromStr>(&self, tok: &str) -> Result<T> {
        tok.parse().map_err(|_| self.err(format!("invalid number `{tok}`")))
    }

    fn header(&mut self, keyword: &str) -> Result<usize> {
        let [k, n] = self.fields()?;
        if k != keyword {
            return Err(self.err(format!("expected `{keyword}`, found `{k}`")));
        }
        self.num(n)
    }
}

pub fn format_map_graph(g: &MapGraph) -> String {
    let mut out = String::new();
    write_map_graph(&mut out, g);
    out
}

fn write_map_graph(out: &mut String, g: &MapGraph) {
    writeln!(out, "objects {}", g.num_objects()).unwrap();
    for (id, m) in g.objects() {
        writeln!(out, "{} {m}", id.0).unwrap();
    }
    writeln!(out, "edges {}", g.num_edges()).unwrap();
    for ((i, j), b) in g.edges() {
        let nnz: Vec<(usize, usize, f64)> = (0..b.ncols())
            .flat_map(|c| (0..b.nrows()).map(move |r| (r, c)))
            .filter_map(|(r, c)| (b[(r, c)] != 0.0).then_some((r, c, b[(r, c)])))
            .collect();
        writeln!(out, "{} {} {}", i.0, j.0, nnz.len()).unwrap();
        for (r, c, v) in nnz {
            writeln!(out, "{r} {c} {v:.6}").unwrap();
        }
    }
}

pub fn parse_map_graph(text: &str, origin: &Path) -> Result<MapGraph> {
    let mut cur = Cursor::new(text, origin);
    let g = read_map_graph(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.trailing());
    }
    Ok(g)
}

fn read_map_graph(cur: &mut Cursor<'_>) -> Result<MapGraph> {
    let mut g = MapGraph::new();
    let n = cur.header("objects")?;
    for _ in 0..n {
        let [id, m] = cur.fields()?;
        let (id, m) = (ObjectId(cur.num(id)?), cur.num(m)?);
        g.add_object(id, m).map_err(|e| cur.err(e.to_string()))?;
    }
    let e = cur.header("edges")?;
    for _ in 0..e {
        let [i, j, nnz] = cur.fields()?;
        let (i, j, nnz): (ObjectId, ObjectId, usize) = (ObjectId(cur.num(i)?), ObjectId(cur.num(j)?), cur.num(nnz)?);
        let shape = g.points(i).zip(g.points(j)).ok_or_else(|| cur.err(format!("edge ({i}, {j}) names an unknown object")))?;
        let mut blk = DMatrix::zeros(shape.0, shape.1);
        for _ in 0..nnz {
            let [r, c, v] = cur.fields()?;
            let (r, c, v): (usize, usize, f64) = (cur.num(r)?, cur.num(c)?, cur.num(v)?);
            if r >= shape.0 || c >= shape.1 {
                return Err(cur.err(format!("entry ({r}, {c}) outside the {}x{} block", shape.0, shape.1)));
            }
            blk[(r, c)] = v;
        }
        g.set_block(i, j, blk).map_err(|e| cur.err(e.to_string()))?;
    }
    Ok(g)
}

pub fn format_cover(cover: &CoverComplex) -> String {
    let mut out = format!("cover {}\n", cover.len());
    for (k, node) in cover.nodes().iter().enumerate() {
        write!(out, "{k} {}", node.len()).unwrap();
        for id in node {
            write!(out, " {}", id.0).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Node sets of a cover file, in node order.
pub fn parse_cover_nodes(text: &str, origin: &Path) -> Result<Vec<BTreeSet<ObjectId>>> {
    let mut cur = Cursor::new(text, origin);
    let k = cur.header("cover")?;
    let mut nodes = Vec::with_capacity(k);
    for expect in 0..k {
        let toks = cur.line()?;
        if toks.len() < 2 {
            return Err(cur.err("expected `<node> <size> <ids...>`"));
        }
        let (idx, size): (usize, usize) = (cur.num(toks[0])?, cur.num(toks[1])?);
        if idx != expect {
            return Err(cur.err(format!("expected node {expect}, found {idx}")));
        }
        if toks.len() != size + 2 {
            return Err(cur.err(format!("node {idx} declares {size} objects but lists {}", toks.len() - 2)));
        }
        let set = toks[2..].iter().map(|t| cur.num(t).map(ObjectId)).collect::<Result<BTreeSet<_>>>()?;
        if set.len() != size {
            return Err(cur.err(format!("node {idx} lists an object twice")));
        }
        nodes.push(set);
    }
    if !cur.at_end() {
        return Err(cur.trailing());
    }
    Ok(nodes)
}

pub fn parse_cover<G: ObjectGraph + ?Sized>(text: &str, origin: &Path, graph: &G) -> Result<CoverComplex> {
    Ok(CoverComplex::new(parse_cover_nodes(text, origin)?, graph)?)
}

/// Nerve as `edges <E>` / `<a> <b>` lines and `triangles <T>` / `<a> <b> <c>` lines.
pub fn format_nerve(nerve: &Nerve) -> String {
    let mut out = format!("edges {}\n", nerve.edges.len());
    for (a, b) in &nerve.edges {
        writeln!(out, "{a} {b}").unwrap();
    }
    writeln!(out, "triangles {}", nerve.triangles.len()).unwrap();
    for (a, b, c) in &nerve.triangles {
        writeln!(out, "{a} {b} {c}").unwrap();
    }
    out
}

pub fn format_solution(sol: &AdmmSolution) -> Result<String> {
    let mut out = format!("solution {}\n", sol.nodes.len());
    for (k, node) in sol.nodes.iter().enumerate() {
        writeln!(out, "node {k}").unwrap();
        write_map_graph(&mut out, &node_graph(&node.rounded)?);
    }
    Ok(out)
}

/// Per-node rounded solutions as map graphs.
pub fn parse_solution(text: &str, origin: &Path) -> Result<Vec<MapGraph>> {
    let mut cur = Cursor::new(text, origin);
    let k = cur.header("solution")?;
    let mut nodes = Vec::with_capacity(k);
    for expect in 0..k {
        let idx = cur.header("node")?;
        if idx != expect {
            return Err(cur.err(format!("expected node {expect}, found {idx}")));
        }
        nodes.push(read_map_graph(&mut cur)?);
    }
    if !cur.at_end() {
        return Err(cur.trailing());
    }
    Ok(nodes)
}

pub fn write_trace(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(Error::csv(path))?;
    w.write_record(["iter", "node", "factor_residual", "max_consensus_residual"]).map_err(Error::csv(path))?;
    for rec in &report.trace {
        for (node, (f, c)) in rec.factor_residuals.iter().zip(&rec.consensus_residuals).enumerate() {
            w.write_record([rec.iter.to_string(), node.to_string(), format!("{f:.6e}"), format!("{c:.6e}")])
                .map_err(Error::csv(path))?;
        }
    }
    w.flush().map_err(Error::io(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(Error::io(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    fs::write(path, text).map_err(Error::io(path))
}

pub fn load_map_graph(path: &Path) -> Result<MapGraph> {
    parse_map_graph(&read_text(path)?, path)
}

pub fn save_map_graph(path: &Path, g: &MapGraph) -> Result<()> {
    write_text(path, &format_map_graph(g))
}

pub fn load_cover<G: ObjectGraph + ?Sized>(path: &Path, graph: &G) -> Result<CoverComplex> {
    parse_cover(&read_text(path)?, path, graph)
}

pub fn save_cover(path: &Path, cover: &CoverComplex) -> Result<()> {
    write_text(path, &format_cover(cover))
}

pub fn load_solution(path: &Path) -> Result<Vec<MapGraph>> {
    parse_solution(&read_text(path)?, path)
}

pub fn save_solution(path: &Path, sol: &AdmmSolution) -> Result<()> {
    write_text(path, &format_solution(sol)?)
}
