//! Approximating quantum graphs `F_n` of a Laakso space.
//!
//! `F_n` is laid out on a grid of `J_n + 1` columns (positions `c * d_n`) and
//! `2^n` sheets indexed by binary words `w`, where bit `m - 1` of `w` is the
//! copy chosen at construction step `m`. A column of wormhole level `m` glues
//! sheets that differ only in bit `m - 1`; boundary columns glue nothing.
//! Edges run horizontally between neighbouring columns, one per sheet, so two
//! sheets that are glued at both ends of a segment produce parallel edges.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jseq::JSequence;

/// Default cap on the number of vertices a single build may allocate.
pub const DEFAULT_MAX_VERTICES: usize = 5_000_000;

/// Identifies one vertex: a column together with the canonical (smallest)
/// sheet word of its identification class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexKey {
    pub column: u64,
    pub sheet: u64,
    /// Wormhole level of the column; 0 on the boundary.
    pub level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

/// A Laakso approximating graph, possibly with its segments subdivided
/// further than its own wormhole depth (see [`build_subdivided`]).
#[derive(Debug, Clone, PartialEq)]
pub struct LaaksoGraph {
    j: Vec<u64>,
    n: usize,
    mesh_level: usize,
    columns: u64,
    vertices: Vec<VertexKey>,
    edges: Vec<Edge>,
    column_offsets: Vec<usize>,
    adj_ptr: Vec<usize>,
    adj_idx: Vec<usize>,
    adj_mult: Vec<u32>,
}

/// Dense symmetric multigraph adjacency: entry `(u, v)` counts the edges
/// between `u` and `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    dim: usize,
    entries: Vec<u32>,
}

impl IncidenceMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.entries[u * self.dim + v]
    }

    pub fn row(&self, u: usize) -> &[u32] {
        &self.entries[u * self.dim..(u + 1) * self.dim]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|u| (0..u).all(|v| self.get(u, v) == self.get(v, u)))
    }

    /// Rows as whitespace separated integers.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for u in 0..self.dim {
            let row: Vec<String> = self.row(u).iter().map(|e| e.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Builds `F_n` for the given branching sequence with the default vertex cap.
pub fn build_graph(j_seq: &JSequence, n: usize) -> Result<LaaksoGraph> {
    build_graph_with_cap(j_seq, n, DEFAULT_MAX_VERTICES)
}

pub fn build_graph_with_cap(j_seq: &JSequence, n: usize, max_vertices: usize) -> Result<LaaksoGraph> {
    build_subdivided(j_seq, n, n, max_vertices)
}

/// Builds `F_sheets` with every segment subdivided down to mesh `d_mesh`.
///
/// Columns whose level exceeds `sheets` are plain subdivision points: each
/// sheet keeps its own degree-2 vertex there.
pub fn build_subdivided(
    j_seq: &JSequence,
    sheets: usize,
    mesh: usize,
    max_vertices: usize,
) -> Result<LaaksoGraph> {
    assert!(sheets <= mesh, "sheet depth cannot exceed the mesh level");
    assert!(sheets < 63, "sheet words are stored in 64 bits");
    j_seq.check_depth(mesh)?;
    let total = j_seq.columns(mesh)?;
    let coarse = j_seq.columns(sheets)?;
    let words: u128 = 1 << sheets;

    let vertex_count: u128 = if sheets == 0 {
        total + 1
    } else {
        2 * words + (coarse - 1) * (words / 2) + (total - coarse) * words
    };
    if vertex_count > max_vertices as u128 {
        return Err(Error::TooLarge { vertices: vertex_count, cap: max_vertices });
    }
    let total = total as u64;
    let words = words as u64;

    // stride[m] = J_mesh / J_m
    let mut strides = Vec::with_capacity(mesh + 1);
    for m in 0..=mesh {
        strides.push((j_seq.columns(mesh)? / j_seq.columns(m)?) as u64);
    }
    let column_level = |c: u64| -> usize {
        if c == 0 || c == total {
            0
        } else {
            (1..=mesh).find(|&m| c.is_multiple_of(strides[m])).expect("level mesh always divides")
        }
    };

    let mut levels = Vec::with_capacity(total as usize + 1);
    let mut column_offsets = Vec::with_capacity(total as usize + 2);
    let mut vertices = Vec::with_capacity(vertex_count as usize);
    column_offsets.push(0);
    for c in 0..=total {
        let level = column_level(c);
        levels.push(level);
        let glued = level >= 1 && level <= sheets;
        for w in 0..words {
            if glued && w & (1 << (level - 1)) != 0 {
                continue;
            }
            vertices.push(VertexKey { column: c, sheet: w, level });
        }
        column_offsets.push(vertices.len());
    }
    debug_assert_eq!(vertices.len() as u128, vertex_count);

    let index_of = |c: u64, w: u64| -> usize {
        let level = levels[c as usize];
        let pos = if level >= 1 && level <= sheets {
            ((w >> level) << (level - 1)) | (w & ((1 << (level - 1)) - 1))
        } else {
            w
        };
        column_offsets[c as usize] + pos as usize
    };

    let mut edges = Vec::with_capacity((total * words) as usize);
    for c in 0..total {
        for w in 0..words {
            edges.push(Edge { u: index_of(c, w), v: index_of(c + 1, w) });
        }
    }

    let (adj_ptr, adj_idx, adj_mult) = aggregate_adjacency(vertices.len(), &edges);

    Ok(LaaksoGraph {
        j: j_seq.prefix(mesh)?,
        n: sheets,
        mesh_level: mesh,
        columns: total,
        vertices,
        edges,
        column_offsets,
        adj_ptr,
        adj_idx,
        adj_mult,
    })
}

fn aggregate_adjacency(nv: usize, edges: &[Edge]) -> (Vec<usize>, Vec<usize>, Vec<u32>) {
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for e in edges {
        lists[e.u].push(e.v);
        lists[e.v].push(e.u);
    }
    let mut ptr = Vec::with_capacity(nv + 1);
    let mut idx = Vec::new();
    let mut mult = Vec::new();
    ptr.push(0);
    for list in &mut lists {
        list.sort_unstable();
        for &v in list.iter() {
            match idx.last() {
                Some(&last) if last == v && idx.len() > *ptr.last().unwrap() => {
                    *mult.last_mut().unwrap() += 1;
                }
                _ => {
                    idx.push(v);
                    mult.push(1);
                }
            }
        }
        ptr.push(idx.len());
    }
    (ptr, idx, mult)
}

impl LaaksoGraph {
    /// Wormhole depth `n` of the graph.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Level of the mesh `d_mesh`; equal to [`n`](Self::n) for plain `F_n`.
    pub fn mesh_level(&self) -> usize {
        self.mesh_level
    }

    /// `j_1..j_mesh`.
    pub fn j(&self) -> &[u64] {
        &self.j
    }

    /// Number of mesh intervals `J`, so columns run over `0..=J`.
    pub fn columns(&self) -> u64 {
        self.columns
    }

    /// Exact edge length.
    pub fn edge_length(&self) -> Ratio<i128> {
        Ratio::new(1, self.columns as i128)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.columns as f64
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[VertexKey] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Vertex indices in column `c`.
    pub fn column_range(&self, c: u64) -> std::ops::Range<usize> {
        self.column_offsets[c as usize]..self.column_offsets[c as usize + 1]
    }

    /// Vertices in the first and last column.
    pub fn boundary_set(&self) -> Vec<usize> {
        self.column_range(0).chain(self.column_range(self.columns)).collect()
    }

    /// Distinct neighbours of `u` with edge multiplicities, ascending by index.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let range = self.adj_ptr[u]..self.adj_ptr[u + 1];
        self.adj_idx[range.clone()].iter().copied().zip(self.adj_mult[range].iter().copied())
    }

    pub fn degree(&self, u: usize) -> u32 {
        self.adj_mult[self.adj_ptr[u]..self.adj_ptr[u + 1]].iter().sum()
    }

    /// Sheet words glued into vertex `u`.
    pub fn sheet_words(&self, u: usize) -> Vec<u64> {
        let key = self.vertices[u];
        if key.level >= 1 && key.level <= self.n {
            vec![key.sheet, key.sheet | (1 << (key.level - 1))]
        } else {
            vec![key.sheet]
        }
    }

    /// Horizontal position `c * d` of vertex `u`.
    pub fn x(&self, u: usize) -> f64 {
        self.vertices[u].column as f64 / self.columns as f64
    }

    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        let dim = self.vertex_count();
        let mut entries = vec![0u32; dim * dim];
        for e in &self.edges {
            entries[e.u * dim + e.v] += 1;
            entries[e.v * dim + e.u] += 1;
        }
        IncidenceMatrix { dim, entries }
    }

    pub fn to_json(&self) -> String {
        let doc = GraphJson {
            j: self.j.clone(),
            n: self.n,
            vertices: self
                .vertices
                .iter()
                .enumerate()
                .map(|(id, k)| VertexJson {
                    id,
                    column: k.column,
                    x: self.x(id),
                    level: k.level,
                    sheet: k.sheet,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson { u: e.u, v: e.v, length: self.h() })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("graph serializes")
    }

    /// Re-imports a graph written by [`to_json`](Self::to_json). The document
    /// must describe exactly the graph `build_graph` produces for its `j, n`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.j.len() != doc.n {
            return Err(Error::Parse(format!("expected {} j values, found {}", doc.n, doc.j.len())));
        }
        let js = if doc.n == 0 { JSequence::constant(2)? } else { JSequence::new(doc.j.clone())? };
        let graph = build_graph(&js, doc.n)?;
        if graph.vertices.len() != doc.vertices.len() || graph.edges.len() != doc.edges.len() {
            return Err(Error::Parse("vertex or edge count does not match the construction".into()));
        }
        for (i, (k, v)) in graph.vertices.iter().zip(&doc.vertices).enumerate() {
            if v.id != i || v.column != k.column || v.sheet != k.sheet || v.level != k.level {
                return Err(Error::Parse(format!("vertex {i} does not match the construction")));
            }
        }
        for (i, (e, d)) in graph.edges.iter().zip(&doc.edges).enumerate() {
            if e.u != d.u || e.v != d.v {
                return Err(Error::Parse(format!("edge {i} does not match the construction")));
            }
        }
        Ok(graph)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    j: Vec<u64>,
    n: usize,
    vertices: Vec<VertexJson>,
    edges: Vec<EdgeJson>,
}

#[derive(Serialize, Deserialize)]
struct VertexJson {
    id: usize,
    column: u64,
    x: f64,
    level: usize,
    sheet: u64,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    u: usize,
    v: usize,
    length: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(j: u64, n: usize) -> LaaksoGraph {
        build_graph(&JSequence::constant(j).unwrap(), n).unwrap()
    }

    #[test]
    fn unit_interval() {
        let g = graph(2, 0);
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edge_length(), Ratio::from_integer(1));
    }

    #[test]
    fn fixture_counts() {
        let g = graph(2, 1);
        assert_eq!((g.vertex_count(), g.edges().len()), (5, 4));
        let degrees: Vec<u32> = (0..5).map(|u| g.degree(u)).collect();
        assert_eq!(degrees, vec![1, 1, 4, 1, 1]);

        let g = graph(3, 1);
        assert_eq!((g.vertex_count(), g.edges().len()), (6, 6));
        let doubled: Vec<_> = (0..6)
            .flat_map(|u| g.neighbors(u).filter(move |&(v, m)| m == 2 && v > u).map(move |(v, _)| (u, v)))
            .collect();
        assert_eq!(doubled, vec![(2, 3)]);

        let g = graph(2, 2);
        assert_eq!((g.vertex_count(), g.edges().len()), (14, 16));
    }

    #[test]
    fn printed_incidence_matrices() {
        let m = graph(2, 1).incidence_matrix();
        let expected: [[u32; 5]; 5] = [
            [0, 0, 1, 0, 0],
            [0, 0, 1, 0, 0],
            [1, 1, 0, 1, 1],
            [0, 0, 1, 0, 0],
            [0, 0, 1, 0, 0],
        ];
        for (u, row) in expected.iter().enumerate() {
            assert_eq!(m.row(u), row);
        }

        let m = graph(3, 1).incidence_matrix();
        let expected: [[u32; 6]; 6] = [
            [0, 0, 1, 0, 0, 0],
            [0, 0, 1, 0, 0, 0],
            [1, 1, 0, 2, 0, 0],
            [0, 0, 2, 0, 1, 1],
            [0, 0, 0, 1, 0, 0],
            [0, 0, 0, 1, 0, 0],
        ];
        for (u, row) in expected.iter().enumerate() {
            assert_eq!(m.row(u), row);
        }
        assert!(m.is_symmetric());
    }

    #[test]
    fn cap_is_enforced() {
        let js = JSequence::constant(2).unwrap();
        let err = build_graph_with_cap(&js, 4, 50).unwrap_err();
        assert!(matches!(err, Error::TooLarge { vertices: 152, cap: 50 }));
    }

    #[test]
    fn finite_sequence_must_cover_depth() {
        let js = JSequence::new(vec![2, 3]).unwrap();
        assert!(build_graph(&js, 2).is_ok());
        assert!(matches!(build_graph(&js, 3), Err(Error::UndefinedLevel { level: 3, .. })));
    }

    #[test]
    fn json_round_trip() {
        let js = JSequence::new(vec![3, 2]).unwrap();
        let g = build_graph(&js, 2).unwrap();
        let back = LaaksoGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
        assert!(LaaksoGraph::from_json("{\"j\":[2],\"n\":1,\"vertices\":[],\"edges\":[]}").is_err());
    }

    #[test]
    fn subdivided_graph_has_degree_two_points() {
        let js = JSequence::constant(3).unwrap();
        let g = build_subdivided(&js, 1, 2, DEFAULT_MAX_VERTICES).unwrap();
        assert_eq!(g.columns(), 9);
        // columns 3 and 6 are glued, the other 6 interior columns carry 2 sheets each
        assert_eq!(g.vertex_count(), 4 + 2 + 12);
        let twos = (0..g.vertex_count()).filter(|&u| g.degree(u) == 2).count();
        assert_eq!(twos, 12);
    }
}
