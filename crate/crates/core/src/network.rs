//! Static interaction networks: the diagonal-extended lattice, the
//! Erdős–Rényi G(n, M) model, and Barabási–Albert preferential
//! attachment. Graphs are undirected, unweighted, simple, and immutable
//! once built.

use std::collections::{BTreeSet, HashSet};
use std::io::{self, Write};

use rand::Rng;
use thiserror::Error;

/// Which interaction topology a run uses. `None` disables spreading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    None,
    LatticeX,
    ErdosRenyi,
    BarabasiAlbert,
}

impl NetworkKind {
    pub fn label(self) -> &'static str {
        match self {
            NetworkKind::None => "none",
            NetworkKind::LatticeX => "lattice",
            NetworkKind::ErdosRenyi => "er",
            NetworkKind::BarabasiAlbert => "ba",
        }
    }

    pub fn parse(s: &str) -> Option<NetworkKind> {
        match s {
            "none" => Some(NetworkKind::None),
            "lattice" => Some(NetworkKind::LatticeX),
            "er" => Some(NetworkKind::ErdosRenyi),
            "ba" => Some(NetworkKind::BarabasiAlbert),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkError {
    #[error("lattice dimensions must be at least 3x3, got {rows}x{cols}")]
    LatticeTooSmall { rows: u32, cols: u32 },
    #[error("requested {requested} edges but only {max} unordered pairs exist")]
    TooManyEdges { requested: u64, max: u64 },
    #[error("node count {n} must exceed attachment count {m_attach}")]
    TooFewNodes { n: u32, m_attach: u32 },
    #[error("attachment count must be at least 1")]
    ZeroAttachment,
    #[error("edge ({u}, {v}) is not a simple edge over {n} nodes")]
    BadEdge { u: u32, v: u32, n: u32 },
}

/// Undirected simple graph over nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: u32,
    edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
}

impl Graph {
    /// Build from an edge list. Callers guarantee no self-loops or
    /// duplicates; adjacency lists follow edge-list order.
    fn from_edges(n: u32, edges: Vec<(u32, u32)>) -> Graph {
        let mut adjacency = vec![Vec::new(); n as usize];
        for &(u, v) in &edges {
            debug_assert!(u != v && u < n && v < n);
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        Graph { n, edges, adjacency }
    }

    /// Build a graph from an explicit edge list, validating that it is
    /// simple (no self-loops, no duplicates, nodes in range).
    pub fn from_edge_list(n: u32, edges: Vec<(u32, u32)>) -> Result<Graph, NetworkError> {
        let mut seen = HashSet::with_capacity(edges.len());
        for &(u, v) in &edges {
            if u == v || u >= n || v >= n || !seen.insert((u.min(v), u.max(v))) {
                return Err(NetworkError::BadEdge { u, v, n });
            }
        }
        Ok(Graph::from_edges(n, edges))
    }

    pub fn node_count(&self) -> u32 {
        self.n
    }

    pub fn edge_count(&self) -> u64 {
        self.edges.len() as u64
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Neighbors of `node` in deterministic (construction) order.
    ///
    /// Panics if `node >= node_count()`.
    pub fn neighbors(&self, node: u32) -> &[u32] {
        &self.adjacency[node as usize]
    }

    pub fn degree(&self, node: u32) -> usize {
        self.adjacency[node as usize].len()
    }

    /// Edge list as `u,v` lines with `u < v`, sorted, 0-indexed.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut sorted: Vec<(u32, u32)> = self
            .edges
            .iter()
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .collect();
        sorted.sort_unstable();
        for (u, v) in sorted {
            writeln!(w, "{u},{v}")?;
        }
        Ok(())
    }
}

/// Square lattice with periodic boundaries where every node connects to
/// its 4 axial and 4 diagonal neighbors, so all degrees equal 8 and
/// M = 4·rows·cols.
pub fn build_lattice_x(rows: u32, cols: u32) -> Result<Graph, NetworkError> {
    if rows < 3 || cols < 3 {
        return Err(NetworkError::LatticeTooSmall { rows, cols });
    }
    let n = rows * cols;
    let node = |r: u32, c: u32| r * cols + c;
    let mut edges = BTreeSet::new();
    for r in 0..rows {
        for c in 0..cols {
            let u = node(r, c);
            for (dr, dc) in [(-1i64, -1i64), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)] {
                let nr = (r as i64 + dr).rem_euclid(rows as i64) as u32;
                let nc = (c as i64 + dc).rem_euclid(cols as i64) as u32;
                let v = node(nr, nc);
                edges.insert((u.min(v), u.max(v)));
            }
        }
    }
    Ok(Graph::from_edges(n, edges.into_iter().collect()))
}

/// G(n, M): exactly `m` distinct edges drawn uniformly without
/// replacement from all unordered pairs.
pub fn build_erdos_renyi<R: Rng + ?Sized>(n: u32, m: u64, rng: &mut R) -> Result<Graph, NetworkError> {
    let max = n as u64 * (n as u64 - 1) / 2;
    if m > max {
        return Err(NetworkError::TooManyEdges { requested: m, max });
    }
    let mut seen = HashSet::with_capacity(m as usize);
    let mut edges = Vec::with_capacity(m as usize);
    while (edges.len() as u64) < m {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let pair = (u.min(v), u.max(v));
        if seen.insert(pair) {
            edges.push(pair);
        }
    }
    Ok(Graph::from_edges(n, edges))
}

/// Preferential attachment: a complete seed graph on `m_attach + 1`
/// nodes, then each arriving node attaches `m_attach` edges to distinct
/// existing nodes chosen with probability proportional to degree
/// (proposals repeat until distinct).
pub fn build_barabasi_albert<R: Rng + ?Sized>(
    n: u32,
    m_attach: u32,
    rng: &mut R,
) -> Result<Graph, NetworkError> {
    if m_attach < 1 {
        return Err(NetworkError::ZeroAttachment);
    }
    if n <= m_attach {
        return Err(NetworkError::TooFewNodes { n, m_attach });
    }
    let seed = m_attach + 1;
    let mut edges = Vec::new();
    for u in 0..seed {
        for v in (u + 1)..seed {
            edges.push((u, v));
        }
    }
    // One entry per unit of degree; sampling an entry uniformly is
    // degree-proportional sampling.
    let mut repeated: Vec<u32> = Vec::with_capacity(2 * (edges.len() + (n - seed) as usize * m_attach as usize));
    for &(u, v) in &edges {
        repeated.push(u);
        repeated.push(v);
    }
    let mut targets: Vec<u32> = Vec::with_capacity(m_attach as usize);
    for v in seed..n {
        targets.clear();
        while targets.len() < m_attach as usize {
            let t = repeated[rng.random_range(0..repeated.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t.min(v), t.max(v)));
            repeated.push(t);
            repeated.push(v);
        }
    }
    Ok(Graph::from_edges(n, edges))
}
