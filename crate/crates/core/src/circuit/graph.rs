use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::CircuitError;

/// Directed acyclic graph over target-gate ids, edges point prerequisite to dependent.
///
/// Reachability is precomputed since translation and validation query it per gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDependency", into = "RawDependency")]
pub struct DependencyGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    ancestors: Vec<Vec<usize>>,
    reach: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct RawDependency {
    nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawDependency> for DependencyGraph {
    type Error = CircuitError;
    fn try_from(raw: RawDependency) -> Result<Self, Self::Error> {
        DependencyGraph::new(raw.nodes, raw.edges)
    }
}

impl From<DependencyGraph> for RawDependency {
    fn from(g: DependencyGraph) -> Self {
        RawDependency { nodes: g.n, edges: g.edges }
    }
}

impl DependencyGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, CircuitError> {
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return Err(CircuitError::InvalidGraph(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            if a == b {
                return Err(CircuitError::Cycle);
            }
            if seen.insert((a, b)) {
                parents[b].push(a);
                children[a].push(b);
            }
        }
        let order = topological_order(n, &parents, &children)?;
        let mut reach = vec![false; n * n];
        for &v in &order {
            for &p in &parents[v] {
                reach[p * n + v] = true;
                for a in 0..n {
                    if reach[a * n + p] {
                        reach[a * n + v] = true;
                    }
                }
            }
        }
        let ancestors = (0..n).map(|v| (0..n).filter(|&a| reach[a * n + v]).collect()).collect();
        Ok(DependencyGraph { n, edges, parents, ancestors, reach })
    }

    pub fn empty(n: usize) -> Self {
        DependencyGraph::new(n, Vec::new()).expect("edgeless graph is acyclic")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Direct prerequisites of `node`.
    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    /// Every node with a path into `node`.
    pub fn ancestors(&self, node: usize) -> &[usize] {
        &self.ancestors[node]
    }

    pub fn has_path(&self, from: usize, to: usize) -> bool {
        self.reach[from * self.n + to]
    }
}

fn topological_order(n: usize, parents: &[Vec<usize>], children: &[Vec<usize>]) -> Result<Vec<usize>, CircuitError> {
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(CircuitError::Cycle)
    }
}

/// Undirected, simple, connected coupling graph over hardware qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHardware", into = "RawHardware")]
pub struct HardwareGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    dist: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawHardware {
    n_qubits: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawHardware> for HardwareGraph {
    type Error = CircuitError;
    fn try_from(raw: RawHardware) -> Result<Self, Self::Error> {
        HardwareGraph::new(raw.n_qubits, raw.edges)
    }
}

impl From<HardwareGraph> for RawHardware {
    fn from(g: HardwareGraph) -> Self {
        RawHardware { n_qubits: g.n, edges: g.edges }
    }
}

impl HardwareGraph {
    /// Edges are stored as given, with endpoints ordered `(low, high)`.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, CircuitError> {
        if n == 0 {
            return Err(CircuitError::InvalidGraph("hardware graph has no qubits".into()));
        }
        let mut neighbors = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(CircuitError::InvalidGraph(format!("edge ({u}, {v}) outside {n} qubits")));
            }
            if u == v {
                return Err(CircuitError::InvalidGraph(format!("self-loop on qubit {u}")));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(CircuitError::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
            neighbors[u].push(v);
            neighbors[v].push(u);
            normalized.push(e);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let mut dist = vec![usize::MAX; n * n];
        for s in 0..n {
            dist[s * n + s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &w in &neighbors[u] {
                    if dist[s * n + w] == usize::MAX {
                        dist[s * n + w] = dist[s * n + u] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        if dist.contains(&usize::MAX) {
            return Err(CircuitError::InvalidGraph("hardware graph is disconnected".into()));
        }
        Ok(HardwareGraph { n, edges: normalized, neighbors, dist })
    }

    pub fn path(n: usize) -> Self {
        HardwareGraph::new(n, (1..n).map(|i| (i - 1, i)).collect()).expect("path graph is valid")
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        HardwareGraph::new(n, edges).expect("complete graph is valid")
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.neighbors[q]
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        u != v && self.neighbors[u].binary_search(&v).is_ok()
    }

    pub fn distance(&self, u: usize, v: usize) -> usize {
        self.dist[u * self.n + v]
    }

    /// Index of the undirected edge `{u, v}` in [`edges`](Self::edges).
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let e = (u.min(v), u.max(v));
        self.edges.iter().position(|&x| x == e)
    }

    /// Dense adjacency matrix, row-major.
    pub fn adjacency(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n * self.n];
        for &(u, v) in &self.edges {
            a[u * self.n + v] = 1.0;
            a[v * self.n + u] = 1.0;
        }
        a
    }
}
