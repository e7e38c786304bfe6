use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::ingest::{StationId, TripRecord};

/// Undirected simple graph of stations, keeping the directed trip
/// multiplicities alongside.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionGraph {
    nodes: Vec<StationId>,
    index: HashMap<StationId, usize>,
    adjacency: Vec<Vec<usize>>,
    edges: BTreeSet<(usize, usize)>,
    /// Trips per ordered (origin, destination) pair.
    pub trip_counts: BTreeMap<(usize, usize), u64>,
    /// Trips that started and ended at the same station.
    pub self_loops: u64,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl TransitionGraph {
    pub fn build(trips: &[TripRecord], stations: &[StationId]) -> Self {
        let mut g = Self::empty(stations.to_vec());
        for t in trips {
            let (Some(&a), Some(&b)) = (g.index.get(&t.start_station), g.index.get(&t.end_station))
            else {
                continue;
            };
            if a == b {
                g.self_loops += 1;
                continue;
            }
            *g.trip_counts.entry((a, b)).or_default() += 1;
            g.edges.insert(key(a, b));
        }
        g.rebuild_adjacency();
        g
    }

    pub fn from_edges(nodes: Vec<StationId>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(nodes);
        for &(a, b) in edges {
            if a >= g.len() || b >= g.len() {
                return Err(Error::Input(format!("edge ({a}, {b}) outside {} nodes", g.len())));
            }
            if a != b {
                g.edges.insert(key(a, b));
            }
        }
        g.rebuild_adjacency();
        Ok(g)
    }

    /// Nodes named "0", "1", ... for generated graphs.
    pub fn anonymous(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::from_edges((0..n).map(|i| StationId::new(i.to_string())).collect(), edges)
    }

    fn empty(nodes: Vec<StationId>) -> Self {
        let index = nodes.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        TransitionGraph {
            adjacency: vec![Vec::new(); nodes.len()],
            nodes,
            index,
            edges: BTreeSet::new(),
            trip_counts: BTreeMap::new(),
            self_loops: 0,
        }
    }

    fn rebuild_adjacency(&mut self) {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj.iter_mut().for_each(|v| v.sort_unstable());
        self.adjacency = adj;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[StationId] {
        &self.nodes
    }

    pub fn node_index(&self, id: &StationId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&key(a, b))
    }

    /// Edges as `(low, high)` pairs in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn non_edge_count(&self) -> usize {
        let n = self.len();
        n * n.saturating_sub(1) / 2 - self.edges.len()
    }

    /// Trips from `a` to `b`.
    pub fn trips(&self, a: usize, b: usize) -> u64 {
        self.trip_counts.get(&(a, b)).copied().unwrap_or(0)
    }

    /// Copy without the given edges; trip counts are kept.
    pub fn without_edges(&self, removed: &[(usize, usize)]) -> Self {
        let mut g = self.clone();
        for &(a, b) in removed {
            g.edges.remove(&key(a, b));
        }
        g.rebuild_adjacency();
        g
    }

    /// Subgraph on the nodes whose id is in `keep`, in the current order.
    pub fn restrict(&self, keep: &HashSet<StationId>) -> Result<Self> {
        let kept: Vec<usize> = (0..self.len()).filter(|&i| keep.contains(&self.nodes[i])).collect();
        if kept.is_empty() {
            return Err(Error::Input("restriction leaves no stations".into()));
        }
        let mut remap = vec![usize::MAX; self.len()];
        for (new, &old) in kept.iter().enumerate() {
            remap[old] = new;
        }
        let mut g = Self::empty(kept.iter().map(|&i| self.nodes[i].clone()).collect());
        for &(a, b) in &self.edges {
            if remap[a] != usize::MAX && remap[b] != usize::MAX {
                g.edges.insert(key(remap[a], remap[b]));
            }
        }
        for (&(a, b), &c) in &self.trip_counts {
            if remap[a] != usize::MAX && remap[b] != usize::MAX {
                g.trip_counts.insert((remap[a], remap[b]), c);
            }
        }
        g.rebuild_adjacency();
        Ok(g)
    }

    /// Appends a node linked to `neighbors` and returns its index.
    pub fn add_node(&mut self, id: StationId, neighbors: &[usize]) -> Result<usize> {
        if self.index.contains_key(&id) {
            return Err(Error::Input(format!("station {id} already in the graph")));
        }
        let v = self.nodes.len();
        self.index.insert(id.clone(), v);
        self.nodes.push(id);
        self.adjacency.push(Vec::new());
        for &u in neighbors {
            if u >= v {
                return Err(Error::Input(format!("neighbor {u} is not a node")));
            }
            self.edges.insert(key(u, v));
        }
        self.rebuild_adjacency();
        Ok(v)
    }
}
