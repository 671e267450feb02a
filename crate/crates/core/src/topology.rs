//! Labeled AS relationship graph.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{RawEdge, RawRelationship};
use crate::types::Asn;

/// Relationship of an AS to one of its neighbors, read in path direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Relationship {
    ProviderToCustomer,
    CustomerToProvider,
    PeerToPeer,
    None,
}

impl Relationship {
    pub fn inverse(self) -> Self {
        match self {
            Relationship::ProviderToCustomer => Relationship::CustomerToProvider,
            Relationship::CustomerToProvider => Relationship::ProviderToCustomer,
            other => other,
        }
    }
}

/// Largest graph `enumerate_valley_free` will accept.
pub const ENUMERATION_VERTEX_LIMIT: usize = 16;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub vertices: usize,
    pub edges: usize,
    pub self_edges_dropped: usize,
    pub duplicates: usize,
}

/// Immutable AS graph with per-vertex adjacency sorted by neighbor ASN.
///
/// Vertices are addressed either by [`Asn`] or by a dense index in
/// `0..len()`; indices follow ascending ASN order.
#[derive(Debug, Clone, Default)]
pub struct RelationshipGraph {
    asns: Vec<Asn>,
    index: HashMap<Asn, usize>,
    adj: Vec<Vec<(usize, Relationship)>>,
    edges: usize,
}

/// Builds the graph. Self-edges are dropped and counted; an AS pair given two
/// different labels is an error.
pub fn build_graph(edges: &[RawEdge]) -> Result<(RelationshipGraph, GraphStats)> {
    let mut stats = GraphStats::default();
    let kept: Vec<&RawEdge> = edges.iter().filter(|e| e.a != e.b).collect();
    stats.self_edges_dropped = edges.len() - kept.len();

    let mut asns: Vec<Asn> = kept.iter().flat_map(|e| [e.a, e.b]).collect();
    asns.sort_unstable();
    asns.dedup();
    let index: HashMap<Asn, usize> = asns.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let mut adj: Vec<Vec<(usize, Relationship)>> = vec![Vec::new(); asns.len()];
    let mut labels: HashMap<(usize, usize), (Relationship, usize)> = HashMap::new();

    for e in kept {
        let (ia, ib) = (index[&e.a], index[&e.b]);
        let rel_ab = match e.rel {
            RawRelationship::ProviderOf => Relationship::ProviderToCustomer,
            RawRelationship::Peer => Relationship::PeerToPeer,
        };
        if let Some(&(prev, line)) = labels.get(&(ia, ib)) {
            if prev == rel_ab {
                stats.duplicates += 1;
                continue;
            }
            return Err(Error::ConflictingRelationship {
                a: e.a,
                b: e.b,
                first_line: line,
                second_line: e.line,
            });
        }
        labels.insert((ia, ib), (rel_ab, e.line));
        labels.insert((ib, ia), (rel_ab.inverse(), e.line));
        adj[ia].push((ib, rel_ab));
        adj[ib].push((ia, rel_ab.inverse()));
        stats.edges += 1;
    }
    for n in &mut adj {
        n.sort_unstable_by_key(|&(j, _)| j);
    }
    stats.vertices = asns.len();
    let graph = RelationshipGraph {
        asns,
        index,
        adj,
        edges: stats.edges,
    };
    Ok((graph, stats))
}

/// Why a path is not valley-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ValleyViolation {
    /// No labeled link between `path[at]` and `path[at + 1]`.
    UnknownLink {
        at: usize,
    },
    /// The link leaving `path[at]` climbs or crosses a peer link after the
    /// path has already crossed a peer link or started descending.
    Valley {
        at: usize,
    },
    EmptyPath,
}

/// Position in the valley-free grammar `c2p* p2p? p2c*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slope {
    Climbing,
    Descending,
}

impl Slope {
    pub(crate) fn step(self, rel: Relationship) -> Option<Slope> {
        match (self, rel) {
            (_, Relationship::None) => None,
            (Slope::Climbing, Relationship::CustomerToProvider) => Some(Slope::Climbing),
            (Slope::Climbing, _) => Some(Slope::Descending),
            (Slope::Descending, Relationship::ProviderToCustomer) => Some(Slope::Descending),
            (Slope::Descending, _) => None,
        }
    }
}

impl RelationshipGraph {
    pub fn len(&self) -> usize {
        self.asns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.asns.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// All ASes in ascending order.
    pub fn asns(&self) -> &[Asn] {
        &self.asns
    }

    pub fn contains(&self, asn: Asn) -> bool {
        self.index.contains_key(&asn)
    }

    pub fn index_of(&self, asn: Asn) -> Option<usize> {
        self.index.get(&asn).copied()
    }

    pub fn asn_at(&self, idx: usize) -> Asn {
        self.asns[idx]
    }

    /// Neighbors of vertex `idx` with the relationship from `idx` to each.
    pub fn adjacent(&self, idx: usize) -> &[(usize, Relationship)] {
        &self.adj[idx]
    }

    pub fn relationship(&self, a: Asn, b: Asn) -> Relationship {
        match (self.index_of(a), self.index_of(b)) {
            (Some(ia), Some(ib)) => self.relationship_idx(ia, ib),
            _ => Relationship::None,
        }
    }

    pub(crate) fn relationship_idx(&self, a: usize, b: usize) -> Relationship {
        let n = &self.adj[a];
        match n.binary_search_by_key(&b, |&(j, _)| j) {
            Ok(pos) => n[pos].1,
            Err(_) => Relationship::None,
        }
    }

    fn neighbors_with(&self, asn: Asn, rel: Relationship) -> Result<Vec<Asn>> {
        let i = self.index_of(asn).ok_or(Error::UnknownAs(asn))?;
        Ok(self.adj[i]
            .iter()
            .filter(|&&(_, r)| r == rel)
            .map(|&(j, _)| self.asns[j])
            .collect())
    }

    pub fn customers_of(&self, asn: Asn) -> Result<Vec<Asn>> {
        self.neighbors_with(asn, Relationship::ProviderToCustomer)
    }

    pub fn providers_of(&self, asn: Asn) -> Result<Vec<Asn>> {
        self.neighbors_with(asn, Relationship::CustomerToProvider)
    }

    pub fn peers_of(&self, asn: Asn) -> Result<Vec<Asn>> {
        self.neighbors_with(asn, Relationship::PeerToPeer)
    }

    /// Edge list in canonical order: each pair once, provider first for
    /// provider-customer links, smaller ASN first for peers.
    pub fn edges(&self) -> Vec<RawEdge> {
        let mut out = Vec::with_capacity(self.edges);
        for (i, n) in self.adj.iter().enumerate() {
            for &(j, rel) in n {
                let rel = match rel {
                    Relationship::ProviderToCustomer => RawRelationship::ProviderOf,
                    Relationship::PeerToPeer if i < j => RawRelationship::Peer,
                    _ => continue,
                };
                out.push(RawEdge {
                    a: self.asns[i],
                    b: self.asns[j],
                    rel,
                    line: 0,
                });
            }
        }
        out
    }

    /// Checks the valley-free grammar over the path read origin to destination.
    pub fn check_valley_free(&self, path: &[Asn]) -> std::result::Result<(), ValleyViolation> {
        if path.is_empty() {
            return Err(ValleyViolation::EmptyPath);
        }
        let mut slope = Slope::Climbing;
        for (at, w) in path.windows(2).enumerate() {
            let rel = self.relationship(w[0], w[1]);
            if rel == Relationship::None {
                return Err(ValleyViolation::UnknownLink { at });
            }
            slope = slope.step(rel).ok_or(ValleyViolation::Valley { at })?;
        }
        Ok(())
    }

    pub fn is_valley_free(&self, path: &[Asn]) -> bool {
        self.check_valley_free(path).is_ok()
    }

    /// Every simple valley-free path of 1 to `max_len` ASes. Exponential in
    /// the graph size; intended as a test oracle on small graphs.
    pub fn enumerate_valley_free(&self, max_len: usize) -> Result<BTreeSet<Vec<Asn>>> {
        if self.len() > ENUMERATION_VERTEX_LIMIT {
            return Err(Error::TooManyVertices {
                vertices: self.len(),
                limit: ENUMERATION_VERTEX_LIMIT,
            });
        }
        let mut out = BTreeSet::new();
        let mut path = Vec::with_capacity(max_len);
        let mut on_path = vec![false; self.len()];
        for start in 0..self.len() {
            self.extend_enumeration(
                start,
                Slope::Climbing,
                max_len,
                &mut path,
                &mut on_path,
                &mut out,
            );
        }
        Ok(out)
    }

    fn extend_enumeration(
        &self,
        v: usize,
        slope: Slope,
        max_len: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut BTreeSet<Vec<Asn>>,
    ) {
        if path.len() >= max_len {
            return;
        }
        path.push(v);
        on_path[v] = true;
        out.insert(path.iter().map(|&i| self.asns[i]).collect());
        for &(w, rel) in &self.adj[v] {
            if on_path[w] {
                continue;
            }
            if let Some(next) = slope.step(rel) {
                self.extend_enumeration(w, next, max_len, path, on_path, out);
            }
        }
        on_path[v] = false;
        path.pop();
    }

    /// ASes reachable from `asn` over provider-to-customer links, excluding
    /// `asn` itself.
    pub fn customer_cone(&self, asn: Asn) -> Result<BTreeSet<Asn>> {
        let start = self.index_of(asn).ok_or(Error::UnknownAs(asn))?;
        Ok(self
            .cone_indices(start)
            .into_iter()
            .map(|i| self.asns[i])
            .collect())
    }

    pub(crate) fn cone_indices(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut out = Vec::new();
        while let Some(v) = queue.pop_front() {
            for &(w, rel) in &self.adj[v] {
                if rel == Relationship::ProviderToCustomer && !seen[w] {
                    seen[w] = true;
                    out.push(w);
                    queue.push_back(w);
                }
            }
        }
        out
    }

    /// Customer cone size of every AS, indexed like `asns()`.
    pub fn cone_sizes(&self) -> Vec<usize> {
        (0..self.len())
            .map(|i| self.cone_indices(i).len())
            .collect()
    }
}
