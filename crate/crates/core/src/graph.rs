use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Small directed graph on named nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiGraph {
    pub nodes: Vec<String>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl DiGraph {
    pub fn new(nodes: Vec<String>) -> Self {
        DiGraph {
            nodes,
            edges: BTreeSet::new(),
        }
    }

    pub fn with_edges(nodes: Vec<String>, edges: &[(&str, &str)]) -> Self {
        let mut g = DiGraph::new(nodes);
        for (a, b) in edges {
            let i = g.index_of(a).expect("known node");
            let j = g.index_of(b).expect("known node");
            g.add_edge(i, j);
        }
        g
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn add_edge(&mut self, from: usize, to: usize) {
        self.edges.insert((from, to));
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Some(i), Some(j)) => self.edges.contains(&(i, j)),
            _ => false,
        }
    }

    pub fn edge_names(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(i, j)| (self.nodes[i].clone(), self.nodes[j].clone()))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn parents(&self, node: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.1 == node).map(|e| e.0).collect()
    }

    /// Every edge flipped.
    pub fn reversed(&self) -> Self {
        DiGraph {
            nodes: self.nodes.clone(),
            edges: self.edges.iter().map(|&(a, b)| (b, a)).collect(),
        }
    }

    /// No directed cycles (self-loops count as cycles).
    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut ready: Vec<usize> = (0..n).filter(|&k| indeg[k] == 0).collect();
        ready.reverse();
        let mut order = Vec::with_capacity(n);
        while let Some(k) = ready.pop() {
            order.push(k);
            for &(a, b) in &self.edges {
                if a == k {
                    indeg[b] -= 1;
                    if indeg[b] == 0 {
                        ready.push(b);
                    }
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

impl fmt::Display for DiGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .edge_names()
            .into_iter()
            .map(|(a, b)| format!("{a}->{b}"))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn cycles() {
        let g = DiGraph::with_edges(names(&["a", "b", "c"]), &[("a", "b"), ("b", "c")]);
        assert!(g.is_acyclic());
        assert_eq!(g.topological_order().unwrap(), vec![0, 1, 2]);
        let h = DiGraph::with_edges(names(&["a", "b"]), &[("a", "b"), ("b", "a")]);
        assert!(!h.is_acyclic());
        let s = DiGraph::with_edges(names(&["a"]), &[("a", "a")]);
        assert!(!s.is_acyclic());
    }

    #[test]
    fn reverse_and_display() {
        let g = DiGraph::with_edges(names(&["a", "b"]), &[("a", "b")]);
        assert!(g.reversed().has_edge("b", "a"));
        assert_eq!(g.to_string(), "{a->b}");
    }
}
