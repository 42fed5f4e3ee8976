use std::cmp::Ordering;
use std::collections::VecDeque;

use num_integer::Integer;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::linalg::Mat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("NotStronglyConnected: the digraph is not strongly connected")]
    NotStronglyConnected,
}

/// Transition digraph: edge `i → j` iff entry `(j, i)` is positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    adj: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in edges {
            assert!(i < n && j < n, "edge out of range");
            if !adj[i].contains(&j) {
                adj[i].push(j);
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        Digraph { n, adj }
    }

    pub fn from_matrix(m: &Mat) -> Self {
        let n = m.rows();
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| m.entry_sign(j, i) == Ordering::Greater)
            .collect();
        Digraph::new(n, &edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj.iter().enumerate().flat_map(|(i, js)| js.iter().map(move |&j| (i, j))).collect()
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    /// Tensor-product digraph: `(i,j) → (k,l)` iff `i → k` and `j → l`.
    /// Vertex `(i,j)` has index `i·n + j`, matching the Kronecker ordering.
    pub fn tensor_square(&self) -> Digraph {
        let n = self.n;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for &k in &self.adj[i] {
                    for &l in &self.adj[j] {
                        edges.push((i * n + j, k * n + l));
                    }
                }
            }
        }
        Digraph::new(n * n, &edges)
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let mut g = DiGraph::<(), ()>::with_capacity(self.n, 0);
        let nodes: Vec<_> = (0..self.n).map(|_| g.add_node(())).collect();
        for (i, j) in self.edges() {
            g.add_edge(nodes[i], nodes[j], ());
        }
        tarjan_scc(&g).into_iter().map(|c| c.into_iter().map(|v| v.index()).collect()).collect()
    }

    /// A component is nontrivial when it contains a cycle.
    fn is_nontrivial(&self, component: &[usize]) -> bool {
        component.len() > 1 || self.adj[component[0]].contains(&component[0])
    }
}

/// One component covering every vertex. A single vertex counts only with a
/// self-loop, so that the 1×1 zero matrix is not irreducible.
pub fn strongly_connected(g: &Digraph) -> bool {
    let comps = g.components();
    comps.len() == 1 && g.is_nontrivial(&comps[0])
}

/// Gcd of cycle lengths: gcd over all edges `u → v` of `level(u) + 1 − level(v)`
/// for BFS levels from vertex 0.
pub fn period(g: &Digraph) -> Result<usize, GraphError> {
    if !strongly_connected(g) {
        return Err(GraphError::NotStronglyConnected);
    }
    let mut level = vec![usize::MAX; g.n];
    level[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &v in &g.adj[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut p: i64 = 0;
    for (u, v) in g.edges() {
        p = p.gcd(&(level[u] as i64 + 1 - level[v] as i64).abs());
    }
    Ok(p as usize)
}

/// Number of strongly connected components of the tensor square that carry
/// a cycle. Equals the period for strongly connected digraphs.
pub fn tensor_scc_count(g: &Digraph) -> Result<usize, GraphError> {
    if !strongly_connected(g) {
        return Err(GraphError::NotStronglyConnected);
    }
    let t = g.tensor_square();
    Ok(t.components().iter().filter(|c| t.is_nontrivial(c)).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn four_state_chain() -> Digraph {
        Digraph::new(4, &[(0, 1), (0, 2), (1, 0), (2, 3), (3, 0)])
    }

    fn cycle(n: usize) -> Digraph {
        Digraph::new(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    #[test]
    fn matrix_digraph_matches_pattern() {
        let w = Mat::from_ratios(&[
            &[(0, 1), (1, 1), (0, 1), (1, 1)],
            &[(1, 2), (0, 1), (0, 1), (0, 1)],
            &[(1, 2), (0, 1), (0, 1), (0, 1)],
            &[(0, 1), (0, 1), (1, 1), (0, 1)],
        ])
        .unwrap();
        assert_eq!(Digraph::from_matrix(&w), four_state_chain());
        let jordan = Digraph::from_matrix(&Mat::from_ints(&[&[1, 1], &[0, 1]]).unwrap());
        assert_eq!(jordan.edges(), vec![(0, 0), (1, 0), (1, 1)]);
        assert!(!strongly_connected(&jordan));
    }

    #[test]
    fn examples() {
        assert!(strongly_connected(&four_state_chain()));
        assert_eq!(period(&four_state_chain()), Ok(1));
        assert_eq!(tensor_scc_count(&four_state_chain()), Ok(1));

        let loop1 = Digraph::new(1, &[(0, 0)]);
        assert!(strongly_connected(&loop1));
        assert_eq!(period(&loop1), Ok(1));
        assert!(!strongly_connected(&Digraph::new(1, &[])));

        assert_eq!(period(&cycle(2)), Ok(2));
        assert_eq!(tensor_scc_count(&cycle(2)), Ok(2));
        assert_eq!(tensor_scc_count(&cycle(3)), Ok(3));
        assert_eq!(period(&Digraph::new(2, &[(0, 0), (1, 1)])), Err(GraphError::NotStronglyConnected));
    }

    /// Gcd of lengths of all closed walks up to `2n²`, by boolean matrix powers.
    fn period_by_walks(g: &Digraph) -> usize {
        let n = g.vertex_count();
        let mut reach = vec![vec![false; n]; n];
        for (i, j) in g.edges() {
            reach[i][j] = true;
        }
        let step = reach.clone();
        let mut p = 0usize;
        for len in 1..=2 * n * n {
            if (0..n).any(|i| reach[i][i]) {
                p = p.gcd(&len);
            }
            let mut next = vec![vec![false; n]; n];
            for i in 0..n {
                for k in 0..n {
                    if reach[i][k] {
                        for j in 0..n {
                            next[i][j] |= step[k][j];
                        }
                    }
                }
            }
            reach = next;
        }
        p
    }

    fn strongly_connected_digraph() -> impl Strategy<Value = Digraph> {
        (2usize..=8).prop_flat_map(|n| {
            (Just(n), prop::sample::subsequence((0..n * n).collect::<Vec<_>>(), 0..=n * n / 2), prop::sample::select(vec![1usize, 2, 3]))
        })
        .prop_map(|(n, extra, stride)| {
            // A Hamiltonian cycle keeps it strongly connected; `stride`-periodic
            // chords keep some periods above 1.
            let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            for e in extra {
                let (i, j) = (e / n, e % n);
                if stride == 1 || (j + n - i) % stride == 1 % stride && n % stride == 0 {
                    edges.push((i, j));
                }
            }
            Digraph::new(n, &edges)
        })
    }

    proptest! {
        #[test]
        fn tensor_components_count_the_period(g in strongly_connected_digraph()) {
            let p = period(&g).unwrap();
            prop_assert_eq!(tensor_scc_count(&g).unwrap(), p);
            prop_assert_eq!(period_by_walks(&g), p);
        }
    }
}
