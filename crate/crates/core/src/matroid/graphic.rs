//! Graphic matroids: edge sets of a multigraph, independent when acyclic.

use std::collections::VecDeque;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// True iff the edges form a forest (no loops, no repeated connections).
pub(crate) fn is_acyclic(vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> bool {
    let mut uf = UnionFind::new(vertices);
    edges.into_iter().all(|(u, w)| uf.union(u, w))
}

/// A rooted spanning forest of an acyclic edge set, used to read off the
/// fundamental circuit (tree path) closed by an extra edge.
#[derive(Debug, Clone)]
pub(crate) struct RootedForest {
    // (parent vertex, position of the edge to the parent)
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
    root: Vec<usize>,
}

impl RootedForest {
    pub(crate) fn new(vertices: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); vertices];
        for (pos, &(u, w)) in edges.iter().enumerate() {
            adj[u].push((w, pos));
            adj[w].push((u, pos));
        }
        let mut parent = vec![None; vertices];
        let mut depth = vec![0; vertices];
        let mut root = vec![usize::MAX; vertices];
        let mut queue = VecDeque::new();
        for start in 0..vertices {
            if root[start] != usize::MAX {
                continue;
            }
            root[start] = start;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for &(w, pos) in &adj[v] {
                    if root[w] == usize::MAX {
                        root[w] = start;
                        parent[w] = Some((v, pos));
                        depth[w] = depth[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        Self {
            parent,
            depth,
            root,
        }
    }

    /// Edge positions on the tree path between `u` and `w`, or `None` if
    /// they lie in different trees.
    pub(crate) fn path(&self, mut u: usize, mut w: usize) -> Option<Vec<usize>> {
        if self.root[u] != self.root[w] {
            return None;
        }
        let mut out = Vec::new();
        while self.depth[u] > self.depth[w] {
            let (p, pos) = self.parent[u].expect("non-root vertex has a parent");
            out.push(pos);
            u = p;
        }
        while self.depth[w] > self.depth[u] {
            let (p, pos) = self.parent[w].expect("non-root vertex has a parent");
            out.push(pos);
            w = p;
        }
        while u != w {
            let (pu, a) = self.parent[u].expect("non-root vertex has a parent");
            let (pw, b) = self.parent[w].expect("non-root vertex has a parent");
            out.push(a);
            out.push(b);
            u = pu;
            w = pw;
        }
        out.sort_unstable();
        Some(out)
    }
}
