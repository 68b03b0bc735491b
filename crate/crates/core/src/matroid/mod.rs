//! Matroids given by an independence oracle.
//!
//! Three backends are supported: uniform matroids, graphic matroids of a
//! multigraph, and vector matroids over GF(p). Everything above the backends
//! (rank, augmentation, extension) is computed from `is_independent` alone.
//!
//! For the search engines there is one more primitive, [`SpanContext`]: for a
//! fixed independent set `I` it reports the fundamental circuit `C(I, x)` of
//! any element `x`, i.e. which members of `I` can be exchanged for `x`.

mod graphic;
mod linear;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

pub use graphic::UnionFind;
pub use linear::PrimeField;

/// Index of an element of the ground set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub usize);

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    Uniform {
        rank: usize,
    },
    Graphic {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
    Linear {
        field: PrimeField,
        cols: Vec<Vec<u64>>,
    },
}

/// An immutable matroid on the ground set `0..ground_size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matroid {
    ground_size: usize,
    backend: Backend,
}

impl Matroid {
    /// `U(rank, elements)`: every set of at most `rank` elements is independent.
    pub fn uniform(elements: usize, rank: usize) -> Result<Self> {
        if rank > elements {
            return Err(Error::InvalidInput(format!(
                "uniform rank {rank} exceeds element count {elements}"
            )));
        }
        Ok(Self {
            ground_size: elements,
            backend: Backend::Uniform { rank },
        })
    }

    pub fn graphic(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(i) = edges
            .iter()
            .position(|&(u, w)| u >= vertices || w >= vertices)
        {
            return Err(Error::InvalidInput(format!(
                "edges[{i}] references a vertex outside 0..{vertices}"
            )));
        }
        Ok(Self {
            ground_size: edges.len(),
            backend: Backend::Graphic { vertices, edges },
        })
    }

    /// Column vectors over GF(p); entries are reduced modulo `p`.
    pub fn linear(p: u64, cols: Vec<Vec<u64>>) -> Result<Self> {
        let field = PrimeField::new(p)?;
        let dim = cols.first().map_or(0, |c| c.len());
        if let Some(i) = cols.iter().position(|c| c.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "cols[{i}] has length {} but cols[0] has length {dim}",
                cols[i].len()
            )));
        }
        let cols: Vec<Vec<u64>> = cols
            .into_iter()
            .map(|c| c.into_iter().map(|v| v % p).collect())
            .collect();
        Ok(Self {
            ground_size: cols.len(),
            backend: Backend::Linear { field, cols },
        })
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn elements(&self) -> impl Iterator<Item = ElementId> {
        (0..self.ground_size).map(ElementId)
    }

    pub fn check_ids(&self, s: &[ElementId]) -> Result<()> {
        match s.iter().find(|x| x.0 >= self.ground_size) {
            Some(x) => Err(Error::InvalidInput(format!(
                "element id {x} outside ground set of size {}",
                self.ground_size
            ))),
            None => Ok(()),
        }
    }

    /// Independence test. A repeated id makes the collection dependent.
    pub fn is_independent(&self, s: &[ElementId]) -> Result<bool> {
        self.check_ids(s)?;
        Ok(self.independent_unchecked(s))
    }

    pub(crate) fn independent_unchecked(&self, s: &[ElementId]) -> bool {
        match &self.backend {
            Backend::Uniform { rank } => s.len() <= *rank && all_distinct(s),
            Backend::Graphic { vertices, edges } => {
                graphic::is_acyclic(*vertices, s.iter().map(|x| edges[x.0]))
            }
            Backend::Linear { field, cols } => {
                if s.len() > cols.first().map_or(0, |c| c.len()) {
                    return false;
                }
                let vecs: Vec<&[u64]> = s.iter().map(|x| cols[x.0].as_slice()).collect();
                linear::rank(field, &vecs) == s.len()
            }
        }
    }

    /// Size of a maximal independent subset of `s`, found greedily in the
    /// given order.
    pub fn rank_of(&self, s: &[ElementId]) -> Result<usize> {
        self.check_ids(s)?;
        let mut kept = Vec::new();
        for &x in s {
            kept.push(x);
            if !self.independent_unchecked(&kept) {
                kept.pop();
            }
        }
        Ok(kept.len())
    }

    /// Rank of the whole matroid.
    pub fn rank(&self) -> usize {
        let all: Vec<ElementId> = self.elements().collect();
        self.rank_of(&all).expect("ids in range")
    }

    /// The smallest `x` in `a \ b` with `b + x` independent.
    ///
    /// `None` can only happen if the oracle violates the augmentation axiom.
    pub fn augment(&self, a: &[ElementId], b: &[ElementId]) -> Result<Option<ElementId>> {
        self.check_ids(a)?;
        self.check_ids(b)?;
        if !self.independent_unchecked(a) || !self.independent_unchecked(b) {
            return Err(contract!("augment needs two independent sets"));
        }
        if a.len() <= b.len() {
            return Err(contract!(
                "augment needs |a| > |b|, got {} and {}",
                a.len(),
                b.len()
            ));
        }
        let a: BTreeSet<ElementId> = a.iter().copied().collect();
        let mut trial = b.to_vec();
        for x in a.into_iter().filter(|x| !b.contains(x)) {
            trial.push(x);
            if self.independent_unchecked(&trial) {
                return Ok(Some(x));
            }
            trial.pop();
        }
        Ok(None)
    }

    /// Extends `base` to an independent set of size `k` using elements of
    /// `pool` in ascending id order.
    pub fn extend_to_size(
        &self,
        base: &[ElementId],
        pool: &[ElementId],
        k: usize,
    ) -> Result<Vec<ElementId>> {
        self.check_ids(base)?;
        self.check_ids(pool)?;
        if !self.independent_unchecked(base) {
            return Err(contract!("extend_to_size: base is dependent"));
        }
        if k < base.len() {
            return Err(contract!(
                "extend_to_size: target size {k} below base size {}",
                base.len()
            ));
        }
        let pool: BTreeSet<ElementId> = pool.iter().copied().collect();
        let mut out = base.to_vec();
        for x in pool {
            if out.len() == k {
                break;
            }
            if out.contains(&x) {
                continue;
            }
            out.push(x);
            if !self.independent_unchecked(&out) {
                out.pop();
            }
        }
        if out.len() < k {
            return Err(contract!(
                "extend_to_size: no independent extension of size {k} exists in the pool (best {})",
                out.len()
            ));
        }
        Ok(out)
    }

    /// Prepares circuit queries against an independent set `base`.
    pub fn span_context(&self, base: &[ElementId]) -> Result<SpanContext<'_>> {
        self.check_ids(base)?;
        let inner = match &self.backend {
            Backend::Uniform { rank } => {
                if base.len() > *rank || !all_distinct(base) {
                    return Err(contract!("span_context: base is dependent"));
                }
                SpanInner::Uniform { rank: *rank }
            }
            Backend::Graphic { vertices, edges } => {
                let base_edges: Vec<(usize, usize)> = base.iter().map(|x| edges[x.0]).collect();
                if !graphic::is_acyclic(*vertices, base_edges.iter().copied()) {
                    return Err(contract!("span_context: base is dependent"));
                }
                SpanInner::Graphic {
                    forest: graphic::RootedForest::new(*vertices, &base_edges),
                }
            }
            Backend::Linear { field, cols } => {
                let vecs: Vec<&[u64]> = base.iter().map(|x| cols[x.0].as_slice()).collect();
                let ech = linear::TrackedEchelon::new(*field, &vecs)
                    .ok_or_else(|| contract!("span_context: base is dependent"))?;
                SpanInner::Linear { ech }
            }
        };
        Ok(SpanContext {
            matroid: self,
            base: base.to_vec(),
            inner,
        })
    }
}

fn all_distinct(s: &[ElementId]) -> bool {
    let set: BTreeSet<_> = s.iter().collect();
    set.len() == s.len()
}

#[derive(Debug, Clone)]
enum SpanInner {
    Uniform { rank: usize },
    Graphic { forest: graphic::RootedForest },
    Linear { ech: linear::TrackedEchelon },
}

/// Fundamental-circuit queries relative to a fixed independent set.
#[derive(Debug, Clone)]
pub struct SpanContext<'m> {
    matroid: &'m Matroid,
    base: Vec<ElementId>,
    inner: SpanInner,
}

impl<'m> SpanContext<'m> {
    pub fn base(&self) -> &[ElementId] {
        &self.base
    }

    /// `None` if `base + x` is independent. Otherwise the (sorted) positions
    /// `j` for which `base - base[j] + x` is independent. A member of the
    /// base yields its own position.
    pub fn circuit(&self, x: ElementId) -> Option<Vec<usize>> {
        if let Some(pos) = self.base.iter().position(|&b| b == x) {
            return Some(vec![pos]);
        }
        match (&self.inner, self.matroid.backend()) {
            (SpanInner::Uniform { rank }, _) => {
                (self.base.len() >= *rank).then(|| (0..self.base.len()).collect())
            }
            (SpanInner::Graphic { forest }, Backend::Graphic { edges, .. }) => {
                let (u, w) = edges[x.0];
                forest.path(u, w)
            }
            (SpanInner::Linear { ech }, Backend::Linear { cols, .. }) => ech.circuit(&cols[x.0]),
            _ => unreachable!("span context built for a different backend"),
        }
    }

    /// True iff `base + x` is dependent (with `x` in the base counting as dependent).
    pub fn spans(&self, x: ElementId) -> bool {
        self.circuit(x).is_some()
    }

    /// True iff `base - base[pos] + y` is an independent set of distinct elements.
    pub fn exchangeable(&self, pos: usize, y: ElementId) -> bool {
        match self.circuit(y) {
            None => true,
            Some(c) => c.binary_search(&pos).is_ok(),
        }
    }
}
