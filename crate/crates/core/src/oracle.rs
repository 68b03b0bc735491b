//! Brute-force reference implementations, for cross-checking the engines
//! on small instances. Nothing here uses circuits, matchings or the search
//! code; independence is recomputed from the backend description directly.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::matroid::{Backend, ElementId, Matroid};
use crate::rainbow::{Colour, Coloured, Family, Instance, Ris};

/// Size limits; exceeding one is refused, never truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    /// Largest `n` for exact decomposition search.
    pub max_n: usize,
    /// Longest chain for cascade enumeration.
    pub max_ell: usize,
    /// Largest ground set for axiom checks.
    pub max_ground: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_n: 4,
            max_ell: 3,
            max_ground: 10,
        }
    }
}

/// Independence from the backend description, by definition-level loops.
pub fn reference_independent(m: &Matroid, set: &[ElementId]) -> bool {
    let distinct: BTreeSet<ElementId> = set.iter().copied().collect();
    if distinct.len() != set.len() || set.iter().any(|e| e.0 >= m.ground_size()) {
        return false;
    }
    match m.backend() {
        Backend::Uniform { rank } => set.len() <= *rank,
        Backend::Graphic { vertices, edges } => {
            let chosen: Vec<(usize, usize)> = set.iter().map(|e| edges[e.0]).collect();
            graph_is_forest(*vertices, &chosen)
        }
        Backend::Linear { field, cols } => {
            let p = field.modulus();
            let vecs: Vec<Vec<u64>> = set.iter().map(|e| cols[e.0].clone()).collect();
            vector_rank(p, vecs) == set.len()
        }
    }
}

// A graph is a forest iff every component with k vertices has k - 1 edges.
fn graph_is_forest(vertices: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); vertices];
    for &(u, w) in edges {
        if u == w {
            return false;
        }
        adj[u].push(w);
        adj[w].push(u);
    }
    let mut seen = vec![false; vertices];
    let mut tree_edges = 0;
    for start in 0..vertices {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        tree_edges += size - 1;
    }
    tree_edges == edges.len()
}

fn modpow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

// Column-by-column elimination of a list of row vectors mod p.
fn vector_rank(p: u64, mut rows: Vec<Vec<u64>>) -> usize {
    let width = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for col in 0..width {
        let Some(piv) = (r..rows.len()).find(|&i| !rows[i][col].is_multiple_of(p)) else {
            continue;
        };
        rows.swap(r, piv);
        let inv = modpow(rows[r][col], p - 2, p);
        for i in 0..rows.len() {
            if i == r {
                continue;
            }
            let factor = rows[i][col] % p * inv % p;
            if factor == 0 {
                continue;
            }
            for j in 0..width {
                let sub = factor * rows[r][j] % p;
                rows[i][j] = (rows[i][j] + p - sub) % p;
            }
        }
        r += 1;
    }
    r
}

fn reference_ris(inst: &Instance, s: &[Coloured]) -> bool {
    let colours: BTreeSet<Colour> = s.iter().map(|e| e.colour).collect();
    if colours.len() != s.len() || !s.iter().all(|&e| inst.in_universe(e)) {
        return false;
    }
    let proj: Vec<ElementId> = s.iter().map(|e| e.element).collect();
    reference_independent(inst.matroid(), &proj)
}

fn used_pairs(fam: &Family) -> BTreeSet<Coloured> {
    fam.members().iter().flat_map(|s| s.members()).collect()
}

/// Addability by trying every candidate, removal and witness.
fn addable_to(
    inst: &Instance,
    used: &BTreeSet<Coloured>,
    base: &[Coloured],
    b: Colour,
    target: Coloured,
    require_witness: bool,
) -> bool {
    if base.contains(&target) {
        return false;
    }
    if !require_witness {
        let mut plus = base.to_vec();
        plus.push(target);
        if reference_ris(inst, &plus) {
            return true;
        }
    }
    for &removed in base.iter().filter(|e| e.colour == target.colour) {
        for &y in inst.class(b) {
            let w = Coloured::new(y, b);
            if used.contains(&w) {
                continue;
            }
            let mut set: Vec<Coloured> = base.iter().copied().filter(|&e| e != removed).collect();
            set.push(w);
            set.push(target);
            if reference_ris(inst, &set) {
                return true;
            }
        }
    }
    false
}

/// Every `(S, b)`-addable element of `U` outside `S`.
pub fn brute_force_addable(
    inst: &Instance,
    fam: &Family,
    s: &Ris,
    b: Colour,
) -> BTreeSet<Coloured> {
    let used = used_pairs(fam);
    let base = s.members();
    inst.universe()
        .into_iter()
        .filter(|&t| addable_to(inst, &used, &base, b, t, false))
        .collect()
}

/// `Q(S_0, ..., S_{l-1})` for the given member indices, by enumerating
/// every colour sequence, transfer and witness.
pub fn brute_force_cascade_q(
    inst: &Instance,
    fam: &Family,
    members: &[usize],
    budget: &OracleBudget,
) -> Result<BTreeSet<Coloured>> {
    let ell = members.len();
    if ell == 0 || ell > budget.max_ell {
        return Err(Error::BudgetExceeded(format!(
            "cascade enumeration over {ell} members (limit {})",
            budget.max_ell
        )));
    }
    let used = used_pairs(fam);
    let chain: Vec<Vec<Coloured>> = members.iter().map(|&i| fam.member(i).members()).collect();
    let outside: BTreeSet<Coloured> = chain.iter().flatten().copied().collect();
    let mut found = BTreeSet::new();
    let s0 = &chain[0];
    for c0 in inst.colours() {
        if s0.iter().any(|e| e.colour == c0) {
            continue;
        }
        let mut colours = vec![c0];
        extend_chain(
            inst,
            &used,
            &chain,
            &outside,
            0,
            s0.clone(),
            &mut colours,
            &mut found,
        );
    }
    Ok(found)
}

#[allow(clippy::too_many_arguments)]
fn extend_chain(
    inst: &Instance,
    used: &BTreeSet<Coloured>,
    chain: &[Vec<Coloured>],
    outside: &BTreeSet<Coloured>,
    i: usize,
    base: Vec<Coloured>,
    colours: &mut Vec<Colour>,
    found: &mut BTreeSet<Coloured>,
) {
    let ci = *colours.last().expect("nonempty");
    let last = i + 1 == chain.len();
    let candidates: Vec<Coloured> = if last {
        inst.universe()
            .into_iter()
            .filter(|e| !outside.contains(e))
            .collect()
    } else {
        chain[i + 1].clone()
    };
    for t in candidates {
        if colours.contains(&t.colour) || (last && found.contains(&t)) {
            continue;
        }
        if !addable_to(inst, used, &base, ci, t, true) {
            continue;
        }
        if last {
            found.insert(t);
        } else {
            let next_base: Vec<Coloured> =
                chain[i + 1].iter().copied().filter(|&e| e != t).collect();
            colours.push(t.colour);
            extend_chain(inst, used, chain, outside, i + 1, next_base, colours, found);
            colours.pop();
        }
    }
}

/// Largest number of disjoint transversal bases, with one such collection.
pub fn exact_max_decomposition(
    inst: &Instance,
    budget: &OracleBudget,
) -> Result<(usize, Vec<Ris>)> {
    let n = inst.n();
    if n > budget.max_n {
        return Err(Error::BudgetExceeded(format!(
            "exact decomposition for n = {n} (limit {})",
            budget.max_n
        )));
    }
    let classes: Vec<Vec<ElementId>> = inst.colours().map(|c| inst.class_sorted(c)).collect();
    for k in (1..=n).rev() {
        // bases are interchangeable, so colour 0 is dealt out in order
        let mut rows: Vec<Vec<ElementId>> = (0..k).map(|j| vec![classes[0][j]]).collect();
        if !rows
            .iter()
            .all(|r| reference_independent(inst.matroid(), r))
        {
            continue;
        }
        let mut taken = vec![false; n];
        if fill(inst, &classes, &mut rows, 1, 0, &mut taken) {
            let bases = rows
                .iter()
                .map(|r| {
                    let members: Vec<Coloured> = r
                        .iter()
                        .enumerate()
                        .map(|(c, &x)| Coloured::new(x, Colour(c)))
                        .collect();
                    Ris::from_members(n, &members)
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok((k, bases));
        }
    }
    Ok((0, Vec::new()))
}

// Assigns an element of colour `c` to row `j`, rows round-robin within a colour.
fn fill(
    inst: &Instance,
    classes: &[Vec<ElementId>],
    rows: &mut [Vec<ElementId>],
    c: usize,
    j: usize,
    taken: &mut [bool],
) -> bool {
    if c == classes.len() {
        return true;
    }
    if j == rows.len() {
        let mut fresh = vec![false; classes.len()];
        return fill(inst, classes, rows, c + 1, 0, &mut fresh);
    }
    for (slot, &x) in classes[c].iter().enumerate() {
        if taken[slot] {
            continue;
        }
        rows[j].push(x);
        if reference_independent(inst.matroid(), &rows[j]) {
            taken[slot] = true;
            if fill(inst, classes, rows, c, j + 1, taken) {
                return true;
            }
            taken[slot] = false;
        }
        rows[j].pop();
    }
    false
}

/// Outcome of an exhaustive axiom check; violations carry example sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AxiomReport {
    pub empty_dependent: bool,
    pub hereditary: Option<(Vec<usize>, Vec<usize>)>,
    pub augmentation: Option<(Vec<usize>, Vec<usize>)>,
}

impl AxiomReport {
    pub fn passes(&self) -> bool {
        !self.empty_dependent && self.hereditary.is_none() && self.augmentation.is_none()
    }
}

fn bits(mask: u32, ground: usize) -> Vec<usize> {
    (0..ground).filter(|i| mask >> i & 1 == 1).collect()
}

/// Checks the independence axioms of an arbitrary predicate over all subsets.
pub fn matroid_axiom_check(
    ground: usize,
    indep: &dyn Fn(&[usize]) -> bool,
    budget: &OracleBudget,
) -> Result<AxiomReport> {
    if ground > budget.max_ground {
        return Err(Error::BudgetExceeded(format!(
            "axiom check on {ground} elements (limit {})",
            budget.max_ground
        )));
    }
    let total = 1u32 << ground;
    let table: Vec<bool> = (0..total).map(|m| indep(&bits(m, ground))).collect();
    let mut report = AxiomReport {
        empty_dependent: !table[0],
        ..Default::default()
    };
    'outer: for a in 0..total {
        if !table[a as usize] {
            continue;
        }
        for i in 0..ground {
            let sub = a & !(1 << i);
            if sub != a && !table[sub as usize] {
                report.hereditary = Some((bits(a, ground), bits(sub, ground)));
                break 'outer;
            }
        }
    }
    'aug: for a in 0..total {
        if !table[a as usize] {
            continue;
        }
        for b in 0..total {
            if !table[b as usize] || b.count_ones() <= a.count_ones() {
                continue;
            }
            let extra = b & !a;
            let ok = (0..ground).any(|i| extra >> i & 1 == 1 && table[(a | 1 << i) as usize]);
            if !ok {
                report.augmentation = Some((bits(a, ground), bits(b, ground)));
                break 'aug;
            }
        }
    }
    Ok(report)
}

/// [`matroid_axiom_check`] for a constructed backend, through its own
/// independence oracle.
pub fn check_matroid_axioms(m: &Matroid, budget: &OracleBudget) -> Result<AxiomReport> {
    let indep = |s: &[usize]| {
        let ids: Vec<ElementId> = s.iter().map(|&i| ElementId(i)).collect();
        m.is_independent(&ids).unwrap_or(false)
    };
    matroid_axiom_check(m.ground_size(), &indep, budget)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(x: usize, c: usize) -> Coloured {
        Coloured::new(ElementId(x), Colour::from_one_based(c))
    }

    fn f2() -> Instance {
        let m = Matroid::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        Instance::new(
            m,
            vec![
                vec![ElementId(0), ElementId(1)],
                vec![ElementId(1), ElementId(2)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn addable_f2() {
        let inst = f2();
        let s = Ris::from_members(2, &[e(0, 1)]).unwrap();
        let fam = Family::from_members(vec![s.clone()]);
        let got = brute_force_addable(&inst, &fam, &s, Colour(1));
        assert_eq!(got, [e(1, 2), e(2, 2), e(1, 1)].into_iter().collect());
    }

    #[test]
    fn cascade_q_f2() {
        let inst = f2();
        let fam = Family::from_members(vec![
            Ris::from_members(2, &[e(1, 1)]).unwrap(),
            Ris::from_members(2, &[e(2, 2)]).unwrap(),
        ]);
        let q = brute_force_cascade_q(&inst, &fam, &[0], &OracleBudget::default()).unwrap();
        assert_eq!(q, [e(0, 1)].into_iter().collect());
        let tight = OracleBudget {
            max_ell: 1,
            ..Default::default()
        };
        assert!(brute_force_cascade_q(&inst, &fam, &[0, 1], &tight).is_err());
    }

    #[test]
    fn exact_decompositions() {
        let b = OracleBudget::default();
        let m = Matroid::uniform(3, 3).unwrap();
        let cls: Vec<ElementId> = (0..3).map(ElementId).collect();
        let f1 = Instance::new(m, vec![cls.clone(), cls.clone(), cls]).unwrap();
        let (k, bases) = exact_max_decomposition(&f1, &b).unwrap();
        assert_eq!(k, 3);
        let fam = Family::from_members(bases);
        fam.validate(&f1).unwrap();
        assert_eq!(fam.transversal_count(), 3);

        assert_eq!(exact_max_decomposition(&f2(), &b).unwrap().0, 2);

        let m = Matroid::uniform(1, 1).unwrap();
        let one = Instance::new(m, vec![vec![ElementId(0)]]).unwrap();
        assert_eq!(exact_max_decomposition(&one, &b).unwrap().0, 1);

        let m = Matroid::uniform(5, 5).unwrap();
        let cls: Vec<ElementId> = (0..5).map(ElementId).collect();
        let big = Instance::new(m, vec![cls; 5]).unwrap();
        assert!(matches!(
            exact_max_decomposition(&big, &b),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn axioms_on_backends() {
        let b = OracleBudget::default();
        assert!(check_matroid_axioms(&Matroid::uniform(6, 3).unwrap(), &b)
            .unwrap()
            .passes());
        let k4 = Matroid::graphic(4, vec![(0, 1), (1, 2), (2, 3), (0, 3), (0, 2), (1, 3)]).unwrap();
        assert!(check_matroid_axioms(&k4, &b).unwrap().passes());
        let lin = Matroid::linear(
            3,
            vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![1, 2], vec![2, 2]],
        )
        .unwrap();
        assert!(check_matroid_axioms(&lin, &b).unwrap().passes());
        assert!(check_matroid_axioms(&Matroid::uniform(11, 2).unwrap(), &b).is_err());
    }

    #[test]
    fn corrupted_predicates() {
        let b = OracleBudget::default();
        // size <= 2 except {0,1}: the rank-2 matroid in which 0 and 1 are parallel
        let parallel = |s: &[usize]| s.len() <= 2 && !(s.contains(&0) && s.contains(&1));
        assert!(matroid_axiom_check(4, &parallel, &b).unwrap().passes());
        // {0,1} independent but {2} cannot be extended by either of them
        let broken = |s: &[usize]| match s.len() {
            0 | 1 => true,
            2 => s == [0, 1],
            _ => false,
        };
        let r = matroid_axiom_check(3, &broken, &b).unwrap();
        assert!(r.augmentation.is_some());
        let not_hereditary = |s: &[usize]| s.len() != 1 || s[0] != 0;
        let r = matroid_axiom_check(2, &not_hereditary, &b).unwrap();
        assert!(r.hereditary.is_some());
    }

    #[test]
    fn reference_matches_backend() {
        let k4 = Matroid::graphic(4, vec![(0, 1), (1, 2), (2, 3), (0, 3), (0, 2), (1, 3)]).unwrap();
        for mask in 0u32..64 {
            let s: Vec<ElementId> = (0..6)
                .filter(|i| mask >> i & 1 == 1)
                .map(ElementId)
                .collect();
            assert_eq!(
                reference_independent(&k4, &s),
                k4.is_independent(&s).unwrap()
            );
        }
    }
}
