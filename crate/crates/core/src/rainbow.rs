//! Coloured universe, rainbow independent sets and families of them.
//!
//! Colours are 0-based internally and printed 1-based. A coloured element
//! `(x, c)` is identified by the pair itself: each class `B_c` is a basis and
//! therefore holds `x` at most once, so the pair picks out a unique slot.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{contract, Error, Result};
use crate::matroid::{ElementId, Matroid};

/// A colour class index, `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Colour(pub usize);

impl Colour {
    pub fn from_one_based(c: usize) -> Self {
        assert!(c >= 1, "one-based colour must be positive");
        Colour(c - 1)
    }

    pub fn one_based(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for Colour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.one_based())
    }
}

/// A member `(x, c)` of the universe. Ordered by element, then colour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coloured {
    pub element: ElementId,
    pub colour: Colour,
}

impl Coloured {
    pub fn new(element: ElementId, colour: Colour) -> Self {
        Self { element, colour }
    }
}

impl fmt::Display for Coloured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.element, self.colour)
    }
}

/// A rank-`n` matroid together with `n` colour classes, each a basis.
#[derive(Debug, Clone)]
pub struct Instance {
    matroid: Matroid,
    bases: Vec<Vec<ElementId>>,
    // element -> slot within each class
    slots: Vec<HashMap<ElementId, usize>>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.matroid == other.matroid && self.bases == other.bases
    }
}

impl Instance {
    /// Validates that the matroid has rank `bases.len()` and every class is a basis.
    pub fn new(matroid: Matroid, bases: Vec<Vec<ElementId>>) -> Result<Self> {
        let n = bases.len();
        let rank = matroid.rank();
        if rank != n {
            return Err(Error::InvalidInput(format!(
                "matroid has rank {rank} but {n} colour classes were given"
            )));
        }
        let mut slots = Vec::with_capacity(n);
        for (c, class) in bases.iter().enumerate() {
            if class.len() != n {
                return Err(Error::InvalidInput(format!(
                    "bases[{c}] has {} elements, expected {n}",
                    class.len()
                )));
            }
            matroid
                .check_ids(class)
                .map_err(|e| Error::InvalidInput(format!("bases[{c}]: {e}")))?;
            if !matroid.independent_unchecked(class) {
                return Err(Error::InvalidInput(format!(
                    "bases[{c}] is not independent"
                )));
            }
            slots.push(class.iter().enumerate().map(|(i, &x)| (x, i)).collect());
        }
        Ok(Self {
            matroid,
            bases,
            slots,
        })
    }

    pub fn n(&self) -> usize {
        self.bases.len()
    }

    pub fn matroid(&self) -> &Matroid {
        &self.matroid
    }

    pub fn bases(&self) -> &[Vec<ElementId>] {
        &self.bases
    }

    pub fn class(&self, c: Colour) -> &[ElementId] {
        &self.bases[c.0]
    }

    /// Elements of `B_c` in ascending id order.
    pub fn class_sorted(&self, c: Colour) -> Vec<ElementId> {
        let mut v = self.bases[c.0].clone();
        v.sort_unstable();
        v
    }

    pub fn colours(&self) -> impl Iterator<Item = Colour> {
        (0..self.n()).map(Colour)
    }

    pub fn in_universe(&self, e: Coloured) -> bool {
        e.colour.0 < self.n() && self.slots[e.colour.0].contains_key(&e.element)
    }

    /// Dense index of a universe member, `colour * n + slot`.
    pub fn universe_index(&self, e: Coloured) -> Option<usize> {
        let n = self.n();
        self.slots
            .get(e.colour.0)?
            .get(&e.element)
            .map(|slot| e.colour.0 * n + slot)
    }

    /// `U = {(x, c) : x in B_c}`, sorted.
    pub fn universe(&self) -> Vec<Coloured> {
        let mut u: Vec<Coloured> = self
            .colours()
            .flat_map(|c| self.class(c).iter().map(move |&x| Coloured::new(x, c)))
            .collect();
        u.sort_unstable();
        u
    }

    /// Whether a set of coloured elements is a rainbow independent set.
    pub fn is_ris(&self, s: &[Coloured]) -> Result<bool> {
        if let Some(e) = s.iter().find(|e| !self.in_universe(**e)) {
            return Err(Error::InvalidInput(format!("{e} is not in the universe")));
        }
        let colours: BTreeSet<Colour> = s.iter().map(|e| e.colour).collect();
        if colours.len() != s.len() {
            return Ok(false);
        }
        let elems: Vec<ElementId> = s.iter().map(|e| e.element).collect();
        Ok(self.matroid.independent_unchecked(&elems))
    }

    pub fn check_ris(&self, s: &Ris) -> Result<bool> {
        if s.n() != self.n() {
            return Err(contract!(
                "RIS has {} colour slots, instance has {}",
                s.n(),
                self.n()
            ));
        }
        self.is_ris(&s.members())
    }
}

/// A rainbow independent set stored as a colour -> element map.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ris {
    slots: Vec<Option<ElementId>>,
}

impl Ris {
    pub fn empty(n: usize) -> Self {
        Self {
            slots: vec![None; n],
        }
    }

    /// Builds from pairs; fails on a repeated colour. Does not check independence.
    pub fn from_members(n: usize, members: &[Coloured]) -> Result<Self> {
        let mut s = Self::empty(n);
        for &e in members {
            s.insert(e)?;
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.slots.len()
    }

    pub fn len(&self) -> usize {
        self.slots.iter().filter(|x| x.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().all(|x| x.is_none())
    }

    pub fn is_transversal(&self) -> bool {
        self.slots.iter().all(|x| x.is_some())
    }

    pub fn get(&self, c: Colour) -> Option<ElementId> {
        self.slots.get(c.0).copied().flatten()
    }

    pub fn has_colour(&self, c: Colour) -> bool {
        self.get(c).is_some()
    }

    pub fn contains(&self, e: Coloured) -> bool {
        self.get(e.colour) == Some(e.element)
    }

    /// Members in colour order.
    pub fn iter(&self) -> impl Iterator<Item = Coloured> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(c, x)| x.map(|x| Coloured::new(x, Colour(c))))
    }

    pub fn members(&self) -> Vec<Coloured> {
        self.iter().collect()
    }

    pub fn colours(&self) -> impl Iterator<Item = Colour> + '_ {
        self.iter().map(|e| e.colour)
    }

    /// `pi(S)`, in colour order.
    pub fn projection(&self) -> Vec<ElementId> {
        self.iter().map(|e| e.element).collect()
    }

    pub fn missing_colours(&self) -> Vec<Colour> {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, x)| x.is_none())
            .map(|(c, _)| Colour(c))
            .collect()
    }

    pub fn insert(&mut self, e: Coloured) -> Result<()> {
        let slot = self
            .slots
            .get_mut(e.colour.0)
            .ok_or_else(|| contract!("colour {} out of range", e.colour))?;
        if let Some(prev) = slot {
            return Err(contract!(
                "colour {} already holds element {prev}, cannot add {e}",
                e.colour
            ));
        }
        *slot = Some(e.element);
        Ok(())
    }

    pub fn remove(&mut self, e: Coloured) -> Result<()> {
        if !self.contains(e) {
            return Err(contract!("{e} is not a member"));
        }
        self.slots[e.colour.0] = None;
        Ok(())
    }

    pub fn without(&self, e: Coloured) -> Result<Ris> {
        let mut s = self.clone();
        s.remove(e)?;
        Ok(s)
    }
}

/// `pi(S)` for any collection of coloured elements.
pub fn project(s: &[Coloured]) -> Vec<ElementId> {
    s.iter().map(|e| e.element).collect()
}

/// Colours of `1..n` (0-based here) absent from `s`.
pub fn missing_colours(s: &Ris, n: usize) -> Vec<Colour> {
    (0..n).map(Colour).filter(|&c| !s.has_colour(c)).collect()
}

/// The maintained collection of RISs, with a version counter bumped on
/// every mutation so that stale certificates can be detected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    members: Vec<Ris>,
    version: u64,
}

impl Family {
    pub fn empty(n: usize, f: usize) -> Self {
        Self {
            members: vec![Ris::empty(n); f],
            version: 0,
        }
    }

    pub fn from_members(members: Vec<Ris>) -> Self {
        Self {
            members,
            version: 0,
        }
    }

    pub fn members(&self) -> &[Ris] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Ris {
        &self.members[i]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn volume(&self) -> usize {
        self.members.iter().map(Ris::len).sum()
    }

    pub fn transversal_count(&self) -> usize {
        self.members.iter().filter(|s| s.is_transversal()).count()
    }

    pub fn replace(&mut self, i: usize, s: Ris) {
        self.members[i] = s;
        self.version += 1;
    }

    /// Replaces several members at once as a single mutation.
    pub fn replace_many(&mut self, updates: impl IntoIterator<Item = (usize, Ris)>) {
        for (i, s) in updates {
            self.members[i] = s;
        }
        self.version += 1;
    }

    pub fn is_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.members
            .iter()
            .flat_map(|s| s.iter())
            .all(|e| seen.insert(e))
    }

    /// `F` with per-colour slices and member ownership.
    pub fn used_set(&self) -> Result<UsedSet> {
        let n = self.members.first().map_or(0, Ris::n);
        let mut owner: Vec<BTreeMap<ElementId, usize>> = vec![BTreeMap::new(); n];
        for (i, s) in self.members.iter().enumerate() {
            for e in s.iter() {
                if let Some(j) = owner[e.colour.0].insert(e.element, i) {
                    return Err(contract!(
                        "family is not disjoint: {e} in members {j} and {i}"
                    ));
                }
            }
        }
        Ok(UsedSet { owner })
    }

    /// Checks every member is an RIS over `inst` and the family is disjoint.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        for (i, s) in self.members.iter().enumerate() {
            if !inst.check_ris(s)? {
                return Err(contract!("member {i} is not an RIS"));
            }
        }
        if !self.is_disjoint() {
            return Err(contract!("family is not disjoint"));
        }
        Ok(())
    }
}

/// The used set `F = union of the family`, indexed by colour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsedSet {
    owner: Vec<BTreeMap<ElementId, usize>>,
}

impl UsedSet {
    pub fn contains(&self, e: Coloured) -> bool {
        self.owner
            .get(e.colour.0)
            .is_some_and(|m| m.contains_key(&e.element))
    }

    /// The family member holding `e`, if any.
    pub fn owner(&self, e: Coloured) -> Option<usize> {
        self.owner.get(e.colour.0)?.get(&e.element).copied()
    }

    /// `F_c`, ascending.
    pub fn slice(&self, c: Colour) -> Vec<ElementId> {
        self.owner[c.0].keys().copied().collect()
    }

    pub fn slice_len(&self, c: Colour) -> usize {
        self.owner[c.0].len()
    }

    pub fn len(&self) -> usize {
        self.owner.iter().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Coloured> + '_ {
        self.owner
            .iter()
            .enumerate()
            .flat_map(|(c, m)| m.keys().map(move |&x| Coloured::new(x, Colour(c))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(x: usize, c: usize) -> Coloured {
        Coloured::new(ElementId(x), Colour::from_one_based(c))
    }

    fn f1() -> Instance {
        let m = Matroid::uniform(3, 3).unwrap();
        let b: Vec<ElementId> = (0..3).map(ElementId).collect();
        Instance::new(m, vec![b.clone(), b.clone(), b]).unwrap()
    }

    // a=0, b=1, c=2; B_1={a,b}, B_2={b,c}
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
    fn universe_sizes() {
        assert_eq!(f1().universe().len(), 9);
        assert_eq!(f2().universe(), vec![e(0, 1), e(1, 1), e(1, 2), e(2, 2)]);
    }

    #[test]
    fn instance_validation() {
        let m = Matroid::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let err = Instance::new(
            m.clone(),
            vec![vec![ElementId(0), ElementId(1)], vec![ElementId(1)]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("bases[1]"));
        let err = Instance::new(m, vec![vec![ElementId(0), ElementId(1)]]).unwrap_err();
        assert!(err.to_string().contains("rank"));
    }

    #[test]
    fn projection_examples() {
        assert_eq!(
            project(&[e(0, 1), e(2, 2)]),
            vec![ElementId(0), ElementId(2)]
        );
        assert!(project(&[]).is_empty());
        assert_eq!(project(&[e(1, 2)]), vec![ElementId(1)]);
    }

    #[test]
    fn ris_examples() {
        let i = f2();
        assert!(i.is_ris(&[e(0, 1), e(2, 2)]).unwrap());
        assert!(!i.is_ris(&[e(1, 1), e(1, 2)]).unwrap());
        assert!(!i.is_ris(&[e(0, 1), e(1, 1)]).unwrap());
        assert!(matches!(i.is_ris(&[e(2, 1)]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn volume_examples() {
        let fam = Family::empty(3, 4);
        assert_eq!(fam.volume(), 0);
        let full = Ris::from_members(3, &[e(0, 1), e(1, 2), e(2, 3)]).unwrap();
        assert_eq!(Family::from_members(vec![full]).volume(), 3);
        let fam = Family::from_members(vec![
            Ris::from_members(2, &[e(0, 1)]).unwrap(),
            Ris::from_members(2, &[e(2, 2)]).unwrap(),
        ]);
        assert_eq!(fam.volume(), 2);
    }

    #[test]
    fn used_set_examples() {
        let fam = Family::from_members(vec![
            Ris::from_members(2, &[e(0, 1)]).unwrap(),
            Ris::from_members(2, &[e(2, 2)]).unwrap(),
        ]);
        let used = fam.used_set().unwrap();
        assert_eq!(used.iter().collect::<Vec<_>>(), vec![e(0, 1), e(2, 2)]);
        assert_eq!(used.slice(Colour(0)), vec![ElementId(0)]);
        assert_eq!(used.slice(Colour(1)), vec![ElementId(2)]);
        assert_eq!(used.len(), fam.volume());

        assert!(Family::empty(2, 3).used_set().unwrap().is_empty());

        let full = Ris::from_members(3, &[e(0, 1), e(1, 2), e(2, 3)]).unwrap();
        let used = Family::from_members(vec![full]).used_set().unwrap();
        assert_eq!(used.slice(Colour(0)), vec![ElementId(0)]);
        assert_eq!(used.slice(Colour(1)), vec![ElementId(1)]);
        assert_eq!(used.slice(Colour(2)), vec![ElementId(2)]);
    }

    #[test]
    fn used_set_rejects_overlap() {
        let s = Ris::from_members(2, &[e(0, 1)]).unwrap();
        let fam = Family::from_members(vec![s.clone(), s]);
        assert!(matches!(fam.used_set(), Err(Error::Contract(_))));
        assert!(!fam.is_disjoint());
    }

    #[test]
    fn missing_colour_examples() {
        assert_eq!(
            missing_colours(&Ris::empty(3), 3),
            vec![Colour(0), Colour(1), Colour(2)]
        );
        let full = Ris::from_members(3, &[e(0, 1), e(1, 2), e(2, 3)]).unwrap();
        assert!(missing_colours(&full, 3).is_empty());
        let s = Ris::from_members(2, &[e(0, 1)]).unwrap();
        assert_eq!(missing_colours(&s, 2), vec![Colour(1)]);
    }

    #[test]
    fn transversal_ris_projects_to_a_basis() {
        let i = f1();
        let full = Ris::from_members(3, &[e(0, 1), e(1, 2), e(2, 3)]).unwrap();
        assert!(i.check_ris(&full).unwrap());
        assert!(full.is_transversal());
        let p = full.projection();
        assert_eq!(i.matroid().rank_of(&p).unwrap(), 3);
    }

    #[test]
    fn ris_insert_rejects_taken_colour() {
        let mut s = Ris::from_members(2, &[e(0, 1)]).unwrap();
        assert!(s.insert(e(1, 1)).is_err());
        assert!(s.remove(e(1, 1)).is_err());
        s.remove(e(0, 1)).unwrap();
        assert!(s.is_empty());
    }
}
