//! Addability and simple swaps.
//!
//! For an RIS `S` missing colour `b`, an element `(x, c)` is `(S, b)`-addable
//! if `S + (x, c)` is an RIS (a direct addition), or if for the colour-`c`
//! member `(x', c)` of `S` and some unused `(y, b)` the set
//! `S - (x', c) + (y, b) + (x, c)` is an RIS (a swap with witness `y`).
//!
//! Everything here is answered through fundamental circuits relative to
//! `pi(S)`: with `I = pi(S)` and `x'` at position `p`,
//!
//! * `I - x' + y` is independent iff `y` is outside the span of `I` or `p`
//!   lies on the circuit `C(I, y)`;
//! * when `y` is spanned by `I` and `I - x' + y` is independent, the two sets
//!   have the same span, so adding `x` keeps independence iff `x` is outside
//!   the span of `I`;
//! * when `y` is not spanned, the question is a circuit query against `I + y`.
//!
//! Elements already in `S` are never reported as addable to `S`.

use std::cell::OnceCell;
use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{contract, violation, Result};
use crate::matching::max_matching;
use crate::matroid::{ElementId, SpanContext};
use crate::rainbow::{Colour, Coloured, Family, Instance, Ris, UsedSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CertificateKind {
    Direct,
    Swap {
        removed: Coloured,
        witness: Coloured,
    },
}

/// Evidence that `target` is `(S, colour)`-addable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AddabilityCertificate {
    pub target: Coloured,
    /// The missing colour `b` the certificate was computed for.
    pub colour: Colour,
    pub kind: CertificateKind,
}

impl AddabilityCertificate {
    pub fn direct(target: Coloured, colour: Colour) -> Self {
        Self {
            target,
            colour,
            kind: CertificateKind::Direct,
        }
    }

    pub fn witness(&self) -> Option<Coloured> {
        match self.kind {
            CertificateKind::Direct => None,
            CertificateKind::Swap { witness, .. } => Some(witness),
        }
    }

    pub fn removed(&self) -> Option<Coloured> {
        match self.kind {
            CertificateKind::Direct => None,
            CertificateKind::Swap { removed, .. } => Some(removed),
        }
    }

    /// Pairs that enter `S` when the certificate is applied.
    pub fn added(&self) -> Vec<Coloured> {
        let mut v: Vec<Coloured> = self.witness().into_iter().collect();
        v.push(self.target);
        v
    }

    /// `S + target`, or `S - removed + witness + target`.
    pub fn apply(&self, s: &Ris) -> Result<Ris> {
        let mut out = s.clone();
        if let CertificateKind::Swap { removed, witness } = self.kind {
            out.remove(removed)?;
            out.insert(witness)?;
        }
        out.insert(self.target)?;
        Ok(out)
    }

    /// Direct first (by target), then swaps by (witness, removed, target).
    fn order_key(&self) -> (u8, Option<Coloured>, Option<Coloured>, Coloured) {
        match self.kind {
            CertificateKind::Direct => (0, None, None, self.target),
            CertificateKind::Swap { removed, witness } => {
                (1, Some(witness), Some(removed), self.target)
            }
        }
    }
}

impl PartialOrd for AddabilityCertificate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AddabilityCertificate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order_key()
            .cmp(&other.order_key())
            .then(self.colour.cmp(&other.colour))
    }
}

/// A colour `c` of `S` whose member can be traded for an unused `b`-coloured witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwappableColour {
    pub colour: Colour,
    pub witness: Coloured,
    pub removed: Coloured,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dichotomy {
    /// A direct addition of an unused `(y, b)`.
    FreeAddable(AddabilityCertificate),
    /// At least `n - |F_b|` swappable colours.
    Swappables(Vec<SwappableColour>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OneAddability {
    /// A volume-increasing addition (target unused), possibly after a swap.
    Augment(AddabilityCertificate),
    /// Every addable element is already used; at least `(n - |S|)(n - f)` of them.
    AddableSet(Vec<AddabilityCertificate>),
}

/// Circuit queries against `pi(S)`, memoised per element.
pub(crate) struct SwapScan<'a> {
    inst: &'a Instance,
    ris: &'a Ris,
    ctx: SpanContext<'a>,
    // colour -> position of its element in the span context base
    colour_pos: Vec<Option<usize>>,
    circuits: Vec<OnceCell<Option<Vec<usize>>>>,
}

impl<'a> SwapScan<'a> {
    pub(crate) fn new(inst: &'a Instance, ris: &'a Ris) -> Result<Self> {
        if ris.n() != inst.n() {
            return Err(contract!("RIS size does not match the instance"));
        }
        let base = ris.projection();
        let ctx = inst
            .matroid()
            .span_context(&base)
            .map_err(|_| contract!("S is not independent"))?;
        let mut colour_pos = vec![None; inst.n()];
        for (pos, e) in ris.iter().enumerate() {
            colour_pos[e.colour.0] = Some(pos);
        }
        Ok(Self {
            inst,
            ris,
            ctx,
            colour_pos,
            circuits: (0..inst.matroid().ground_size())
                .map(|_| OnceCell::new())
                .collect(),
        })
    }

    pub(crate) fn circuit(&self, x: ElementId) -> Option<&[usize]> {
        self.circuits[x.0]
            .get_or_init(|| self.ctx.circuit(x))
            .as_deref()
    }

    /// `pi(S) + x` is independent (so `x` is not in `pi(S)` either).
    pub(crate) fn independent_of(&self, x: ElementId) -> bool {
        self.circuit(x).is_none()
    }

    /// `pi(S) - pi(S)[pos] + y` is an independent set of distinct elements.
    pub(crate) fn exchangeable(&self, pos: usize, y: ElementId) -> bool {
        match self.circuit(y) {
            None => true,
            Some(c) => c.binary_search(&pos).is_ok(),
        }
    }

    pub(crate) fn position(&self, c: Colour) -> Option<usize> {
        self.colour_pos[c.0]
    }

    fn free_class(&self, used: &UsedSet, b: Colour) -> Vec<ElementId> {
        self.inst
            .class_sorted(b)
            .into_iter()
            .filter(|&y| !used.contains(Coloured::new(y, b)))
            .collect()
    }

    /// Direct certificates for targets accepted by `keep`, sorted.
    fn direct(&self, b: Colour, keep: &dyn Fn(Coloured) -> bool) -> Vec<AddabilityCertificate> {
        let mut out = Vec::new();
        for c in self.inst.colours().filter(|&c| !self.ris.has_colour(c)) {
            for &x in self.inst.class(c) {
                let t = Coloured::new(x, c);
                if keep(t) && self.independent_of(x) {
                    out.push(AddabilityCertificate::direct(t, b));
                }
            }
        }
        out.sort();
        out
    }

    /// Swap certificates (one per target, smallest witness), sorted.
    fn witnessed(
        &self,
        used: &UsedSet,
        b: Colour,
        keep: &dyn Fn(Coloured) -> bool,
    ) -> Vec<AddabilityCertificate> {
        let free_ys = self.free_class(used, b);
        let size = self.ris.len();
        // smallest spanned witness exchangeable at each position
        let mut spanned_min: Vec<Option<ElementId>> = vec![None; size];
        let mut unspanned = Vec::new();
        for &y in &free_ys {
            match self.circuit(y) {
                Some(circ) => {
                    for &p in circ {
                        spanned_min[p].get_or_insert(y);
                    }
                }
                None => unspanned.push(y),
            }
        }
        let base = self.ctx.base().to_vec();
        let plus: Vec<OnceCell<SpanContext<'_>>> =
            unspanned.iter().map(|_| OnceCell::new()).collect();
        let plus_ctx = |k: usize| {
            plus[k].get_or_init(|| {
                let mut b2 = base.clone();
                b2.push(unspanned[k]);
                self.inst
                    .matroid()
                    .span_context(&b2)
                    .expect("I + y independent for unspanned y")
            })
        };

        let mut out = Vec::new();
        for prev in self.ris.iter() {
            let c = prev.colour;
            let pos = self.colour_pos[c.0].expect("member colour has a position");
            for &x in self.inst.class(c) {
                let t = Coloured::new(x, c);
                if x == prev.element || !keep(t) {
                    continue;
                }
                let mut best = if self.independent_of(x) {
                    spanned_min[pos]
                } else {
                    None
                };
                for (k, &y) in unspanned.iter().enumerate() {
                    if best.is_some_and(|bst| bst < y) {
                        break;
                    }
                    if plus_ctx(k).exchangeable(pos, x) {
                        best = Some(y);
                        break;
                    }
                }
                if let Some(y) = best {
                    out.push(AddabilityCertificate {
                        target: t,
                        colour: b,
                        kind: CertificateKind::Swap {
                            removed: prev,
                            witness: Coloured::new(y, b),
                        },
                    });
                }
            }
        }
        out.sort();
        out
    }

    fn swappables(&self, used: &UsedSet, b: Colour) -> Vec<SwappableColour> {
        let free_ys = self.free_class(used, b);
        self.ris
            .iter()
            .filter_map(|prev| {
                let pos = self.colour_pos[prev.colour.0]?;
                free_ys
                    .iter()
                    .find(|&&y| self.exchangeable(pos, y))
                    .map(|&y| SwappableColour {
                        colour: prev.colour,
                        witness: Coloured::new(y, b),
                        removed: prev,
                    })
            })
            .collect()
    }
}

fn require_missing(s: &Ris, b: Colour) -> Result<()> {
    if b.0 >= s.n() {
        return Err(contract!("colour {b} out of range"));
    }
    if s.has_colour(b) {
        return Err(contract!("colour {b} appears in S"));
    }
    Ok(())
}

/// All `(S, b)`-addable elements outside `S`, one certificate each.
pub fn enumerate_addable(
    inst: &Instance,
    used: &UsedSet,
    s: &Ris,
    b: Colour,
) -> Result<Vec<AddabilityCertificate>> {
    require_missing(s, b)?;
    let scan = SwapScan::new(inst, s)?;
    let mut out = scan.direct(b, &|_| true);
    out.extend(scan.witnessed(used, b, &|_| true));
    Ok(out)
}

/// Only the `(S, b)`-addable elements that come with a witness.
pub fn witnessed_addable(
    inst: &Instance,
    used: &UsedSet,
    s: &Ris,
    b: Colour,
) -> Result<Vec<AddabilityCertificate>> {
    require_missing(s, b)?;
    let scan = SwapScan::new(inst, s)?;
    Ok(scan.witnessed(used, b, &|_| true))
}

/// An `(S, b)`-addable element outside `F`, if one exists; the first such
/// certificate in [`enumerate_addable`] order.
pub fn find_free_addable(
    inst: &Instance,
    used: &UsedSet,
    s: &Ris,
    b: Colour,
) -> Result<Option<AddabilityCertificate>> {
    require_missing(s, b)?;
    let scan = SwapScan::new(inst, s)?;
    Ok(free_from_scan(&scan, used, b))
}

fn free_from_scan(scan: &SwapScan<'_>, used: &UsedSet, b: Colour) -> Option<AddabilityCertificate> {
    free_from_scan_where(scan, used, b, &|_| true)
}

/// First free addition (in certificate order) accepted by `accept`.
pub(crate) fn free_from_scan_where(
    scan: &SwapScan<'_>,
    used: &UsedSet,
    b: Colour,
    accept: &dyn Fn(&AddabilityCertificate) -> bool,
) -> Option<AddabilityCertificate> {
    let free = |t: Coloured| !used.contains(t);
    scan.direct(b, &free)
        .into_iter()
        .find(|c| accept(c))
        .or_else(|| {
            scan.witnessed(used, b, &free)
                .into_iter()
                .find(|c| accept(c))
        })
}

pub(crate) fn scan_witnessed(
    scan: &SwapScan<'_>,
    used: &UsedSet,
    b: Colour,
) -> Vec<AddabilityCertificate> {
    scan.witnessed(used, b, &|_| true)
}

/// A free addition for any colour missing from `s`, scanning the missing
/// colours in the order given.
pub fn find_free_addition(
    inst: &Instance,
    used: &UsedSet,
    s: &Ris,
    colour_order: &[Colour],
) -> Result<Option<AddabilityCertificate>> {
    let missing: Vec<Colour> = colour_order
        .iter()
        .copied()
        .filter(|&c| !s.has_colour(c))
        .collect();
    let Some(&first) = missing.first() else {
        return Ok(None);
    };
    let scan = SwapScan::new(inst, s)?;
    let free = |t: Coloured| !used.contains(t);
    // direct additions do not depend on b
    if let Some(cert) = scan.direct(first, &free).into_iter().next() {
        let cert = AddabilityCertificate::direct(cert.target, cert.target.colour);
        return Ok(Some(cert));
    }
    for b in missing {
        if let Some(cert) = scan.witnessed(used, b, &free).into_iter().next() {
            return Ok(Some(cert));
        }
    }
    Ok(None)
}

/// Colours `c` of `S` with a simple swap `S - (x', c) + (y, b)`, `(y, b)`
/// unused; smallest witness for each.
pub fn swappable_colours(
    inst: &Instance,
    used: &UsedSet,
    s: &Ris,
    b: Colour,
) -> Result<Vec<SwappableColour>> {
    require_missing(s, b)?;
    let scan = SwapScan::new(inst, s)?;
    Ok(scan.swappables(used, b))
}

/// Either an unused `(y, b)` can be added to `S` directly, or at least
/// `n - |F_b|` colours are `(S, b)`-swappable. The bound is checked.
pub fn many_good_dichotomy(
    inst: &Instance,
    used: &UsedSet,
    s: &Ris,
    b: Colour,
) -> Result<Dichotomy> {
    if s.is_empty() {
        return Err(contract!("many_good_dichotomy needs a nonempty RIS"));
    }
    require_missing(s, b)?;
    let scan = SwapScan::new(inst, s)?;
    dichotomy_from_scan(inst, &scan, used, b)
}

pub(crate) fn dichotomy_from_scan(
    inst: &Instance,
    scan: &SwapScan<'_>,
    used: &UsedSet,
    b: Colour,
) -> Result<Dichotomy> {
    let direct = inst
        .class_sorted(b)
        .into_iter()
        .find(|&y| !used.contains(Coloured::new(y, b)) && scan.independent_of(y));
    if let Some(y) = direct {
        return Ok(Dichotomy::FreeAddable(AddabilityCertificate::direct(
            Coloured::new(y, b),
            b,
        )));
    }
    let list = scan.swappables(used, b);
    let bound = inst.n().saturating_sub(used.slice_len(b));
    if list.len() < bound {
        return Err(violation!(
            "only {} swappable colours for missing colour {b}, expected at least {bound}",
            list.len()
        ));
    }
    Ok(Dichotomy::Swappables(list))
}

/// For a swappable colour `c` with witness `y` (and `S + (y, b)` not an RIS),
/// every `x` in `B_c` independent of `pi(S)` gives an addable `(x, c)`.
pub fn addable_via_swappable(
    inst: &Instance,
    used: &UsedSet,
    s: &Ris,
    b: Colour,
    sc: &SwappableColour,
) -> Result<Vec<AddabilityCertificate>> {
    require_missing(s, b)?;
    let scan = SwapScan::new(inst, s)?;
    let c = sc.colour;
    let pos = scan
        .position(c)
        .ok_or_else(|| contract!("colour {c} does not appear in S"))?;
    if s.get(c) != Some(sc.removed.element) || sc.removed.colour != c {
        return Err(contract!(
            "removed element {} is not the colour-{c} member of S",
            sc.removed
        ));
    }
    let y = sc.witness.element;
    if sc.witness.colour != b || used.contains(sc.witness) || !scan.exchangeable(pos, y) {
        return Err(contract!(
            "{} is not a valid swap witness for colour {c}",
            sc.witness
        ));
    }
    if scan.independent_of(y) {
        return Err(contract!(
            "S + {} is an RIS; take the free addition instead",
            sc.witness
        ));
    }
    let mut out = Vec::new();
    for x in inst.class_sorted(c) {
        if !scan.independent_of(x) {
            continue;
        }
        let cert = AddabilityCertificate {
            target: Coloured::new(x, c),
            colour: b,
            kind: CertificateKind::Swap {
                removed: sc.removed,
                witness: sc.witness,
            },
        };
        let after = cert.apply(s)?;
        if !inst.check_ris(&after)? {
            return Err(violation!(
                "swap with witness {} does not admit {}",
                sc.witness,
                cert.target
            ));
        }
        out.push(cert);
    }
    let bound = inst.n() - s.len();
    if out.len() < bound {
        return Err(violation!(
            "only {} elements of colour {c} independent of S, expected at least {bound}",
            out.len()
        ));
    }
    Ok(out)
}

/// An injection `phi_b: S -> B_b` with `phi_b((x, c))` independent of
/// `pi(S - (x, c))`, found as a perfect matching.
pub fn build_witness_injection(
    inst: &Instance,
    s: &Ris,
    b: Colour,
) -> Result<BTreeMap<Coloured, ElementId>> {
    if b.0 >= inst.n() {
        return Err(contract!("colour {b} out of range"));
    }
    let scan = SwapScan::new(inst, s)?;
    injection_from_scan(inst, &scan, s, b)
}

pub(crate) fn injection_from_scan(
    inst: &Instance,
    scan: &SwapScan<'_>,
    s: &Ris,
    b: Colour,
) -> Result<BTreeMap<Coloured, ElementId>> {
    let mut left = s.members();
    left.sort();
    let right = inst.class_sorted(b);
    let adj: Vec<Vec<usize>> = left
        .iter()
        .map(|e| {
            let pos = scan.position(e.colour).expect("member has a position");
            (0..right.len())
                .filter(|&r| scan.exchangeable(pos, right[r]))
                .collect()
        })
        .collect();
    let mate = max_matching(&adj, right.len());
    let mut out = BTreeMap::new();
    for (e, m) in left.iter().zip(mate) {
        match m {
            Some(r) => {
                out.insert(*e, right[r]);
            }
            None => {
                return Err(violation!(
                    "no matching covers {e} when building the injection into colour {b}"
                ))
            }
        }
    }
    Ok(out)
}

/// Either a volume-increasing addition to member `idx`, or at least
/// `(n - |S|)(n - f)` addable elements (all used). The bound is checked.
pub fn count_addable_or_augment(
    inst: &Instance,
    fam: &Family,
    used: &UsedSet,
    idx: usize,
    b: Colour,
) -> Result<OneAddability> {
    let s = fam.member(idx);
    require_missing(s, b)?;
    let scan = SwapScan::new(inst, s)?;
    if let Some(cert) = free_from_scan(&scan, used, b) {
        return Ok(OneAddability::Augment(cert));
    }
    let mut all = scan.direct(b, &|_| true);
    all.extend(scan.witnessed(used, b, &|_| true));
    let n = inst.n();
    let f = fam.len();
    if n > f {
        let bound = (n - s.len()) * (n - f);
        if all.len() < bound {
            return Err(violation!(
                "member {idx} has {} addable elements for colour {b}, expected at least {bound}",
                all.len()
            ));
        }
    }
    Ok(OneAddability::AddableSet(all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::Matroid;

    fn e(x: usize, c: usize) -> Coloured {
        Coloured::new(ElementId(x), Colour::from_one_based(c))
    }

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;

    // triangle a={0,1}, b={1,2}, c={0,2}; B_1={a,b}, B_2={b,c}
    fn f2() -> Instance {
        let m = Matroid::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        Instance::new(
            m,
            vec![
                vec![ElementId(A), ElementId(B)],
                vec![ElementId(B), ElementId(C)],
            ],
        )
        .unwrap()
    }

    fn fam(members: &[&[Coloured]]) -> Family {
        Family::from_members(
            members
                .iter()
                .map(|m| Ris::from_members(2, m).unwrap())
                .collect(),
        )
    }

    fn targets(certs: &[AddabilityCertificate]) -> Vec<Coloured> {
        certs.iter().map(|c| c.target).collect()
    }

    #[test]
    fn enumerate_single_member() {
        let inst = f2();
        let fam = fam(&[&[e(A, 1)]]);
        let used = fam.used_set().unwrap();
        let certs = enumerate_addable(&inst, &used, fam.member(0), Colour(1)).unwrap();
        assert_eq!(targets(&certs), vec![e(B, 2), e(C, 2), e(B, 1)]);
        assert_eq!(certs[0].kind, CertificateKind::Direct);
        assert_eq!(certs[1].kind, CertificateKind::Direct);
        // {(c,2),(b,1)} is an RIS, so (b,1) is reachable by a swap
        assert_eq!(certs[2].witness(), Some(e(C, 2)));
    }

    #[test]
    fn enumerate_finds_swap() {
        let inst = f2();
        let fam = fam(&[&[e(B, 1)], &[e(C, 2)]]);
        let used = fam.used_set().unwrap();
        let certs = enumerate_addable(&inst, &used, fam.member(0), Colour(1)).unwrap();
        let swap = certs.iter().find(|c| c.target == e(A, 1)).unwrap();
        assert_eq!(
            swap.kind,
            CertificateKind::Swap {
                removed: e(B, 1),
                witness: e(B, 2)
            }
        );
        assert!(inst.check_ris(&swap.apply(fam.member(0)).unwrap()).unwrap());
    }

    #[test]
    fn enumerate_rejects_present_colour() {
        let inst = f2();
        let fam = fam(&[&[e(A, 1)]]);
        let used = fam.used_set().unwrap();
        assert!(enumerate_addable(&inst, &used, fam.member(0), Colour(0)).is_err());
    }

    #[test]
    fn nothing_addable_when_blocked() {
        // uniform rank 2 on {0,1,2}; both classes {0,1}; S = {(0,1)} missing 2.
        // (1,2) direct is fine, so block it in F and check swaps vanish too.
        let m = Matroid::uniform(2, 2).unwrap();
        let cls = vec![ElementId(0), ElementId(1)];
        let inst = Instance::new(m, vec![cls.clone(), cls]).unwrap();
        let f = fam(&[&[e(0, 1)], &[e(1, 2)], &[e(0, 2)]]);
        let used = f.used_set().unwrap();
        let certs = enumerate_addable(&inst, &used, f.member(0), Colour(1)).unwrap();
        // direct (1,2) still addable (it is in F), no unused witness of colour 2
        assert_eq!(targets(&certs), vec![e(1, 2)]);
        assert!(find_free_addable(&inst, &used, f.member(0), Colour(1))
            .unwrap()
            .is_none());
    }

    #[test]
    fn free_addable_examples() {
        let inst = f2();
        let f = fam(&[&[e(A, 1)]]);
        let used = f.used_set().unwrap();
        let cert = find_free_addable(&inst, &used, f.member(0), Colour(1))
            .unwrap()
            .unwrap();
        assert_eq!(cert.target, e(B, 2));
        assert_eq!(cert.kind, CertificateKind::Direct);

        let f = fam(&[&[e(B, 1)], &[e(C, 2)]]);
        let used = f.used_set().unwrap();
        let cert = find_free_addable(&inst, &used, f.member(0), Colour(1))
            .unwrap()
            .unwrap();
        assert_eq!(cert.target, e(A, 1));
        assert_eq!(cert.witness(), Some(e(B, 2)));
    }

    #[test]
    fn swappable_examples() {
        let inst = f2();
        let f = fam(&[&[e(B, 1)], &[e(C, 2)]]);
        let used = f.used_set().unwrap();
        let list = swappable_colours(&inst, &used, f.member(0), Colour(1)).unwrap();
        assert_eq!(
            list,
            vec![SwappableColour {
                colour: Colour(0),
                witness: e(B, 2),
                removed: e(B, 1)
            }]
        );

        let empty = Ris::empty(2);
        assert!(swappable_colours(&inst, &used, &empty, Colour(1))
            .unwrap()
            .is_empty());

        let f = fam(&[&[e(A, 1)]]);
        let used = f.used_set().unwrap();
        let list = swappable_colours(&inst, &used, f.member(0), Colour(1)).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].witness, e(B, 2));
    }

    #[test]
    fn dichotomy_examples() {
        let inst = f2();
        let f = fam(&[&[e(B, 1)], &[e(C, 2)]]);
        let used = f.used_set().unwrap();
        match many_good_dichotomy(&inst, &used, f.member(0), Colour(1)).unwrap() {
            Dichotomy::Swappables(list) => {
                assert!(list.len() >= inst.n() - used.slice_len(Colour(1)))
            }
            Dichotomy::FreeAddable(c) => panic!("unexpected free addition {c:?}"),
        }
        let f = fam(&[&[e(A, 1)]]);
        let used = f.used_set().unwrap();
        assert!(matches!(
            many_good_dichotomy(&inst, &used, f.member(0), Colour(1)).unwrap(),
            Dichotomy::FreeAddable(_)
        ));
        assert!(many_good_dichotomy(&inst, &used, &Ris::empty(2), Colour(1)).is_err());
    }

    #[test]
    fn add_if_good_example() {
        let inst = f2();
        let f = fam(&[&[e(B, 1)], &[e(C, 2)]]);
        let used = f.used_set().unwrap();
        let sc = swappable_colours(&inst, &used, f.member(0), Colour(1)).unwrap()[0];
        let certs = addable_via_swappable(&inst, &used, f.member(0), Colour(1), &sc).unwrap();
        assert_eq!(targets(&certs), vec![e(A, 1)]);
        assert!(certs.iter().all(|c| c.target.element != ElementId(B)));
    }

    #[test]
    fn add_if_good_refuses_free_witness() {
        let inst = f2();
        let f = fam(&[&[e(A, 1)]]);
        let used = f.used_set().unwrap();
        let sc = swappable_colours(&inst, &used, f.member(0), Colour(1)).unwrap()[0];
        assert!(addable_via_swappable(&inst, &used, f.member(0), Colour(1), &sc).is_err());
    }

    #[test]
    fn injection_examples() {
        let inst = f2();
        let s = Ris::from_members(2, &[e(A, 1), e(C, 2)]).unwrap();
        let phi = build_witness_injection(&inst, &s, Colour(0)).unwrap();
        assert_eq!(phi[&e(A, 1)], ElementId(A));
        assert_eq!(phi[&e(C, 2)], ElementId(B));

        assert!(build_witness_injection(&inst, &Ris::empty(2), Colour(0))
            .unwrap()
            .is_empty());

        let s = Ris::from_members(2, &[e(A, 1)]).unwrap();
        let phi = build_witness_injection(&inst, &s, Colour(1)).unwrap();
        assert_eq!(phi[&e(A, 1)], ElementId(B));
    }

    #[test]
    fn one_addability_examples() {
        let inst = f2();
        let f = fam(&[&[e(A, 1)]]);
        let used = f.used_set().unwrap();
        match count_addable_or_augment(&inst, &f, &used, 0, Colour(1)).unwrap() {
            OneAddability::Augment(c) => assert_eq!(c.target, e(B, 2)),
            other => panic!("expected augment, got {other:?}"),
        }
        let full = fam(&[&[e(A, 1), e(C, 2)]]);
        let used = full.used_set().unwrap();
        assert!(count_addable_or_augment(&inst, &full, &used, 0, Colour(0)).is_err());
    }

    #[test]
    fn free_addition_agrees_with_per_colour_search() {
        let inst = f2();
        let f = fam(&[&[e(B, 1)], &[e(C, 2)]]);
        let used = f.used_set().unwrap();
        let order: Vec<Colour> = inst.colours().collect();
        let any = find_free_addition(&inst, &used, f.member(0), &order).unwrap();
        let per = find_free_addable(&inst, &used, f.member(0), Colour(1)).unwrap();
        assert_eq!(any, per);
    }
}
