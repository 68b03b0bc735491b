//! Volume-preserving rearrangements that concentrate missing colours.
//!
//! Each non-transversal member first gets its own missing colour. Members
//! missing at least `E` colours then pull addable elements out of other
//! members along vertex-disjoint out-stars, so that star centres end up
//! missing `E + 1` colours. Repeating this either raises the volume,
//! produces a member missing at least `D` colours, or exposes a member
//! holding at least `D` addable elements for another.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;

use crate::error::{contract, violation, Result};
use crate::matching::max_matching;
use crate::rainbow::{Colour, Coloured, Family, Instance, Ris};
use crate::swap::{
    count_addable_or_augment, enumerate_addable, many_good_dichotomy, AddabilityCertificate,
    Dichotomy, OneAddability,
};

/// Growth constant `C`, `D = 2C + 4`, and the threshold schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RebalanceConstants {
    pub epsilon: f64,
    pub c: f64,
    pub d: f64,
    pub n: usize,
}

impl RebalanceConstants {
    pub fn new(epsilon: f64, n: usize) -> Result<Self> {
        let c = compute_c(epsilon)?;
        Ok(Self {
            epsilon,
            c,
            d: 2.0 * c + 4.0,
            n,
        })
    }

    /// `M_E = (eps / (4 D^2))^E * n`.
    pub fn m(&self, e: usize) -> f64 {
        (self.epsilon / (4.0 * self.d * self.d)).powi(e as i32) * self.n as f64
    }

    /// Smallest integer count that reaches `D`.
    pub fn d_count(&self) -> usize {
        self.d.ceil() as usize
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(contract!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    Ok(())
}

/// Whether `C` passes the growth inequality at depth `ell`.
pub fn satisfies_growth(c: f64, epsilon: f64, ell: u32) -> bool {
    let a = 1.0 + epsilon / 2.0;
    let lhs = c * a.powi(ell as i32 - 1) / (1.0 - epsilon) - ell as f64 - 1.0;
    let rhs = c * a.powi(ell as i32);
    lhs >= rhs - 1e-9 * rhs.abs().max(1.0)
}

/// Least `C` with `C a^(l-1) / (1 - eps) - l - 1 >= C a^l` for all `l >= 1`,
/// where `a = 1 + eps/2`. Equivalently `C = max_l (l + 1) / (k a^(l-1))`
/// with `k = 1/(1 - eps) - a > 0`; the ratio is unimodal in `l`.
pub fn compute_c(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let a = 1.0 + epsilon / 2.0;
    let k = 1.0 / (1.0 - epsilon) - a;
    let g = |l: u32| (l as f64 + 1.0) / (k * a.powi(l as i32 - 1));
    let mut l = 1;
    let mut best = g(1);
    loop {
        let next = g(l + 1);
        if next <= best {
            break;
        }
        best = next;
        l += 1;
    }
    Ok(best * (1.0 + 1e-12))
}

/// A distinct colour `b_i` per member; non-transversal members miss theirs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssignOutcome {
    VolumeIncrease(Family),
    Assignment {
        family: Family,
        colours: Vec<Colour>,
    },
}

/// Gives every member a distinct colour, missing from it unless it is a
/// transversal basis, using simple swaps only.
pub fn assign_distinct_missing_colours(inst: &Instance, fam: &Family) -> Result<AssignOutcome> {
    let n = inst.n();
    if 2 * fam.len() > n {
        return Err(contract!(
            "distinct missing colours need f <= n/2, got f = {} and n = {n}",
            fam.len()
        ));
    }
    let mut fam = fam.clone();
    let mut taken: BTreeSet<Colour> = BTreeSet::new();
    let mut colours = Vec::with_capacity(fam.len());
    for i in 0..fam.len() {
        let s = fam.member(i).clone();
        let pick = if s.is_transversal() {
            inst.colours().find(|c| !taken.contains(c))
        } else {
            s.missing_colours().into_iter().find(|c| !taken.contains(c))
        };
        if let Some(b) = pick {
            taken.insert(b);
            colours.push(b);
            continue;
        }
        let c = s.missing_colours()[0];
        let used = fam.used_set()?;
        match many_good_dichotomy(inst, &used, &s, c)? {
            Dichotomy::FreeAddable(cert) => {
                let grown = cert.apply(&s)?;
                fam.replace(i, grown);
                fam.validate(inst)
                    .map_err(|e| violation!("free addition broke the family: {e}"))?;
                return Ok(AssignOutcome::VolumeIncrease(fam));
            }
            Dichotomy::Swappables(list) => {
                let sc = list
                    .into_iter()
                    .find(|sc| !taken.contains(&sc.colour))
                    .ok_or_else(|| violation!("every swappable colour of member {i} is taken"))?;
                let mut swapped = s.clone();
                swapped.remove(sc.removed)?;
                swapped.insert(sc.witness)?;
                fam.replace(i, swapped);
                taken.insert(sc.colour);
                colours.push(sc.colour);
            }
        }
    }
    fam.validate(inst)
        .map_err(|e| violation!("colour assignment broke the family: {e}"))?;
    Ok(AssignOutcome::Assignment {
        family: fam,
        colours,
    })
}

/// Largest `E` such that at least `M_E` members miss at least `E` colours,
/// capped below `D`. Zero when every member is a transversal basis.
pub fn compute_e(fam: &Family, consts: &RebalanceConstants) -> usize {
    let n = consts.n;
    let missing: Vec<usize> = fam.members().iter().map(|s| n - s.len()).collect();
    let cap = consts.d_count().saturating_sub(1);
    let mut best = 0;
    for e in 1..=cap.min(n) {
        let count = missing.iter().filter(|&&m| m >= e).count();
        if count as f64 >= consts.m(e) && count > 0 {
            best = e;
        } else {
            break;
        }
    }
    best
}

/// Arcs `S_1 -> S_0` keyed by `(S_1, S_0)`, each with the addable elements
/// of `S_1` for `(S_0, b(S_0))`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MissingDigraph {
    pub arcs: BTreeMap<(usize, usize), Vec<AddabilityCertificate>>,
}

impl MissingDigraph {
    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn out_neighbours(&self, v: usize) -> Vec<usize> {
        self.arcs
            .range((v, 0)..(v + 1, 0))
            .map(|(&(_, to), _)| to)
            .collect()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.arcs.keys().filter(|&&(_, to)| to == v).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DigraphOutcome {
    Graph(MissingDigraph),
    VolumeIncrease(Family),
    /// `holder` contains at least `D` elements addable to `s0` for `colour`.
    FoundPair {
        s0: usize,
        holder: usize,
        colour: Colour,
    },
}

pub fn build_missing_digraph(
    inst: &Instance,
    fam: &Family,
    e: usize,
    colours: &[Colour],
    consts: &RebalanceConstants,
) -> Result<DigraphOutcome> {
    let n = inst.n();
    let f = fam.len();
    let used = fam.used_set()?;
    let mut g = MissingDigraph::default();
    for s0 in 0..f {
        let s = fam.member(s0);
        if s.is_transversal() || n - s.len() < e.max(1) {
            continue;
        }
        let b = colours[s0];
        let certs = match count_addable_or_augment(inst, fam, &used, s0, b)? {
            OneAddability::Augment(cert) => {
                let mut out = fam.clone();
                out.replace(s0, cert.apply(s)?);
                out.validate(inst)
                    .map_err(|err| violation!("free addition broke the family: {err}"))?;
                return Ok(DigraphOutcome::VolumeIncrease(out));
            }
            OneAddability::AddableSet(list) => list,
        };
        let mut by_owner: BTreeMap<usize, Vec<AddabilityCertificate>> = BTreeMap::new();
        for cert in certs {
            let owner = used
                .owner(cert.target)
                .ok_or_else(|| violation!("unused addable element {} was missed", cert.target))?;
            by_owner.entry(owner).or_default().push(cert);
        }
        for (holder, list) in by_owner {
            if list.len() >= consts.d_count() {
                return Ok(DigraphOutcome::FoundPair {
                    s0,
                    holder,
                    colour: b,
                });
            }
            if list.len() > e {
                g.arcs.insert((holder, s0), list);
            }
        }
        let bound = consts.epsilon * n as f64 / consts.d;
        let slack = 2.0 * f as f64 <= (1.0 - consts.epsilon) * n as f64;
        if e >= 1 && bound >= 1.0 && slack && (g.in_degree(s0) as f64) < bound {
            return Err(violation!(
                "member {s0} has in-degree {} in the missing digraph, expected at least {bound:.2}",
                g.in_degree(s0)
            ));
        }
    }
    Ok(DigraphOutcome::Graph(g))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutStar {
    pub centre: usize,
    pub leaves: Vec<usize>,
}

/// Greedy vertex-disjoint `(E+1)`-out-stars, centres scanned by index.
pub fn find_out_stars(g: &MissingDigraph, e: usize, want: usize) -> Vec<OutStar> {
    let mut taken: BTreeSet<usize> = BTreeSet::new();
    let mut stars = Vec::new();
    let centres: BTreeSet<usize> = g.arcs.keys().map(|&(from, _)| from).collect();
    for centre in centres {
        if stars.len() >= want {
            break;
        }
        if taken.contains(&centre) {
            continue;
        }
        let leaves: Vec<usize> = g
            .out_neighbours(centre)
            .into_iter()
            .filter(|v| !taken.contains(v) && *v != centre)
            .take(e + 1)
            .collect();
        if leaves.len() == e + 1 {
            taken.insert(centre);
            taken.extend(leaves.iter().copied());
            stars.push(OutStar { centre, leaves });
        }
    }
    stars
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarResult {
    pub family: Family,
    pub moved: usize,
    /// Fewer than `E + 1` distinct elements were available; nothing moved.
    pub partial: bool,
}

/// Moves distinct elements of the centre into the leaves, one each, with
/// their simple swaps. Certificates are recomputed on the current family;
/// if they no longer cover every leaf the star is skipped.
pub fn apply_out_star(
    inst: &Instance,
    fam: &Family,
    star: &OutStar,
    colours: &[Colour],
) -> Result<StarResult> {
    let used = fam.used_set()?;
    let centre = fam.member(star.centre);
    let mut offers: Vec<Vec<AddabilityCertificate>> = Vec::with_capacity(star.leaves.len());
    for &leaf in &star.leaves {
        let b = colours[leaf];
        let s0 = fam.member(leaf);
        if s0.has_colour(b) {
            return Err(contract!(
                "member {leaf} does not miss its assigned colour {b}"
            ));
        }
        let certs = enumerate_addable(inst, &used, s0, b)?
            .into_iter()
            .filter(|c| centre.contains(c.target))
            .collect();
        offers.push(certs);
    }
    let targets: Vec<Coloured> = {
        let set: BTreeSet<Coloured> = offers.iter().flatten().map(|c| c.target).collect();
        set.into_iter().collect()
    };
    let adj: Vec<Vec<usize>> = offers
        .iter()
        .map(|list| {
            list.iter()
                .map(|c| targets.binary_search(&c.target).expect("target listed"))
                .collect()
        })
        .collect();
    let mate = max_matching(&adj, targets.len());
    if mate.iter().any(Option::is_none) {
        return Ok(StarResult {
            family: fam.clone(),
            moved: 0,
            partial: true,
        });
    }

    let mut new_centre: Ris = centre.clone();
    let mut updates = Vec::new();
    let mut moved = 0;
    for (k, m) in mate.iter().enumerate() {
        let Some(r) = m else { continue };
        let cert = offers[k]
            .iter()
            .find(|c| c.target == targets[*r])
            .expect("matched target has a certificate");
        let leaf = star.leaves[k];
        updates.push((leaf, cert.apply(fam.member(leaf))?));
        new_centre.remove(cert.target)?;
        moved += 1;
    }
    updates.push((star.centre, new_centre));
    let mut out = fam.clone();
    out.replace_many(updates);
    out.validate(inst)
        .map_err(|e| violation!("out-star transfer broke the family: {e}"))?;
    if out.volume() != fam.volume() {
        return Err(violation!("out-star transfer changed the volume"));
    }
    Ok(StarResult {
        family: out,
        moved,
        partial: false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MissingOutcome {
    VolumeIncreased(Family),
    /// Member `s0` misses at least `D` colours.
    FoundS0 {
        family: Family,
        s0: usize,
    },
    /// Member `holder` has at least `D` elements addable to `s0` for `colour`.
    FoundPair {
        family: Family,
        s0: usize,
        holder: usize,
        colour: Colour,
    },
    /// No round made progress; the family may still have been rearranged.
    NoProgress(Family),
}

impl MissingOutcome {
    pub fn family(&self) -> &Family {
        match self {
            MissingOutcome::VolumeIncreased(f)
            | MissingOutcome::NoProgress(f)
            | MissingOutcome::FoundS0 { family: f, .. }
            | MissingOutcome::FoundPair { family: f, .. } => f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundDiagnostics {
    pub e: usize,
    pub arcs: usize,
    pub stars: usize,
    pub moved: usize,
    pub outcome: String,
}

/// Runs `E`-raising rounds until one of the outcomes fires, a round stalls,
/// or `max_rounds` rounds have run.
pub fn many_missing_step(
    inst: &Instance,
    fam: &Family,
    consts: &RebalanceConstants,
    max_rounds: usize,
    diags: &mut Vec<RoundDiagnostics>,
) -> Result<MissingOutcome> {
    let n = inst.n();
    let mut fam = fam.clone();
    let start_volume = fam.volume();
    for _ in 0..max_rounds {
        if let Some(s0) = (0..fam.len()).find(|&i| n - fam.member(i).len() >= consts.d_count()) {
            diags.push(round(0, 0, 0, 0, "found-s0"));
            return Ok(MissingOutcome::FoundS0 { family: fam, s0 });
        }
        let colours = match assign_distinct_missing_colours(inst, &fam)? {
            AssignOutcome::VolumeIncrease(f) => {
                diags.push(round(0, 0, 0, 0, "volume-increase"));
                return Ok(MissingOutcome::VolumeIncreased(f));
            }
            AssignOutcome::Assignment { family, colours } => {
                fam = family;
                colours
            }
        };
        let e = compute_e(&fam, consts);
        if e == 0 {
            diags.push(round(0, 0, 0, 0, "all-transversal"));
            return Ok(MissingOutcome::NoProgress(fam));
        }
        let g = match build_missing_digraph(inst, &fam, e, &colours, consts)? {
            DigraphOutcome::VolumeIncrease(f) => {
                diags.push(round(e, 0, 0, 0, "volume-increase"));
                return Ok(MissingOutcome::VolumeIncreased(f));
            }
            DigraphOutcome::FoundPair { s0, holder, colour } => {
                diags.push(round(e, 0, 0, 0, "found-pair"));
                return Ok(MissingOutcome::FoundPair {
                    family: fam,
                    s0,
                    holder,
                    colour,
                });
            }
            DigraphOutcome::Graph(g) => g,
        };
        let want = (consts.m(e + 1).ceil() as usize).max(1);
        let stars = find_out_stars(&g, e, want);
        let mut moved = 0;
        for star in &stars {
            let res = apply_out_star(inst, &fam, star, &colours)?;
            moved += res.moved;
            fam = res.family;
        }
        debug!(
            "rebalance round: E = {e}, arcs = {}, stars = {}, moved = {moved}",
            g.arc_count(),
            stars.len()
        );
        if moved == 0 {
            diags.push(round(e, g.arc_count(), stars.len(), 0, "no-progress"));
            return Ok(MissingOutcome::NoProgress(fam));
        }
        diags.push(round(e, g.arc_count(), stars.len(), moved, "stars-applied"));
    }
    debug_assert_eq!(fam.volume(), start_volume);
    Ok(MissingOutcome::NoProgress(fam))
}

fn round(e: usize, arcs: usize, stars: usize, moved: usize, outcome: &str) -> RoundDiagnostics {
    RoundDiagnostics {
        e,
        arcs,
        stars,
        moved,
        outcome: outcome.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::{ElementId, Matroid};

    fn e(x: usize, c: usize) -> Coloured {
        Coloured::new(ElementId(x), Colour::from_one_based(c))
    }

    #[test]
    fn growth_constant_small_cases() {
        let c = compute_c(0.8).unwrap();
        assert!(c <= 0.9);
        for l in 1..=1000 {
            assert!(satisfies_growth(c, 0.8, l));
            assert!(satisfies_growth(0.9, 0.8, l));
        }
        assert!(!satisfies_growth(c * 0.99, 0.8, 2));
        for eps in [0.05, 0.1, 0.2, 0.5, 0.95] {
            let c = compute_c(eps).unwrap();
            assert!(
                (1..=1000).all(|l| satisfies_growth(c, eps, l)),
                "eps = {eps}"
            );
        }
        assert!(compute_c(0.0).is_err());
        assert!(compute_c(1.0).is_err());
    }

    #[test]
    fn constants_schedule() {
        let k = RebalanceConstants::new(0.2, 100).unwrap();
        assert!((k.d - (2.0 * k.c + 4.0)).abs() < 1e-12);
        assert!(k.m(1) < k.m(0));
        assert_eq!(k.m(0), 100.0);
    }

    fn uniform_instance(n: usize) -> Instance {
        let m = Matroid::uniform(2 * n, n).unwrap();
        let cls: Vec<ElementId> = (0..n).map(ElementId).collect();
        Instance::new(m, vec![cls; n]).unwrap()
    }

    #[test]
    fn assignment_on_transversal_members() {
        let inst = uniform_instance(4);
        let s1 = Ris::from_members(4, &[e(0, 1), e(1, 2), e(2, 3), e(3, 4)]).unwrap();
        let s2 = Ris::from_members(4, &[e(1, 1), e(2, 2), e(3, 3), e(0, 4)]).unwrap();
        let fam = Family::from_members(vec![s1, s2]);
        match assign_distinct_missing_colours(&inst, &fam).unwrap() {
            AssignOutcome::Assignment { family, colours } => {
                assert_eq!(family, fam);
                assert_eq!(colours, vec![Colour(0), Colour(1)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn assignment_keeps_direct_missing_colour() {
        let inst = uniform_instance(4);
        let s1 = Ris::from_members(4, &[e(0, 1), e(1, 2), e(2, 3)]).unwrap();
        let s2 = Ris::from_members(4, &[e(1, 1), e(2, 2), e(3, 3)]).unwrap();
        let fam = Family::from_members(vec![s1, s2]);
        match assign_distinct_missing_colours(&inst, &fam).unwrap() {
            AssignOutcome::Assignment { family, colours } => {
                assert_eq!(colours[0], Colour(3));
                assert_ne!(colours[1], Colour(3));
                assert!(!family.member(1).has_colour(colours[1]));
                assert_eq!(family.volume(), 6);
            }
            AssignOutcome::VolumeIncrease(f) => assert_eq!(f.volume(), 7),
        }
    }

    #[test]
    fn assignment_rejects_large_families() {
        let inst = uniform_instance(2);
        let fam = Family::empty(2, 2);
        assert!(assign_distinct_missing_colours(&inst, &fam).is_err());
    }

    #[test]
    fn e_is_capped_below_d() {
        let k = RebalanceConstants::new(0.2, 4).unwrap();
        let fam = Family::empty(4, 2);
        assert_eq!(compute_e(&fam, &k), 4);
        let full = Ris::from_members(2, &[e(0, 1), e(1, 2)]).unwrap();
        let k2 = RebalanceConstants::new(0.2, 2).unwrap();
        assert_eq!(compute_e(&Family::from_members(vec![full]), &k2), 0);
    }

    fn digraph(arcs: &[(usize, usize)]) -> MissingDigraph {
        MissingDigraph {
            arcs: arcs.iter().map(|&a| (a, Vec::new())).collect(),
        }
    }

    #[test]
    fn stars_are_disjoint() {
        let g = digraph(&[(0, 1)]);
        assert_eq!(
            find_out_stars(&g, 0, 5),
            vec![OutStar {
                centre: 0,
                leaves: vec![1]
            }]
        );
        let g = digraph(&[(0, 1), (0, 2), (3, 2), (3, 4)]);
        let stars = find_out_stars(&g, 1, 5);
        assert_eq!(stars.len(), 1);
        assert_eq!(stars[0].centre, 0);
        let g = digraph(&[(0, 1), (0, 2), (3, 4), (3, 5)]);
        assert_eq!(find_out_stars(&g, 1, 5).len(), 2);
        assert_eq!(find_out_stars(&g, 1, 1).len(), 1);
    }

    #[test]
    fn single_arc_star_moves_one_element() {
        // two colours over a uniform rank-2 matroid on four elements
        let m = Matroid::uniform(4, 2).unwrap();
        let inst = Instance::new(
            m,
            vec![
                vec![ElementId(0), ElementId(1)],
                vec![ElementId(2), ElementId(3)],
            ],
        )
        .unwrap();
        let s0 = Ris::from_members(2, &[e(0, 1)]).unwrap();
        let s1 = Ris::from_members(2, &[e(1, 1), e(2, 2)]).unwrap();
        let fam = Family::from_members(vec![s0, s1]);
        let colours = vec![Colour(1), Colour(0)];
        let star = OutStar {
            centre: 1,
            leaves: vec![0],
        };
        let res = apply_out_star(&inst, &fam, &star, &colours).unwrap();
        assert_eq!(res.moved, 1);
        assert!(!res.partial);
        assert_eq!(res.family.volume(), fam.volume());
        assert_eq!(res.family.member(1).len(), 1);
    }
}
