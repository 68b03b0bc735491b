//! Cascades of simple swaps and transfers across several family members.
//!
//! A chain over members `S_0, ..., S_{l-1}` is stored as `l` swap
//! certificates. Step `i` frees colour `c_i`: its target `(x_{i+1}, c_{i+1})`
//! is addable to `S_i - (x_i, c_i)` (with `S_0` taken whole) using the
//! unused witness `(y_i, c_i)` and removing `(x'_i, c_{i+1})`. The target of
//! the last step is the element the chain makes room for.

use std::cell::OnceCell;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{contract, violation, Error, Result};
use crate::matroid::ElementId;
use crate::rainbow::{Colour, Coloured, Family, Instance, Ris, UsedSet};
use crate::swap::{
    dichotomy_from_scan, free_from_scan_where, injection_from_scan, scan_witnessed,
    AddabilityCertificate, CertificateKind, Dichotomy, SwapScan,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CascadeChain {
    /// Family indices of `S_0, ..., S_{l-1}`.
    pub members: Vec<usize>,
    /// One swap certificate per member; `steps[i].colour` is `c_i`.
    pub steps: Vec<AddabilityCertificate>,
    pub family_version: u64,
}

impl CascadeChain {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The cascade-addable element `(x_l, c_l)`.
    pub fn target(&self) -> Coloured {
        self.steps.last().expect("chains are nonempty").target
    }

    pub fn freeing_colours(&self) -> Vec<Colour> {
        self.steps.iter().map(|s| s.colour).collect()
    }

    /// `(y_i, c_i)` for each step.
    pub fn witnesses(&self) -> Vec<Coloured> {
        self.steps.iter().filter_map(|s| s.witness()).collect()
    }

    /// `(x_1, c_1), ..., (x_{l-1}, c_{l-1})`.
    pub fn transfers(&self) -> Vec<Coloured> {
        self.steps[..self.steps.len() - 1]
            .iter()
            .map(|s| s.target)
            .collect()
    }

    fn order_key(&self) -> Vec<AddabilityCertificate> {
        self.steps.clone()
    }

    fn extended(&self, next: usize, step: AddabilityCertificate) -> Self {
        let mut out = self.clone();
        out.members.push(next);
        out.steps.push(step);
        out
    }
}

/// Cascade-addable elements keyed by element, one chain each.
pub type QSet = BTreeMap<Coloured, CascadeChain>;

fn insert_entry(q: &mut QSet, chain: CascadeChain) {
    let key = chain.target();
    match q.get(&key) {
        Some(old) if old.order_key() <= chain.order_key() => {}
        _ => {
            q.insert(key, chain);
        }
    }
}

/// Which addable elements of `S_l - (x_l, c_l)` feed the next level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QPolicy {
    /// Only the images of the witness injections, as in the growth argument.
    #[default]
    WitnessImages,
    /// Every element addable with a witness whose colour is still unused by the chain.
    AllWitnessed,
}

/// A volume-increasing cascade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Augmentation {
    /// The chain target is unused: run the cascade, then add it to `S'_{l-1}`.
    FreeTarget(CascadeChain),
    /// The chain target lies in member `next`: run the cascade, move the
    /// target into `S'_{l-1}`, then apply `addition` (all of whose new pairs
    /// are unused) to `S_next - target`.
    Tail {
        chain: CascadeChain,
        next: usize,
        addition: AddabilityCertificate,
    },
}

impl Augmentation {
    pub fn chain(&self) -> &CascadeChain {
        match self {
            Augmentation::FreeTarget(c) => c,
            Augmentation::Tail { chain, .. } => chain,
        }
    }

    pub fn apply(&self, inst: &Instance, fam: &Family) -> Result<Family> {
        match self {
            Augmentation::FreeTarget(chain) => {
                execute_cascade(inst, fam, chain, Some(&FinalStep::AddTarget))
            }
            Augmentation::Tail {
                chain,
                next,
                addition,
            } => execute_cascade(
                inst,
                fam,
                chain,
                Some(&FinalStep::Tail {
                    next: *next,
                    addition: *addition,
                }),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FinalStep {
    AddTarget,
    Tail {
        next: usize,
        addition: AddabilityCertificate,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extension {
    Augment(Augmentation),
    Next(QSet),
}

/// `Q(S_0)`: elements addable to `S_0` with a witness, for some missing colour.
pub fn initial_q(inst: &Instance, fam: &Family, used: &UsedSet, s0: usize) -> Result<QSet> {
    let s = fam.member(s0);
    if s.is_transversal() {
        return Err(contract!("member {s0} is a transversal basis"));
    }
    let scan = SwapScan::new(inst, s)?;
    let mut q = QSet::new();
    for b in s.missing_colours() {
        for cert in scan_witnessed(&scan, used, b) {
            insert_entry(
                &mut q,
                CascadeChain {
                    members: vec![s0],
                    steps: vec![cert],
                    family_version: fam.version(),
                },
            );
        }
    }
    Ok(q)
}

/// The member outside the chain holding the most elements of `q`.
pub fn choose_next(fam: &Family, used: &UsedSet, members: &[usize], q: &QSet) -> Result<usize> {
    let mut counts = vec![0usize; fam.len()];
    for e in q.keys() {
        match used.owner(*e) {
            Some(i) if !members.contains(&i) => counts[i] += 1,
            _ => {
                return Err(contract!(
                    "{e} is not held by a member outside the chain; augment instead"
                ))
            }
        }
    }
    let (best, &count) = counts
        .iter()
        .enumerate()
        .filter(|(i, _)| !members.contains(i))
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .ok_or_else(|| contract!("no member left outside the chain"))?;
    let rest = fam.len() - members.len();
    if count * rest < q.len() {
        return Err(violation!(
            "chosen member holds {count} of {} elements of Q across {rest} members",
            q.len()
        ));
    }
    Ok(best)
}

/// Grows the chain by member `next`, returning either a volume increase or
/// the next level of cascade-addable elements.
pub fn extend_q(
    inst: &Instance,
    fam: &Family,
    used: &UsedSet,
    q: &QSet,
    next: usize,
    policy: QPolicy,
) -> Result<Extension> {
    let n = inst.n();
    let s_next = fam.member(next);
    let base_scan = SwapScan::new(inst, s_next)?;
    let injections: Vec<OnceCell<BTreeMap<Coloured, ElementId>>> =
        (0..n).map(|_| OnceCell::new()).collect();
    let mut next_q = QSet::new();
    let mut ell = None;
    let mut hits = 0usize;

    for (elem, chain) in q.iter() {
        if used.owner(*elem) != Some(next) {
            continue;
        }
        hits += 1;
        ell.get_or_insert(chain.len());
        let mut blocked: BTreeSet<Colour> = chain.freeing_colours().into_iter().collect();
        blocked.insert(elem.colour);
        let mut inside: BTreeSet<usize> = chain.members.iter().copied().collect();
        inside.insert(next);
        let chain_witnesses = chain.witnesses();

        let t = s_next.without(*elem)?;
        let scan = SwapScan::new(inst, &t)?;
        let b = elem.colour;
        let fresh =
            |c: &AddabilityCertificate| c.added().iter().all(|p| !chain_witnesses.contains(p));
        if let Some(addition) = free_from_scan_where(&scan, used, b, &fresh) {
            return Ok(Extension::Augment(Augmentation::Tail {
                chain: chain.clone(),
                next,
                addition,
            }));
        }

        let mut candidates = Vec::new();
        match policy {
            QPolicy::WitnessImages => {
                if t.is_empty() {
                    continue;
                }
                let swappables = match dichotomy_from_scan(inst, &scan, used, b)? {
                    Dichotomy::Swappables(list) => list,
                    Dichotomy::FreeAddable(_) => {
                        return Err(violation!("free addition missed for colour {b}"))
                    }
                };
                for sc in swappables {
                    let c = sc.colour;
                    if blocked.contains(&c) {
                        continue;
                    }
                    let phi = match injections[c.0].get() {
                        Some(m) => m,
                        None => {
                            let m = injection_from_scan(inst, &base_scan, s_next, c)?;
                            let _ = injections[c.0].set(m);
                            injections[c.0].get().expect("just set")
                        }
                    };
                    let z = phi[elem];
                    candidates.push(AddabilityCertificate {
                        target: Coloured::new(z, c),
                        colour: b,
                        kind: CertificateKind::Swap {
                            removed: sc.removed,
                            witness: sc.witness,
                        },
                    });
                }
            }
            QPolicy::AllWitnessed => {
                candidates = scan_witnessed(&scan, used, b)
                    .into_iter()
                    .filter(|cert| !blocked.contains(&cert.target.colour))
                    .collect();
            }
        }

        for cert in candidates {
            match used.owner(cert.target) {
                Some(i) if inside.contains(&i) => continue,
                Some(_) => insert_entry(&mut next_q, chain.extended(next, cert)),
                None => {
                    return Ok(Extension::Augment(Augmentation::FreeTarget(
                        chain.extended(next, cert),
                    )))
                }
            }
        }
    }

    if let (Some(ell), QPolicy::WitnessImages) = (ell, policy) {
        let f = fam.len() as i64;
        let rhs = hits as i64 * (n as i64 - f - ell as i64) - (ell as i64 + 1) * n as i64;
        if rhs > 0 && (next_q.len() as i64) < rhs {
            return Err(violation!(
                "next cascade level has {} elements, expected at least {rhs}",
                next_q.len()
            ));
        }
    }
    Ok(Extension::Next(next_q))
}

/// Rewrites the chain members per the cascade construction, then applies
/// the optional final step. Volume is unchanged without a final step and
/// grows by exactly one with it.
pub fn execute_cascade(
    inst: &Instance,
    fam: &Family,
    chain: &CascadeChain,
    final_step: Option<&FinalStep>,
) -> Result<Family> {
    if chain.family_version != fam.version() {
        return Err(Error::StaleCertificate {
            computed: chain.family_version,
            current: fam.version(),
        });
    }
    let ell = chain.len();
    if ell == 0 || chain.steps.len() != ell {
        return Err(contract!("malformed chain"));
    }
    let used = fam.used_set()?;
    let colours = chain.freeing_colours();
    let distinct: BTreeSet<Colour> = colours.iter().copied().collect();
    if distinct.len() != ell || distinct.contains(&chain.target().colour) {
        return Err(violation!("freeing colours are not distinct"));
    }
    for w in chain.witnesses() {
        if used.contains(w) {
            return Err(violation!("witness {w} already lies in the family"));
        }
    }
    if chain.witnesses().len() != ell {
        return Err(contract!("every cascade step needs a witness"));
    }

    let mut updates: Vec<(usize, Ris)> = Vec::with_capacity(ell + 1);
    for (i, step) in chain.steps.iter().enumerate() {
        let mut s = fam.member(chain.members[i]).clone();
        let broken = |e: Error| violation!("cascade step {i} does not apply: {e}");
        if i > 0 {
            s.remove(chain.steps[i - 1].target).map_err(broken)?;
        }
        s.remove(step.removed().expect("swap step"))
            .map_err(broken)?;
        s.insert(step.witness().expect("swap step"))
            .map_err(broken)?;
        if i + 1 < ell {
            s.insert(step.target).map_err(broken)?;
        }
        updates.push((chain.members[i], s));
    }

    let before = fam.volume();
    let mut expected = before;
    match final_step {
        None => {}
        Some(FinalStep::AddTarget) => {
            if used.contains(chain.target()) {
                return Err(contract!("target {} is already used", chain.target()));
            }
            updates[ell - 1].1.insert(chain.target())?;
            expected += 1;
        }
        Some(FinalStep::Tail { next, addition }) => {
            if chain.members.contains(next) || used.owner(chain.target()) != Some(*next) {
                return Err(contract!("member {next} does not hold the chain target"));
            }
            if addition.colour != chain.target().colour {
                return Err(contract!("tail addition is for the wrong colour"));
            }
            updates[ell - 1].1.insert(chain.target())?;
            let t = fam.member(*next).without(chain.target())?;
            let after = addition
                .apply(&t)
                .map_err(|e| violation!("tail addition does not apply: {e}"))?;
            updates.push((*next, after));
            expected += 1;
        }
    }

    let mut out = fam.clone();
    out.replace_many(updates.clone());
    for (idx, s) in &updates {
        if !inst.check_ris(s)? {
            return Err(violation!("member {idx} is not an RIS after the cascade"));
        }
    }
    if !out.is_disjoint() {
        return Err(violation!("cascade produced overlapping members"));
    }
    if out.volume() != expected {
        return Err(violation!(
            "cascade changed volume from {before} to {}, expected {expected}",
            out.volume()
        ));
    }
    Ok(out)
}

/// Definition-level check of a chain against the family, by direct
/// independence tests. Returns the first failed condition.
pub fn check_chain(
    inst: &Instance,
    fam: &Family,
    chain: &CascadeChain,
) -> std::result::Result<(), String> {
    let ell = chain.len();
    if ell == 0 || chain.steps.len() != ell {
        return Err("malformed chain".into());
    }
    let distinct: BTreeSet<usize> = chain.members.iter().copied().collect();
    if distinct.len() != ell || chain.members.iter().any(|&m| m >= fam.len()) {
        return Err("members are not distinct family indices".into());
    }
    let used = fam.used_set().map_err(|e| e.to_string())?;
    let mut colours: Vec<Colour> = chain.freeing_colours();
    colours.push(chain.target().colour);
    let set: BTreeSet<Colour> = colours.iter().copied().collect();
    if set.len() != colours.len() {
        return Err("colours c_0..c_l are not distinct".into());
    }
    if fam.member(chain.members[0]).has_colour(colours[0]) {
        return Err("c_0 appears in S_0".into());
    }
    let target = chain.target();
    if chain
        .members
        .iter()
        .any(|&m| fam.member(m).contains(target))
    {
        return Err(format!("target {target} lies in a chain member"));
    }
    for i in 0..ell {
        let step = &chain.steps[i];
        let mut s = fam.member(chain.members[i]).clone();
        if i > 0 {
            let xi = chain.steps[i - 1].target;
            if !s.contains(xi) {
                return Err(format!("transfer {xi} is not in S_{i}"));
            }
            s = s.without(xi).map_err(|e| e.to_string())?;
        }
        let (removed, witness) = match step.kind {
            CertificateKind::Swap { removed, witness } => (removed, witness),
            CertificateKind::Direct => return Err(format!("step {i} has no witness")),
        };
        if step.colour != colours[i] || witness.colour != colours[i] {
            return Err(format!("step {i} witness colour mismatch"));
        }
        if used.contains(witness) {
            return Err(format!("witness {witness} is in F"));
        }
        if !s.contains(removed) || removed.colour != step.target.colour {
            return Err(format!(
                "step {i} removes {removed}, not a member of matching colour"
            ));
        }
        if !inst.in_universe(step.target) || !inst.in_universe(witness) {
            return Err(format!("step {i} uses elements outside U"));
        }
        let after = s.without(removed).map_err(|e| e.to_string())?;
        let mut members = after.members();
        members.push(witness);
        members.push(step.target);
        match inst.is_ris(&members) {
            Ok(true) => {}
            _ => return Err(format!("step {i} swap does not give an RIS")),
        }
    }
    Ok(())
}

/// One level of a cascade search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeLevel {
    pub depth: usize,
    pub q_size: usize,
    pub chosen: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Augment(Augmentation),
    /// No augmentation within the depth cap (or `Q` emptied).
    Exhausted,
}

/// Builds `Q(S_0)`, then repeatedly chooses the next member and extends,
/// until a volume increase is found or `max_depth` members are used.
pub fn cascade_search(
    inst: &Instance,
    fam: &Family,
    s0: usize,
    max_depth: usize,
    policy: QPolicy,
    levels: &mut Vec<CascadeLevel>,
) -> Result<SearchOutcome> {
    let used = fam.used_set()?;
    let mut q = initial_q(inst, fam, &used, s0)?;
    let mut members = vec![s0];
    let cap = max_depth.min(fam.len());
    loop {
        if let Some(chain) = q.values().find(|c| !used.contains(c.target())) {
            levels.push(CascadeLevel {
                depth: members.len(),
                q_size: q.len(),
                chosen: None,
            });
            return Ok(SearchOutcome::Augment(Augmentation::FreeTarget(
                chain.clone(),
            )));
        }
        if q.is_empty() || members.len() >= cap {
            levels.push(CascadeLevel {
                depth: members.len(),
                q_size: q.len(),
                chosen: None,
            });
            return Ok(SearchOutcome::Exhausted);
        }
        let next = choose_next(fam, &used, &members, &q)?;
        levels.push(CascadeLevel {
            depth: members.len(),
            q_size: q.len(),
            chosen: Some(next),
        });
        match extend_q(inst, fam, &used, &q, next, policy)? {
            Extension::Augment(aug) => return Ok(SearchOutcome::Augment(aug)),
            Extension::Next(q2) => {
                q = q2;
                members.push(next);
            }
        }
    }
}
