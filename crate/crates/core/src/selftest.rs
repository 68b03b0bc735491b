//! Seeded randomized suites that re-check engine outputs against the
//! brute-force oracles, the counting bounds and definition-level tests.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cascade::{
    check_chain, choose_next, execute_cascade, extend_q, initial_q, CascadeChain, Extension,
    FinalStep, QPolicy, QSet,
};
use crate::error::{Error, Result};
use crate::io::random_basis;
use crate::matroid::{ElementId, Matroid};
use crate::oracle::{
    brute_force_addable, brute_force_cascade_q, check_matroid_axioms, reference_independent,
    OracleBudget,
};
use crate::rainbow::{Colour, Coloured, Family, Instance, Ris};
use crate::rebalance::{
    apply_out_star, assign_distinct_missing_colours, build_missing_digraph, compute_e,
    find_out_stars, many_missing_step, AssignOutcome, DigraphOutcome, MissingDigraph,
    MissingOutcome, RebalanceConstants,
};
use crate::swap::{
    build_witness_injection, count_addable_or_augment, enumerate_addable, find_free_addable,
    many_good_dichotomy, Dichotomy, OneAddability,
};

pub const SUITES: &[&str] = &[
    "axioms",
    "addable",
    "dichotomy",
    "injection",
    "cascade",
    "growth",
    "rebalance",
];

/// Largest ground set drawn by the axiom suite.
pub const AXIOM_MAX_GROUND: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelftestConfig {
    /// Largest `n` drawn; each trial picks `n` uniformly from the suite's range.
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            n: 6,
            trials: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub trials: usize,
    pub passed: usize,
    /// Trials whose random draw did not meet the suite's precondition.
    pub skipped: usize,
    /// The first few failure messages.
    pub failures: Vec<String>,
    pub failed: usize,
    /// Counts of notable branches taken, by name.
    pub events: BTreeMap<&'static str, usize>,
}

impl SuiteReport {
    pub fn is_clean(&self) -> bool {
        self.failed == 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<10} {} passed, {} failed, {} skipped",
            self.name, self.passed, self.failed, self.skipped
        )?;
        if !self.events.is_empty() {
            let ev: Vec<String> = self
                .events
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            write!(f, " [{}]", ev.join(" "))?;
        }
        Ok(())
    }
}

/// Outcome of a single trial: passed, skipped, or failed with a reason.
pub enum Trial {
    Pass,
    Skip,
}

pub type TrialResult = std::result::Result<Trial, String>;

#[derive(Debug, Default)]
pub struct Events(pub BTreeMap<&'static str, usize>);

impl Events {
    pub fn note(&mut self, name: &'static str) {
        *self.0.entry(name).or_default() += 1;
    }
}

const KEPT_FAILURES: usize = 10;

fn suite_seed(seed: u64, name: &str) -> u64 {
    let idx = SUITES
        .iter()
        .position(|s| *s == name)
        .unwrap_or(SUITES.len()) as u64;
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(idx)
}

type TrialFn = fn(&mut ChaCha8Rng, usize, &mut Events) -> TrialResult;

/// Runs `trials` seeded trials of one suite.
pub fn run_suite(name: &str, cfg: &SelftestConfig) -> Result<SuiteReport> {
    let (name, trial): (&'static str, TrialFn) = match name {
        "axioms" => ("axioms", axioms_trial),
        "addable" => ("addable", addable_trial),
        "dichotomy" => ("dichotomy", dichotomy_trial),
        "injection" => ("injection", injection_trial),
        "cascade" => ("cascade", cascade_trial),
        "growth" => ("growth", growth_trial),
        "rebalance" => ("rebalance", rebalance_trial),
        other => return Err(Error::InvalidInput(format!("unknown suite {other:?}"))),
    };
    if cfg.n < 2 {
        return Err(Error::InvalidInput("selftest needs n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(suite_seed(cfg.seed, name));
    let mut events = Events::default();
    let mut report = SuiteReport {
        name,
        trials: cfg.trials,
        passed: 0,
        skipped: 0,
        failures: Vec::new(),
        failed: 0,
        events: BTreeMap::new(),
    };
    for t in 0..cfg.trials {
        match trial(&mut rng, cfg.n, &mut events) {
            Ok(Trial::Pass) => report.passed += 1,
            Ok(Trial::Skip) => report.skipped += 1,
            Err(msg) => {
                report.failed += 1;
                if report.failures.len() < KEPT_FAILURES {
                    report.failures.push(format!("trial {t}: {msg}"));
                }
            }
        }
    }
    report.events = events.0;
    Ok(report)
}

pub fn run_all(cfg: &SelftestConfig) -> Result<Vec<SuiteReport>> {
    SUITES.iter().map(|s| run_suite(s, cfg)).collect()
}

/// A random matroid from any backend with at most `max_ground` elements.
pub fn random_matroid<R: Rng + ?Sized>(rng: &mut R, max_ground: usize) -> Matroid {
    let g = rng.gen_range(1..=max_ground.max(1));
    match rng.gen_range(0..3) {
        0 => Matroid::uniform(g, rng.gen_range(0..=g)).expect("rank within ground"),
        1 => {
            let v = rng.gen_range(1..=5);
            let edges = (0..g)
                .map(|_| (rng.gen_range(0..v), rng.gen_range(0..v)))
                .collect();
            Matroid::graphic(v, edges).expect("endpoints in range")
        }
        _ => {
            let p = *[2u64, 3, 5, 7].choose(rng).expect("nonempty");
            let dim = rng.gen_range(1..=4);
            let cols = (0..g)
                .map(|_| (0..dim).map(|_| rng.gen_range(0..p)).collect())
                .collect();
            Matroid::linear(p, cols).expect("prime modulus")
        }
    }
}

/// A random rank-`n` instance over a uniform, linear or graphic matroid,
/// each class drawn by greedy extraction over a random order.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Instance {
    assert!(n >= 1);
    let m = loop {
        let m = match rng.gen_range(0..3) {
            0 => Matroid::uniform(n + rng.gen_range(0..=n), n).expect("rank within ground"),
            1 => {
                let p = *[2u64, 3, 5].choose(rng).expect("nonempty");
                let g = n + rng.gen_range(1..=n);
                let cols = (0..g)
                    .map(|_| (0..n).map(|_| rng.gen_range(0..p)).collect())
                    .collect();
                Matroid::linear(p, cols).expect("prime modulus")
            }
            _ => {
                // a random spanning tree plus extra random edges, shuffled
                let mut edges: Vec<(usize, usize)> =
                    (1..=n).map(|v| (rng.gen_range(0..v), v)).collect();
                for _ in 0..rng.gen_range(0..=2 * n) {
                    edges.push((rng.gen_range(0..=n), rng.gen_range(0..=n)));
                }
                edges.shuffle(rng);
                Matroid::graphic(n + 1, edges).expect("endpoints in range")
            }
        };
        if m.rank() == n {
            break m;
        }
    };
    let bases = (0..n)
        .map(|_| random_basis(&m, rng).expect("ids in range"))
        .collect();
    Instance::new(m, bases).expect("extracted classes are bases")
}

/// `f` disjoint random RISs. Half the time every member is grown until no
/// direct addition remains; otherwise each member stops at a random size.
pub fn random_family<R: Rng + ?Sized>(rng: &mut R, inst: &Instance, f: usize) -> Family {
    let n = inst.n();
    let saturate = rng.gen_bool(0.5);
    let caps: Vec<usize> = (0..f)
        .map(|_| if saturate { n } else { rng.gen_range(0..=n) })
        .collect();
    let mut members: Vec<Ris> = (0..f).map(|_| Ris::empty(n)).collect();
    let mut universe = inst.universe();
    universe.shuffle(rng);
    let mut order: Vec<usize> = (0..f).collect();
    for e in universe {
        order.shuffle(rng);
        for &i in &order {
            let s = &members[i];
            if s.len() >= caps[i] || s.has_colour(e.colour) || s.projection().contains(&e.element) {
                continue;
            }
            let mut proj = s.projection();
            proj.push(e.element);
            if inst.matroid().is_independent(&proj).expect("ids in range") {
                members[i].insert(e).expect("colour is missing");
                break;
            }
        }
    }
    Family::from_members(members)
}

/// A random family pushed until no member admits a volume-increasing
/// addition, with or without one simple swap.
pub fn stuck_family<R: Rng + ?Sized>(rng: &mut R, inst: &Instance, f: usize) -> Family {
    let mut fam = random_family(rng, inst, f);
    loop {
        let mut changed = false;
        for i in 0..fam.len() {
            let used = fam.used_set().expect("family stays disjoint");
            let mut missing = fam.member(i).missing_colours();
            missing.shuffle(rng);
            for b in missing {
                let s = fam.member(i);
                if let Some(cert) = find_free_addable(inst, &used, s, b).expect("b is missing") {
                    let grown = cert.apply(s).expect("certificate applies");
                    fam.replace(i, grown);
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            return fam;
        }
    }
}

/// Either family generator, with equal odds.
pub fn any_family<R: Rng + ?Sized>(rng: &mut R, inst: &Instance, f: usize) -> Family {
    if rng.gen_bool(0.5) {
        stuck_family(rng, inst, f)
    } else {
        random_family(rng, inst, f)
    }
}

/// Redraws until `draw` meets its precondition.
const REDRAWS: usize = 100;

fn check<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn is_ris(inst: &Instance, members: &[Coloured]) -> bool {
    let colours: BTreeSet<Colour> = members.iter().map(|e| e.colour).collect();
    let proj: Vec<ElementId> = members.iter().map(|e| e.element).collect();
    colours.len() == members.len()
        && members.iter().all(|&e| inst.in_universe(e))
        && reference_independent(inst.matroid(), &proj)
}

/// Members are RISs and pairwise disjoint as coloured elements.
fn family_sound(inst: &Instance, fam: &Family) -> std::result::Result<(), String> {
    let mut seen = BTreeSet::new();
    for (i, s) in fam.members().iter().enumerate() {
        if !is_ris(inst, &s.members()) {
            return Err(format!("member {i} is not an RIS"));
        }
        for e in s.iter() {
            if !seen.insert(e) {
                return Err(format!("{e} appears in two members"));
            }
        }
    }
    Ok(())
}

fn used_pairs(fam: &Family) -> BTreeSet<Coloured> {
    fam.members().iter().flat_map(|s| s.iter()).collect()
}

fn pick_member<R: Rng + ?Sized>(
    rng: &mut R,
    fam: &Family,
    accept: impl Fn(&Ris) -> bool,
) -> Option<usize> {
    let candidates: Vec<usize> = (0..fam.len()).filter(|&i| accept(fam.member(i))).collect();
    candidates.choose(rng).copied()
}

/// An instance, family and member meeting `accept`, redrawn as needed.
fn draw_member(
    rng: &mut ChaCha8Rng,
    family: fn(&mut ChaCha8Rng, &Instance, usize) -> Family,
    n_range: (usize, usize),
    f_of: impl Fn(&mut ChaCha8Rng, usize) -> usize,
    accept: impl Fn(&Ris) -> bool,
) -> Option<(Instance, Family, usize)> {
    for _ in 0..REDRAWS {
        let n = rng.gen_range(n_range.0.min(n_range.1)..=n_range.1);
        let inst = random_instance(rng, n);
        let f = f_of(rng, n);
        let fam = family(rng, &inst, f);
        if let Some(i) = pick_member(rng, &fam, &accept) {
            return Some((inst, fam, i));
        }
    }
    None
}

fn axioms_trial(rng: &mut ChaCha8Rng, _n: usize, ev: &mut Events) -> TrialResult {
    let m = random_matroid(rng, AXIOM_MAX_GROUND);
    let report = check(check_matroid_axioms(&m, &OracleBudget::default()))?;
    if !report.passes() {
        return Err(format!("axioms fail for {:?}: {report:?}", m.backend()));
    }
    let g = m.ground_size();
    for mask in 0u32..1 << g {
        let set: Vec<ElementId> = (0..g)
            .filter(|i| mask >> i & 1 == 1)
            .map(ElementId)
            .collect();
        if check(m.is_independent(&set))? != reference_independent(&m, &set) {
            return Err(format!(
                "independence disagrees with the reference on {set:?}"
            ));
        }
    }
    ev.note(match m.backend() {
        crate::matroid::Backend::Uniform { .. } => "uniform",
        crate::matroid::Backend::Graphic { .. } => "graphic",
        crate::matroid::Backend::Linear { .. } => "linear",
    });
    Ok(Trial::Pass)
}

fn addable_trial(rng: &mut ChaCha8Rng, n_max: usize, ev: &mut Events) -> TrialResult {
    let Some((inst, fam, idx)) = draw_member(
        rng,
        any_family,
        (2, n_max),
        |r, n| r.gen_range(1..=n),
        |s| !s.is_transversal(),
    ) else {
        return Ok(Trial::Skip);
    };
    let s = fam.member(idx);
    let b = *s.missing_colours().choose(rng).expect("not transversal");
    let used = check(fam.used_set())?;
    let certs = check(enumerate_addable(&inst, &used, s, b))?;
    let got: BTreeSet<Coloured> = certs.iter().map(|c| c.target).collect();
    let want = brute_force_addable(&inst, &fam, s, b);
    if got != want {
        return Err(format!(
            "addable sets differ: engine has {} elements, oracle {}",
            got.len(),
            want.len()
        ));
    }
    let all_used = used_pairs(&fam);
    for cert in &certs {
        if let Some(w) = cert.witness() {
            if all_used.contains(&w) || w.colour != b {
                return Err(format!("bad witness {w}"));
            }
        }
        let after = check(cert.apply(s))?;
        if !is_ris(&inst, &after.members()) {
            return Err(format!(
                "certificate for {} does not give an RIS",
                cert.target
            ));
        }
    }
    ev.note(if got.is_empty() { "empty" } else { "nonempty" });
    Ok(Trial::Pass)
}

fn dichotomy_trial(rng: &mut ChaCha8Rng, n_max: usize, ev: &mut Events) -> TrialResult {
    let Some((inst, fam, idx)) = draw_member(
        rng,
        any_family,
        (2, n_max),
        |r, n| r.gen_range(1..n),
        |s| !s.is_empty() && !s.is_transversal(),
    ) else {
        return Ok(Trial::Skip);
    };
    let (n, f) = (inst.n(), fam.len());
    let s = fam.member(idx);
    let b = *s.missing_colours().choose(rng).expect("not transversal");
    let used = check(fam.used_set())?;
    let all_used = used_pairs(&fam);

    match check(many_good_dichotomy(&inst, &used, s, b))? {
        Dichotomy::FreeAddable(cert) => {
            let t = cert.target;
            let mut m = s.members();
            m.push(t);
            if t.colour != b || all_used.contains(&t) || !is_ris(&inst, &m) {
                return Err(format!("free addition {t} is invalid"));
            }
            ev.note("free");
        }
        Dichotomy::Swappables(list) => {
            let fb = all_used.iter().filter(|e| e.colour == b).count();
            if list.len() < n - fb {
                return Err(format!(
                    "{} swappable colours, expected at least {}",
                    list.len(),
                    n - fb
                ));
            }
            let colours: BTreeSet<Colour> = list.iter().map(|sc| sc.colour).collect();
            if colours.len() != list.len() {
                return Err("swappable colours repeat".into());
            }
            for sc in &list {
                let w = sc.witness;
                if w.colour != b || all_used.contains(&w) || sc.removed.colour != sc.colour {
                    return Err(format!("swappable colour {} is malformed", sc.colour));
                }
                if !s.contains(sc.removed) {
                    return Err(format!("{} is not in S", sc.removed));
                }
                let mut m: Vec<Coloured> = s.iter().filter(|&e| e != sc.removed).collect();
                m.push(w);
                if !is_ris(&inst, &m) {
                    return Err(format!("swap for colour {} is not an RIS", sc.colour));
                }
            }
            ev.note("swappables");
        }
    }

    match check(count_addable_or_augment(&inst, &fam, &used, idx, b))? {
        OneAddability::Augment(cert) => {
            if cert.added().iter().any(|e| all_used.contains(e)) {
                return Err("augmenting certificate adds a used element".into());
            }
            let after = check(cert.apply(s))?;
            if !is_ris(&inst, &after.members()) || after.len() != s.len() + 1 {
                return Err("augmenting certificate does not grow S".into());
            }
            ev.note("augment");
        }
        OneAddability::AddableSet(all) => {
            let bound = (n - s.len()) * (n - f);
            let targets: BTreeSet<Coloured> = all.iter().map(|c| c.target).collect();
            if targets.len() < bound {
                return Err(format!(
                    "{} addable elements, expected at least {bound}",
                    targets.len()
                ));
            }
            if targets != brute_force_addable(&inst, &fam, s, b) {
                return Err("addable set differs from the oracle".into());
            }
            if targets.iter().any(|t| !all_used.contains(t)) {
                return Err("an unused addable element was not reported".into());
            }
            ev.note("addable-set");
        }
    }
    Ok(Trial::Pass)
}

fn injection_trial(rng: &mut ChaCha8Rng, n_max: usize, ev: &mut Events) -> TrialResult {
    let n = rng.gen_range(1..=n_max);
    let inst = random_instance(rng, n);
    let f = rng.gen_range(1..=n);
    let fam = random_family(rng, &inst, f);
    let s = fam.member(rng.gen_range(0..f));
    let b = Colour(rng.gen_range(0..n));
    let phi = check(build_witness_injection(&inst, s, b))?;
    let keys: Vec<Coloured> = phi.keys().copied().collect();
    let mut members = s.members();
    members.sort();
    if keys != members {
        return Err("injection does not cover S".into());
    }
    let images: BTreeSet<ElementId> = phi.values().copied().collect();
    if images.len() != phi.len() {
        return Err("injection is not injective".into());
    }
    for (e, &z) in &phi {
        if !inst.class(b).contains(&z) {
            return Err(format!("image of {e} lies outside the class"));
        }
        let mut proj: Vec<ElementId> = s.iter().filter(|x| x != e).map(|x| x.element).collect();
        proj.push(z);
        if !reference_independent(inst.matroid(), &proj) {
            return Err(format!("image of {e} is spanned by the rest of S"));
        }
    }
    ev.note(if s.is_empty() { "empty" } else { "nonempty" });
    Ok(Trial::Pass)
}

/// Executes `chain` (with its free target added when unused) and checks
/// the postconditions directly.
fn execute_and_check(
    inst: &Instance,
    fam: &Family,
    chain: &CascadeChain,
    final_step: Option<&FinalStep>,
) -> std::result::Result<Family, String> {
    check_chain(inst, fam, chain)?;
    let out = check(execute_cascade(inst, fam, chain, final_step))?;
    family_sound(inst, &out)?;
    let grow = usize::from(final_step.is_some());
    if out.volume() != fam.volume() + grow {
        return Err(format!(
            "volume went from {} to {}",
            fam.volume(),
            out.volume()
        ));
    }
    let last = *chain.members.last().expect("nonempty");
    if final_step.is_none() {
        let mut m = out.member(last).members();
        m.push(chain.target());
        if !is_ris(inst, &m) {
            return Err("the last rewritten member cannot take the target".into());
        }
    }
    for i in 0..fam.len() {
        let touched = chain.members.contains(&i)
            || matches!(final_step, Some(FinalStep::Tail { next, .. }) if *next == i);
        if !touched && out.member(i) != fam.member(i) {
            return Err(format!("member {i} changed outside the chain"));
        }
    }
    Ok(out)
}

/// A random walk of at most `depth` cascade levels from `s0`, executing
/// a chain from the level it stops at.
pub fn random_cascade<R: Rng + ?Sized>(
    rng: &mut R,
    inst: &Instance,
    fam: &Family,
    s0: usize,
    depth: usize,
    policy: QPolicy,
    ev: &mut Events,
) -> std::result::Result<Option<usize>, String> {
    let used = check(fam.used_set())?;
    let mut q: QSet = check(initial_q(inst, fam, &used, s0))?;
    let mut members = vec![s0];
    let budget = OracleBudget::default();
    loop {
        let ell = members.len();
        let oracle = check(brute_force_cascade_q(inst, fam, &members, &budget))?;
        let keys: BTreeSet<Coloured> = q.keys().copied().collect();
        if ell == 1 && keys != oracle {
            return Err("Q(S_0) differs from the oracle".into());
        }
        if !keys.is_subset(&oracle) {
            return Err(format!("level {ell} holds elements the oracle rejects"));
        }
        if q.is_empty() {
            return Ok(None);
        }
        let extendable: Vec<&CascadeChain> = q
            .values()
            .filter(|c| matches!(used.owner(c.target()), Some(o) if !members.contains(&o)))
            .collect();
        let stop = ell >= depth || extendable.len() < q.len() || rng.gen_bool(0.2);
        if stop {
            let chains: Vec<&CascadeChain> = q.values().collect();
            let chain = *chains.choose(rng).expect("nonempty");
            let final_step = (!used.contains(chain.target())).then_some(FinalStep::AddTarget);
            execute_and_check(inst, fam, chain, final_step.as_ref())?;
            ev.note(if final_step.is_some() {
                "free-target"
            } else {
                "volume-neutral"
            });
            return Ok(Some(ell));
        }
        let next = check(choose_next(fam, &used, &members, &q))?;
        match check(extend_q(inst, fam, &used, &q, next, policy))? {
            Extension::Augment(aug) => {
                let step = match &aug {
                    crate::cascade::Augmentation::FreeTarget(_) => FinalStep::AddTarget,
                    crate::cascade::Augmentation::Tail { next, addition, .. } => FinalStep::Tail {
                        next: *next,
                        addition: *addition,
                    },
                };
                execute_and_check(inst, fam, aug.chain(), Some(&step))?;
                ev.note("augmentation");
                return Ok(Some(aug.chain().len()));
            }
            Extension::Next(q2) => {
                if q2.is_empty() {
                    let chains: Vec<&CascadeChain> = q.values().collect();
                    let chain = *chains.choose(rng).expect("nonempty");
                    execute_and_check(inst, fam, chain, None)?;
                    ev.note("volume-neutral");
                    return Ok(Some(ell));
                }
                q = q2;
                members.push(next);
            }
        }
    }
}

fn cascade_trial(rng: &mut ChaCha8Rng, n_max: usize, ev: &mut Events) -> TrialResult {
    // keep drawing until a cascade executes, so every trial runs one
    for _ in 0..REDRAWS {
        let Some((inst, fam, s0)) = draw_member(
            rng,
            stuck_family,
            (2, n_max),
            |r, n| r.gen_range(2..=n.max(2)),
            |s| !s.is_transversal(),
        ) else {
            continue;
        };
        let policy = if rng.gen_bool(0.5) {
            QPolicy::WitnessImages
        } else {
            QPolicy::AllWitnessed
        };
        let depth = rng.gen_range(1..=3);
        if let Some(ell) = random_cascade(rng, &inst, &fam, s0, depth, policy, ev)? {
            ev.note(match ell {
                1 => "length-1",
                2 => "length-2",
                _ => "length-3",
            });
            return Ok(Trial::Pass);
        }
    }
    Ok(Trial::Skip)
}

fn growth_trial(rng: &mut ChaCha8Rng, n_max: usize, ev: &mut Events) -> TrialResult {
    let Some((inst, fam, s0)) = draw_member(
        rng,
        stuck_family,
        (3, n_max),
        |r, n| r.gen_range(2.min(n - 1)..n),
        |s| !s.is_transversal(),
    ) else {
        return Ok(Trial::Skip);
    };
    let (n, f) = (inst.n(), fam.len());
    let used = check(fam.used_set())?;
    let mut q = check(initial_q(&inst, &fam, &used, s0))?;
    let mut members = vec![s0];
    while members.len() < fam.len().min(4) {
        if q.is_empty() {
            ev.note("stop-empty");
            break;
        }
        if q.keys().any(|e| !used.contains(*e)) {
            ev.note("stop-free-target");
            break;
        }
        let next = check(choose_next(&fam, &used, &members, &q))?;
        let hits = q.keys().filter(|e| used.owner(**e) == Some(next)).count();
        let ell = members.len() as i64;
        match check(extend_q(
            &inst,
            &fam,
            &used,
            &q,
            next,
            QPolicy::WitnessImages,
        ))? {
            Extension::Augment(_) => {
                ev.note("stop-augment");
                break;
            }
            Extension::Next(q2) => {
                let rhs = hits as i64 * (n as i64 - f as i64 - ell) - (ell + 1) * n as i64;
                if rhs > 0 {
                    ev.note("bound-active");
                    if (q2.len() as i64) < rhs {
                        return Err(format!("next level has {} elements, bound {rhs}", q2.len()));
                    }
                }
                q = q2;
                members.push(next);
            }
        }
    }
    ev.note(match members.len() {
        1 => "depth-1",
        2 => "depth-2",
        _ => "depth-3+",
    });
    Ok(Trial::Pass)
}

/// Arcs `S_1 -> S_0` whenever `S_1` holds more than `e` elements that are
/// `(S_0, b(S_0))`-addable, for every member missing at least `e` colours.
fn forced_digraph(
    inst: &Instance,
    fam: &Family,
    e: usize,
    colours: &[Colour],
) -> std::result::Result<MissingDigraph, String> {
    let n = inst.n();
    let used = check(fam.used_set())?;
    let mut g = MissingDigraph::default();
    for s0 in 0..fam.len() {
        let s = fam.member(s0);
        if n - s.len() < e.max(1) {
            continue;
        }
        let mut by_owner: BTreeMap<usize, Vec<_>> = BTreeMap::new();
        for cert in check(enumerate_addable(inst, &used, s, colours[s0]))? {
            if let Some(owner) = used.owner(cert.target) {
                by_owner.entry(owner).or_default().push(cert);
            }
        }
        for (holder, list) in by_owner {
            if list.len() > e {
                g.arcs.insert((holder, s0), list);
            }
        }
    }
    Ok(g)
}

/// Applies the greedy out-stars of `g` one after another, checking each.
fn check_stars(
    inst: &Instance,
    family: &Family,
    g: &MissingDigraph,
    e: usize,
    colours: &[Colour],
    ev: &mut Events,
    tag: &'static str,
) -> std::result::Result<(), String> {
    let n = inst.n();
    let before = family.volume();
    for (&(from, to), certs) in &g.arcs {
        let held = certs
            .iter()
            .filter(|c| family.member(from).contains(c.target))
            .count();
        if held < e + 1 || from == to {
            return Err(format!("arc {from}->{to} has {held} elements"));
        }
    }
    let stars = find_out_stars(g, e, usize::MAX);
    let mut taken = BTreeSet::new();
    for st in &stars {
        if st.leaves.len() != e + 1
            || !taken.insert(st.centre)
            || !st.leaves.iter().all(|&l| taken.insert(l))
            || !st
                .leaves
                .iter()
                .all(|&l| g.arcs.contains_key(&(st.centre, l)))
        {
            return Err("out-stars overlap, have the wrong size or use missing arcs".into());
        }
    }
    let mut cur = family.clone();
    for st in &stars {
        let missing_before = n - cur.member(st.centre).len();
        let res = check(apply_out_star(inst, &cur, st, colours))?;
        family_sound(inst, &res.family)?;
        if res.family.volume() != before {
            return Err("out-star changed the volume".into());
        }
        if res.partial {
            ev.note("star-skipped");
            continue;
        }
        let missing_after = n - res.family.member(st.centre).len();
        if missing_after < e + 1 || missing_after != missing_before + e + 1 {
            return Err(format!(
                "centre {} misses {missing_after} colours after the star",
                st.centre
            ));
        }
        for &leaf in &st.leaves {
            if res.family.member(leaf).len() != cur.member(leaf).len() + 1 {
                return Err(format!("leaf {leaf} did not gain exactly one element"));
            }
        }
        ev.note(tag);
        cur = res.family;
    }
    Ok(())
}

fn rebalance_trial(rng: &mut ChaCha8Rng, n_max: usize, ev: &mut Events) -> TrialResult {
    let Some((inst, fam, _)) = draw_member(
        rng,
        any_family,
        (2, n_max),
        |r, n| r.gen_range(1..=n / 2),
        |s| !s.is_transversal(),
    ) else {
        return Ok(Trial::Skip);
    };
    let n = inst.n();
    let eps = *[0.1, 0.2, 0.3, 0.5].choose(rng).expect("nonempty");
    let consts = check(RebalanceConstants::new(eps, n))?;
    let before = fam.volume();

    // one round by hand, checking every applied star
    match check(assign_distinct_missing_colours(&inst, &fam))? {
        AssignOutcome::VolumeIncrease(f2) => {
            family_sound(&inst, &f2)?;
            if f2.volume() != before + 1 {
                return Err("assignment step did not add exactly one element".into());
            }
            ev.note("assign-increase");
        }
        AssignOutcome::Assignment { family, colours } => {
            family_sound(&inst, &family)?;
            if family.volume() != before {
                return Err("assignment changed the volume".into());
            }
            let mut seen = BTreeSet::new();
            for (i, s) in family.members().iter().enumerate() {
                if s.is_transversal() {
                    continue;
                }
                if s.has_colour(colours[i]) || !seen.insert(colours[i]) {
                    return Err(format!("member {i} has a bad assigned colour"));
                }
            }
            // the digraph without the volume-increase short cut, for a small E
            let small_e = rng.gen_range(1..=2);
            let forced = forced_digraph(&inst, &family, small_e, &colours)?;
            check_stars(
                &inst,
                &family,
                &forced,
                small_e,
                &colours,
                ev,
                "forced-star-applied",
            )?;

            let e = compute_e(&family, &consts);
            if e == 0 {
                ev.note("all-transversal");
            } else {
                match check(build_missing_digraph(&inst, &family, e, &colours, &consts))? {
                    DigraphOutcome::Graph(g) => {
                        ev.note(if g.arc_count() > 0 {
                            "graph-arcs"
                        } else {
                            "graph-empty"
                        });
                        check_stars(&inst, &family, &g, e, &colours, ev, "star-applied")?;
                    }
                    DigraphOutcome::VolumeIncrease(f2) => {
                        family_sound(&inst, &f2)?;
                        if f2.volume() != before + 1 {
                            return Err("digraph step did not add exactly one element".into());
                        }
                        ev.note("digraph-increase");
                    }
                    DigraphOutcome::FoundPair { .. } => ev.note("found-pair"),
                }
            }
        }
    }

    let mut diags = Vec::new();
    let out = check(many_missing_step(&inst, &fam, &consts, 1, &mut diags))?;
    family_sound(&inst, out.family())?;
    let want = before + usize::from(matches!(out, MissingOutcome::VolumeIncreased(_)));
    if out.family().volume() != want {
        return Err(format!(
            "step changed volume from {before} to {}",
            out.family().volume()
        ));
    }
    ev.note(match out {
        MissingOutcome::VolumeIncreased(_) => "step-increase",
        MissingOutcome::FoundS0 { .. } => "step-found-s0",
        MissingOutcome::FoundPair { .. } => "step-found-pair",
        MissingOutcome::NoProgress(_) => "step-no-progress",
    });
    Ok(Trial::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_give_valid_objects() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=6 {
            let inst = random_instance(&mut rng, n);
            assert_eq!(inst.n(), n);
            let fam = random_family(&mut rng, &inst, n);
            fam.validate(&inst).unwrap();
            family_sound(&inst, &fam).unwrap();
        }
    }

    #[test]
    fn suites_pass_and_repeat() {
        let cfg = SelftestConfig {
            n: 5,
            trials: 30,
            seed: 9,
        };
        let a = run_all(&cfg).unwrap();
        for r in &a {
            assert!(r.is_clean(), "{r}: {:?}", r.failures);
        }
        assert_eq!(a, run_all(&cfg).unwrap());
    }

    #[test]
    fn unknown_suite_is_input_error() {
        assert!(matches!(
            run_suite("nope", &SelftestConfig::default()),
            Err(Error::InvalidInput(_))
        ));
    }
}
