//! The volume-increase loop.
//!
//! Starting from `f` empty rainbow independent sets, each round tries, in
//! order: a direct addition (possibly after one simple swap) to some member,
//! a cascade started from a non-transversal member, and a volume-neutral
//! rebalance. The run stops at full volume, when nothing applies, or at the
//! round cap. Seeded restarts vary the member and colour scan orders and the
//! best snapshot by `(k, volume)` is returned.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cascade::{cascade_search, CascadeLevel, QPolicy, SearchOutcome};
use crate::error::{violation, Error, Result};
use crate::oracle::{exact_max_decomposition, OracleBudget};
use crate::rainbow::{Colour, Family, Instance, Ris};
use crate::rebalance::{many_missing_step, MissingOutcome, RebalanceConstants, RoundDiagnostics};
use crate::swap::find_free_addition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Direct additions only.
    Greedy,
    /// Cascades only from members meeting the bootstrap threshold.
    ProofFaithful,
    /// Cascades from any member, widening the candidate sets when stuck.
    #[default]
    Hybrid,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Greedy => "greedy",
            Mode::ProofFaithful => "proof-faithful",
            Mode::Hybrid => "hybrid",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Mode::Greedy),
            "proof-faithful" | "proof" => Ok(Mode::ProofFaithful),
            "hybrid" => Ok(Mode::Hybrid),
            other => Err(Error::InvalidInput(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    /// Number of members; defaults to `floor((1 - eps) n / 2)`.
    pub f: Option<usize>,
    pub mode: Mode,
    /// Longest cascade chain.
    pub max_depth: usize,
    /// Round cap per attempt; defaults to `10 n f`.
    pub max_rounds: Option<usize>,
    pub seed: u64,
    pub restarts: usize,
    /// Instances with `n` at most this are seeded by exact search.
    pub exhaustive_fallback_n: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            f: None,
            mode: Mode::Hybrid,
            max_depth: 12,
            max_rounds: None,
            seed: 0,
            restarts: 8,
            exhaustive_fallback_n: 4,
        }
    }
}

impl SolverConfig {
    pub fn target_f(&self, n: usize) -> usize {
        self.f
            .unwrap_or(((1.0 - self.epsilon) * n as f64 / 2.0).floor() as usize)
    }

    pub fn round_cap(&self, n: usize, f: usize) -> usize {
        self.max_rounds.unwrap_or((10 * n * f).max(1))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        let f = self.target_f(n);
        if f > n {
            return Err(Error::InvalidInput(format!("f = {f} exceeds n = {n}")));
        }
        Ok(())
    }
}

/// One line of the solver log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub attempt: usize,
    pub round: usize,
    pub action: String,
    pub volume: usize,
    pub k: usize,
    /// Sizes of the cascade-addable sets, level by level.
    pub q_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub k: usize,
    /// Transversal bases, in member order.
    pub complete: Vec<Ris>,
    /// The remaining members.
    pub partial: Vec<Ris>,
    pub volume: usize,
    pub rounds: usize,
    pub trace: Vec<TraceRecord>,
}

impl Decomposition {
    pub fn from_family(fam: &Family, rounds: usize, trace: Vec<TraceRecord>) -> Self {
        let (complete, partial): (Vec<Ris>, Vec<Ris>) = fam
            .members()
            .iter()
            .cloned()
            .partition(|s| s.is_transversal());
        Self {
            k: complete.len(),
            complete,
            partial,
            volume: fam.volume(),
            rounds,
            trace,
        }
    }
}

pub fn compute_constants(epsilon: f64, n: usize) -> Result<RebalanceConstants> {
    RebalanceConstants::new(epsilon, n)
}

/// Problems found in a decomposition; empty when valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub violations: Vec<String>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify(inst: &Instance, dec: &Decomposition) -> VerifyReport {
    let n = inst.n();
    let mut v = Vec::new();
    let all: Vec<(&str, usize, &Ris)> = dec
        .complete
        .iter()
        .enumerate()
        .map(|(i, s)| ("complete", i, s))
        .chain(
            dec.partial
                .iter()
                .enumerate()
                .map(|(i, s)| ("partial", i, s)),
        )
        .collect();
    let mut seen = std::collections::BTreeMap::new();
    for &(kind, i, s) in &all {
        if s.n() != n {
            v.push(format!(
                "{kind}[{i}] has {} colour slots, expected {n}",
                s.n()
            ));
            continue;
        }
        match inst.check_ris(s) {
            Ok(true) => {}
            Ok(false) => v.push(format!("{kind}[{i}] is not a rainbow independent set")),
            Err(e) => v.push(format!("{kind}[{i}]: {e}")),
        }
        for e in s.iter() {
            if let Some((k2, i2)) = seen.insert(e, (kind, i)) {
                v.push(format!("{e} appears in both {k2}[{i2}] and {kind}[{i}]"));
            }
        }
    }
    for (i, s) in dec.complete.iter().enumerate() {
        if s.len() != n {
            v.push(format!(
                "complete[{i}] has {} elements, expected {n}",
                s.len()
            ));
        }
    }
    for (i, s) in dec.partial.iter().enumerate() {
        if s.n() == n && s.len() == n {
            v.push(format!("partial[{i}] is a full transversal basis"));
        }
    }
    if dec.k != dec.complete.len() {
        v.push(format!(
            "k = {} but {} complete bases are listed",
            dec.k,
            dec.complete.len()
        ));
    }
    let volume: usize = all.iter().map(|(_, _, s)| s.len()).sum();
    if dec.volume != volume {
        v.push(format!("volume = {} but members hold {volume}", dec.volume));
    }
    VerifyReport { violations: v }
}

struct Attempt<'a> {
    inst: &'a Instance,
    cfg: &'a SolverConfig,
    consts: Option<RebalanceConstants>,
    member_order: Vec<usize>,
    colour_order: Vec<Colour>,
    index: usize,
    trace: Vec<TraceRecord>,
    hints: Vec<usize>,
}

enum Step {
    Grew(Family),
    Moved(Family),
    Stuck,
}

impl<'a> Attempt<'a> {
    fn record(&mut self, round: usize, action: &str, fam: &Family, q_sizes: Vec<usize>) {
        self.trace.push(TraceRecord {
            attempt: self.index,
            round,
            action: action.to_string(),
            volume: fam.volume(),
            k: fam.transversal_count(),
            q_sizes,
        });
    }

    fn direct(&self, fam: &Family) -> Result<Option<Family>> {
        let used = fam.used_set()?;
        for &i in &self.member_order {
            let s = fam.member(i);
            if s.is_transversal() {
                continue;
            }
            if let Some(cert) = find_free_addition(self.inst, &used, s, &self.colour_order)? {
                let mut out = fam.clone();
                out.replace(i, cert.apply(s)?);
                return Ok(Some(out));
            }
        }
        Ok(None)
    }

    fn cascade(&mut self, fam: &Family, round: usize) -> Result<Option<Family>> {
        let n = self.inst.n();
        let mut candidates: Vec<usize> = self
            .member_order
            .iter()
            .copied()
            .filter(|&i| !fam.member(i).is_transversal())
            .collect();
        candidates.sort_by_key(|&i| std::cmp::Reverse(n - fam.member(i).len()));
        let hinted: Vec<usize> = self.hints.clone();
        candidates.sort_by_key(|i| !hinted.contains(i));

        let policies: &[QPolicy] = match self.cfg.mode {
            Mode::Greedy => &[],
            Mode::ProofFaithful => &[QPolicy::WitnessImages],
            Mode::Hybrid => &[QPolicy::WitnessImages, QPolicy::AllWitnessed],
        };
        let threshold = match (self.cfg.mode, &self.consts) {
            (Mode::ProofFaithful, Some(k)) => (k.c * n as f64).ceil() as usize,
            (Mode::ProofFaithful, None) => usize::MAX,
            _ => 0,
        };
        for &policy in policies {
            for &s0 in &candidates {
                let mut levels: Vec<CascadeLevel> = Vec::new();
                let min_q = if hinted.contains(&s0) { 0 } else { threshold };
                let outcome = {
                    let used = fam.used_set()?;
                    let q0 = crate::cascade::initial_q(self.inst, fam, &used, s0)?;
                    if q0.len() < min_q {
                        continue;
                    }
                    cascade_search(self.inst, fam, s0, self.cfg.max_depth, policy, &mut levels)?
                };
                if let SearchOutcome::Augment(aug) = outcome {
                    let out = aug.apply(self.inst, fam)?;
                    if out.volume() != fam.volume() + 1 {
                        return Err(violation!("cascade did not add exactly one element"));
                    }
                    let sizes = levels.iter().map(|l| l.q_size).collect();
                    self.record(round, "augment-cascade", &out, sizes);
                    self.hints.clear();
                    return Ok(Some(out));
                }
            }
        }
        Ok(None)
    }

    fn rebalance(&mut self, fam: &Family, round: usize) -> Result<Step> {
        let Some(consts) = self.consts else {
            return Ok(Step::Stuck);
        };
        let n = self.inst.n();
        let non_transversal = fam.members().iter().filter(|s| !s.is_transversal()).count();
        let needed = match self.cfg.mode {
            Mode::ProofFaithful => ((self.cfg.epsilon * n as f64 / 2.0).ceil() as usize).max(1),
            _ => 1,
        };
        if non_transversal < needed {
            return Ok(Step::Stuck);
        }
        let mut diags: Vec<RoundDiagnostics> = Vec::new();
        let outcome = many_missing_step(self.inst, fam, &consts, 4, &mut diags)?;
        let out = outcome.family().clone();
        if out.volume() < fam.volume() {
            return Err(violation!("rebalance lost volume"));
        }
        match outcome {
            MissingOutcome::VolumeIncreased(f2) => {
                self.record(round, "augment-rebalance", &f2, Vec::new());
                Ok(Step::Grew(f2))
            }
            MissingOutcome::FoundS0 { s0, .. } => {
                self.hints = vec![s0];
                self.record(round, "rebalance-found-s0", &out, Vec::new());
                Ok(Step::Moved(out))
            }
            MissingOutcome::FoundPair { s0, .. } => {
                self.hints = vec![s0];
                self.record(round, "rebalance-found-pair", &out, Vec::new());
                Ok(Step::Moved(out))
            }
            MissingOutcome::NoProgress(_) if out == *fam => Ok(Step::Stuck),
            MissingOutcome::NoProgress(_) => {
                self.record(round, "rebalance-moved", &out, Vec::new());
                Ok(Step::Moved(out))
            }
        }
    }

    fn run(&mut self, start: Family, best: &mut (usize, usize, Family)) -> Result<usize> {
        let n = self.inst.n();
        let f = start.len();
        let cap = self.cfg.round_cap(n, f);
        let mut fam = start;
        let mut seen: HashSet<Vec<Ris>> = HashSet::new();
        let mut rounds = 0;
        while rounds < cap && fam.volume() < f * n {
            rounds += 1;
            let step = if let Some(out) = self.direct(&fam)? {
                self.record(rounds, "augment-direct", &out, Vec::new());
                Step::Grew(out)
            } else if self.cfg.mode == Mode::Greedy {
                Step::Stuck
            } else if let Some(out) = self.cascade(&fam, rounds)? {
                Step::Grew(out)
            } else {
                self.rebalance(&fam, rounds)?
            };
            match step {
                Step::Grew(out) => {
                    seen.clear();
                    fam = out;
                }
                Step::Moved(out) => {
                    if !seen.insert(out.members().to_vec()) {
                        self.record(rounds, "stop-cycle", &out, Vec::new());
                        break;
                    }
                    fam = out;
                }
                Step::Stuck => {
                    self.record(rounds, "stop-stuck", &fam, Vec::new());
                    break;
                }
            }
            let key = (fam.transversal_count(), fam.volume());
            if key > (best.0, best.1) {
                *best = (key.0, key.1, fam.clone());
            }
        }
        let key = (fam.transversal_count(), fam.volume());
        if key > (best.0, best.1) {
            *best = (key.0, key.1, fam.clone());
        }
        Ok(rounds)
    }
}

/// Runs the volume-increase loop with restarts and returns the best family found.
pub fn solve(inst: &Instance, cfg: &SolverConfig) -> Result<Decomposition> {
    cfg.validate(inst.n())?;
    let n = inst.n();
    let f = cfg.target_f(n);
    if f == 0 {
        return Ok(Decomposition::from_family(
            &Family::empty(n, 0),
            0,
            Vec::new(),
        ));
    }
    let consts = if cfg.mode != Mode::Greedy && 2 * f <= n {
        Some(compute_constants(cfg.epsilon, n)?)
    } else {
        None
    };

    let mut start = Family::empty(n, f);
    let mut trace = Vec::new();
    if n <= cfg.exhaustive_fallback_n {
        let budget = OracleBudget {
            max_n: cfg.exhaustive_fallback_n,
            ..Default::default()
        };
        let (k_star, bases) = exact_max_decomposition(inst, &budget)?;
        let mut members: Vec<Ris> = bases.into_iter().take(f).collect();
        members.resize(f, Ris::empty(n));
        start = Family::from_members(members);
        start
            .validate(inst)
            .map_err(|e| violation!("exact search returned an invalid family: {e}"))?;
        trace.push(TraceRecord {
            attempt: 0,
            round: 0,
            action: format!("exact-search k*={k_star}"),
            volume: start.volume(),
            k: start.transversal_count(),
            q_sizes: Vec::new(),
        });
    }

    // all orders are drawn up front so every mode sees the same ones
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let orders: Vec<(Vec<usize>, Vec<Colour>)> = (0..=cfg.restarts)
        .map(|r| {
            let mut members: Vec<usize> = (0..f).collect();
            let mut colours: Vec<Colour> = inst.colours().collect();
            if r > 0 {
                members.shuffle(&mut rng);
                colours.shuffle(&mut rng);
            }
            (members, colours)
        })
        .collect();

    let mut best = (start.transversal_count(), start.volume(), start.clone());
    let mut total_rounds = 0;
    for (index, (member_order, colour_order)) in orders.into_iter().enumerate() {
        let mut attempt = Attempt {
            inst,
            cfg,
            consts,
            member_order,
            colour_order,
            index,
            trace: Vec::new(),
            hints: Vec::new(),
        };
        let rounds = attempt.run(start.clone(), &mut best)?;
        total_rounds += rounds;
        trace.append(&mut attempt.trace);
        debug!(
            "attempt {index}: {rounds} rounds, best k = {} volume = {}",
            best.0, best.1
        );
        if best.1 == f * n {
            break;
        }
    }
    let fam = best.2;
    fam.validate(inst)
        .map_err(|e| violation!("final family is invalid: {e}"))?;
    let dec = Decomposition::from_family(&fam, total_rounds, trace);
    let report = verify(inst, &dec);
    if !report.is_clean() {
        return Err(violation!(
            "solver output failed verification: {:?}",
            report.violations
        ));
    }
    info!(
        "solved n = {n}, f = {f}: k = {}, volume = {}",
        dec.k, dec.volume
    );
    Ok(dec)
}

/// Errors that are the caller's fault rather than an internal failure.
pub fn is_input_error(e: &Error) -> bool {
    matches!(e, Error::InvalidInput(_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::{ElementId, Matroid};

    fn f1() -> Instance {
        let m = Matroid::uniform(3, 3).unwrap();
        let b: Vec<ElementId> = (0..3).map(ElementId).collect();
        Instance::new(m, vec![b.clone(), b.clone(), b]).unwrap()
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
    fn latin_square_with_fallback() {
        let cfg = SolverConfig {
            f: Some(3),
            ..Default::default()
        };
        let dec = solve(&f1(), &cfg).unwrap();
        assert_eq!(dec.k, 3);
        assert!(verify(&f1(), &dec).is_clean());
    }

    #[test]
    fn f2_single_member() {
        for mode in [Mode::Greedy, Mode::ProofFaithful, Mode::Hybrid] {
            let cfg = SolverConfig {
                f: Some(1),
                mode,
                exhaustive_fallback_n: 0,
                ..Default::default()
            };
            let dec = solve(&f2(), &cfg).unwrap();
            assert_eq!(dec.k, 1, "{mode}");
        }
    }

    #[test]
    fn zero_members() {
        let cfg = SolverConfig {
            f: Some(0),
            ..Default::default()
        };
        let dec = solve(&f2(), &cfg).unwrap();
        assert_eq!((dec.k, dec.volume), (0, 0));
    }

    #[test]
    fn verify_flags_mutations() {
        let inst = f1();
        let cfg = SolverConfig {
            f: Some(3),
            ..Default::default()
        };
        let dec = solve(&inst, &cfg).unwrap();
        let mut dup = dec.clone();
        dup.complete[1] = dup.complete[0].clone();
        assert!(verify(&inst, &dup)
            .violations
            .iter()
            .any(|v| v.contains("appears in both")));
        let mut short = dec.clone();
        let first = short.complete[0].iter().next().unwrap();
        short.complete[0].remove(first).unwrap();
        short.volume -= 1;
        assert!(verify(&inst, &short)
            .violations
            .iter()
            .any(|v| v.contains("has 2 elements")));
    }

    #[test]
    fn constants_for_linear_regime() {
        let k = compute_constants(0.8, 10).unwrap();
        assert!(k.c <= 0.9);
        assert!((k.d - 2.0 * k.c - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mode_round_trip() {
        for m in [Mode::Greedy, Mode::ProofFaithful, Mode::Hybrid] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("fast".parse::<Mode>().is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SolverConfig {
            epsilon: 1.5,
            ..Default::default()
        };
        assert!(matches!(solve(&f2(), &cfg), Err(Error::InvalidInput(_))));
        let cfg = SolverConfig {
            f: Some(3),
            ..Default::default()
        };
        assert!(solve(&f2(), &cfg).is_err());
    }
}
