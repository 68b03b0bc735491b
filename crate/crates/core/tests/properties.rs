use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rainbow_bases::cascade::{check_chain, initial_q, QPolicy};
use rainbow_bases::io::{
    generate_instance, parse_decomposition, parse_instance, serialize_decomposition,
    serialize_instance, GenKind,
};
use rainbow_bases::matroid::Backend;
use rainbow_bases::oracle::{
    brute_force_addable, brute_force_cascade_q, check_matroid_axioms, exact_max_decomposition,
    reference_independent, OracleBudget,
};
use rainbow_bases::rebalance::{
    assign_distinct_missing_colours, compute_c, satisfies_growth, AssignOutcome,
};
use rainbow_bases::selftest::{
    any_family, random_cascade, random_family, random_instance, random_matroid, stuck_family,
    Events,
};
use rainbow_bases::solver::{solve, verify, Mode, SolverConfig};
use rainbow_bases::swap::{
    build_witness_injection, count_addable_or_augment, enumerate_addable, many_good_dichotomy,
    Dichotomy, OneAddability,
};
use rainbow_bases::{Colour, ElementId, Family, Instance};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn subsets(g: usize) -> impl Iterator<Item = Vec<ElementId>> {
    (0u32..1 << g).map(move |m| (0..g).filter(|i| m >> i & 1 == 1).map(ElementId).collect())
}

fn assert_family_sound(inst: &Instance, fam: &Family) {
    let mut seen = BTreeSet::new();
    for s in fam.members() {
        assert!(inst.check_ris(s).unwrap());
        for e in s.iter() {
            assert!(seen.insert(e), "{e} repeated");
        }
    }
    assert!(fam.is_disjoint());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn backends_satisfy_axioms(seed in any::<u64>()) {
        let m = random_matroid(&mut rng(seed), 10);
        let report = check_matroid_axioms(&m, &OracleBudget::default()).unwrap();
        prop_assert!(report.passes(), "{:?}", report);
    }

    #[test]
    fn rank_ignores_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_matroid(&mut r, 10);
        let mut set: Vec<ElementId> = m.elements().filter(|_| r.gen_bool(0.6)).collect();
        let rank = m.rank_of(&set).unwrap();
        for _ in 0..20 {
            set.shuffle(&mut r);
            let mut greedy = Vec::new();
            for &x in &set {
                greedy.push(x);
                if !m.is_independent(&greedy).unwrap() {
                    greedy.pop();
                }
            }
            prop_assert_eq!(greedy.len(), rank);
            prop_assert_eq!(m.rank_of(&set).unwrap(), rank);
        }
    }

    #[test]
    fn independence_matches_reference(seed in any::<u64>()) {
        let m = random_matroid(&mut rng(seed), 8);
        for s in subsets(m.ground_size()) {
            prop_assert_eq!(m.is_independent(&s).unwrap(), reference_independent(&m, &s));
        }
    }

    #[test]
    fn linear_rank_matches_reference(p in prop::sample::select(vec![2u64, 3, 5, 7]),
                                     cols in prop::collection::vec(prop::collection::vec(0u64..7, 3), 1..=8)) {
        let cols: Vec<Vec<u64>> = cols.into_iter().map(|c| c.into_iter().map(|v| v % p).collect()).collect();
        let m = rainbow_bases::Matroid::linear(p, cols).unwrap();
        let linear = matches!(m.backend(), Backend::Linear { .. });
        prop_assert!(linear);
        for s in subsets(m.ground_size()) {
            prop_assert_eq!(m.is_independent(&s).unwrap(), reference_independent(&m, &s));
        }
    }

    #[test]
    fn families_are_sound(seed in any::<u64>(), n in 1usize..=7) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, n);
        let f = r.gen_range(1..=n);
        let fam = any_family(&mut r, &inst, f);
        assert_family_sound(&inst, &fam);
        let used = fam.used_set().unwrap();
        prop_assert_eq!(used.len(), fam.volume());
        for s in fam.members() {
            let full = s.len() == n;
            let basis = s.projection().len() == n
                && inst.matroid().rank_of(&s.projection()).unwrap() == n
                && s.colours().count() == n;
            prop_assert_eq!(full, basis);
            prop_assert_eq!(full, s.is_transversal());
        }
    }

    #[test]
    fn addable_matches_oracle(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, n);
        let f = r.gen_range(1..=n);
        let fam = any_family(&mut r, &inst, f);
        let used = fam.used_set().unwrap();
        for (i, s) in fam.members().iter().enumerate() {
            for b in s.missing_colours() {
                let certs = enumerate_addable(&inst, &used, s, b).unwrap();
                let got: BTreeSet<_> = certs.iter().map(|c| c.target).collect();
                prop_assert_eq!(&got, &brute_force_addable(&inst, &fam, s, b));
                for cert in certs.iter().filter(|c| c.witness().is_some()) {
                    let mut after = fam.clone();
                    after.replace(i, cert.apply(s).unwrap());
                    // the target may still sit in another member; only the witness is new
                    let w = cert.witness().unwrap();
                    prop_assert!(!used.contains(w));
                    prop_assert!(inst.check_ris(after.member(i)).unwrap());
                    prop_assert!(after.members().iter().enumerate()
                        .filter(|&(j, _)| j != i)
                        .all(|(_, t)| !t.contains(w)));
                }
            }
        }
    }

    #[test]
    fn dichotomy_bounds_hold(seed in any::<u64>(), n in 2usize..=8) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, n);
        let f = r.gen_range(1..n);
        let fam = any_family(&mut r, &inst, f);
        let used = fam.used_set().unwrap();
        for (i, s) in fam.members().iter().enumerate() {
            for b in s.missing_colours() {
                if !s.is_empty() {
                    if let Dichotomy::Swappables(list) = many_good_dichotomy(&inst, &used, s, b).unwrap() {
                        prop_assert!(list.len() >= n - used.slice_len(b));
                    }
                }
                if let OneAddability::AddableSet(list) =
                    count_addable_or_augment(&inst, &fam, &used, i, b).unwrap()
                {
                    prop_assert!(list.len() >= (n - s.len()) * (n - f));
                }
            }
        }
    }

    #[test]
    fn injection_is_valid(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, n);
        let fam = random_family(&mut r, &inst, 1);
        let s = fam.member(0);
        for b in inst.colours() {
            let phi = build_witness_injection(&inst, s, b).unwrap();
            prop_assert_eq!(phi.len(), s.len());
            let images: BTreeSet<_> = phi.values().collect();
            prop_assert_eq!(images.len(), phi.len());
            for (e, &z) in &phi {
                let mut proj: Vec<ElementId> = s.iter().filter(|x| x != e).map(|x| x.element).collect();
                proj.push(z);
                prop_assert!(inst.class(b).contains(&z));
                prop_assert!(reference_independent(inst.matroid(), &proj));
            }
        }
    }

    #[test]
    fn cascades_keep_invariants(seed in any::<u64>(), n in 2usize..=7, depth in 1usize..=3) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, n);
        let f = r.gen_range(2..=n.max(2));
        let fam = stuck_family(&mut r, &inst, f);
        let mut ev = Events::default();
        for s0 in 0..f {
            if fam.member(s0).is_transversal() {
                continue;
            }
            for policy in [QPolicy::WitnessImages, QPolicy::AllWitnessed] {
                let res = random_cascade(&mut r, &inst, &fam, s0, depth, policy, &mut ev);
                prop_assert!(res.is_ok(), "{:?}", res);
            }
        }
    }

    #[test]
    fn first_level_q_is_sound(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, n);
        let f = r.gen_range(2..=n.max(2));
        let fam = any_family(&mut r, &inst, f);
        let used = fam.used_set().unwrap();
        for s0 in 0..f {
            if fam.member(s0).is_transversal() {
                continue;
            }
            let q = initial_q(&inst, &fam, &used, s0).unwrap();
            let oracle = brute_force_cascade_q(&inst, &fam, &[s0], &OracleBudget::default()).unwrap();
            let keys: BTreeSet<_> = q.keys().copied().collect();
            prop_assert_eq!(keys, oracle);
            for chain in q.values() {
                prop_assert!(check_chain(&inst, &fam, chain).is_ok());
                for w in chain.witnesses() {
                    prop_assert!(!used.contains(w));
                }
            }
        }
    }

    #[test]
    fn assigned_colours_are_distinct(seed in any::<u64>(), n in 2usize..=8) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, n);
        let f = r.gen_range(1..=n / 2);
        let fam = any_family(&mut r, &inst, f);
        match assign_distinct_missing_colours(&inst, &fam).unwrap() {
            AssignOutcome::VolumeIncrease(out) => {
                assert_family_sound(&inst, &out);
                prop_assert_eq!(out.volume(), fam.volume() + 1);
            }
            AssignOutcome::Assignment { family, colours } => {
                assert_family_sound(&inst, &family);
                prop_assert_eq!(family.volume(), fam.volume());
                let distinct: BTreeSet<Colour> = colours.iter().copied().collect();
                prop_assert_eq!(distinct.len(), f);
                for (s, c) in family.members().iter().zip(&colours) {
                    prop_assert!(s.is_transversal() || !s.has_colour(*c));
                }
            }
        }
    }

    #[test]
    fn growth_constant_is_valid(eps in 0.01f64..0.99) {
        let c = compute_c(eps).unwrap();
        prop_assert!(c > 0.0);
        for ell in 1..=1000 {
            prop_assert!(satisfies_growth(c, eps, ell));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_output_is_consistent(seed in any::<u64>(), n in 2usize..=9, mode in 0usize..3) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, n);
        let mode = [Mode::Greedy, Mode::ProofFaithful, Mode::Hybrid][mode];
        let cfg = SolverConfig {
            mode,
            seed,
            restarts: 2,
            f: Some(r.gen_range(1..=n)),
            ..Default::default()
        };
        let dec = solve(&inst, &cfg).unwrap();
        prop_assert!(verify(&inst, &dec).is_clean());
        prop_assert_eq!(dec.k, dec.complete.len());
        for s in &dec.complete {
            prop_assert_eq!(s.len(), n);
            prop_assert!(inst.matroid().is_independent(&s.projection()).unwrap());
        }
        for w in dec.trace.windows(2) {
            if w[0].attempt != w[1].attempt {
                continue;
            }
            prop_assert!(w[1].volume >= w[0].volume);
            if w[1].action.starts_with("augment") {
                prop_assert_eq!(w[1].volume, w[0].volume + 1);
            }
        }
        prop_assert_eq!(solve(&inst, &cfg).unwrap(), dec);
    }

    #[test]
    fn stronger_modes_match_greedy(seed in any::<u64>(), n in 2usize..=10) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, n);
        let base = SolverConfig { seed, restarts: 2, f: Some(r.gen_range(1..=n)), ..Default::default() };
        let greedy = solve(&inst, &SolverConfig { mode: Mode::Greedy, ..base.clone() }).unwrap();
        for mode in [Mode::ProofFaithful, Mode::Hybrid] {
            let other = solve(&inst, &SolverConfig { mode, ..base.clone() }).unwrap();
            prop_assert!(other.k >= greedy.k, "{mode}: {} < {}", other.k, greedy.k);
        }
    }

    #[test]
    fn small_instances_pack_fully(seed in any::<u64>(), n in 1usize..=4) {
        let inst = random_instance(&mut rng(seed), n);
        let (k, bases) = exact_max_decomposition(&inst, &OracleBudget::default()).unwrap();
        prop_assert_eq!(k, n);
        let fam = Family::from_members(bases);
        assert_family_sound(&inst, &fam);
    }

    #[test]
    fn files_round_trip(seed in any::<u64>(), n in 1usize..=8, kind in 0usize..3) {
        let kind = [GenKind::UniformIdentical, GenKind::LinearRandom { p: 3 }, GenKind::GraphicRandom][kind];
        let inst = generate_instance(kind, n, seed).unwrap();
        let text = serialize_instance(&inst, None);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(serialize_instance(&back, None), text);

        let cfg = SolverConfig { seed, restarts: 1, ..Default::default() };
        let dec = solve(&inst, &cfg).unwrap();
        let out = serialize_decomposition(&inst, &dec, &cfg);
        let (inst2, dec2) = parse_decomposition(&out).unwrap();
        prop_assert_eq!(&inst2, &inst);
        prop_assert!(verify(&inst2, &dec2).is_clean());
        prop_assert_eq!(serialize_decomposition(&inst2, &dec2, &cfg), out);
    }
}
