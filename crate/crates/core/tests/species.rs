use std::collections::{BTreeSet, HashMap};

use gibbs_core::cycle_index::{CycleIndexPoly, FactoredCycleIndex};
use gibbs_core::rational::{int, ratio, Rational};
use gibbs_core::species::{builtin, Obj, Species};
use gibbs_core::Error;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Unlabelled rooted trees on `n` vertices, counted by canonicalising every parent array
/// with `parent[i] < i`.
fn rooted_trees_by_brute_force(n: usize) -> usize {
    fn ahu(v: usize, children: &[Vec<usize>]) -> String {
        let mut parts: Vec<String> = children[v].iter().map(|&c| ahu(c, children)).collect();
        parts.sort();
        format!("({})", parts.concat())
    }
    fn rec(i: usize, parent: &mut Vec<usize>, n: usize, seen: &mut BTreeSet<String>) {
        if i == n {
            let mut children = vec![vec![]; n];
            for (v, &p) in parent.iter().enumerate().skip(1) {
                children[p].push(v);
            }
            seen.insert(ahu(0, &children));
            return;
        }
        for p in 0..i {
            parent.push(p);
            rec(i + 1, parent, n, seen);
            parent.pop();
        }
    }
    if n == 0 {
        return 0;
    }
    let mut seen = BTreeSet::new();
    rec(1, &mut vec![0], n, &mut seen);
    seen.len()
}

fn ints(s: &gibbs_core::TruncatedSeries) -> Vec<i64> {
    s.coeffs().iter().map(|c| c.to_integer().to_i64().unwrap()).collect()
}

#[test]
fn polya_tree_counts() {
    let t = Species::compile(&builtin::polya_trees()).unwrap();
    let s = t.ogf(1, 11).unwrap();
    assert_eq!(ints(&s), vec![0, 1, 1, 2, 4, 9, 20, 48, 115, 286, 719, 1842]);
    for n in 0..=9 {
        assert_eq!(ints(&s)[n] as usize, rooted_trees_by_brute_force(n), "n = {n}");
    }
}

#[test]
fn forests_shift_trees() {
    let t = Species::compile(&builtin::polya_trees()).unwrap().ogf(1, 61).unwrap();
    let f = Species::compile(&builtin::forests()).unwrap().ogf(1, 60).unwrap();
    for n in 0..=60 {
        assert_eq!(f.coeff(n), t.coeff(n + 1));
    }
}

#[test]
fn enumeration_matches_coefficients() {
    let t = Species::compile(&builtin::polya_trees()).unwrap();
    assert_eq!(t.enumerate(4, 14).unwrap().len(), 4);
    let f = Species::compile(&builtin::forests()).unwrap();
    assert_eq!(f.enumerate(3, 14).unwrap().len(), 4);
    let counts = f.ogf(1, 10).unwrap();
    for n in 0..=10 {
        let objs = f.enumerate(n, 14).unwrap();
        assert_eq!(Rational::from_integer(objs.len().into()), counts.coeff(n));
        assert!(objs.iter().all(|(o, w)| o.size() == n && o.is_canonical() && w.is_one()));
        let distinct: BTreeSet<_> = objs.iter().map(|(o, _)| o.clone()).collect();
        assert_eq!(distinct.len(), objs.len());
    }
    assert!(matches!(f.enumerate(15, 14), Err(Error::SizeGuardExceeded { n: 15, guard: 14 })));
}

#[test]
fn unranking_hits_every_tree_once() {
    let t = Species::compile(&builtin::polya_trees()).unwrap();
    let hits: BTreeSet<Obj> = (0..4).map(|i| t.unrank_by_weight(4, &ratio(i, 4)).unwrap()).collect();
    let all: BTreeSet<Obj> = t.enumerate(4, 14).unwrap().into_iter().map(|(o, _)| o).collect();
    assert_eq!(hits, all);
}

#[test]
fn unranking_is_a_bijection_onto_forests() {
    let f = Species::compile(&builtin::forests()).unwrap();
    for n in 1..=7 {
        let all: BTreeSet<Obj> = f.enumerate(n, 14).unwrap().into_iter().map(|(o, _)| o).collect();
        let k = all.len() as i64;
        let hits: BTreeSet<Obj> = (0..k).map(|i| f.unrank_by_weight(n, &ratio(i, k)).unwrap()).collect();
        assert_eq!(hits, all, "n = {n}");
    }
    assert!(f.unrank_by_weight(3, &int(1)).is_err());
}

#[test]
fn table_weights_drive_unranking() {
    let s = Species::parse(r#"S := WEIGHTED(ATOM*ATOM + SET, TABLE{"L((a,a))": 1, "R({a,a})": 3})"#).unwrap();
    assert_eq!(s.unrank_by_weight(2, &ratio(1, 2)).unwrap().to_string(), "R({a,a})");
    assert_eq!(s.unrank_by_weight(2, &ratio(1, 5)).unwrap().to_string(), "L((a,a))");
    assert_eq!(s.ogf(1, 3).unwrap().coeff(2), int(4));
    assert_eq!(s.ogf(2, 3).unwrap().coeff(2), int(10));
    assert_eq!(s.ogf(0, 3).unwrap().coeff(2), int(2));
    assert!(matches!(s.cycle_index(4), Err(Error::Unsupported(_))));
}

#[test]
fn composition_agrees_with_plethysm() {
    let t = Species::compile(&builtin::polya_trees()).unwrap();
    let f = Species::compile(&builtin::forests()).unwrap();
    let n = 15;
    let sparse = CycleIndexPoly::z_set(n).plethysm_with_weights(&|i| t.ogf(i as u32, n).unwrap()).unwrap();
    assert_eq!(sparse, f.ogf(1, n).unwrap());
    let n = 120;
    let factored = FactoredCycleIndex::set(n, &int(1))
        .plethysm_with_weights(&|i| t.ogf(i as u32, n).unwrap())
        .unwrap();
    assert_eq!(factored, f.ogf(1, n).unwrap());
}

#[test]
fn derivative_of_set_is_set() {
    let set = Species::parse("S := SET").unwrap().ogf(1, 20).unwrap();
    let d = Species::parse("S := DERIVE(SET)").unwrap().ogf(1, 20).unwrap();
    assert_eq!(set, d);
}

#[test]
fn derivative_agrees_with_cycle_index() {
    let n = 12;
    let t = Species::compile(&builtin::polya_trees()).unwrap();
    let dt = Species::parse("T := ATOM * SET(T); D := DERIVE(T)").unwrap();
    let via_ci = t.cycle_index(n).unwrap().derivative_z1().specialize_ogf();
    assert_eq!(via_ci.truncate(n - 1), dt.ogf(1, n - 1).unwrap());
    let df = Species::parse("T := ATOM * SET(T); D := DERIVE(COMPOSE(SET, T))").unwrap();
    let f = Species::compile(&builtin::forests()).unwrap();
    let via_ci = f.cycle_index(n).unwrap().derivative_z1().specialize_ogf();
    assert_eq!(via_ci.truncate(n - 1), df.ogf(1, n - 1).unwrap());
}

#[test]
fn cycle_index_of_set_and_seq() {
    let s = Species::parse("S := SET").unwrap();
    assert_eq!(s.cycle_index(7).unwrap(), CycleIndexPoly::z_set(7));
    let q = Species::parse("S := SEQ").unwrap();
    assert_eq!(q.cycle_index(7).unwrap(), CycleIndexPoly::z_seq(7));
    let t = Species::compile(&builtin::polya_trees()).unwrap();
    assert_eq!(t.cycle_index(9).unwrap().specialize_ogf(), t.ogf(1, 9).unwrap());
}

#[test]
fn atom_weights() {
    let s = Species::parse("S := WEIGHTED(SEQ, ATOM_MULT(1/2))").unwrap();
    let ogf = s.ogf(1, 10).unwrap();
    for k in 0..=10 {
        assert_eq!(ogf.coeff(k), ratio(1, 1 << k));
    }
    assert_eq!(s.ogf(0, 10).unwrap().coeff(10), int(1));
    assert_eq!(s.ogf(3, 4).unwrap().coeff(2), ratio(1, 64));
}

#[test]
fn weighted_multisets_count_by_power() {
    // SET of atoms of weight 2: the multiset of k atoms has weight 2^k.
    let s = Species::parse("S := SET(WEIGHTED(ATOM, ATOM_MULT(2)))").unwrap();
    for p in 0..4u32 {
        let ogf = s.ogf(p, 6).unwrap();
        for k in 0..=6 {
            assert_eq!(ogf.coeff(k), gibbs_core::rational::pow(&int(2), p * k as u32));
        }
    }
}

#[test]
fn ill_founded_recursion_is_reported() {
    let s = Species::parse("T := ATOM + T").unwrap();
    assert!(matches!(s.ogf(1, 3), Err(Error::IllFoundedRecursion(_))));
    assert!(matches!(Species::parse("T := SET(T)"), Err(Error::IllFoundedRecursion(_))));
}

fn empirical(s: &Species, n: usize, draws: usize, seed: u64) -> HashMap<Obj, usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = HashMap::new();
    for _ in 0..draws {
        let o = s.unranker().sample(s.root(), 1, n, &mut rng).unwrap();
        assert!(o.is_canonical());
        *counts.entry(o).or_insert(0) += 1;
    }
    counts
}

#[test]
fn exact_sampling_is_weight_proportional() {
    // Unit weights: uniform over the 48 forests of size 6.
    let f = Species::compile(&builtin::forests()).unwrap();
    let objs = f.enumerate(6, 14).unwrap();
    let draws = 40_000;
    let counts = empirical(&f, 6, draws, 7);
    assert_eq!(objs.len(), 48);
    assert_eq!(counts.len(), objs.len());
    let chi2: f64 = objs
        .iter()
        .map(|(o, _)| {
            let e = draws as f64 / objs.len() as f64;
            let c = *counts.get(o).unwrap_or(&0) as f64;
            (c - e).powi(2) / e
        })
        .sum();
    // 47 degrees of freedom; the 0.999 quantile is about 82.7
    assert!(chi2 < 82.7, "chi2 = {chi2}");

    // Non-uniform weights: trees whose atoms weigh 1/2 inside a multiset of weight-3 atoms.
    let w = Species::parse("T := ATOM * SET(T); S := SET(WEIGHTED(T, ATOM_MULT(1/2)) + WEIGHTED(ATOM, ATOM_MULT(3)))")
        .unwrap();
    let objs = w.enumerate(4, 14).unwrap();
    let total: Rational = objs.iter().map(|(_, x)| x.clone()).fold(Rational::zero(), |a, b| a + b);
    assert_eq!(total, w.ogf(1, 4).unwrap().coeff(4));
    let counts = empirical(&w, 4, draws, 11);
    let mut chi2 = 0.0;
    for (o, x) in objs.iter() {
        let e = draws as f64 * (x / &total).to_f64().unwrap();
        let c = *counts.get(o).unwrap_or(&0) as f64;
        chi2 += (c - e).powi(2) / e;
    }
    let dof = objs.len() as f64 - 1.0;
    assert!(chi2 < dof + 5.0 * (2.0 * dof).sqrt(), "chi2 = {chi2}, dof = {dof}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unranked_objects_are_canonical(num in 0u64..1_000_000, n in 1usize..9) {
        let f = Species::compile(&builtin::forests()).unwrap();
        let o = f.unrank_by_weight(n, &Rational::new(num.into(), 1_000_000.into())).unwrap();
        prop_assert_eq!(o.size(), n);
        prop_assert!(o.is_canonical());
        prop_assert!(f.enumerate(n, 14).unwrap().iter().any(|(x, _)| *x == o));
    }

    #[test]
    fn unranking_is_monotone_in_position(a in 0u64..1000, b in 0u64..1000) {
        // Positions inside the same cell map to the same object.
        let t = Species::compile(&builtin::polya_trees()).unwrap();
        let k = 9;
        let (ca, cb) = (a * k / 1000, b * k / 1000);
        let oa = t.unrank_by_weight(5, &Rational::new(a.into(), 1000.into())).unwrap();
        let ob = t.unrank_by_weight(5, &Rational::new(b.into(), 1000.into())).unwrap();
        prop_assert_eq!(ca == cb, oa == ob);
    }
}
