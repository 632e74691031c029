use std::collections::BTreeMap;

use gibbs_core::gibbs::remainder::{derived_component_count, remainder_law};
use gibbs_core::gibbs::{
    boltzmann_remainder_law, boltzmann_size_distribution, cycle_statistics_pgf_check, extract_remainder,
    limit_remainder_distribution, sample_composite, sample_s_n, ComponentLaw, CompositeSampler, GibbsModel,
    HatSample, HatSampler, Method, SnSampler,
};
use gibbs_core::parallel::Execution;
use gibbs_core::rational::{self, Rational};
use gibbs_core::species::enumerate::Enumerator;
use gibbs_core::species::{builtin, dsl, Obj};
use gibbs_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn forests(n: usize) -> GibbsModel {
    GibbsModel::new(&builtin::forests(), n).unwrap()
}

fn model(src: &str, n: usize) -> GibbsModel {
    GibbsModel::new(&dsl::parse(src).unwrap(), n).unwrap()
}

/// Upper 0.999 quantile of χ² with `df` degrees of freedom (Wilson-Hilferty).
fn chi2_999(df: usize) -> f64 {
    let k = df as f64;
    let t = 1.0 - 2.0 / (9.0 * k) + 3.090 * (2.0 / (9.0 * k)).sqrt();
    k * t.powi(3)
}

/// Pearson statistic of counts against probabilities (cells with expected count ≥ 5;
/// the rest are pooled).
fn chi2<K: Ord>(counts: &BTreeMap<K, usize>, probs: &BTreeMap<K, f64>, total: usize) -> (f64, usize) {
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (k, &p) in probs {
        let e = p * total as f64;
        let o = *counts.get(k).unwrap_or(&0) as f64;
        if e >= 5.0 {
            stat += (o - e).powi(2) / e;
            cells += 1;
        } else {
            pool_o += o;
            pool_e += e;
        }
    }
    let stray: usize = counts.iter().filter(|(k, _)| !probs.contains_key(k)).map(|(_, &c)| c).sum();
    pool_o += stray as f64;
    if pool_e >= 5.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        cells += 1;
    } else {
        assert!(pool_o <= 5.0 + 5.0 * pool_e, "observations in cells of negligible mass");
    }
    (stat, cells.saturating_sub(1).max(1))
}

fn weight_law(model: &GibbsModel, node: usize, n: usize) -> BTreeMap<Obj, f64> {
    let mut en = Enumerator::new(model.graph(), 16);
    let objs = en.objects(node, n).unwrap();
    let total: Rational = objs.iter().map(|(_, w)| w.clone()).sum();
    objs.iter().map(|(o, w)| (o.clone(), rational::to_f64(&(w / &total)))).collect()
}

#[test]
fn size_law_of_trees_matches_direct_normalization() {
    let m = forests(100);
    let trees = m.inner_series(1).unwrap();
    let d = boltzmann_size_distribution(&trees, 0.3).unwrap();
    // Oracle: plain summation over a much longer truncation.
    let long = GibbsModel::new(&builtin::forests(), 240).unwrap().inner_series(1).unwrap();
    let z: f64 = long.coeffs().iter().enumerate().map(|(n, c)| rational::to_f64(c) * 0.3f64.powi(n as i32)).sum();
    for n in 0..=100 {
        let exact = rational::to_f64(&long.coeff(n)) * 0.3f64.powi(n as i32) / z;
        assert!((d.probabilities[n] - exact).abs() <= d.mass_defect * exact + 1e-15, "n = {n}");
    }
    assert!(d.mass_defect < 1e-6, "defect {}", d.mass_defect);
}

#[test]
fn multiset_of_atoms_has_geometric_size_law() {
    let m = model("MODEL := COMPOSE(SET, ATOM)", 80);
    let s = CompositeSampler::new(&m, 0.4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 100_000;
    let mut counts = BTreeMap::new();
    for _ in 0..draws {
        let d = s.sample(&mut rng).unwrap();
        let obj = d.composite_object(m.outer_kind()).unwrap();
        assert_eq!(obj.size(), d.size);
        *counts.entry(d.size).or_insert(0) += 1;
    }
    let probs: BTreeMap<usize, f64> = (0..=80).map(|n| (n, 0.6 * 0.4f64.powi(n as i32))).collect();
    let (stat, df) = chi2(&counts, &probs, draws);
    assert!(stat < chi2_999(df), "chi2 {stat} df {df}");
}

#[test]
fn even_inner_sizes_give_even_composites() {
    let m = model("MODEL := COMPOSE(SET, ATOM * ATOM)", 40);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..2000 {
        assert_eq!(sample_composite(&m, 0.8, &mut rng).unwrap().size % 2, 0);
    }
    assert!(matches!(sample_s_n(&m, 7, &mut rng, Method::ExactRecursive), Err(Error::EmptySize(7))));
    assert!(matches!(m.check_lattice(7), Err(Error::OffLattice { .. })));
}

#[test]
fn forest_size_law_at_quarter() {
    let m = forests(60);
    let s = CompositeSampler::new(&m, 0.25).unwrap();
    let series = m.composite_series().unwrap();
    let z = series.evaluate(0.25).unwrap().total();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 100_000;
    let mut hist = [0usize; 13];
    for _ in 0..draws {
        let size = s.sample(&mut rng).unwrap().size;
        if size <= 12 {
            hist[size] += 1;
        }
    }
    for (n, &h) in hist.iter().enumerate() {
        let p = rational::to_f64(&series.coeff(n)) * 0.25f64.powi(n as i32) / z;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((h as f64 / draws as f64 - p).abs() <= 3.0 * sigma, "n = {n}");
    }
}

#[test]
fn conditioned_sampler_is_weight_proportional() {
    for (src, n) in [
        ("T := ATOM * SET(T)\nMODEL := COMPOSE(SET, T)", 6),
        ("T := ATOM * SET(T)\nMODEL := COMPOSE(WEIGHTED(SEQ, ATOM_MULT(1/2)), T)", 5),
        ("G := WEIGHTED(ATOM, ATOM_MULT(2)) + ATOM * ATOM\nMODEL := COMPOSE(SET, G)", 7),
    ] {
        let m = model(src, 30);
        let law = weight_law(&m, m.composite_node(), n);
        let sampler = SnSampler::new(&m, n, Method::Rejection).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let draws = 20_000;
        let mut counts = BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(sampler.sample(&mut rng).unwrap()).or_insert(0) += 1;
        }
        let (stat, df) = chi2(&counts, &law, draws);
        assert!(stat < chi2_999(df), "{src}: chi2 {stat} df {df}");
    }
}

#[test]
fn rejection_and_exact_agree_on_forests_of_eight() {
    let m = forests(30);
    let law = weight_law(&m, m.composite_node(), 8);
    assert_eq!(law.len(), 286);
    let draws = 30_000;
    for method in [Method::Rejection, Method::ExactRecursive] {
        let sampler = SnSampler::new(&m, 8, method).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut counts = BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(sampler.sample(&mut rng).unwrap()).or_insert(0) += 1;
        }
        let (stat, df) = chi2(&counts, &law, draws);
        assert!(stat < chi2_999(df), "{method}: chi2 {stat} df {df}");
    }
}

#[test]
fn exact_forests_of_three_over_a_grid() {
    let m = forests(10);
    let mut counts = BTreeMap::new();
    for j in 0..40 {
        let u = rational::ratio(j, 40);
        let obj = m.unranker().unrank(m.composite_node(), 1, 3, &u).unwrap();
        *counts.entry(obj).or_insert(0) += 1;
    }
    assert_eq!(counts.len(), 4);
    assert!(counts.values().all(|&c| c == 10));
}

/// Remainders of a forest computed directly on the multiset of trees.
fn forest_remainders(forest: &Obj) -> BTreeMap<Obj, f64> {
    let Obj::Set(trees) = forest else { panic!("not a forest") };
    let largest = trees.iter().map(Obj::size).max().unwrap();
    let maximal: Vec<usize> = (0..trees.len()).filter(|&i| trees[i].size() == largest).collect();
    let mut out = BTreeMap::new();
    for &i in &maximal {
        let mut rest = trees.clone();
        rest.remove(i);
        *out.entry(Obj::pair(Obj::set(rest), Obj::Star)).or_insert(0.0) += 1.0 / maximal.len() as f64;
    }
    out
}

#[test]
fn remainder_examples() {
    let m = forests(20);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let single = Obj::parse("{<(a,{(a,{})})>}").unwrap();
    let r = extract_remainder(&m, &single, &mut rng).unwrap();
    assert_eq!((r.remainder_size, r.remainder_components(), r.largest_size), (0, 0, 2));
    assert_eq!(r.remainder, Obj::parse("({},*)").unwrap());

    let pair = Obj::parse("{<(a,{(a,{})})>,<(a,{(a,{})})>}").unwrap();
    assert_eq!(remainder_law(&m, &pair).unwrap(), vec![(Obj::parse("({<(a,{(a,{})})>},*)").unwrap(), 1.0)]);

    let two = Obj::parse("{<(a,{(a,{}),(a,{})})>,<(a,{(a,{(a,{})})})>,<(a,{})>}").unwrap().canonicalize();
    let law = remainder_law(&m, &two).unwrap();
    assert_eq!(law.len(), 2);
    assert!(law.iter().all(|(_, p)| (*p - 0.5).abs() < 1e-15));
    assert_eq!(law.into_iter().collect::<BTreeMap<_, _>>(), forest_remainders(&two));

    assert!(extract_remainder(&m, &Obj::parse("{}").unwrap(), &mut rng).is_err());
}

#[test]
fn remainder_push_forward_at_six() {
    let m = forests(20);
    let mut exact: BTreeMap<Obj, f64> = BTreeMap::new();
    let forests6 = weight_law(&m, m.composite_node(), 6);
    assert_eq!(forests6.len(), 48);
    for (f, p) in &forests6 {
        assert_eq!(remainder_law(&m, f).unwrap().into_iter().collect::<BTreeMap<_, _>>(), forest_remainders(f));
        for (r, q) in forest_remainders(f) {
            *exact.entry(r).or_default() += p * q;
        }
    }
    let mut en = Enumerator::new(m.graph(), 16);
    let sampler = SnSampler::new(&m, 6, Method::ExactRecursive).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let draws = 20_000;
    let mut counts = BTreeMap::new();
    for _ in 0..draws {
        let s = sampler.sample(&mut rng).unwrap();
        let rec = extract_remainder(&m, &s, &mut rng).unwrap();
        assert_eq!(rec.remainder_size + rec.largest_size, 6);
        assert_eq!(derived_component_count(&m, &rec.remainder).unwrap(), rec.remainder_components());
        let derived = en.objects(m.derived_node(), rec.remainder_size).unwrap();
        assert!(derived.iter().any(|(o, _)| *o == rec.remainder));
        *counts.entry(rec.remainder).or_insert(0) += 1;
    }
    let (stat, df) = chi2(&counts, &exact, draws);
    assert!(stat < chi2_999(df), "chi2 {stat} df {df}");
}

#[test]
fn limit_law_of_forests() {
    let m = forests(300);
    let rho = m.rho().unwrap();
    assert!((rho - 0.3383218568992077).abs() < 1e-9, "rho {rho}");
    let law = limit_remainder_distribution(&m, 10).unwrap();
    assert!(law.normalization_error < 1e-6, "{}", law.normalization_error);
    assert!(law.entries.iter().all(|e| e.probability >= 0.0));
    // SET′ = SET, so R is a forest and P(R = ∅) = 1 / F(ρ) = ρ T(ρ)^{-1} = ρ.
    let empty = law.probability(&Obj::parse("({},*)").unwrap());
    assert!((empty - rho).abs() < 1e-8, "{empty}");
    let composite_at_rho = m.composite_series().unwrap().evaluate_at_radius(rho).unwrap().value;
    assert!((empty - 1.0 / composite_at_rho).abs() < 1e-8);
    assert!((law.normalizer - law.normalizer_from_series).abs() < 1e-6 * law.normalizer);
    for e in &law.entries {
        let (lo, hi) = (e.at_lower_rho.unwrap_or(e.probability), e.at_upper_rho.unwrap_or(e.probability));
        assert!((lo - e.probability).abs() < 1e-4 && (hi - e.probability).abs() < 1e-4);
    }
}

#[test]
fn boltzmann_remainder_for_atoms() {
    // F = SET, G = ATOM: F′∘G = SET(ATOM) and P(R = ∅) = 1 − x.
    let m = model("MODEL := COMPOSE(SET, ATOM)", 60);
    assert!(matches!(limit_remainder_distribution(&m, 5), Err(Error::InnerNotSubexponential)));
    let law = boltzmann_remainder_law(&m, 0.3, 12).unwrap();
    assert!((law.probability(&Obj::parse("({},*)").unwrap()) - 0.7).abs() < 1e-12);
    assert!(law.normalization_error < 1e-9);
}

#[test]
fn component_law_normalizes() {
    let m = forests(300);
    let law = ComponentLaw::new(&m, 40).unwrap();
    assert!(law.normalization_error < 1e-6, "{}", law.normalization_error);
    let limit = limit_remainder_distribution(&m, 10).unwrap();
    // Oracle: the component count of each enumerated remainder.
    let mut by_count = vec![0.0; 11];
    for e in &limit.entries {
        by_count[derived_component_count(&m, &e.object).unwrap()] += e.probability;
    }
    // c(R) = 0 exactly when R is empty; c(R) = 1 needs one tree, any size.
    assert!((by_count[0] - law.probabilities[0]).abs() < 1e-10);
    assert!(by_count[1] <= law.probabilities[1] + 1e-12);
    assert_eq!(law.shifted()[0].0, 1);
}

#[test]
fn hat_sampler() {
    // F = ATOM: the remainder is always empty and Ŝ_n is a single inner object.
    let m = model("T := ATOM * SET(T)\nMODEL := COMPOSE(ATOM, T)", 60);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = HatSampler::new(&m, 9).unwrap();
    assert!(h.placeholder_probability() < 1e-12);
    for _ in 0..200 {
        match h.sample(&mut rng).unwrap() {
            HatSample::Object(Obj::Comp(t)) => assert_eq!(t.size(), 9),
            other => panic!("{other:?}"),
        }
    }

    let m = forests(300);
    let h = HatSampler::new(&m, 50).unwrap();
    let bound = h.placeholder_probability();
    let draws = 20_000;
    let placeholders = (0..draws).filter(|_| h.sample(&mut rng).unwrap() == HatSample::Placeholder).count();
    let sigma = (bound.max(1e-12) * (1.0 - bound) / draws as f64).sqrt();
    assert!((placeholders as f64 / draws as f64) <= bound + 3.0 * sigma);
}

/// Exact law of `Ŝ_n` for forests, built from the limit law and uniform trees.
fn hat_law(m: &GibbsModel, n: usize) -> (BTreeMap<Obj, f64>, f64) {
    let limit = limit_remainder_distribution(m, n - 1).unwrap();
    let mut en = Enumerator::new(m.graph(), 16);
    let mut out: BTreeMap<Obj, f64> = BTreeMap::new();
    let mut placed = 0.0;
    for e in &limit.entries {
        let trees = en.objects(m.inner_node(), n - e.size).unwrap();
        let Obj::Pair(rest, _) = &e.object else { panic!() };
        let Obj::Set(rest) = &**rest else { panic!() };
        for (t, _) in trees.iter() {
            let mut v = rest.clone();
            v.push(Obj::comp(t.clone()));
            *out.entry(Obj::set(v)).or_default() += e.probability / trees.len() as f64;
        }
        placed += e.probability;
    }
    (out, 1.0 - placed)
}

#[test]
fn hat_coupling_total_variation_shrinks() {
    let m = forests(300);
    let mut tvs = Vec::new();
    for n in [6, 8, 10, 12] {
        let (hat, placeholder) = hat_law(&m, n);
        let s = weight_law(&m, m.composite_node(), n);
        let mut tv = placeholder;
        for (k, p) in &s {
            tv += (p - hat.get(k).copied().unwrap_or(0.0)).abs();
        }
        assert!(hat.keys().all(|k| s.contains_key(k)));
        tvs.push(tv / 2.0);
    }
    assert!(tvs.windows(2).all(|w| w[1] < w[0]), "{tvs:?}");

    // Conditioned on |R| = k, the attached tree is uniform: compare Ŝ_8 samples to the law.
    let (hat, _) = hat_law(&m, 8);
    let h = HatSampler::new(&m, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let draws = 20_000;
    let mut counts = BTreeMap::new();
    let mut placeholders = 0;
    for _ in 0..draws {
        match h.sample(&mut rng).unwrap() {
            HatSample::Object(o) => *counts.entry(o).or_insert(0) += 1,
            HatSample::Placeholder => placeholders += 1,
        }
    }
    let total = draws - placeholders;
    let mass: f64 = hat.values().sum();
    let hat: BTreeMap<Obj, f64> = hat.into_iter().map(|(k, p)| (k, p / mass)).collect();
    let (stat, df) = chi2(&counts, &hat, total);
    assert!(stat < chi2_999(df), "chi2 {stat} df {df}");
}

#[test]
fn pgf_check() {
    let m = forests(200);
    let r = cycle_statistics_pgf_check(&m, 1.0, 1.0, 1000, 1, Execution::Sequential).unwrap();
    assert_eq!((r.estimate, r.exact), (1.0, 1.0));

    // w = 1: the ratio of two outer cycle-index values, here exp((y − 1) T(ρ)) for SET.
    let r = cycle_statistics_pgf_check(&m, 0.5, 1.0, 10, 1, Execution::Sequential).unwrap();
    let t_rho = m.inner_at_rho().unwrap().value;
    assert!((r.exact - (-0.5 * t_rho).exp()).abs() < 1e-12);

    let a = cycle_statistics_pgf_check(&m, 0.7, 0.9, 40_000, 9, Execution::Sequential).unwrap();
    assert!(a.z_score() < 3.0, "{a:?}");
    let b = cycle_statistics_pgf_check(&m, 0.7, 0.9, 40_000, 9, Execution::with_workers(Some(4))).unwrap();
    assert_eq!(a, b);
}

#[test]
fn set_sampler_fixpoint_mean() {
    // For SET the fixpoint count at ρ is Poisson(T(ρ)).
    let m = forests(200);
    let s = CompositeSampler::new(&m, m.rho().unwrap()).unwrap();
    let lambda = s.arguments()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draws = 50_000;
    let mean = (0..draws).map(|_| s.draw_symmetry(&mut rng).unwrap().fixpoints() as f64).sum::<f64>() / draws as f64;
    assert!((mean - lambda).abs() < 3.0 * (lambda / draws as f64).sqrt());
}

#[test]
fn general_outer_is_supported_by_exact_sampling() {
    let m = model("T := ATOM * SET(T)\nMODEL := COMPOSE(SET(ATOM) * SEQ(ATOM), T)", 30);
    assert!(matches!(SnSampler::new(&m, 6, Method::Rejection), Err(Error::Unsupported(_))));
    let law = weight_law(&m, m.composite_node(), 6);
    let sampler = SnSampler::new(&m, 6, Method::ExactRecursive).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let draws = 20_000;
    let mut counts = BTreeMap::new();
    for _ in 0..draws {
        let s = sampler.sample(&mut rng).unwrap();
        let rec = extract_remainder(&m, &s, &mut rng).unwrap();
        assert_eq!(rec.remainder_size + rec.largest_size, 6);
        *counts.entry(s).or_insert(0) += 1;
    }
    let (stat, df) = chi2(&counts, &law, draws);
    assert!(stat < chi2_999(df), "chi2 {stat} df {df}");
}
