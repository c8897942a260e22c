use dssl_core::logicc::{
    compile_relaxation, enumerate_valid, parse_rules, to_dnf, truth_table_row, CompiledRelaxation, Formula, GFunction,
    ValidSet,
};
use dssl_core::relaxations::{exclusivity_loss, ProbVector};
use dssl_core::rng::seeded_rng;
use dssl_core::sslnet::AttributeParam;
use proptest::prelude::*;
use rand::Rng;

const NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn names(k: usize) -> Vec<String> {
    NAMES[..k].iter().map(|s| s.to_string()).collect()
}

fn formula(k: usize) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        8 => (0..k).prop_map(Formula::Var),
        1 => any::<bool>().prop_map(Formula::Const),
        1 => proptest::sample::subsequence((0..k).collect::<Vec<_>>(), 1..=k.min(3))
            .prop_map(Formula::ExactlyOne),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::iff(a, b)),
        ]
    })
}

fn sized_formula() -> impl Strategy<Value = (usize, Formula)> {
    (1usize..=6).prop_flat_map(|k| (Just(k), formula(k)))
}

fn as_reals(v: &[bool]) -> Vec<f64> {
    v.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn dnf_and_valid_set_agree_with_truth_table((k, f) in sized_formula()) {
        let dnf = to_dnf(&f, k).unwrap();
        let valid = enumerate_valid(&f, k).unwrap();
        let mut count = 0;
        for row in 0..(1u64 << k) {
            let v = truth_table_row(row, k);
            let truth = f.eval(&v);
            prop_assert_eq!(dnf.eval(&v), truth, "dnf at {:?}", v);
            prop_assert_eq!(valid.contains(&v), truth, "valid set at {:?}", v);
            count += usize::from(truth);
        }
        prop_assert_eq!(valid.len(), count);
    }

    #[test]
    fn printed_formula_reparses_identically((k, f) in sized_formula()) {
        let names = names(k);
        let text = f.display(&names).to_string();
        let back = parse_rules(&text, &names).unwrap();
        prop_assert_eq!(back, f, "printed as {}", text);
    }

    #[test]
    fn unweighted_relaxation_is_indicator_on_vertices((k, f) in sized_formula()) {
        let valid = enumerate_valid(&f, k).unwrap();
        let q = compile_relaxation(&valid, GFunction::Identity, None).unwrap();
        for row in 0..(1u64 << k) {
            let v = truth_table_row(row, k);
            let expected = if valid.contains(&v) { 1.0 } else { 0.0 };
            prop_assert_eq!(q.evaluate(&as_reals(&v)).unwrap(), expected);
        }
    }

    #[test]
    fn sharper_g_lowers_interior_values(
        (k, f) in sized_formula(),
        seed in any::<u64>(),
    ) {
        let valid = enumerate_valid(&f, k).unwrap();
        prop_assume!(!valid.is_empty());
        let mut rng = seeded_rng(seed);
        let theta: Vec<f64> = (0..k).map(|_| rng.random_range(0.02..0.98)).collect();
        let values: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&t| {
                compile_relaxation(&valid, GFunction::power(t), None)
                    .unwrap()
                    .evaluate(&theta)
                    .unwrap()
            })
            .collect();
        prop_assert!(values[0] > values[1] && values[1] > values[2], "{:?}", values);
    }
}

#[test]
fn exactly_one_identity_equals_exclusivity() {
    let mut rng = seeded_rng(31);
    for k in 2..=4 {
        let vars: Vec<usize> = (0..k).collect();
        let valid = enumerate_valid(&Formula::ExactlyOne(vars), k).unwrap();
        let q = compile_relaxation(&valid, GFunction::Identity, None).unwrap();
        for _ in 0..1000 {
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let theta: Vec<f64> = raw.iter().map(|r| r / s).collect();
            let p = match ProbVector::new(theta.clone()) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let x = exclusivity_loss(&p);
            let (log_q, _) = q.log_loss_grad(&AttributeParam::new(theta).unwrap()).unwrap();
            assert!((log_q - x).abs() < 1e-12, "K={k}: {log_q} vs {x}");
        }
    }
}

/// Projected gradient ascent on `log q` within `[0, 1]^K`.
fn climb(q: &CompiledRelaxation, start: Vec<f64>) -> Vec<f64> {
    let mut theta = start;
    for it in 0..4000 {
        let step = if it < 2000 { 1e-2 } else { 1e-3 };
        let (_, grad) = q.log_loss_grad(&AttributeParam::new(theta.clone()).unwrap()).unwrap();
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t = (*t + step * g.clamp(-50.0, 50.0)).clamp(0.0, 1.0);
        }
    }
    theta
}

fn random_valid_sets(rng: &mut impl Rng, count: usize) -> Vec<ValidSet> {
    (0..count)
        .map(|_| {
            let k = rng.random_range(1..=4);
            loop {
                let vectors: Vec<Vec<bool>> = (0..(1u64 << k))
                    .filter(|_| rng.random_bool(0.4))
                    .map(|r| truth_table_row(r, k))
                    .collect();
                if !vectors.is_empty() {
                    break ValidSet::from_vectors(k, vectors).unwrap();
                }
            }
        })
        .collect()
}

#[test]
fn sharpened_relaxation_climbs_to_valid_vertices() {
    let mut rng = seeded_rng(8);
    let sets = random_valid_sets(&mut rng, 20);
    for i in 0..1000 {
        let valid = &sets[i % sets.len()];
        let q = compile_relaxation(valid, GFunction::power(3.0), None).unwrap();
        let start: Vec<f64> = (0..valid.num_attrs()).map(|_| rng.random_range(0.0..1.0)).collect();
        let end = climb(&q, start.clone());
        let vertex: Vec<bool> = end.iter().map(|&t| t > 0.5).collect();
        assert!(
            end.iter().all(|&t| t < 1e-6 || t > 1.0 - 1e-6),
            "no vertex reached from {start:?}: {end:?}"
        );
        assert!(valid.contains(&vertex), "{start:?} climbed to invalid {vertex:?}");
    }
}

#[test]
fn identity_relaxation_climbs_into_valid_region() {
    // Plateaus are possible with g = identity, so the limit is checked by
    // rounding rather than by reaching a vertex.
    let mut rng = seeded_rng(9);
    let sets = random_valid_sets(&mut rng, 20);
    for i in 0..1000 {
        let valid = &sets[i % sets.len()];
        let q = compile_relaxation(valid, GFunction::Identity, None).unwrap();
        let start: Vec<f64> = (0..valid.num_attrs()).map(|_| rng.random_range(0.0..1.0)).collect();
        let end = climb(&q, start.clone());
        let vertex: Vec<bool> = end.iter().map(|&t| t > 0.5).collect();
        assert!(valid.contains(&vertex), "{start:?} climbed to {end:?}");
    }
}
