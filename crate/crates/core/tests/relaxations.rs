use dssl_core::gradcheck::{central_difference, max_relative_error};
use dssl_core::relaxations::{
    dp_loss, entropy_loss, exclusivity_loss, pseudo_label_loss, unsup_loss_grad_box, ProbVector, RelaxationSpec,
    DEFAULT_EPSILON,
};
use dssl_core::rng::seeded_rng;
use proptest::prelude::*;
use rand::Rng;

fn specs() -> Vec<RelaxationSpec> {
    vec![
        RelaxationSpec::entropy(),
        RelaxationSpec::exclusivity(),
        RelaxationSpec::pseudo_label(),
        RelaxationSpec::det_prior(10.0),
        RelaxationSpec::det_prior(2.0),
    ]
}

/// Interior simplex point with every component at least `floor`.
fn interior_point(rng: &mut impl Rng, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let scale = 1.0 - floor * k as f64;
    raw.iter().map(|r| floor + scale * r / sum).collect()
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = seeded_rng(11);
    for spec in specs() {
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        while checked < 100 {
            let k = rng.random_range(2..=6);
            let theta = interior_point(&mut rng, k, 1e-3);
            // Pseudo-label is not differentiable at argmax ties.
            let mut sorted = theta.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            if sorted[0] - sorted[1] < 1e-4 {
                continue;
            }
            let (_, analytic) = unsup_loss_grad_box(&spec, &theta).unwrap();
            let numeric = central_difference(|t| unsup_loss_grad_box(&spec, t).unwrap().0, &theta, 1e-6);
            worst = worst.max(max_relative_error(&analytic, &numeric));
            checked += 1;
        }
        assert!(worst < 1e-4, "{:?}: max relative error {worst:e}", spec.kind);
    }
}

#[test]
fn maximum_zero_only_at_vertices() {
    for k in 2..=6 {
        for i in 0..k {
            let e = ProbVector::one_hot(k, i).unwrap();
            let tol = 10.0 * DEFAULT_EPSILON * k as f64;
            assert!(entropy_loss(&e).abs() <= tol);
            assert!(exclusivity_loss(&e).abs() <= tol);
            assert!(pseudo_label_loss(&e).0.abs() <= tol);
            assert!(dp_loss(&e, 10.0).unwrap().abs() <= tol);
        }
    }
    let mut rng = seeded_rng(5);
    for _ in 0..500 {
        let k = rng.random_range(2..=6);
        let p = ProbVector::new(interior_point(&mut rng, k, 1e-2)).unwrap();
        assert!(entropy_loss(&p) < 0.0);
        assert!(exclusivity_loss(&p) < 0.0);
        assert!(pseudo_label_loss(&p).0 < 0.0);
        assert!(dp_loss(&p, 10.0).unwrap() < 0.0);
    }
}

fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.01f64..1.0, k).prop_map(|v| {
        let s: f64 = v.iter().sum();
        let mut out: Vec<f64> = v.iter().map(|x| x / s).collect();
        let rest: f64 = out[1..].iter().sum();
        out[0] = 1.0 - rest;
        out
    })
}

proptest! {
    #[test]
    fn permutation_leaves_losses_unchanged(
        theta in (2usize..7).prop_flat_map(simplex),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut permuted = theta.clone();
        permuted.shuffle(&mut seeded_rng(seed));
        let (a, b) = (ProbVector::new(theta).unwrap(), ProbVector::new(permuted).unwrap());
        prop_assert!((entropy_loss(&a) - entropy_loss(&b)).abs() < 1e-12);
        prop_assert!((exclusivity_loss(&a) - exclusivity_loss(&b)).abs() < 1e-12);
        prop_assert!((pseudo_label_loss(&a).0 - pseudo_label_loss(&b).0).abs() < 1e-12);
        prop_assert!((dp_loss(&a, 10.0).unwrap() - dp_loss(&b, 10.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn dp_non_increasing_in_temperature(
        theta in (2usize..7).prop_flat_map(simplex),
        t1 in 0.1f64..50.0,
        dt in 0.0f64..50.0,
    ) {
        let p = ProbVector::new(theta).unwrap();
        let lo = dp_loss(&p, t1).unwrap();
        let hi = dp_loss(&p, t1 + dt).unwrap();
        prop_assert!(hi <= lo + 1e-12, "T={t1}: {lo} then T={}: {hi}", t1 + dt);
    }

    #[test]
    fn exclusivity_two_classes_closed_form(a in 0.0f64..=1.0) {
        let p = ProbVector::new(vec![a, 1.0 - a]).unwrap();
        let t1 = a.clamp(DEFAULT_EPSILON, 1.0 - DEFAULT_EPSILON);
        let t2 = (1.0 - a).clamp(DEFAULT_EPSILON, 1.0 - DEFAULT_EPSILON);
        let expected = (t1 * (1.0 - t2) + (1.0 - t1) * t2).ln();
        prop_assert!((exclusivity_loss(&p) - expected).abs() < 1e-12);
    }
}
