use maskfeat::losses::{cosine_masked, l2_masked, multi_task};
use proptest::prelude::*;

fn vectors(n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, dim), n)
}

fn pairs() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (1usize..8, 1usize..10).prop_flat_map(|(n, d)| (vectors(n, d), vectors(n, d)))
}

proptest! {
    #[test]
    fn l2_is_nonnegative_and_zero_on_match((p, t) in pairs()) {
        let n = p.len();
        prop_assert!(l2_masked(&p, &t, n).unwrap() >= 0.0);
        prop_assert_eq!(l2_masked(&t, &t, n).unwrap(), 0.0);
    }

    #[test]
    fn losses_ignore_token_order((p, t) in pairs(), rot in 0usize..8) {
        let n = p.len();
        let k = rot % n;
        let (mut p2, mut t2) = (p.clone(), t.clone());
        p2.rotate_left(k);
        t2.rotate_left(k);
        let a = l2_masked(&p, &t, n).unwrap();
        let b = l2_masked(&p2, &t2, n).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        if t.iter().all(|v| v.iter().any(|x| *x != 0.0)) {
            let a = cosine_masked(&p, &t, n).unwrap();
            let b = cosine_masked(&p2, &t2, n).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn cosine_ignores_positive_scale((p, t) in pairs(), s in 0.01f64..100.0) {
        prop_assume!(t.iter().all(|v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6));
        prop_assume!(p.iter().all(|v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6));
        let n = p.len();
        let scaled: Vec<Vec<f64>> = p.iter().map(|v| v.iter().map(|x| s * x).collect()).collect();
        let a = cosine_masked(&p, &t, n).unwrap();
        let b = cosine_masked(&scaled, &t, n).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!((0.0..=4.0 / t[0].len() as f64 + 1e-12).contains(&a));
    }

    #[test]
    fn multi_task_is_a_weighted_mean(l in prop::collection::vec((0.0f64..10.0, 0.0f64..3.0), 1..5)) {
        prop_assume!(l.iter().map(|x| x.1).sum::<f64>() > 1e-3);
        let comps: Vec<(&str, f64, f64)> = l.iter().map(|(a, w)| ("c", *a, *w)).collect();
        let r = multi_task(&comps, 3).unwrap();
        let lo = l.iter().filter(|x| x.1 > 0.0).map(|x| x.0).fold(f64::INFINITY, f64::min);
        let hi = l.iter().filter(|x| x.1 > 0.0).map(|x| x.0).fold(0.0, f64::max);
        prop_assert!(r.total >= lo - 1e-12 && r.total <= hi + 1e-12);
        prop_assert_eq!(r.per_component.len(), l.len());
        prop_assert_eq!(r.masked_count, 3);
    }
}

#[test]
fn shape_and_count_errors() {
    let p = vec![vec![1.0, 2.0]];
    assert!(l2_masked(&p, &p, 0).is_err());
    assert!(l2_masked(&p, &p, 2).is_err());
    assert!(l2_masked(&p, &[vec![1.0]], 1).is_err());
    assert!(cosine_masked(&p, &[vec![0.0, 0.0]], 1).is_err());
    assert!(multi_task(&[("a", 1.0, -1.0)], 1).is_err());
    assert!(multi_task(&[("a", 1.0, 0.0)], 1).is_err());
}
